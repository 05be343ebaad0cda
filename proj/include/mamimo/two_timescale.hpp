#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mamimo/short_term.hpp"
#include "mamimo/solver.hpp"
#include "mamimo/surrogate.hpp"

namespace mamimo {

enum class SchemeId {
  ProposedGmm,   // gradient-ascent short term inside the long-term loop
  ProposedPmm,   // gradient-projection short term, per-antenna regions
  DecoupledGmm,  // long-term surrogates built with the initial receive APVs
  ScsitGmm,      // receive APVs optimized as long-term variables
  ScsitUpa,      // fixed uniform arrays, covariance optimization only
};

SchemeId scheme_from_string(const std::string& name);
std::string scheme_to_string(SchemeId scheme);

struct LongTermParams {
  int iterations = 100;  // long-term iteration count
  int batch_size = 10;   // samples per iteration and user
  BacktrackParams short_term;
  double tau_t = -1.0;
  double tau_h = -1.0;
  double tau_r = -1.0;
  std::optional<double> tau_q;  // defaults to -1/P^2
  SolverOptions solver;
  bool gp_epsilon_exit = false;
  int ga_starts = 1;  // extra deterministic starts of the short-term solver
  // Fixed-array spacings used by the uniform-array benchmark.
  double upa_spacing_tx_m = 0.03;
  double upa_spacing_rx_m = 0.03;

  double tau_q_value(double power_w) const {
    return tau_q.value_or(-1.0 / (power_w * power_w));
  }
};

// All randomness of one Monte Carlo realization, drawn up front so that
// every scheme replays the identical channel history.
struct RealizationDraws {
  std::vector<StatisticalState> stats;               // per user
  std::vector<std::vector<std::vector<UtChannel>>> train;  // [iter][k][b]
  std::vector<std::vector<UtChannel>> eval;          // [sample][k]
};

RealizationDraws draw_realization(const SystemConfig& cfg, int iterations,
                                  int batch_size, int eval_samples, Rng& rng,
                                  bool redraw_angles_per_sample = false);

struct IterationTrace {
  double batch_sum_rate = 0.0;   // mini-batch mean of the summed user rates
  double surrogate_sum = 0.0;    // summed surrogate value at the new iterate
  double alpha = 0.0;            // feasibility slack found this iteration
  bool objective_feasible = false;
  bool solver_converged = false;
  double min_pair_dist_t = 0.0;  // after the blending step
  double total_trace_q = 0.0;
  double min_eig_q = 0.0;
};

struct LongTermSolution {
  SchemeId scheme = SchemeId::ProposedGmm;
  Apv t;
  CovarianceSet q;
  std::vector<Apv> r_fixed;  // receive policy of the statistical schemes
  std::vector<IterationTrace> trace;
};

// Geometry and starting points shared by the schemes.
RegionSpec transmit_region(const SystemConfig& cfg);
RegionSpec receive_region(const SystemConfig& cfg, bool pmm);
Apv initial_transmit_apv(const SystemConfig& cfg);
Apv initial_receive_apv(const SystemConfig& cfg, bool pmm);
CovarianceSet initial_covariance(const SystemConfig& cfg);

// Stochastic successive-approximation loop with the gradient-ascent
// short-term solver (shared general regions).
LongTermSolution cssca_gmm(const SystemConfig& cfg, const LongTermParams& params,
                           const RealizationDraws& draws);

// Variant with the gradient-projection short-term solver and per-antenna
// receive regions.
LongTermSolution pdd_ssca_pmm(const SystemConfig& cfg,
                              const LongTermParams& params,
                              const RealizationDraws& draws);

LongTermSolution run_scheme(SchemeId scheme, const SystemConfig& cfg,
                            const LongTermParams& params,
                            const RealizationDraws& draws);

// Solves one user's short-term problem for the scheme's movement mode,
// optionally from several deterministic starts (best rate wins).
ShortTermResult short_term_solve(SchemeId scheme, const SystemConfig& cfg,
                                 const LongTermParams& params, const Apv& t,
                                 const CovarianceSet& qs, int k,
                                 const UtChannel& ch);

struct EvalResult {
  std::vector<double> mean_rate_per_ut;
  double sum_rate = 0.0;
  // Receive positions per evaluation sample and user (the repositioning
  // trajectory; identical entries for fixed-array schemes).
  std::vector<std::vector<Apv>> r_trajectory;
};

// Held-out evaluation: fresh short-term optimization per sample for the
// adaptive schemes, the fixed receive policy otherwise.
EvalResult evaluate_solution(const LongTermSolution& sol, const SystemConfig& cfg,
                             const LongTermParams& params,
                             const std::vector<std::vector<UtChannel>>& eval_samples);

}  // namespace mamimo
