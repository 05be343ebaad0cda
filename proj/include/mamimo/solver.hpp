#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "mamimo/surrogate.hpp"

namespace mamimo {

struct SolverOptions {
  int max_outer = 200;
  int max_inner = 2000;
  double primal_tol = 1e-8;
  double stationarity_tol = 1e-6;
  double complementarity_tol = 1e-6;
  double penalty_init = 10.0;
  double penalty_growth = 4.0;
  // Feasibility-problem slack above which the objective problem counts as
  // feasible.
  double alpha_feasible_tol = 1e-8;
};

// One candidate point of the long-term convex subproblem.
struct SolverPoint {
  Eigen::VectorXd t;                // stacked 2N (holds the anchor when frozen)
  std::vector<Eigen::VectorXd> r;   // per user, stacked 2M (may be empty)
  CovarianceSet q;
  double alpha = 0.0;
};

// The per-iteration concave quadratic program: maximize the summed user
// surrogates (or the common slack) subject to per-user rate floors,
// concave pairwise-distance surrogates, the transmit box, the
// positive-semidefinite cone, and the total power budget.
struct SurrogateProblem {
  const SurrogateState* surrogate = nullptr;
  int n_tx = 0;
  int k_users = 0;
  int m_rx = 0;

  double power_w = 0.1;
  double r_min = 1.0;
  double min_dist = 0.03;
  double tau_h = -1.0;

  bool optimize_t = true;
  Rect t_box;
  Eigen::VectorXd t_anchor;  // 2N; distance-surrogate anchors and frozen value

  bool optimize_r = false;
  RegionSpec r_region;                    // per-antenna boxes for receive blocks
  std::vector<Eigen::VectorXd> r_anchor;  // per user, 2M
  double min_dist_r = 0.03;

  CovarianceSet q_anchor;  // default start

  SolverOptions options;

  void validate() const;
  SolverPoint anchor_point() const;
};

enum class SolveStatus { Converged, MaxIter, Infeasible };

struct KktResiduals {
  double stationarity = 0.0;
  double primal = 0.0;
  double complementarity = 0.0;
};

struct SolverReport {
  SolverPoint point;
  double objective = 0.0;
  SolveStatus status = SolveStatus::MaxIter;
  KktResiduals residuals;
  int outer_iterations = 0;
  int inner_iterations = 0;
  // Multipliers ordered as: rate floors (K), transmit-distance pairs (i<j),
  // receive-distance pairs per user.
  Eigen::VectorXd multipliers;
  // Optimal slack of the phase-1 feasibility problem (solve_objective only).
  double feasibility_alpha = 0.0;
};

// Solves the objective problem. Feasibility of the rate floors is decided by
// solving the feasibility problem first; when its optimal slack is below
// -alpha_feasible_tol the report carries the feasibility solution with
// status Infeasible.
SolverReport solve_objective(const SurrogateProblem& p,
                             const SolverPoint* warm_start = nullptr);

// Maximizes the common rate-floor slack; always returns a point.
SolverReport solve_feasibility(const SurrogateProblem& p,
                               const SolverPoint* warm_start = nullptr);

// Nearest positive semidefinite matrix in Frobenius norm.
Eigen::MatrixXcd project_psd(const Eigen::MatrixXcd& a);

// Euclidean projection of the covariance stack onto
// {Q_i >= 0, sum_i tr(Q_i) <= budget} (joint eigenvalue water-filling).
void project_covariance_budget(CovarianceSet& qs, double budget);

KktResiduals kkt_residuals(const SurrogateProblem& p, const SolverPoint& x,
                           const Eigen::VectorXd& multipliers,
                           bool feasibility_mode);

}  // namespace mamimo
