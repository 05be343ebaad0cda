#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mamimo/rate.hpp"

namespace mamimo {

// Backtracking line-search and iteration controls shared by both short-term
// optimizers.
struct BacktrackParams {
  double initial_step = 10.0;        // s
  double shrink = 0.5;               // tau
  double sufficient_increase = 0.6;  // xi
  double epsilon = 1e-6;             // termination increment
  int max_iterations = 30;
  int max_backtracks = 60;

  void validate() const;
};

struct ShortTermResult {
  Apv r;
  // Rate after each outer iteration; trace[0] is the rate at the start point.
  std::vector<double> rate_trace;
  // 0 where the final pre-projection update left the region, 1 elsewhere.
  Eigen::VectorXd final_mask;
  int iterations = 0;
  int backtrack_exhausted = 0;
  double final_rate = 0.0;
};

Eigen::Vector2d project_point(const Eigen::Vector2d& p, const Rect& rect);
Apv project_region(const Apv& x, const RegionSpec& region);

// 0/1 per coordinate of the stacked pre-projection point: 0 where the
// coordinate had to be clamped into its rectangle.
Eigen::VectorXd active_mask(const Eigen::VectorXd& pre_projection,
                            const RegionSpec& region);

// Sequential per-antenna gradient ascent with sufficient-increase
// backtracking; each accepted move keeps all pairwise distances >= min_dist
// and the position inside the shared region. Terminates when the rate gain
// of a full sweep drops below params.epsilon or after max_iterations sweeps.
ShortTermResult ga_optimize(const Apv& t, const CovarianceSet& qs, int k,
                            const UtChannel& ch, double noise_w,
                            const RegionSpec& region, double min_dist,
                            const Apv& r_init, const BacktrackParams& params);

// Whole-vector projected gradient ascent over per-antenna rectangles; runs a
// fixed number of iterations unless epsilon_exit enables the increment-based
// early exit.
ShortTermResult gp_optimize(const Apv& t, const CovarianceSet& qs, int k,
                            const UtChannel& ch, double noise_w,
                            const RegionSpec& region, const Apv& r_init,
                            const BacktrackParams& params,
                            bool epsilon_exit = false);

// ||mask .* grad_r|| at the final point: the first-order stationarity
// residual left by the truncated short-term optimization. Diagnostic only.
double kkt_residual_short(const Apv& t, const CovarianceSet& qs, int k,
                          const UtChannel& ch, double noise_w,
                          const Apv& r_final, const Eigen::VectorXd& mask);

}  // namespace mamimo
