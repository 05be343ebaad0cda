#include "mamimo/short_term.hpp"

#include <cmath>
#include <stdexcept>

namespace mamimo {

void BacktrackParams::validate() const {
  if (!(shrink > 0.0 && shrink < 1.0)) {
    throw std::invalid_argument("step shrink factor must lie in (0, 1)");
  }
  if (!(sufficient_increase > 0.0 && sufficient_increase < 1.0)) {
    throw std::invalid_argument("sufficient-increase factor must lie in (0, 1)");
  }
  if (!(initial_step > 0.0)) throw std::invalid_argument("initial step must be positive");
  if (!(epsilon > 0.0)) throw std::invalid_argument("termination increment must be positive");
  if (max_iterations < 0 || max_backtracks < 1) {
    throw std::invalid_argument("iteration limits out of range");
  }
}

Eigen::Vector2d project_point(const Eigen::Vector2d& p, const Rect& rect) {
  return {std::clamp(p.x(), rect.xmin, rect.xmax),
          std::clamp(p.y(), rect.ymin, rect.ymax)};
}

Apv project_region(const Apv& x, const RegionSpec& region) {
  Apv out(2, x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    out.col(c) = project_point(x.col(c), region.rect_for(static_cast<int>(c)));
  }
  return out;
}

Eigen::VectorXd active_mask(const Eigen::VectorXd& pre_projection,
                            const RegionSpec& region) {
  const Eigen::Index m = pre_projection.size() / 2;
  Eigen::VectorXd mask = Eigen::VectorXd::Ones(pre_projection.size());
  for (Eigen::Index c = 0; c < m; ++c) {
    const Rect& rect = region.rect_for(static_cast<int>(c));
    const double x = pre_projection[2 * c];
    const double y = pre_projection[2 * c + 1];
    if (x < rect.xmin || x > rect.xmax) mask[2 * c] = 0.0;
    if (y < rect.ymin || y > rect.ymax) mask[2 * c + 1] = 0.0;
  }
  return mask;
}

namespace {

// Distance feasibility of a candidate position for antenna m against all
// other antennas of the same terminal.
bool candidate_distance_ok(const Apv& r, int m, const Eigen::Vector2d& cand,
                           double min_dist) {
  for (Eigen::Index i = 0; i < r.cols(); ++i) {
    if (i == m) continue;
    if ((r.col(i) - cand).norm() < min_dist) return false;
  }
  return true;
}

}  // namespace

ShortTermResult ga_optimize(const Apv& t, const CovarianceSet& qs, int k,
                            const UtChannel& ch, double noise_w,
                            const RegionSpec& region, double min_dist,
                            const Apv& r_init, const BacktrackParams& params) {
  params.validate();
  if (!in_region(r_init, region, 1e-12)) {
    throw std::invalid_argument("initial receive positions outside the region");
  }
  if (!pairwise_distance_ok(r_init, min_dist, 1e-12)) {
    throw std::invalid_argument("initial receive positions violate the minimum distance");
  }

  ShortTermResult res;
  res.r = r_init;
  InverseCache cache(t, qs, k, ch, noise_w, res.r);
  double current = achievable_rate(t, res.r, qs, k, ch, noise_w);
  res.rate_trace.push_back(current);

  const int m_count = static_cast<int>(res.r.cols());
  for (int sweep = 0; sweep < params.max_iterations; ++sweep) {
    const double sweep_start = current;
    for (int m = 0; m < m_count; ++m) {
      const Eigen::Vector2d grad = grad_r_single(cache, res.r, m);
      const double grad_sq = grad.squaredNorm();
      double step = params.initial_step;
      bool accepted = false;
      for (int bt = 0; bt < params.max_backtracks; ++bt) {
        const Eigen::Vector2d cand =
            project_point(res.r.col(m) + step * grad, region.rect_for(m));
        if (candidate_distance_ok(res.r, m, cand, min_dist)) {
          Apv trial = res.r;
          trial.col(m) = cand;
          const double trial_rate = achievable_rate(t, trial, qs, k, ch, noise_w);
          if (trial_rate >=
              current + params.sufficient_increase * step * grad_sq) {
            res.r.col(m) = cand;
            cache.move_antenna(m, cand);
            current = trial_rate;
            accepted = true;
            break;
          }
        }
        step *= params.shrink;
      }
      if (!accepted) ++res.backtrack_exhausted;  // the antenna stays put
    }
    res.rate_trace.push_back(current);
    ++res.iterations;
    if (current - sweep_start < params.epsilon) break;
  }
  res.final_mask = Eigen::VectorXd::Ones(2 * m_count);
  res.final_rate = current;
  return res;
}

ShortTermResult gp_optimize(const Apv& t, const CovarianceSet& qs, int k,
                            const UtChannel& ch, double noise_w,
                            const RegionSpec& region, const Apv& r_init,
                            const BacktrackParams& params, bool epsilon_exit) {
  params.validate();
  if (!in_region(r_init, region, 1e-12)) {
    throw std::invalid_argument("initial receive positions outside the region");
  }

  ShortTermResult res;
  res.r = r_init;
  const int m_count = static_cast<int>(res.r.cols());
  double current = achievable_rate(t, res.r, qs, k, ch, noise_w);
  res.rate_trace.push_back(current);
  res.final_mask = Eigen::VectorXd::Ones(2 * m_count);

  for (int it = 0; it < params.max_iterations; ++it) {
    const Eigen::VectorXd grad = grad_r_full(t, res.r, qs, k, ch, noise_w);
    const double grad_sq = grad.squaredNorm();
    const Eigen::VectorXd r_vec = stack(res.r);
    double step = params.initial_step;
    bool accepted = false;
    Eigen::VectorXd pre;
    Apv cand;
    double cand_rate = current;
    for (int bt = 0; bt < params.max_backtracks; ++bt) {
      pre = r_vec + step * grad;
      cand = project_region(unstack(pre), region);
      cand_rate = achievable_rate(t, cand, qs, k, ch, noise_w);
      if (cand_rate >= current + params.sufficient_increase * step * grad_sq) {
        accepted = true;
        break;
      }
      step *= params.shrink;
    }
    const double previous = current;
    if (accepted) {
      res.r = cand;
      current = cand_rate;
      res.final_mask = active_mask(pre, region);
    } else {
      ++res.backtrack_exhausted;  // zero step this iteration
    }
    res.rate_trace.push_back(current);
    ++res.iterations;
    if (epsilon_exit && current - previous < params.epsilon) break;
  }
  res.final_rate = current;
  return res;
}

double kkt_residual_short(const Apv& t, const CovarianceSet& qs, int k,
                          const UtChannel& ch, double noise_w,
                          const Apv& r_final, const Eigen::VectorXd& mask) {
  const Eigen::VectorXd grad = grad_r_full(t, r_final, qs, k, ch, noise_w);
  if (mask.size() != grad.size()) {
    throw std::invalid_argument("mask length does not match the coordinate count");
  }
  return (mask.array() * grad.array()).matrix().norm();
}

}  // namespace mamimo
