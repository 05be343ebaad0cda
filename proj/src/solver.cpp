#include "mamimo/solver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mamimo {

namespace {

// ---- Hermitian matrices as isometric real coordinates ----------------------
// Layout per matrix: n diagonal entries, then sqrt(2)*(Re, Im) of the upper
// triangle. Euclidean inner products equal the Frobenius ones, so the
// quadratic surrogate terms keep their coefficients.

void flatten_hermitian(const Eigen::MatrixXcd& q, double* out) {
  const int n = static_cast<int>(q.rows());
  int idx = 0;
  for (int i = 0; i < n; ++i) out[idx++] = q(i, i).real();
  const double s = std::sqrt(2.0);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      out[idx++] = s * q(i, j).real();
      out[idx++] = s * q(i, j).imag();
    }
  }
}

void unflatten_hermitian(const double* in, Eigen::MatrixXcd& q) {
  const int n = static_cast<int>(q.rows());
  int idx = 0;
  for (int i = 0; i < n; ++i) q(i, i) = in[idx++];
  const double s = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double re = s * in[idx++];
      const double im = s * in[idx++];
      q(i, j) = std::complex<double>(re, im);
      q(j, i) = std::complex<double>(re, -im);
    }
  }
}

// Joint projection of Hermitian blocks onto {Q_i >= 0, sum tr <= budget}:
// eigenvalue clamp with a common water-filling shift.
void project_blocks_budget(std::vector<Eigen::MatrixXcd>& qs, double budget,
                           std::vector<double>& value_scratch) {
  value_scratch.clear();
  double clamped_sum = 0.0;
  std::vector<Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>> solvers;
  solvers.reserve(qs.size());
  for (auto& qi : qs) {
    solvers.emplace_back(qi);
    const auto& vals = solvers.back().eigenvalues();
    for (Eigen::Index l = 0; l < vals.size(); ++l) {
      value_scratch.push_back(vals[l]);
      clamped_sum += std::max(0.0, vals[l]);
    }
  }
  double shift = 0.0;
  if (clamped_sum > budget) {
    std::sort(value_scratch.begin(), value_scratch.end(), std::greater<>());
    double prefix = 0.0;
    for (std::size_t m = 0; m < value_scratch.size(); ++m) {
      prefix += value_scratch[m];
      const double nu = (prefix - budget) / static_cast<double>(m + 1);
      if (m + 1 == value_scratch.size() || nu >= value_scratch[m + 1]) {
        shift = std::max(0.0, nu);
        break;
      }
    }
  }
  for (std::size_t i = 0; i < qs.size(); ++i) {
    const Eigen::VectorXd vals =
        (solvers[i].eigenvalues().array() - shift).cwiseMax(0.0);
    qs[i] = solvers[i].eigenvectors() * vals.asDiagonal() *
            solvers[i].eigenvectors().adjoint();
  }
}

// ---- flat view of the per-iteration convex subproblem -----------------------

class FlatCore {
 public:
  FlatCore(const SurrogateProblem& p, bool feasibility)
      : p_(p), feasibility_(feasibility) {
    n_ = p.n_tx;
    k_ = p.k_users;
    m_ = p.m_rx;
    opt_t_ = p.optimize_t;
    opt_r_ = p.optimize_r;
    qblk_ = n_ * n_;
    rblk_ = 2 * m_;

    int off = 0;
    if (opt_t_) {
      t_off_ = off;
      off += 2 * n_;
    }
    if (opt_r_) {
      r_off_ = off;
      off += k_ * rblk_;
    }
    q_off_ = off;
    off += k_ * qblk_;
    if (feasibility_) {
      alpha_off_ = off;
      off += 1;
    }
    dim_ = off;

    n_c1_ = k_;
    n_c2_ = opt_t_ ? n_ * (n_ - 1) / 2 : 0;
    n_c3_ = opt_r_ ? k_ * (m_ * (m_ - 1) / 2) : 0;

    // Flat surrogate coefficients extracted through the public surface.
    const Eigen::VectorXd zero_t = Eigen::VectorXd::Zero(2 * n_);
    const Eigen::VectorXd zero_r = Eigen::VectorXd::Zero(rblk_);
    CovarianceSet zero_q;
    zero_q.q.assign(static_cast<std::size_t>(k_),
                    Eigen::MatrixXcd::Zero(n_, n_));

    f_const_.resize(k_);
    f_lin_ = Eigen::MatrixXd::Zero(dim_, k_);
    for (int k = 0; k < k_; ++k) {
      f_const_[k] = p.surrogate->value(
          k, zero_t, zero_q, opt_r_ ? &zero_r : nullptr);
      const Eigen::VectorXd a_t = p.surrogate->grad_t(k, zero_t);
      if (opt_t_) {
        f_lin_.col(k).segment(t_off_, 2 * n_) = a_t;
      } else {
        // Frozen transmit positions fold into the constant.
        f_const_[k] += a_t.dot(p.t_anchor) +
                       p.surrogate->tau_t() * p.t_anchor.squaredNorm();
      }
      for (int i = 0; i < k_; ++i) {
        const Eigen::MatrixXcd a_q =
            p.surrogate->grad_q(k, i, Eigen::MatrixXcd::Zero(n_, n_));
        flatten_hermitian(a_q, f_lin_.col(k).data() + q_off_ + i * qblk_);
      }
      if (opt_r_) {
        f_lin_.col(k).segment(r_off_ + k * rblk_, rblk_) =
            p.surrogate->grad_r(k, zero_r);
      }
    }
    tau_t_ = p.surrogate->tau_t();
    tau_q_ = p.surrogate->tau_q();
    tau_r_ = p.surrogate->tau_r();

    q_scratch_.assign(static_cast<std::size_t>(k_),
                      Eigen::MatrixXcd::Zero(n_, n_));
  }

  int dim() const { return dim_; }
  int constraint_count() const { return n_c1_ + n_c2_ + n_c3_; }
  bool feasibility() const { return feasibility_; }

  // ---- conversions ----------------------------------------------------------

  Eigen::VectorXd pack(const SolverPoint& pt) const {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(dim_);
    if (opt_t_) x.segment(t_off_, 2 * n_) = pt.t;
    if (opt_r_) {
      for (int k = 0; k < k_; ++k) {
        x.segment(r_off_ + k * rblk_, rblk_) =
            pt.r[static_cast<std::size_t>(k)];
      }
    }
    for (int i = 0; i < k_; ++i) {
      flatten_hermitian(pt.q.q[static_cast<std::size_t>(i)],
                        x.data() + q_off_ + i * qblk_);
    }
    if (feasibility_) x[alpha_off_] = pt.alpha;
    return x;
  }

  SolverPoint unpack(const Eigen::VectorXd& x) const {
    SolverPoint pt;
    pt.t = opt_t_ ? x.segment(t_off_, 2 * n_).eval() : p_.t_anchor;
    if (opt_r_) {
      pt.r.resize(static_cast<std::size_t>(k_));
      for (int k = 0; k < k_; ++k) {
        pt.r[static_cast<std::size_t>(k)] =
            x.segment(r_off_ + k * rblk_, rblk_);
      }
    }
    pt.q.q.resize(static_cast<std::size_t>(k_));
    for (int i = 0; i < k_; ++i) {
      auto& qi = pt.q.q[static_cast<std::size_t>(i)];
      qi.resize(n_, n_);
      unflatten_hermitian(x.data() + q_off_ + i * qblk_, qi);
    }
    pt.alpha = feasibility_ ? x[alpha_off_] : 0.0;
    return pt;
  }

  // ---- values and gradients ---------------------------------------------------

  double f_value(int k, const Eigen::VectorXd& x) const {
    double v = f_const_[k] + f_lin_.col(k).dot(x);
    if (opt_t_) v += tau_t_ * x.segment(t_off_, 2 * n_).squaredNorm();
    v += tau_q_ * x.segment(q_off_, k_ * qblk_).squaredNorm();
    if (opt_r_) v += tau_r_ * x.segment(r_off_ + k * rblk_, rblk_).squaredNorm();
    return v;
  }

  double objective(const Eigen::VectorXd& x) const {
    if (feasibility_) return x[alpha_off_];
    double acc = 0.0;
    for (int k = 0; k < k_; ++k) acc += f_value(k, x);
    return acc;
  }

  void add_objective_grad(const Eigen::VectorXd& x, double scale,
                          Eigen::VectorXd& g) const {
    if (feasibility_) {
      g[alpha_off_] += scale;
      return;
    }
    for (int k = 0; k < k_; ++k) add_f_grad(k, x, scale, g);
  }

  void add_f_grad(int k, const Eigen::VectorXd& x, double scale,
                  Eigen::VectorXd& g) const {
    g += scale * f_lin_.col(k);
    if (opt_t_) {
      g.segment(t_off_, 2 * n_) +=
          (2.0 * tau_t_ * scale) * x.segment(t_off_, 2 * n_);
    }
    g.segment(q_off_, k_ * qblk_) +=
        (2.0 * tau_q_ * scale) * x.segment(q_off_, k_ * qblk_);
    if (opt_r_) {
      g.segment(r_off_ + k * rblk_, rblk_) +=
          (2.0 * tau_r_ * scale) * x.segment(r_off_ + k * rblk_, rblk_);
    }
  }

  void constraints(const Eigen::VectorXd& x, Eigen::VectorXd& c) const {
    c.resize(constraint_count());
    int idx = 0;
    for (int k = 0; k < k_; ++k) {
      double v = f_value(k, x) - p_.r_min;
      if (feasibility_) v -= x[alpha_off_];
      c[idx++] = v;
    }
    if (opt_t_) {
      const double d2 = p_.min_dist * p_.min_dist;
      for (int i = 0; i < n_; ++i) {
        for (int j = i + 1; j < n_; ++j) {
          c[idx++] = pair_surrogate(x, t_off_, p_.t_anchor, 0, i, j) - d2;
        }
      }
    }
    if (opt_r_) {
      const double d2 = p_.min_dist_r * p_.min_dist_r;
      for (int k = 0; k < k_; ++k) {
        const Eigen::VectorXd& anchor = p_.r_anchor[static_cast<std::size_t>(k)];
        for (int i = 0; i < m_; ++i) {
          for (int j = i + 1; j < m_; ++j) {
            c[idx++] = pair_surrogate(x, r_off_ + k * rblk_, anchor, 0, i, j) - d2;
          }
        }
      }
    }
  }

  void add_constraint_grads(const Eigen::VectorXd& x, const Eigen::VectorXd& w,
                            Eigen::VectorXd& g) const {
    int idx = 0;
    for (int k = 0; k < k_; ++k) {
      const double wk = w[idx++];
      if (wk == 0.0) continue;
      add_f_grad(k, x, wk, g);
      if (feasibility_) g[alpha_off_] -= wk;
    }
    if (opt_t_) {
      for (int i = 0; i < n_; ++i) {
        for (int j = i + 1; j < n_; ++j) {
          const double wij = w[idx++];
          if (wij == 0.0) continue;
          add_pair_grad(x, t_off_, p_.t_anchor, i, j, wij, g);
        }
      }
    }
    if (opt_r_) {
      for (int k = 0; k < k_; ++k) {
        const Eigen::VectorXd& anchor = p_.r_anchor[static_cast<std::size_t>(k)];
        for (int i = 0; i < m_; ++i) {
          for (int j = i + 1; j < m_; ++j) {
            const double wij = w[idx++];
            if (wij == 0.0) continue;
            add_pair_grad(x, r_off_ + k * rblk_, anchor, i, j, wij, g);
          }
        }
      }
    }
  }

  void project(Eigen::VectorXd& x) const {
    if (opt_t_) {
      for (int i = 0; i < n_; ++i) {
        double& px = x[t_off_ + 2 * i];
        double& py = x[t_off_ + 2 * i + 1];
        px = std::clamp(px, p_.t_box.xmin, p_.t_box.xmax);
        py = std::clamp(py, p_.t_box.ymin, p_.t_box.ymax);
      }
    }
    if (opt_r_) {
      for (int k = 0; k < k_; ++k) {
        for (int i = 0; i < m_; ++i) {
          const Rect& rect = p_.r_region.rect_for(i);
          double& px = x[r_off_ + k * rblk_ + 2 * i];
          double& py = x[r_off_ + k * rblk_ + 2 * i + 1];
          px = std::clamp(px, rect.xmin, rect.xmax);
          py = std::clamp(py, rect.ymin, rect.ymax);
        }
      }
    }
    for (int i = 0; i < k_; ++i) {
      unflatten_hermitian(x.data() + q_off_ + i * qblk_,
                          q_scratch_[static_cast<std::size_t>(i)]);
    }
    project_blocks_budget(q_scratch_, p_.power_w, value_scratch_);
    for (int i = 0; i < k_; ++i) {
      flatten_hermitian(q_scratch_[static_cast<std::size_t>(i)],
                        x.data() + q_off_ + i * qblk_);
    }
  }

 private:
  double pair_surrogate(const Eigen::VectorXd& x, int off,
                        const Eigen::VectorXd& anchor, int anchor_off, int i,
                        int j) const {
    const Eigen::Vector2d ti = x.segment<2>(off + 2 * i);
    const Eigen::Vector2d tj = x.segment<2>(off + 2 * j);
    const Eigen::Vector2d ai = anchor.segment<2>(anchor_off + 2 * i);
    const Eigen::Vector2d aj = anchor.segment<2>(anchor_off + 2 * j);
    const Eigen::Vector2d ad = ai - aj;
    return p_.tau_h * ((ti - ai).squaredNorm() + (tj - aj).squaredNorm()) +
           2.0 * ad.dot(ti - tj) - ad.squaredNorm();
  }

  void add_pair_grad(const Eigen::VectorXd& x, int off,
                     const Eigen::VectorXd& anchor, int i, int j, double w,
                     Eigen::VectorXd& g) const {
    const Eigen::Vector2d ti = x.segment<2>(off + 2 * i);
    const Eigen::Vector2d tj = x.segment<2>(off + 2 * j);
    const Eigen::Vector2d ai = anchor.segment<2>(2 * i);
    const Eigen::Vector2d aj = anchor.segment<2>(2 * j);
    const Eigen::Vector2d ad = ai - aj;
    g.segment<2>(off + 2 * i) += w * (2.0 * p_.tau_h * (ti - ai) + 2.0 * ad);
    g.segment<2>(off + 2 * j) += w * (2.0 * p_.tau_h * (tj - aj) - 2.0 * ad);
  }

  const SurrogateProblem& p_;
  bool feasibility_;
  int n_ = 0, k_ = 0, m_ = 0;
  bool opt_t_ = false, opt_r_ = false;
  int t_off_ = 0, r_off_ = 0, q_off_ = 0, alpha_off_ = 0;
  int rblk_ = 0, qblk_ = 0, dim_ = 0;
  int n_c1_ = 0, n_c2_ = 0, n_c3_ = 0;
  Eigen::VectorXd f_const_;
  Eigen::MatrixXd f_lin_;
  double tau_t_ = -1.0, tau_q_ = -1.0, tau_r_ = -1.0;
  mutable std::vector<Eigen::MatrixXcd> q_scratch_;
  mutable std::vector<double> value_scratch_;
};

// Augmented-Lagrangian penalty for c >= 0:
// psi(c) = (max(0, lambda - mu c)^2 - lambda^2) / (2 mu); d psi/dc = -max(0, lambda - mu c).
double penalty_value(const Eigen::VectorXd& c, const Eigen::VectorXd& lambda,
                     double mu) {
  double acc = 0.0;
  for (Eigen::Index j = 0; j < c.size(); ++j) {
    const double s = std::max(0.0, lambda[j] - mu * c[j]);
    acc += (s * s - lambda[j] * lambda[j]) / (2.0 * mu);
  }
  return acc;
}

struct FlatSolveState {
  Eigen::VectorXd x;
  Eigen::VectorXd lambda;
  int outer_iterations = 0;
  int inner_iterations = 0;
  bool converged = false;
  KktResiduals residuals;
};

// Accelerated monotone projected descent on the augmented Lagrangian.
int fista_minimize(const FlatCore& core, Eigen::VectorXd& x,
                   const Eigen::VectorXd& lambda, double mu, double tol,
                   int budget, double& lip) {
  Eigen::VectorXd c(core.constraint_count());
  Eigen::VectorXd weights(core.constraint_count());
  auto value = [&](const Eigen::VectorXd& v) {
    core.constraints(v, c);
    return -core.objective(v) + penalty_value(c, lambda, mu);
  };
  Eigen::VectorXd grad(core.dim());
  auto gradient = [&](const Eigen::VectorXd& v) {
    core.constraints(v, c);
    for (Eigen::Index j = 0; j < c.size(); ++j) {
      weights[j] = -std::max(0.0, lambda[j] - mu * c[j]);
    }
    grad.setZero();
    core.add_objective_grad(v, -1.0, grad);
    core.add_constraint_grads(v, weights, grad);
  };

  Eigen::VectorXd y = x, cand = x, diff(core.dim());
  double momentum = 1.0;
  double fx = value(x);
  int used = 0;
  while (used < budget) {
    gradient(y);
    const double fy = value(y);
    double fc = 0.0;
    for (int bt = 0; bt < 80; ++bt) {
      cand = y - grad / lip;
      core.project(cand);
      diff = cand - y;
      fc = value(cand);
      if (fc <= fy + grad.dot(diff) + 0.5 * lip * diff.squaredNorm() + 1e-15) break;
      lip *= 2.0;
    }
    ++used;
    const double residual = lip * diff.norm();
    if (fc > fx) {
      // Momentum overshoot: restart from the best point.
      y = x;
      momentum = 1.0;
      continue;
    }
    const double next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    y = cand + ((momentum - 1.0) / next) * (cand - x);
    x = cand;
    fx = fc;
    momentum = next;
    lip = std::max(lip * 0.7, 1e-10);
    if (residual <= tol) break;
  }
  return used;
}

KktResiduals flat_kkt(const FlatCore& core, const Eigen::VectorXd& x,
                      const Eigen::VectorXd& multipliers) {
  KktResiduals out;
  Eigen::VectorXd c(core.constraint_count());
  core.constraints(x, c);
  for (Eigen::Index j = 0; j < c.size(); ++j) {
    out.primal = std::max(out.primal, -c[j]);
    out.complementarity =
        std::max(out.complementarity, std::abs(multipliers[j] * c[j]));
  }
  Eigen::VectorXd proj = x;
  core.project(proj);
  out.primal = std::max(out.primal, (proj - x).norm());

  Eigen::VectorXd g = Eigen::VectorXd::Zero(core.dim());
  core.add_objective_grad(x, 1.0, g);
  core.add_constraint_grads(x, multipliers, g);
  Eigen::VectorXd stepped = x + g;
  core.project(stepped);
  out.stationarity = (stepped - x).norm();
  return out;
}

FlatSolveState al_solve(const SurrogateProblem& p, bool feasibility,
                        const SolverPoint* warm_start) {
  p.validate();
  const FlatCore core(p, feasibility);
  const SolverOptions& opt = p.options;

  SolverPoint start = warm_start != nullptr ? *warm_start : p.anchor_point();
  if (p.optimize_r && start.r.empty()) start.r = p.r_anchor;
  FlatSolveState st;
  st.x = core.pack(start);
  core.project(st.x);
  if (feasibility) {
    // Start at the tightest slack the start point satisfies.
    double slack = std::numeric_limits<double>::infinity();
    for (int k = 0; k < p.k_users; ++k) {
      slack = std::min(slack, core.f_value(k, st.x) - p.r_min);
    }
    st.x[core.dim() - 1] = slack;
  }

  st.lambda = Eigen::VectorXd::Zero(core.constraint_count());
  Eigen::VectorXd c(core.constraint_count());
  double mu = opt.penalty_init;
  double inner_tol = 1e-3;
  double lip = 1.0;
  double prev_violation = std::numeric_limits<double>::infinity();

  for (int outer = 0; outer < opt.max_outer; ++outer) {
    st.inner_iterations +=
        fista_minimize(core, st.x, st.lambda, mu, inner_tol, opt.max_inner, lip);
    ++st.outer_iterations;

    core.constraints(st.x, c);
    double violation = 0.0;
    for (Eigen::Index j = 0; j < c.size(); ++j) {
      violation = std::max(violation, -c[j]);
      st.lambda[j] = std::max(0.0, st.lambda[j] - mu * c[j]);
    }

    if (violation <= opt.primal_tol) {
      st.residuals = flat_kkt(core, st.x, st.lambda);
      if (st.residuals.stationarity <= opt.stationarity_tol &&
          st.residuals.complementarity <= opt.complementarity_tol) {
        st.converged = true;
        break;
      }
    }
    if (violation > 0.25 * prev_violation) mu *= opt.penalty_growth;
    prev_violation = violation;
    inner_tol = std::max(inner_tol * 0.3, 1e-9);
  }
  if (!st.converged) st.residuals = flat_kkt(core, st.x, st.lambda);
  return st;
}

SolverReport make_report(const SurrogateProblem& p, bool feasibility,
                         const FlatSolveState& st) {
  const FlatCore core(p, feasibility);
  SolverReport rep;
  rep.point = core.unpack(st.x);
  rep.objective = core.objective(st.x);
  rep.status = st.converged ? SolveStatus::Converged : SolveStatus::MaxIter;
  rep.residuals = st.residuals;
  rep.outer_iterations = st.outer_iterations;
  rep.inner_iterations = st.inner_iterations;
  rep.multipliers = st.lambda;
  return rep;
}

}  // namespace

void SurrogateProblem::validate() const {
  if (surrogate == nullptr) throw std::invalid_argument("missing surrogate state");
  if (surrogate->iteration() == 0) {
    throw std::invalid_argument("surrogate state has not been updated yet");
  }
  if (n_tx <= 0 || k_users <= 0) throw std::invalid_argument("empty problem");
  if (t_anchor.size() != 2 * n_tx) throw std::invalid_argument("bad transmit anchor size");
  if (static_cast<int>(q_anchor.q.size()) != k_users) {
    throw std::invalid_argument("bad covariance anchor count");
  }
  if (optimize_r &&
      (static_cast<int>(r_anchor.size()) != k_users || m_rx <= 0)) {
    throw std::invalid_argument("receive anchors required when optimizing receive positions");
  }
  if (optimize_r && !surrogate->has_receive_block()) {
    throw std::invalid_argument("surrogate has no receive block");
  }
  if (tau_h >= 0.0) throw std::invalid_argument("distance curvature must be negative");
}

SolverPoint SurrogateProblem::anchor_point() const {
  SolverPoint x;
  x.t = t_anchor;
  x.q = q_anchor;
  if (optimize_r) x.r = r_anchor;
  x.alpha = 0.0;
  return x;
}

SolverReport solve_objective(const SurrogateProblem& p,
                             const SolverPoint* warm_start) {
  const FlatSolveState phase1 = al_solve(p, true, warm_start);
  SolverReport rep1 = make_report(p, true, phase1);
  rep1.feasibility_alpha = rep1.point.alpha;
  if (rep1.point.alpha < -p.options.alpha_feasible_tol) {
    rep1.status = SolveStatus::Infeasible;
    return rep1;
  }
  SolverPoint warm = rep1.point;
  warm.alpha = 0.0;
  const FlatSolveState phase2 = al_solve(p, false, &warm);
  SolverReport rep = make_report(p, false, phase2);
  rep.feasibility_alpha = rep1.feasibility_alpha;
  if (rep.status != SolveStatus::Converged) {
    // The anchor is always a candidate; never return something worse.
    const FlatCore core(p, false);
    const Eigen::VectorXd anchor = core.pack(p.anchor_point());
    Eigen::VectorXd c(core.constraint_count());
    core.constraints(anchor, c);
    if ((c.size() == 0 || c.minCoeff() >= -p.options.primal_tol) &&
        core.objective(anchor) > rep.objective) {
      rep.point = p.anchor_point();
      rep.objective = core.objective(anchor);
    }
  }
  return rep;
}

SolverReport solve_feasibility(const SurrogateProblem& p,
                               const SolverPoint* warm_start) {
  const FlatSolveState st = al_solve(p, true, warm_start);
  SolverReport rep = make_report(p, true, st);
  rep.feasibility_alpha = rep.point.alpha;
  return rep;
}

Eigen::MatrixXcd project_psd(const Eigen::MatrixXcd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (a + a.adjoint()));
  const Eigen::VectorXd vals = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * vals.asDiagonal() * es.eigenvectors().adjoint();
}

void project_covariance_budget(CovarianceSet& qs, double budget) {
  for (auto& qi : qs.q) qi = 0.5 * (qi + qi.adjoint().eval());
  std::vector<double> scratch;
  project_blocks_budget(qs.q, budget, scratch);
}

KktResiduals kkt_residuals(const SurrogateProblem& p, const SolverPoint& x,
                           const Eigen::VectorXd& multipliers,
                           bool feasibility_mode) {
  const FlatCore core(p, feasibility_mode);
  if (multipliers.size() != core.constraint_count()) {
    throw std::invalid_argument("multiplier count does not match the constraint count");
  }
  if (multipliers.size() > 0 && multipliers.minCoeff() < 0.0) {
    throw std::invalid_argument("inequality multipliers must be nonnegative");
  }
  return flat_kkt(core, core.pack(x), multipliers);
}

}  // namespace mamimo
