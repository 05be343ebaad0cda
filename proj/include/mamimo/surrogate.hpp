#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "mamimo/rate.hpp"

namespace mamimo {

// Diminishing step sequences of the long-term loop.
struct StepSequences {
  static double rho(int ell) { return std::pow(ell + 1.0, -0.9); }
  static double gamma(int ell) { return 1.0 / (ell + 1.0); }
};

enum class ShortTermMode { Gmm, Pmm };

// Mini-batch means of the per-sample rate and its gradients at the current
// long-term anchor.
struct BatchGradients {
  std::vector<Eigen::VectorXd> delta_t;                // per user, length 2N
  std::vector<std::vector<Eigen::MatrixXcd>> delta_q;  // [k][i], N x N Hermitian
  std::vector<double> rate_mean;                       // per user
  std::vector<Eigen::VectorXd> delta_r;                // per user, length 2M (optional)
};

// samples[k][b] and receive_apvs[k][b] hold the mini-batch for user k. In
// Pmm mode the chain-rule coupling through the short-term solution is
// dropped (it vanishes with the short-term iteration count), so the two
// modes evaluate identically given their respective receive positions.
BatchGradients mini_batch_gradients(
    const Apv& t, const CovarianceSet& qs,
    const std::vector<std::vector<UtChannel>>& samples,
    const std::vector<std::vector<Apv>>& receive_apvs, double noise_w,
    ShortTermMode mode, bool with_receive_grads = false);

// Recursive concave quadratic surrogate of each user's average rate, stored
// in expanded monomial form: value = c + a_t.t + tau_t |t|^2
// + sum_i (tr(a_qi^H Q_i) + tau_q |Q_i|_F^2) [+ receive block]. Each update
// mixes a fixed-curvature quadratic expanded about the current anchor, so
// the mixture keeps the same curvature and only (constant, linear)
// coefficients recurse. The first update replaces the empty surrogate.
class SurrogateState {
 public:
  SurrogateState(int k_users, int n_tx, double tau_t, double tau_q);
  // Variant with a per-user receive block of m_rx antennas and curvature tau_r.
  SurrogateState(int k_users, int n_tx, double tau_t, double tau_q, int m_rx,
                 double tau_r);

  int iteration() const { return ell_; }
  bool has_receive_block() const { return m_rx_ > 0; }
  double tau_t() const { return tau_t_; }
  double tau_q() const { return tau_q_; }
  double tau_r() const { return tau_r_; }
  int users() const { return static_cast<int>(f_.size()); }

  // Advances the recursion by one iteration with the batch expanded about
  // the given anchors. r_anchor is required iff the receive block exists.
  void update(const Eigen::VectorXd& t_anchor, const CovarianceSet& q_anchor,
              const BatchGradients& grads,
              const std::vector<Eigen::VectorXd>* r_anchor = nullptr);

  double value(int k, const Eigen::VectorXd& t, const CovarianceSet& qs,
               const Eigen::VectorXd* r_k = nullptr) const;
  double value_sum(const Eigen::VectorXd& t, const CovarianceSet& qs,
                   const std::vector<Eigen::VectorXd>* r = nullptr) const;

  Eigen::VectorXd grad_t(int k, const Eigen::VectorXd& t) const;
  Eigen::MatrixXcd grad_q(int k, int i, const Eigen::MatrixXcd& q_i) const;
  Eigen::VectorXd grad_r(int k, const Eigen::VectorXd& r_k) const;

 private:
  struct PerUt {
    double c = 0.0;
    Eigen::VectorXd a_t;
    std::vector<Eigen::MatrixXcd> a_q;
    Eigen::VectorXd a_r;
  };

  std::vector<PerUt> f_;
  int ell_ = 0;
  int n_tx_ = 0;
  int m_rx_ = 0;
  double tau_t_ = -1.0;
  double tau_q_ = -1.0;
  double tau_r_ = -1.0;
};

// Concave lower bound of the squared distance |t_i - t_j|^2 expanded about
// the anchors; exact at the anchor pair.
double distance_surrogate(const Eigen::Vector2d& anchor_i,
                          const Eigen::Vector2d& anchor_j,
                          const Eigen::Vector2d& t_i, const Eigen::Vector2d& t_j,
                          double tau_h);

// Gradients of the distance surrogate with respect to t_i and t_j.
void distance_surrogate_grad(const Eigen::Vector2d& anchor_i,
                             const Eigen::Vector2d& anchor_j,
                             const Eigen::Vector2d& t_i,
                             const Eigen::Vector2d& t_j, double tau_h,
                             Eigen::Vector2d& g_i, Eigen::Vector2d& g_j);

// Convex combination step of the long-term variables toward the solver
// output; preserves the trace budget, positive semidefiniteness, and the
// pairwise-distance guarantee of the distance surrogates.
void blend_variables(Eigen::VectorXd& t, CovarianceSet& qs,
                     const Eigen::VectorXd& t_bar, const CovarianceSet& q_bar,
                     double gamma);

}  // namespace mamimo
