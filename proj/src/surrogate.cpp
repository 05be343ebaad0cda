#include "mamimo/surrogate.hpp"

#include <stdexcept>

namespace mamimo {

BatchGradients mini_batch_gradients(
    const Apv& t, const CovarianceSet& qs,
    const std::vector<std::vector<UtChannel>>& samples,
    const std::vector<std::vector<Apv>>& receive_apvs, double noise_w,
    ShortTermMode /*mode*/, bool with_receive_grads) {
  const int k_users = static_cast<int>(samples.size());
  if (k_users == 0 || samples.front().empty()) {
    throw std::invalid_argument("mini-batch is empty");
  }
  if (receive_apvs.size() != samples.size()) {
    throw std::invalid_argument("receive APV batch does not match the sample batch");
  }

  const int n = static_cast<int>(t.cols());
  BatchGradients out;
  out.delta_t.assign(k_users, Eigen::VectorXd::Zero(2 * n));
  out.rate_mean.assign(k_users, 0.0);
  out.delta_q.resize(k_users);
  if (with_receive_grads) out.delta_r.resize(k_users);

  for (int k = 0; k < k_users; ++k) {
    const auto& batch = samples[static_cast<std::size_t>(k)];
    const auto& apvs = receive_apvs[static_cast<std::size_t>(k)];
    if (batch.empty() || apvs.size() != batch.size()) {
      throw std::invalid_argument("mini-batch size mismatch for one user");
    }
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    auto& dq = out.delta_q[static_cast<std::size_t>(k)];
    dq.assign(static_cast<std::size_t>(qs.size()),
              Eigen::MatrixXcd::Zero(n, n));
    if (with_receive_grads) {
      out.delta_r[static_cast<std::size_t>(k)] =
          Eigen::VectorXd::Zero(2 * apvs.front().cols());
    }
    for (std::size_t b = 0; b < batch.size(); ++b) {
      const UtChannel& ch = batch[b];
      const Apv& r = apvs[b];
      out.delta_t[static_cast<std::size_t>(k)] +=
          inv_b * grad_t(t, r, qs, k, ch, noise_w);
      out.rate_mean[static_cast<std::size_t>(k)] +=
          inv_b * achievable_rate(t, r, qs, k, ch, noise_w);
      for (int i = 0; i < qs.size(); ++i) {
        dq[static_cast<std::size_t>(i)] +=
            inv_b * grad_q(t, r, qs, k, i, ch, noise_w);
      }
      if (with_receive_grads) {
        out.delta_r[static_cast<std::size_t>(k)] +=
            inv_b * grad_r_full(t, r, qs, k, ch, noise_w);
      }
    }
  }
  return out;
}

SurrogateState::SurrogateState(int k_users, int n_tx, double tau_t, double tau_q)
    : SurrogateState(k_users, n_tx, tau_t, tau_q, 0, -1.0) {}

SurrogateState::SurrogateState(int k_users, int n_tx, double tau_t, double tau_q,
                               int m_rx, double tau_r)
    : n_tx_(n_tx), m_rx_(m_rx), tau_t_(tau_t), tau_q_(tau_q), tau_r_(tau_r) {
  if (tau_t >= 0.0 || tau_q >= 0.0 || (m_rx > 0 && tau_r >= 0.0)) {
    throw std::invalid_argument("surrogate curvatures must be negative");
  }
  f_.resize(static_cast<std::size_t>(k_users));
  for (auto& per : f_) {
    per.a_t = Eigen::VectorXd::Zero(2 * n_tx);
    per.a_q.assign(static_cast<std::size_t>(k_users),
                   Eigen::MatrixXcd::Zero(n_tx, n_tx));
    if (m_rx > 0) per.a_r = Eigen::VectorXd::Zero(2 * m_rx);
  }
}

void SurrogateState::update(const Eigen::VectorXd& t_anchor,
                            const CovarianceSet& q_anchor,
                            const BatchGradients& grads,
                            const std::vector<Eigen::VectorXd>* r_anchor) {
  if (has_receive_block() && r_anchor == nullptr) {
    throw std::invalid_argument("receive anchors required for this surrogate");
  }
  ++ell_;
  // The very first update replaces the empty surrogate outright; afterwards
  // the diminishing mixing weight applies.
  const double w = (ell_ == 1) ? 1.0 : StepSequences::rho(ell_);

  for (int k = 0; k < users(); ++k) {
    PerUt& per = f_[static_cast<std::size_t>(k)];
    const Eigen::VectorXd& dt = grads.delta_t[static_cast<std::size_t>(k)];

    // Expand the sampled quadratic about the anchor into monomial form.
    double c_new = grads.rate_mean[static_cast<std::size_t>(k)] -
                   dt.dot(t_anchor) + tau_t_ * t_anchor.squaredNorm();
    const Eigen::VectorXd a_t_new = dt - 2.0 * tau_t_ * t_anchor;
    per.c = (1.0 - w) * per.c + w * c_new;
    per.a_t = (1.0 - w) * per.a_t + w * a_t_new;

    for (int i = 0; i < static_cast<int>(per.a_q.size()); ++i) {
      const Eigen::MatrixXcd& dq =
          grads.delta_q[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)];
      const Eigen::MatrixXcd& qa = q_anchor.q[static_cast<std::size_t>(i)];
      per.c += w * (-(dq.adjoint() * qa).trace().real() +
                    tau_q_ * qa.squaredNorm());
      Eigen::MatrixXcd a_q_new = dq - 2.0 * tau_q_ * qa;
      auto& slot = per.a_q[static_cast<std::size_t>(i)];
      slot = (1.0 - w) * slot + w * a_q_new;
      slot = 0.5 * (slot + slot.adjoint().eval());
    }

    if (has_receive_block()) {
      const Eigen::VectorXd& dr = grads.delta_r[static_cast<std::size_t>(k)];
      const Eigen::VectorXd& ra = (*r_anchor)[static_cast<std::size_t>(k)];
      per.c += w * (-dr.dot(ra) + tau_r_ * ra.squaredNorm());
      const Eigen::VectorXd a_r_new = dr - 2.0 * tau_r_ * ra;
      per.a_r = (1.0 - w) * per.a_r + w * a_r_new;
    }
  }
}

double SurrogateState::value(int k, const Eigen::VectorXd& t,
                             const CovarianceSet& qs,
                             const Eigen::VectorXd* r_k) const {
  if (ell_ == 0) return 0.0;
  const PerUt& per = f_[static_cast<std::size_t>(k)];
  double v = per.c + per.a_t.dot(t) + tau_t_ * t.squaredNorm();
  for (int i = 0; i < static_cast<int>(per.a_q.size()); ++i) {
    const Eigen::MatrixXcd& qi = qs.q[static_cast<std::size_t>(i)];
    v += (per.a_q[static_cast<std::size_t>(i)].adjoint() * qi).trace().real() +
         tau_q_ * qi.squaredNorm();
  }
  if (has_receive_block()) {
    if (r_k == nullptr) {
      throw std::invalid_argument("receive coordinates required for this surrogate");
    }
    v += per.a_r.dot(*r_k) + tau_r_ * r_k->squaredNorm();
  }
  return v;
}

double SurrogateState::value_sum(const Eigen::VectorXd& t,
                                 const CovarianceSet& qs,
                                 const std::vector<Eigen::VectorXd>* r) const {
  double acc = 0.0;
  for (int k = 0; k < users(); ++k) {
    acc += value(k, t, qs,
                 r != nullptr ? &(*r)[static_cast<std::size_t>(k)] : nullptr);
  }
  return acc;
}

Eigen::VectorXd SurrogateState::grad_t(int k, const Eigen::VectorXd& t) const {
  if (ell_ == 0) return Eigen::VectorXd::Zero(t.size());
  return f_[static_cast<std::size_t>(k)].a_t + 2.0 * tau_t_ * t;
}

Eigen::MatrixXcd SurrogateState::grad_q(int k, int i,
                                        const Eigen::MatrixXcd& q_i) const {
  if (ell_ == 0) return Eigen::MatrixXcd::Zero(q_i.rows(), q_i.cols());
  return f_[static_cast<std::size_t>(k)].a_q[static_cast<std::size_t>(i)] +
         2.0 * tau_q_ * q_i;
}

Eigen::VectorXd SurrogateState::grad_r(int k, const Eigen::VectorXd& r_k) const {
  if (ell_ == 0) return Eigen::VectorXd::Zero(r_k.size());
  return f_[static_cast<std::size_t>(k)].a_r + 2.0 * tau_r_ * r_k;
}

double distance_surrogate(const Eigen::Vector2d& anchor_i,
                          const Eigen::Vector2d& anchor_j,
                          const Eigen::Vector2d& t_i, const Eigen::Vector2d& t_j,
                          double tau_h) {
  if (tau_h >= 0.0) throw std::invalid_argument("distance-surrogate curvature must be negative");
  const Eigen::Vector2d anchor_diff = anchor_i - anchor_j;
  return tau_h * ((t_i - anchor_i).squaredNorm() + (t_j - anchor_j).squaredNorm()) +
         2.0 * anchor_diff.dot(t_i - t_j) - anchor_diff.squaredNorm();
}

void distance_surrogate_grad(const Eigen::Vector2d& anchor_i,
                             const Eigen::Vector2d& anchor_j,
                             const Eigen::Vector2d& t_i,
                             const Eigen::Vector2d& t_j, double tau_h,
                             Eigen::Vector2d& g_i, Eigen::Vector2d& g_j) {
  const Eigen::Vector2d anchor_diff = anchor_i - anchor_j;
  g_i = 2.0 * tau_h * (t_i - anchor_i) + 2.0 * anchor_diff;
  g_j = 2.0 * tau_h * (t_j - anchor_j) - 2.0 * anchor_diff;
}

void blend_variables(Eigen::VectorXd& t, CovarianceSet& qs,
                     const Eigen::VectorXd& t_bar, const CovarianceSet& q_bar,
                     double gamma) {
  t = (1.0 - gamma) * t + gamma * t_bar;
  for (int i = 0; i < qs.size(); ++i) {
    auto& qi = qs.q[static_cast<std::size_t>(i)];
    qi = (1.0 - gamma) * qi + gamma * q_bar.q[static_cast<std::size_t>(i)];
    qi = 0.5 * (qi + qi.adjoint().eval());
  }
}

}  // namespace mamimo
