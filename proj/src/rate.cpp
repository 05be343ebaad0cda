#include "mamimo/rate.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

namespace mamimo {

namespace {

constexpr std::complex<double> kImag{0.0, 1.0};
const double kLn2 = std::log(2.0);

double log2_det_hermitian(const Eigen::MatrixXcd& a) {
  Eigen::LLT<Eigen::MatrixXcd> llt(a);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("log-det of a non positive-definite matrix");
  }
  double acc = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    acc += std::log(std::real(llt.matrixL()(i, i)));
  }
  return 2.0 * acc / kLn2;
}

// Shared per-call work: channel, field matrices, and the two interference
// forms S_+/- = sigma^2 I + H P_+/- H^H.
struct RateWork {
  Eigen::MatrixXcd f, g, h;
  Eigen::MatrixXcd p_plus, p_minus;
  Eigen::MatrixXcd s_plus, s_minus;

  RateWork(const Apv& t, const Apv& r, const CovarianceSet& qs, int k,
           const UtChannel& ch, double noise_w) {
    if (k < 0 || k >= qs.size()) {
      throw std::invalid_argument("user index out of range");
    }
    f = field_matrix(r, ch.angles.theta_r, ch.angles.phi_r, ch.lambda);
    g = field_matrix(t, ch.angles.theta_t, ch.angles.phi_t, ch.lambda);
    h = f.adjoint() * ch.sigma.asDiagonal() * g;
    p_plus = qs.sum_all();
    p_minus = qs.sum_except(k);
    const Eigen::Index m = h.rows();
    s_plus = noise_w * Eigen::MatrixXcd::Identity(m, m) + h * p_plus * h.adjoint();
    s_minus = noise_w * Eigen::MatrixXcd::Identity(m, m) + h * p_minus * h.adjoint();
  }
};

}  // namespace

Eigen::MatrixXcd CovarianceSet::sum_all() const {
  Eigen::MatrixXcd acc = q.front();
  for (std::size_t i = 1; i < q.size(); ++i) acc += q[i];
  return acc;
}

Eigen::MatrixXcd CovarianceSet::sum_except(int k) const {
  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(q.front().rows(), q.front().cols());
  for (int i = 0; i < size(); ++i) {
    if (i != k) acc += q[static_cast<std::size_t>(i)];
  }
  return acc;
}

double CovarianceSet::total_trace() const {
  double acc = 0.0;
  for (const auto& qi : q) acc += qi.trace().real();
  return acc;
}

void validate_covariance(const CovarianceSet& qs, double budget, double psd_tol,
                         double trace_tol) {
  double total = 0.0;
  for (const auto& qi : qs.q) {
    if ((qi - qi.adjoint()).norm() > 1e-9 * (1.0 + qi.norm())) {
      throw std::invalid_argument("covariance matrix is not Hermitian");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(qi, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -psd_tol) {
      throw std::invalid_argument("covariance matrix is not positive semidefinite");
    }
    if (std::abs(qi.trace().imag()) > trace_tol) {
      throw std::invalid_argument("covariance trace is not real");
    }
    total += qi.trace().real();
  }
  if (total > budget + trace_tol) {
    throw std::invalid_argument("summed covariance trace exceeds the power budget");
  }
}

double achievable_rate(const Apv& t, const Apv& r, const CovarianceSet& qs,
                       int k, const UtChannel& ch, double noise_w) {
  if (noise_w <= 0.0) throw std::invalid_argument("noise power must be positive");
  RateWork w(t, r, qs, k, ch, noise_w);
  const Eigen::Index m = w.h.rows();
  // det(I + H Q_k H^H S_-^{-1}) = det(I + S_-^{-1} H Q_k H^H).
  const Eigen::MatrixXcd inner =
      Eigen::MatrixXcd::Identity(m, m) +
      w.s_minus.llt().solve(w.h * qs.q[static_cast<std::size_t>(k)] * w.h.adjoint());
  const std::complex<double> det = inner.partialPivLu().determinant();
  const double value = std::log2(det.real());
  if (!std::isfinite(value)) {
    throw std::runtime_error("achievable rate is not finite (det=" +
                             std::to_string(det.real()) + ")");
  }
  return value;
}

double rate_reformulated(const Apv& t, const Apv& r, const CovarianceSet& qs,
                         int k, const UtChannel& ch, double noise_w) {
  if (noise_w <= 0.0) throw std::invalid_argument("noise power must be positive");
  RateWork w(t, r, qs, k, ch, noise_w);
  const Eigen::Index n = w.h.cols();
  const Eigen::MatrixXcd sqrt_plus = hermitian_sqrt(w.p_plus);
  const Eigen::MatrixXcd sqrt_minus = hermitian_sqrt(w.p_minus);
  const Eigen::MatrixXcd w_plus = w.h * sqrt_plus;
  const Eigen::MatrixXcd w_minus = w.h * sqrt_minus;
  const Eigen::MatrixXcd a_plus =
      noise_w * Eigen::MatrixXcd::Identity(n, n) + w_plus.adjoint() * w_plus;
  const Eigen::MatrixXcd a_minus =
      noise_w * Eigen::MatrixXcd::Identity(n, n) + w_minus.adjoint() * w_minus;
  const double value = log2_det_hermitian(a_plus) - log2_det_hermitian(a_minus);
  if (!std::isfinite(value)) {
    throw std::runtime_error("reformulated rate is not finite");
  }
  return value;
}

Eigen::MatrixXcd grad_q(const Apv& t, const Apv& r, const CovarianceSet& qs,
                        int k, int i, const UtChannel& ch, double noise_w) {
  RateWork w(t, r, qs, k, ch, noise_w);
  Eigen::MatrixXcd grad = w.h.adjoint() * w.s_plus.llt().solve(w.h) / kLn2;
  if (i != k) {
    grad -= w.h.adjoint() * w.s_minus.llt().solve(w.h) / kLn2;
  }
  return 0.5 * (grad + grad.adjoint().eval());
}

namespace {

// Both APV gradients share the weighting matrices
// A_1 - A_2 = (2/ln2) (P_+ H^H S_+^{-1} - P_- H^H S_-^{-1}).
Eigen::MatrixXcd weight_difference(const RateWork& w) {
  const Eigen::MatrixXcd a1 =
      (2.0 / kLn2) * w.p_plus * w.s_plus.llt().solve(w.h).adjoint();
  const Eigen::MatrixXcd a2 =
      (2.0 / kLn2) * w.p_minus * w.s_minus.llt().solve(w.h).adjoint();
  return a1 - a2;
}

}  // namespace

Eigen::VectorXd grad_t(const Apv& t, const Apv& r, const CovarianceSet& qs,
                       int k, const UtChannel& ch, double noise_w) {
  RateWork w(t, r, qs, k, ch, noise_w);
  const Eigen::MatrixXcd diff = weight_difference(w);
  const double wave_number = 2.0 * M_PI / ch.lambda;
  const Eigen::VectorXcd dx =
      kImag * (wave_number * ch.angles.theta_t.sin() * ch.angles.phi_t.cos())
                  .matrix()
                  .cast<std::complex<double>>();
  const Eigen::VectorXcd dy =
      kImag *
      (wave_number * ch.angles.theta_t.cos()).matrix().cast<std::complex<double>>();
  const Eigen::MatrixXcd bx =
      w.f.adjoint() * ch.sigma.asDiagonal() * dx.asDiagonal() * w.g;
  const Eigen::MatrixXcd by =
      w.f.adjoint() * ch.sigma.asDiagonal() * dy.asDiagonal() * w.g;
  const Eigen::Index n = t.cols();
  Eigen::VectorXd out(2 * n);
  const Eigen::MatrixXcd px = diff * bx;
  const Eigen::MatrixXcd py = diff * by;
  for (Eigen::Index c = 0; c < n; ++c) {
    out[2 * c] = px(c, c).real();
    out[2 * c + 1] = py(c, c).real();
  }
  return out;
}

Eigen::VectorXd grad_r_full(const Apv& t, const Apv& r, const CovarianceSet& qs,
                            int k, const UtChannel& ch, double noise_w) {
  RateWork w(t, r, qs, k, ch, noise_w);
  const Eigen::MatrixXcd diff = weight_difference(w);
  const double wave_number = 2.0 * M_PI / ch.lambda;
  const Eigen::VectorXcd dx =
      -kImag * (wave_number * ch.angles.theta_r.sin() * ch.angles.phi_r.cos())
                   .matrix()
                   .cast<std::complex<double>>();
  const Eigen::VectorXcd dy =
      -kImag *
      (wave_number * ch.angles.theta_r.cos()).matrix().cast<std::complex<double>>();
  const Eigen::MatrixXcd bx =
      w.f.adjoint() * dx.asDiagonal() * ch.sigma.asDiagonal() * w.g;
  const Eigen::MatrixXcd by =
      w.f.adjoint() * dy.asDiagonal() * ch.sigma.asDiagonal() * w.g;
  const Eigen::Index m = r.cols();
  Eigen::VectorXd out(2 * m);
  const Eigen::MatrixXcd px = bx * diff;
  const Eigen::MatrixXcd py = by * diff;
  for (Eigen::Index c = 0; c < m; ++c) {
    out[2 * c] = px(c, c).real();
    out[2 * c + 1] = py(c, c).real();
  }
  return out;
}

Eigen::MatrixXcd hermitian_sqrt(const Eigen::MatrixXcd& a, double clamp_tol) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (a + a.adjoint()));
  Eigen::VectorXd vals = es.eigenvalues();
  for (Eigen::Index i = 0; i < vals.size(); ++i) {
    if (vals[i] < clamp_tol) vals[i] = std::max(vals[i], 0.0);
    vals[i] = std::sqrt(std::max(vals[i], 0.0));
  }
  return es.eigenvectors() * vals.asDiagonal() * es.eigenvectors().adjoint();
}

InverseCache::InverseCache(const Apv& t, const CovarianceSet& qs, int k,
                           const UtChannel& ch, double noise_w,
                           const Apv& r_init)
    : r_(r_init), noise_w_(noise_w), lambda_(ch.lambda), angles_(ch.angles) {
  sigma_conj_ = ch.sigma.conjugate();
  const Eigen::MatrixXcd g =
      field_matrix(t, ch.angles.theta_t, ch.angles.phi_t, ch.lambda);
  const Eigen::MatrixXcd sqrt_plus = hermitian_sqrt(qs.sum_all());
  const Eigen::MatrixXcd sqrt_minus = hermitian_sqrt(qs.sum_except(k));
  bmap_p_ = sqrt_plus.adjoint() * g.adjoint();
  bmap_m_ = sqrt_minus.adjoint() * g.adjoint();
  wmap_p_ = bmap_p_ * sigma_conj_.asDiagonal();
  wmap_m_ = bmap_m_ * sigma_conj_.asDiagonal();
  const double wave_number = 2.0 * M_PI / lambda_;
  dphase_x_ = wave_number * angles_.theta_r.sin() * angles_.phi_r.cos();
  dphase_y_ = wave_number * angles_.theta_r.cos();

  const int m = antennas();
  const Eigen::Index n = g.cols();
  w_p_.resize(n, m);
  w_m_.resize(n, m);
  for (int c = 0; c < m; ++c) {
    w_p_.col(c) = w_vector(true, r_.col(c));
    w_m_.col(c) = w_vector(false, r_.col(c));
  }
  rebuild_inverses();
}

Eigen::VectorXcd InverseCache::w_vector(bool plus, const Eigen::Vector2d& pos) const {
  const Eigen::VectorXcd f =
      field_response(pos, angles_.theta_r, angles_.phi_r, lambda_);
  return (plus ? wmap_p_ : wmap_m_) * f;
}

void InverseCache::rebuild_inverses() {
  const Eigen::Index n = w_p_.rows();
  a_p_ = noise_w_ * Eigen::MatrixXcd::Identity(n, n) + w_p_ * w_p_.adjoint();
  a_m_ = noise_w_ * Eigen::MatrixXcd::Identity(n, n) + w_m_ * w_m_.adjoint();
  ainv_p_ = a_p_.llt().solve(Eigen::MatrixXcd::Identity(n, n));
  ainv_m_ = a_m_.llt().solve(Eigen::MatrixXcd::Identity(n, n));
}

Eigen::Vector2d InverseCache::gradient(int m) const {
  const Eigen::VectorXcd f =
      field_response(r_.col(m), angles_.theta_r, angles_.phi_r, lambda_);
  // Row factors (2/ln2) w^H A^{-1} sqrt(P)^H G^H for both interference forms.
  const Eigen::RowVectorXcd b_p =
      (2.0 / kLn2) * (w_p_.col(m).adjoint() * ainv_p_) * bmap_p_;
  const Eigen::RowVectorXcd b_m =
      (2.0 / kLn2) * (w_m_.col(m).adjoint() * ainv_m_) * bmap_m_;
  // Per-path products b_l * conj(sigma_l) * f_l; the coordinate gradients are
  // Re{ j * sum_l base_l * dphase_l } = -Im{ sum_l base_l * dphase_l }.
  const Eigen::ArrayXcd base =
      (b_p - b_m).transpose().array() * sigma_conj_.array() * f.array();
  const std::complex<double> sx = (base * dphase_x_.cast<std::complex<double>>()).sum();
  const std::complex<double> sy = (base * dphase_y_.cast<std::complex<double>>()).sum();
  return {-sx.imag(), -sy.imag()};
}

void InverseCache::move_antenna(int m, const Eigen::Vector2d& new_pos) {
  if (antennas() >= 3) {
    update_lemma(m, new_pos);
    return;
  }
  r_.col(m) = new_pos;
  w_p_.col(m) = w_vector(true, new_pos);
  w_m_.col(m) = w_vector(false, new_pos);
  rebuild_inverses();
}

void InverseCache::update_lemma(int m, const Eigen::Vector2d& new_pos) {
  const Eigen::VectorXcd wp_new = w_vector(true, new_pos);
  const Eigen::VectorXcd wm_new = w_vector(false, new_pos);
  const Eigen::Index n = w_p_.rows();

  auto apply = [&](Eigen::MatrixXcd& a, Eigen::MatrixXcd& ainv,
                   const Eigen::VectorXcd& w_old,
                   const Eigen::VectorXcd& w_new) -> bool {
    Eigen::MatrixXcd z1(n, 2), z2(n, 2);
    z1.col(0) = w_new;
    z1.col(1) = w_old;
    z2.col(0) = w_new;
    z2.col(1) = -w_old;
    const Eigen::Matrix2cd inner =
        Eigen::Matrix2cd::Identity() + z2.adjoint() * ainv * z1;
    const std::complex<double> det =
        inner(0, 0) * inner(1, 1) - inner(0, 1) * inner(1, 0);
    if (std::abs(det) < 1e-14) return false;
    const Eigen::MatrixXcd ainv_z1 = ainv * z1;
    const Eigen::MatrixXcd z2h_ainv = z2.adjoint() * ainv;
    ainv -= ainv_z1 * inner.inverse() * z2h_ainv;
    a += z1 * z2.adjoint();
    return true;
  };

  const bool ok_p = apply(a_p_, ainv_p_, w_p_.col(m), wp_new);
  const bool ok_m = apply(a_m_, ainv_m_, w_m_.col(m), wm_new);
  r_.col(m) = new_pos;
  w_p_.col(m) = wp_new;
  w_m_.col(m) = wm_new;
  if (!ok_p || !ok_m) {
    ++fallbacks_;
    rebuild_inverses();
  }
}

double InverseCache::rate() const {
  return log2_det_hermitian(a_p_) - log2_det_hermitian(a_m_);
}

double InverseCache::inverse_residual() const {
  const Eigen::Index n = a_p_.rows();
  const Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(n, n);
  return std::max((a_p_ * ainv_p_ - eye).norm(), (a_m_ * ainv_m_ - eye).norm());
}

Eigen::Vector2d grad_r_single(const InverseCache& cache, const Apv& r_current,
                              int m) {
  if (r_current.cols() != cache.positions().cols() ||
      (r_current - cache.positions()).cwiseAbs().maxCoeff() > 0.0) {
    throw std::logic_error("inverse cache is stale for the supplied receive positions");
  }
  return cache.gradient(m);
}

void inv_update(InverseCache& cache, int m, const Eigen::Vector2d& new_pos) {
  cache.update_lemma(m, new_pos);
}

}  // namespace mamimo
