#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mamimo/channel.hpp"

namespace mamimo {

// Transmit covariance matrices, one Hermitian N x N matrix per user.
struct CovarianceSet {
  std::vector<Eigen::MatrixXcd> q;

  int size() const { return static_cast<int>(q.size()); }
  Eigen::MatrixXcd sum_all() const;
  Eigen::MatrixXcd sum_except(int k) const;
  double total_trace() const;
};

// Throws std::invalid_argument if any matrix is non-Hermitian, has an
// eigenvalue below -psd_tol, or the summed trace exceeds budget + trace_tol.
void validate_covariance(const CovarianceSet& qs, double budget,
                         double psd_tol = 1e-9, double trace_tol = 1e-9);

// Instantaneous channel of one user: path geometry plus path gains.
struct UtChannel {
  PathAngles angles;
  Eigen::VectorXcd sigma;
  double lambda = 0.06;
};

inline UtChannel make_ut_channel(const StatisticalState& stat,
                                 const ChannelSample& sample, double lambda) {
  return UtChannel{stat.angles, sample.sigma, lambda};
}

// log2 det(I + H Q_k H^H (sigma^2 I + H sum_{i != k} Q_i H^H)^-1).
double achievable_rate(const Apv& t, const Apv& r, const CovarianceSet& qs,
                       int k, const UtChannel& ch, double noise_w);

// Same rate through the N-sided determinants det(sigma^2 I_N + W^H W);
// agrees with achievable_rate to numerical precision.
double rate_reformulated(const Apv& t, const Apv& r, const CovarianceSet& qs,
                         int k, const UtChannel& ch, double noise_w);

// Rate gradient with respect to Q_i, Hermitian-symmetrized. Convention:
// d rate = tr(grad * E) along Hermitian directions E.
Eigen::MatrixXcd grad_q(const Apv& t, const Apv& r, const CovarianceSet& qs,
                        int k, int i, const UtChannel& ch, double noise_w);

// Rate gradient over the stacked transmit coordinates (length 2N).
Eigen::VectorXd grad_t(const Apv& t, const Apv& r, const CovarianceSet& qs,
                       int k, const UtChannel& ch, double noise_w);

// Rate gradient over the stacked receive coordinates (length 2M).
Eigen::VectorXd grad_r_full(const Apv& t, const Apv& r, const CovarianceSet& qs,
                            int k, const UtChannel& ch, double noise_w);

// Hermitian square root with negative eigenvalues clamped to zero.
Eigen::MatrixXcd hermitian_sqrt(const Eigen::MatrixXcd& a, double clamp_tol = 1e-10);

// Running state for the sequential per-antenna receive optimizer: the two
// N x N Gram-form matrices and their inverses, refreshed by rank-two
// inverse updates as one antenna moves at a time. Single-owner mutable
// state; one instance per short-term run.
class InverseCache {
 public:
  InverseCache(const Apv& t, const CovarianceSet& qs, int k,
               const UtChannel& ch, double noise_w, const Apv& r_init);

  int antennas() const { return static_cast<int>(r_.cols()); }
  const Apv& positions() const { return r_; }

  // Ascent gradient of the rate for antenna m at the current mixed state.
  Eigen::Vector2d gradient(int m) const;

  // Moves antenna m and refreshes the cached inverses. Uses the rank-two
  // inversion-lemma update for M >= 3 and direct re-inversion otherwise.
  void move_antenna(int m, const Eigen::Vector2d& new_pos);

  // Always applies the inversion-lemma update (falls back to direct
  // inversion if the inner 2x2 system is singular, and counts the event).
  void update_lemma(int m, const Eigen::Vector2d& new_pos);

  // Rate at the current state via the difference of N-sided log-dets.
  double rate() const;

  // max over both cached matrices of ||A * A^-1 - I||_F (diagnostic).
  double inverse_residual() const;

  int lemma_fallbacks() const { return fallbacks_; }

 private:
  void rebuild_inverses();
  Eigen::VectorXcd w_vector(bool plus, const Eigen::Vector2d& pos) const;

  Apv r_;
  double noise_w_ = 0.0;
  double lambda_ = 0.0;
  PathAngles angles_;
  Eigen::VectorXcd sigma_conj_;       // conj of the diagonal path gains
  Eigen::MatrixXcd wmap_p_, wmap_m_;  // N x L: f(pos) -> w vector
  Eigen::MatrixXcd bmap_p_, bmap_m_;  // N x L: sqrt(P)^H G^H (row-vector factor)
  Eigen::MatrixXcd w_p_, w_m_;        // N x M, current w vectors per antenna
  Eigen::MatrixXcd a_p_, a_m_;        // sigma^2 I + W^H W (N x N)
  Eigen::MatrixXcd ainv_p_, ainv_m_;
  Eigen::ArrayXd dphase_x_, dphase_y_;  // receive phase derivatives (imag part)
  int fallbacks_ = 0;
};

// Per-antenna gradient through the cache. Throws std::logic_error when the
// cache does not correspond to r_current (stale-cache contract).
Eigen::Vector2d grad_r_single(const InverseCache& cache, const Apv& r_current,
                              int m);

// Inversion-lemma update entry point used by tests; forwards to the cache.
void inv_update(InverseCache& cache, int m, const Eigen::Vector2d& new_pos);

}  // namespace mamimo
