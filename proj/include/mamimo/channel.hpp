#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mamimo/rng.hpp"

namespace mamimo {

// Antenna position vector: one column (x, y) per antenna, in meters.
// The column-major layout matches the stacked coordinate ordering
// [(x_1, y_1), (x_2, y_2), ...] used by all gradient vectors.
using Apv = Eigen::Matrix2Xd;

inline Eigen::VectorXd stack(const Apv& apv) {
  return Eigen::Map<const Eigen::VectorXd>(apv.data(), apv.size());
}

inline Apv unstack(const Eigen::VectorXd& v) {
  return Eigen::Map<const Apv>(v.data(), 2, v.size() / 2);
}

struct Rect {
  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;

  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  Eigen::Vector2d center() const {
    return {0.5 * (xmin + xmax), 0.5 * (ymin + ymax)};
  }
  bool contains(const Eigen::Vector2d& p, double tol = 0.0) const {
    return p.x() >= xmin - tol && p.x() <= xmax + tol && p.y() >= ymin - tol &&
           p.y() <= ymax + tol;
  }
};

enum class RegionKind { TransmitGmm, ReceiveGmm, ReceivePmm };

// Movement region: a single shared rectangle (general movement mode) or one
// rectangle per antenna (planar movement mode).
struct RegionSpec {
  RegionKind kind = RegionKind::ReceiveGmm;
  std::vector<Rect> rects;

  bool per_antenna() const { return rects.size() > 1; }
  const Rect& rect_for(int antenna) const {
    return per_antenna() ? rects.at(static_cast<std::size_t>(antenna))
                         : rects.front();
  }
  // Throws std::invalid_argument on degenerate rectangles or, for
  // per-antenna regions, separation below min_separation.
  void validate(double min_separation) const;

  // Shared transmit region of size (4*xt + 3*d) x (2*xt + d).
  static RegionSpec transmit_gmm(double xt, double d);
  // Shared receive region of size (2*xr + d) x xr.
  static RegionSpec receive_gmm(double xr, double d);
  // One xr x xr square per antenna, horizontally arranged with gaps d.
  static RegionSpec receive_pmm(double xr, double d, int antennas);
};

// Elevation/azimuth pairs per propagation path, radians in [0, pi].
struct PathAngles {
  Eigen::ArrayXd theta_t, phi_t;  // transmit side
  Eigen::ArrayXd theta_r, phi_r;  // receive side

  int transmit_paths() const { return static_cast<int>(theta_t.size()); }
  int receive_paths() const { return static_cast<int>(theta_r.size()); }
};

// Long-term channel law of one user terminal: distance, average gain, and the
// slowly varying path geometry.
struct StatisticalState {
  double distance_m = 0.0;
  double avg_gain = 0.0;  // linear
  PathAngles angles;

  double path_gain_variance() const {
    return avg_gain / static_cast<double>(angles.receive_paths());
  }
};

// One instantaneous realization: the diagonal of the path-response matrix.
struct ChannelSample {
  Eigen::VectorXcd sigma;
};

// Physical scenario parameters, all in linear units.
struct SystemConfig {
  int n_tx = 8;
  int m_rx = 2;
  int k_users = 4;
  int paths = 10;
  double lambda_m = 0.06;
  double min_dist_m = 0.03;  // D
  double x_t_m = 0.03;
  double x_r_m = 0.03;
  double noise_w = 1e-11;
  double c0 = 1e-4;
  double alpha0 = 2.8;
  double power_w = 0.1;
  double r_min = 1.0;
  double ut_dist_min_m = 20.0;
  double ut_dist_max_m = 100.0;
};

double dbm_to_watt(double dbm);
double db_to_linear(double db);

// Propagation-distance difference of a planar position relative to the region
// origin, for one path direction: x*sin(theta)*cos(phi) + y*cos(theta).
double propagation_delta(const Eigen::Vector2d& pos, double theta, double phi);

// Unit-modulus phase vector over the given paths for one antenna position.
Eigen::VectorXcd field_response(const Eigen::Vector2d& pos,
                                const Eigen::ArrayXd& theta,
                                const Eigen::ArrayXd& phi, double lambda);

// L x (#antennas) matrix whose columns are the field responses.
Eigen::MatrixXcd field_matrix(const Apv& positions,
                              const Eigen::ArrayXd& theta,
                              const Eigen::ArrayXd& phi, double lambda);

// Channel between a transmit APV and one user's receive APV: F^H * Sigma * G.
// Accepts a general (receive paths) x (transmit paths) path-response matrix.
Eigen::MatrixXcd channel_matrix(const Apv& t, const Apv& r,
                                const Eigen::MatrixXcd& sigma,
                                const PathAngles& angles, double lambda);
Eigen::MatrixXcd channel_matrix(const Apv& t, const Apv& r,
                                const ChannelSample& sample,
                                const PathAngles& angles, double lambda);

// Draws distance ~ U[d_min, d_max], gain c0*d^-alpha0, and i.i.d. path angles
// with elevation uniform on [0, pi] and azimuth density sin(phi)/2.
StatisticalState draw_statistical_state(const SystemConfig& cfg, Rng& rng);

// Redraws the path gains from CN(0, g/L); the path geometry is reused.
ChannelSample draw_channel_sample(const StatisticalState& stat, Rng& rng);

// Inverse CDF of the azimuth density sin(phi)/2 on [0, pi].
double sample_azimuth(double u);

double min_pairwise_distance(const Apv& apv);
bool pairwise_distance_ok(const Apv& apv, double min_dist, double tol = 0.0);
bool in_region(const Apv& apv, const RegionSpec& region, double tol = 0.0);

// Centered uniform grid of `count` positions with the given spacing;
// rows = floor(sqrt(count)), columns = ceil(count / rows).
Apv upa_positions(int count, double spacing, const Rect& rect);

// Center of each antenna's rectangle (planar movement mode initialization).
Apv region_centers(const RegionSpec& region, int antennas);

}  // namespace mamimo
