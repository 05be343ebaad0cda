#include "mamimo/channel.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace mamimo {

namespace {
constexpr std::complex<double> kImag{0.0, 1.0};
}

double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

void RegionSpec::validate(double min_separation) const {
  if (rects.empty()) throw std::invalid_argument("region has no rectangles");
  for (const Rect& rc : rects) {
    if (!(rc.xmax > rc.xmin) || !(rc.ymax > rc.ymin)) {
      throw std::invalid_argument("degenerate region rectangle");
    }
  }
  if (!per_antenna()) return;
  for (std::size_t i = 0; i < rects.size(); ++i) {
    for (std::size_t j = i + 1; j < rects.size(); ++j) {
      const Rect& a = rects[i];
      const Rect& b = rects[j];
      const double dx =
          std::max({0.0, a.xmin - b.xmax, b.xmin - a.xmax});
      const double dy =
          std::max({0.0, a.ymin - b.ymax, b.ymin - a.ymax});
      if (std::hypot(dx, dy) < min_separation - 1e-12) {
        throw std::invalid_argument("per-antenna rectangles closer than the minimum distance");
      }
    }
  }
}

RegionSpec RegionSpec::transmit_gmm(double xt, double d) {
  RegionSpec spec;
  spec.kind = RegionKind::TransmitGmm;
  spec.rects = {Rect{0.0, 4.0 * xt + 3.0 * d, 0.0, 2.0 * xt + d}};
  return spec;
}

RegionSpec RegionSpec::receive_gmm(double xr, double d) {
  RegionSpec spec;
  spec.kind = RegionKind::ReceiveGmm;
  spec.rects = {Rect{0.0, 2.0 * xr + d, 0.0, xr}};
  return spec;
}

RegionSpec RegionSpec::receive_pmm(double xr, double d, int antennas) {
  RegionSpec spec;
  spec.kind = RegionKind::ReceivePmm;
  spec.rects.reserve(static_cast<std::size_t>(antennas));
  for (int m = 0; m < antennas; ++m) {
    const double x0 = static_cast<double>(m) * (xr + d);
    spec.rects.push_back(Rect{x0, x0 + xr, 0.0, xr});
  }
  return spec;
}

double propagation_delta(const Eigen::Vector2d& pos, double theta, double phi) {
  return pos.x() * std::sin(theta) * std::cos(phi) + pos.y() * std::cos(theta);
}

Eigen::VectorXcd field_response(const Eigen::Vector2d& pos,
                                const Eigen::ArrayXd& theta,
                                const Eigen::ArrayXd& phi, double lambda) {
  const double wave_number = 2.0 * M_PI / lambda;
  Eigen::VectorXcd out(theta.size());
  for (Eigen::Index l = 0; l < theta.size(); ++l) {
    const double rho = propagation_delta(pos, theta[l], phi[l]);
    out[l] = std::exp(kImag * (wave_number * rho));
  }
  return out;
}

Eigen::MatrixXcd field_matrix(const Apv& positions, const Eigen::ArrayXd& theta,
                              const Eigen::ArrayXd& phi, double lambda) {
  Eigen::MatrixXcd out(theta.size(), positions.cols());
  for (Eigen::Index c = 0; c < positions.cols(); ++c) {
    out.col(c) = field_response(positions.col(c), theta, phi, lambda);
  }
  return out;
}

Eigen::MatrixXcd channel_matrix(const Apv& t, const Apv& r,
                                const Eigen::MatrixXcd& sigma,
                                const PathAngles& angles, double lambda) {
  if (sigma.rows() != angles.receive_paths() ||
      sigma.cols() != angles.transmit_paths()) {
    throw std::invalid_argument(
        "path-response matrix is " + std::to_string(sigma.rows()) + "x" +
        std::to_string(sigma.cols()) + " but the path geometry has " +
        std::to_string(angles.receive_paths()) + " receive / " +
        std::to_string(angles.transmit_paths()) + " transmit paths");
  }
  const Eigen::MatrixXcd f = field_matrix(r, angles.theta_r, angles.phi_r, lambda);
  const Eigen::MatrixXcd g = field_matrix(t, angles.theta_t, angles.phi_t, lambda);
  return f.adjoint() * sigma * g;
}

Eigen::MatrixXcd channel_matrix(const Apv& t, const Apv& r,
                                const ChannelSample& sample,
                                const PathAngles& angles, double lambda) {
  if (sample.sigma.size() != angles.receive_paths() ||
      sample.sigma.size() != angles.transmit_paths()) {
    throw std::invalid_argument("diagonal path-response length does not match the path count");
  }
  const Eigen::MatrixXcd f = field_matrix(r, angles.theta_r, angles.phi_r, lambda);
  const Eigen::MatrixXcd g = field_matrix(t, angles.theta_t, angles.phi_t, lambda);
  return f.adjoint() * sample.sigma.asDiagonal() * g;
}

double sample_azimuth(double u) { return std::acos(1.0 - 2.0 * u); }

StatisticalState draw_statistical_state(const SystemConfig& cfg, Rng& rng) {
  StatisticalState stat;
  stat.distance_m = rng.uniform(cfg.ut_dist_min_m, cfg.ut_dist_max_m);
  stat.avg_gain = cfg.c0 * std::pow(stat.distance_m, -cfg.alpha0);
  auto draw_pairs = [&](Eigen::ArrayXd& theta, Eigen::ArrayXd& phi) {
    theta.resize(cfg.paths);
    phi.resize(cfg.paths);
    for (int l = 0; l < cfg.paths; ++l) {
      theta[l] = rng.uniform(0.0, M_PI);
      phi[l] = sample_azimuth(rng.uniform());
    }
  };
  draw_pairs(stat.angles.theta_t, stat.angles.phi_t);
  draw_pairs(stat.angles.theta_r, stat.angles.phi_r);
  return stat;
}

ChannelSample draw_channel_sample(const StatisticalState& stat, Rng& rng) {
  const int paths = stat.angles.receive_paths();
  const double var = stat.path_gain_variance();
  ChannelSample sample;
  sample.sigma.resize(paths);
  for (int l = 0; l < paths; ++l) {
    sample.sigma[l] = rng.complex_normal(var);
  }
  return sample;
}

double min_pairwise_distance(const Apv& apv) {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < apv.cols(); ++i) {
    for (Eigen::Index j = i + 1; j < apv.cols(); ++j) {
      best = std::min(best, (apv.col(i) - apv.col(j)).norm());
    }
  }
  return best;
}

bool pairwise_distance_ok(const Apv& apv, double min_dist, double tol) {
  if (apv.cols() < 2) return true;
  return min_pairwise_distance(apv) >= min_dist - tol;
}

bool in_region(const Apv& apv, const RegionSpec& region, double tol) {
  for (Eigen::Index c = 0; c < apv.cols(); ++c) {
    if (!region.rect_for(static_cast<int>(c)).contains(apv.col(c), tol)) {
      return false;
    }
  }
  return true;
}

Apv upa_positions(int count, double spacing, const Rect& rect) {
  int rows = std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(count)))));
  const int cols = (count + rows - 1) / rows;
  Apv out(2, count);
  const Eigen::Vector2d center = rect.center();
  const double x0 = center.x() - 0.5 * spacing * (cols - 1);
  const double y0 = center.y() - 0.5 * spacing * (rows - 1);
  int idx = 0;
  for (int rr = 0; rr < rows && idx < count; ++rr) {
    for (int cc = 0; cc < cols && idx < count; ++cc, ++idx) {
      out.col(idx) = Eigen::Vector2d(x0 + cc * spacing, y0 + rr * spacing);
    }
  }
  return out;
}

Apv region_centers(const RegionSpec& region, int antennas) {
  Apv out(2, antennas);
  for (int m = 0; m < antennas; ++m) {
    out.col(m) = region.rect_for(m).center();
  }
  return out;
}

}  // namespace mamimo
