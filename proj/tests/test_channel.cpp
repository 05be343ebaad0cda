#include <cmath>

#include "doctest.h"
#include "mamimo/channel.hpp"
#include "mamimo/rate.hpp"
#include "support/oracles.hpp"

using namespace mamimo;

TEST_SUITE_BEGIN("channel");

TEST_CASE("propagation delta matches the closed form") {
  CHECK(propagation_delta({0.0, 0.0}, 1.2, 0.7) == doctest::Approx(0.0));
  const double lambda = 0.06;
  CHECK(propagation_delta({lambda / 4.0, 0.0}, M_PI / 2.0, 0.0) ==
        doctest::Approx(lambda / 4.0));
  // independent scalar evaluation
  const double x = 0.01, y = 0.02, th = 1.0, ph = 0.5;
  const double expect = x * std::sin(th) * std::cos(ph) + y * std::cos(th);
  CHECK(propagation_delta({x, y}, th, ph) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("field response phases") {
  Eigen::ArrayXd th(1), ph(1);
  th[0] = M_PI / 2.0;
  ph[0] = 0.0;
  const double lambda = 0.06;
  SUBCASE("origin gives all ones") {
    Eigen::ArrayXd th3 = Eigen::ArrayXd::LinSpaced(3, 0.3, 2.8);
    Eigen::ArrayXd ph3 = Eigen::ArrayXd::LinSpaced(3, 0.1, 3.0);
    const Eigen::VectorXcd f = field_response({0.0, 0.0}, th3, ph3, lambda);
    for (int l = 0; l < 3; ++l) {
      CHECK(std::abs(f[l] - std::complex<double>(1.0, 0.0)) < 1e-14);
    }
  }
  SUBCASE("quarter wavelength gives a quarter turn") {
    const Eigen::VectorXcd f = field_response({lambda / 4.0, 0.0}, th, ph, lambda);
    CHECK(std::abs(f[0] - std::complex<double>(0.0, 1.0)) < 1e-12);
  }
  SUBCASE("unit modulus at random positions") {
    Rng rng(7);
    Eigen::ArrayXd th3(3), ph3(3);
    for (int l = 0; l < 3; ++l) {
      th3[l] = rng.uniform(0.0, M_PI);
      ph3[l] = rng.uniform(0.0, M_PI);
    }
    for (int it = 0; it < 20; ++it) {
      const Eigen::Vector2d pos(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
      const Eigen::VectorXcd f = field_response(pos, th3, ph3, lambda);
      for (int l = 0; l < 3; ++l) CHECK(std::abs(std::abs(f[l]) - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("channel matrix against naive path summation") {
  Rng rng(11);
  SUBCASE("zero gains give the zero matrix") {
    auto inst = oracles::random_instance(rng, 2, 2, 2, 3);
    inst.ch.sigma.setZero();
    const Eigen::MatrixXcd h =
        channel_matrix(inst.t, inst.r, ChannelSample{inst.ch.sigma},
                       inst.ch.angles, inst.ch.lambda);
    CHECK(h.norm() == doctest::Approx(0.0));
  }
  SUBCASE("single antenna, single path at origin") {
    PathAngles angles;
    angles.theta_t.resize(1);
    angles.phi_t.resize(1);
    angles.theta_r.resize(1);
    angles.phi_r.resize(1);
    angles.theta_t[0] = 0.4;
    angles.phi_t[0] = 1.1;
    angles.theta_r[0] = 2.0;
    angles.phi_r[0] = 0.3;
    Apv t(2, 1), r(2, 1);
    t.setZero();
    r.setZero();
    ChannelSample s;
    s.sigma.resize(1);
    s.sigma[0] = std::complex<double>(0.3, -0.2);
    const Eigen::MatrixXcd h = channel_matrix(t, r, s, angles, 0.06);
    CHECK(std::abs(h(0, 0) - s.sigma[0]) < 1e-14);
  }
  SUBCASE("random instances match the triple loop") {
    for (int it = 0; it < 10; ++it) {
      auto inst = oracles::random_instance(rng, 2, 2, 2, 3);
      const Eigen::MatrixXcd h =
          channel_matrix(inst.t, inst.r, ChannelSample{inst.ch.sigma},
                         inst.ch.angles, inst.ch.lambda);
      const Eigen::MatrixXcd ref = oracles::naive_channel(
          inst.t, inst.r, Eigen::MatrixXcd(inst.ch.sigma.asDiagonal()),
          inst.ch.angles, inst.ch.lambda);
      CHECK((h - ref).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
  SUBCASE("dimension mismatch is rejected") {
    auto inst = oracles::random_instance(rng, 2, 2, 2, 3);
    Eigen::MatrixXcd bad = Eigen::MatrixXcd::Zero(2, 3);
    CHECK_THROWS_AS(
        channel_matrix(inst.t, inst.r, bad, inst.ch.angles, inst.ch.lambda),
        std::invalid_argument);
  }
}

TEST_CASE("common phase rotation leaves the rate unchanged") {
  Rng rng(13);
  auto inst = oracles::random_instance(rng, 3, 2, 2, 4);
  const double base =
      achievable_rate(inst.t, inst.r, inst.qs, inst.k, inst.ch, inst.noise);
  // multiplying every path gain by a unit phase rotates all field products
  const std::complex<double> phase = std::polar(1.0, 1.234);
  UtChannel rotated = inst.ch;
  rotated.sigma *= phase;
  const double after =
      achievable_rate(inst.t, inst.r, inst.qs, inst.k, rotated, inst.noise);
  CHECK(after == doctest::Approx(base).epsilon(1e-10));
}

TEST_CASE("statistical state sampling") {
  SystemConfig cfg;
  cfg.paths = 6;
  SUBCASE("gain follows the path-loss law") {
    Rng rng(3);
    const StatisticalState s = draw_statistical_state(cfg, rng);
    CHECK(s.avg_gain ==
          doctest::Approx(cfg.c0 * std::pow(s.distance_m, -cfg.alpha0)));
    CHECK(s.distance_m >= 20.0);
    CHECK(s.distance_m <= 100.0);
    // reference operating point from the configuration defaults
    CHECK(1e-4 * std::pow(100.0, -2.8) ==
          doctest::Approx(cfg.c0 * std::pow(100.0, -cfg.alpha0)).epsilon(1e-12));
  }
  SUBCASE("azimuth inverse CDF hits the median") {
    CHECK(sample_azimuth(0.5) == doctest::Approx(M_PI / 2.0));
  }
  SUBCASE("angle laws pass a KS test") {
    Rng rng(17);
    const int n = 100000;
    std::vector<double> phis, thetas;
    phis.reserve(n);
    thetas.reserve(n);
    SystemConfig one;
    one.paths = 1;
    for (int i = 0; i < n; ++i) {
      const StatisticalState s = draw_statistical_state(one, rng);
      phis.push_back(s.angles.phi_r[0]);
      thetas.push_back(s.angles.theta_r[0]);
    }
    std::sort(phis.begin(), phis.end());
    std::sort(thetas.begin(), thetas.end());
    double ks_phi = 0.0, ks_theta = 0.0;
    for (int i = 0; i < n; ++i) {
      const double emp = (i + 1.0) / n;
      ks_phi = std::max(ks_phi,
                        std::abs(emp - 0.5 * (1.0 - std::cos(phis[static_cast<std::size_t>(i)]))));
      ks_theta = std::max(
          ks_theta, std::abs(emp - thetas[static_cast<std::size_t>(i)] / M_PI));
    }
    CHECK(ks_phi < 0.01);
    CHECK(ks_theta < 0.01);
  }
}

TEST_CASE("channel sample drawing") {
  SystemConfig cfg;
  cfg.paths = 4;
  Rng rng(23);
  StatisticalState stat = draw_statistical_state(cfg, rng);
  SUBCASE("zero gain gives zero gains") {
    stat.avg_gain = 0.0;
    const ChannelSample s = draw_channel_sample(stat, rng);
    CHECK(s.sigma.norm() == doctest::Approx(0.0));
  }
  SUBCASE("sample variance matches the per-path law") {
    const double var = stat.path_gain_variance();
    double acc = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
      const ChannelSample s = draw_channel_sample(stat, rng);
      acc += s.sigma.squaredNorm();
    }
    const double est = acc / (n * cfg.paths);
    CHECK(std::abs(est - var) / var < 0.03);
  }
  SUBCASE("same seed reproduces the sample") {
    Rng a(99), b(99);
    const ChannelSample sa = draw_channel_sample(stat, a);
    const ChannelSample sb = draw_channel_sample(stat, b);
    CHECK((sa.sigma - sb.sigma).norm() == doctest::Approx(0.0));
  }
}

TEST_CASE("unit conversions") {
  CHECK(dbm_to_watt(20.0) == doctest::Approx(0.1));
  CHECK(dbm_to_watt(-80.0) == doctest::Approx(1e-11));
  CHECK(dbm_to_watt(0.0) == doctest::Approx(1e-3));
  CHECK(db_to_linear(-40.0) == doctest::Approx(1e-4));
}

TEST_CASE("region construction and validation") {
  const double lambda = 0.06;
  const double d = 0.5 * lambda, xt = 0.5 * lambda, xr = 0.5 * lambda;
  const RegionSpec t_region = RegionSpec::transmit_gmm(xt, d);
  CHECK(t_region.rects.front().width() == doctest::Approx(4 * xt + 3 * d));
  CHECK(t_region.rects.front().height() == doctest::Approx(2 * xt + d));
  const RegionSpec r_gmm = RegionSpec::receive_gmm(xr, d);
  CHECK(r_gmm.rects.front().width() == doctest::Approx(2 * xr + d));
  CHECK(r_gmm.rects.front().height() == doctest::Approx(xr));
  const RegionSpec r_pmm = RegionSpec::receive_pmm(xr, d, 2);
  CHECK(r_pmm.rects.size() == 2);
  CHECK_NOTHROW(r_pmm.validate(d));
  RegionSpec too_close = r_pmm;
  too_close.rects[1].xmin -= 0.9 * d;
  too_close.rects[1].xmax -= 0.9 * d;
  CHECK_THROWS_AS(too_close.validate(d), std::invalid_argument);
  RegionSpec degenerate = r_gmm;
  degenerate.rects[0].ymax = degenerate.rects[0].ymin;
  CHECK_THROWS_AS(degenerate.validate(d), std::invalid_argument);
}

TEST_CASE("uniform array placement") {
  const Rect rect{0.0, 0.21, 0.0, 0.09};
  const Apv upa = upa_positions(8, 0.045, rect);
  CHECK(upa.cols() == 8);
  CHECK(min_pairwise_distance(upa) == doctest::Approx(0.045));
  RegionSpec region;
  region.rects = {rect};
  CHECK(in_region(upa, region, 1e-12));
}

TEST_SUITE_END();
