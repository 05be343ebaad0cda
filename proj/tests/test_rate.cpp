#include <cmath>

#include "doctest.h"
#include "mamimo/rate.hpp"
#include "support/oracles.hpp"

using namespace mamimo;
using oracles::central_diff;
using oracles::random_instance;

TEST_SUITE_BEGIN("rate");

TEST_CASE("achievable rate closed forms") {
  Rng rng(31);
  SUBCASE("zero covariance for the served user gives zero rate") {
    auto inst = random_instance(rng, 3, 2, 2, 4);
    inst.qs.q[static_cast<std::size_t>(inst.k)].setZero();
    CHECK(achievable_rate(inst.t, inst.r, inst.qs, inst.k, inst.ch, inst.noise) ==
          doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("scalar single-user case") {
    auto inst = random_instance(rng, 1, 1, 1, 1);
    const Eigen::MatrixXcd h = channel_matrix(
        inst.t, inst.r, ChannelSample{inst.ch.sigma}, inst.ch.angles, inst.ch.lambda);
    const double q = inst.qs.q[0](0, 0).real();
    const double expect = std::log2(1.0 + std::norm(h(0, 0)) * q / inst.noise);
    CHECK(achievable_rate(inst.t, inst.r, inst.qs, 0, inst.ch, inst.noise) ==
          doctest::Approx(expect).epsilon(1e-12));
  }
  SUBCASE("difference-of-logdets identity") {
    for (int it = 0; it < 10; ++it) {
      auto inst = random_instance(rng, 2, 2, 2, 4);
      const Eigen::MatrixXcd h = channel_matrix(
          inst.t, inst.r, ChannelSample{inst.ch.sigma}, inst.ch.angles, inst.ch.lambda);
      const Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(2, 2);
      const Eigen::MatrixXcd sp =
          inst.noise * eye + h * inst.qs.sum_all() * h.adjoint();
      const Eigen::MatrixXcd sm =
          inst.noise * eye + h * inst.qs.sum_except(inst.k) * h.adjoint();
      const double expect =
          std::log2(sp.partialPivLu().determinant().real()) -
          std::log2(sm.partialPivLu().determinant().real());
      CHECK(achievable_rate(inst.t, inst.r, inst.qs, inst.k, inst.ch, inst.noise) ==
            doctest::Approx(expect).epsilon(1e-10));
    }
  }
}

TEST_CASE("reformulated rate equals the direct form") {
  Rng rng(37);
  SUBCASE("zero covariances") {
    auto inst = random_instance(rng, 2, 2, 2, 3);
    for (auto& q : inst.qs.q) q.setZero();
    CHECK(rate_reformulated(inst.t, inst.r, inst.qs, inst.k, inst.ch, inst.noise) ==
          doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("wide instances agree") {
    for (int it = 0; it < 20; ++it) {
      auto inst = random_instance(rng, 4, 2, 2, 5);
      const double a =
          achievable_rate(inst.t, inst.r, inst.qs, inst.k, inst.ch, inst.noise);
      const double b =
          rate_reformulated(inst.t, inst.r, inst.qs, inst.k, inst.ch, inst.noise);
      CHECK(std::abs(a - b) < 1e-9);
    }
  }
  SUBCASE("scaling noise and covariances together is invariant") {
    auto inst = random_instance(rng, 3, 2, 2, 4);
    const double base =
        achievable_rate(inst.t, inst.r, inst.qs, inst.k, inst.ch, inst.noise);
    const double c = 3.7;
    CovarianceSet scaled = inst.qs;
    for (auto& q : scaled.q) q *= c;
    CHECK(achievable_rate(inst.t, inst.r, scaled, inst.k, inst.ch, c * inst.noise) ==
          doctest::Approx(base).epsilon(1e-10));
  }
}

TEST_CASE("covariance gradient against Hermitian finite differences") {
  Rng rng(41);
  SUBCASE("finite differences") {
    for (int it = 0; it < 8; ++it) {
      auto inst = random_instance(rng, 3, 2, 3, 4);
      for (int i = 0; i < inst.qs.size(); ++i) {
        const Eigen::MatrixXcd grad =
            grad_q(inst.t, inst.r, inst.qs, inst.k, i, inst.ch, inst.noise);
        Eigen::MatrixXcd dir(3, 3);
        for (int p = 0; p < 3; ++p) {
          for (int q = 0; q < 3; ++q) dir(p, q) = rng.complex_normal(1.0);
        }
        dir = 0.5 * (dir + dir.adjoint().eval());
        const double fd = central_diff(
            [&](double h) {
              CovarianceSet qs2 = inst.qs;
              qs2.q[static_cast<std::size_t>(i)] += h * dir;
              return achievable_rate(inst.t, inst.r, qs2, inst.k, inst.ch, inst.noise);
            },
            1e-6);
        const double an = (grad * dir).trace().real();
        CHECK(std::abs(fd - an) / std::max(1e-12, std::abs(fd)) < 1e-5);
      }
    }
  }
  SUBCASE("zero channel gives the zero gradient") {
    auto inst = random_instance(rng, 3, 2, 2, 4);
    inst.ch.sigma.setZero();
    const Eigen::MatrixXcd grad =
        grad_q(inst.t, inst.r, inst.qs, inst.k, inst.k, inst.ch, inst.noise);
    CHECK(grad.norm() == doctest::Approx(0.0));
  }
  SUBCASE("result is Hermitian") {
    auto inst = random_instance(rng, 3, 2, 2, 4);
    inst.qs.q[static_cast<std::size_t>(1 - inst.k)].setZero();
    const Eigen::MatrixXcd grad =
        grad_q(inst.t, inst.r, inst.qs, inst.k, 1 - inst.k, inst.ch, inst.noise);
    CHECK((grad - grad.adjoint()).norm() < 1e-12);
  }
}

TEST_CASE("transmit-position gradient") {
  Rng rng(43);
  SUBCASE("finite differences per coordinate") {
    for (int it = 0; it < 6; ++it) {
      auto inst = random_instance(rng, 3, 2, 2, 4);
      const Eigen::VectorXd grad =
          grad_t(inst.t, inst.r, inst.qs, inst.k, inst.ch, inst.noise);
      for (int c = 0; c < 3; ++c) {
        for (int d = 0; d < 2; ++d) {
          const double fd = central_diff(
              [&](double h) {
                Apv tp = inst.t;
                tp(d, c) += h;
                return achievable_rate(tp, inst.r, inst.qs, inst.k, inst.ch, inst.noise);
              },
              1e-7);
          CHECK(std::abs(fd - grad[2 * c + d]) / std::max(1.0, std::abs(fd)) < 1e-4);
        }
      }
    }
  }
  SUBCASE("zero path gains give the zero gradient") {
    auto inst = random_instance(rng, 3, 2, 2, 4);
    inst.ch.sigma.setZero();
    CHECK(grad_t(inst.t, inst.r, inst.qs, inst.k, inst.ch, inst.noise).norm() ==
          doctest::Approx(0.0));
  }
  SUBCASE("single path, single antenna direction") {
    auto inst = random_instance(rng, 1, 1, 1, 1);
    const Eigen::VectorXd grad =
        grad_t(inst.t, inst.r, inst.qs, 0, inst.ch, inst.noise);
    const Eigen::Vector2d dir(
        std::sin(inst.ch.angles.theta_t[0]) * std::cos(inst.ch.angles.phi_t[0]),
        std::cos(inst.ch.angles.theta_t[0]));
    const Eigen::Vector2d g(grad[0], grad[1]);
    // collinearity up to sign
    const double cross = std::abs(g.x() * dir.y() - g.y() * dir.x());
    CHECK(cross <= 1e-10 * std::max(1.0, g.norm() * dir.norm()));
  }
}

TEST_CASE("receive-position gradient") {
  Rng rng(47);
  SUBCASE("finite differences") {
    for (int it = 0; it < 6; ++it) {
      auto inst = random_instance(rng, 3, 3, 2, 4);
      const Eigen::VectorXd grad =
          grad_r_full(inst.t, inst.r, inst.qs, inst.k, inst.ch, inst.noise);
      for (int c = 0; c < 3; ++c) {
        for (int d = 0; d < 2; ++d) {
          const double fd = central_diff(
              [&](double h) {
                Apv rp = inst.r;
                rp(d, c) += h;
                return achievable_rate(inst.t, rp, inst.qs, inst.k, inst.ch, inst.noise);
              },
              1e-7);
          CHECK(std::abs(fd - grad[2 * c + d]) / std::max(1.0, std::abs(fd)) < 1e-4);
        }
      }
    }
  }
  SUBCASE("zero path gains") {
    auto inst = random_instance(rng, 3, 2, 2, 4);
    inst.ch.sigma.setZero();
    CHECK(grad_r_full(inst.t, inst.r, inst.qs, inst.k, inst.ch, inst.noise).norm() ==
          doctest::Approx(0.0));
  }
}

TEST_CASE("per-antenna gradient through the inverse cache") {
  Rng rng(53);
  SUBCASE("matches the stacked gradient blocks") {
    for (int it = 0; it < 6; ++it) {
      auto inst = random_instance(rng, 3, 3, 2, 4);
      InverseCache cache(inst.t, inst.qs, inst.k, inst.ch, inst.noise, inst.r);
      const Eigen::VectorXd full =
          grad_r_full(inst.t, inst.r, inst.qs, inst.k, inst.ch, inst.noise);
      for (int m = 0; m < 3; ++m) {
        const Eigen::Vector2d g = grad_r_single(cache, inst.r, m);
        CHECK(std::abs(g.x() - full[2 * m]) < 1e-9);
        CHECK(std::abs(g.y() - full[2 * m + 1]) < 1e-9);
      }
    }
  }
  SUBCASE("zero path gains give zero") {
    auto inst = random_instance(rng, 2, 2, 2, 3);
    inst.ch.sigma.setZero();
    InverseCache cache(inst.t, inst.qs, inst.k, inst.ch, inst.noise, inst.r);
    const Eigen::Vector2d g = grad_r_single(cache, inst.r, 0);
    CHECK(g.norm() == doctest::Approx(0.0));
  }
  SUBCASE("stale cache is rejected") {
    auto inst = random_instance(rng, 2, 2, 2, 3);
    InverseCache cache(inst.t, inst.qs, inst.k, inst.ch, inst.noise, inst.r);
    Apv moved = inst.r;
    moved(0, 0) += 1e-3;
    CHECK_THROWS_AS(grad_r_single(cache, moved, 0), std::logic_error);
  }
}

TEST_CASE("rank-two inverse updates") {
  Rng rng(59);
  SUBCASE("no-op move leaves the inverse unchanged") {
    auto inst = random_instance(rng, 3, 3, 2, 4);
    InverseCache cache(inst.t, inst.qs, inst.k, inst.ch, inst.noise, inst.r);
    const double before = cache.inverse_residual();
    inv_update(cache, 1, inst.r.col(1));
    CHECK(cache.inverse_residual() < before + 1e-12);
  }
  SUBCASE("random moves match direct inversion") {
    for (int it = 0; it < 8; ++it) {
      auto inst = random_instance(rng, 4, 3, 2, 4);
      InverseCache cache(inst.t, inst.qs, inst.k, inst.ch, inst.noise, inst.r);
      const int m = static_cast<int>(rng.next_u64() % 3);
      const Eigen::Vector2d new_pos =
          inst.r.col(m) + Eigen::Vector2d(rng.uniform(-0.02, 0.02),
                                          rng.uniform(-0.02, 0.02));
      inv_update(cache, m, new_pos);
      CHECK(cache.inverse_residual() < 1e-8);
    }
  }
  SUBCASE("a chain of 50 updates stays accurate") {
    auto inst = random_instance(rng, 4, 3, 2, 4);
    InverseCache cache(inst.t, inst.qs, inst.k, inst.ch, inst.noise, inst.r);
    for (int step = 0; step < 50; ++step) {
      const int m = step % 3;
      const Eigen::Vector2d new_pos =
          cache.positions().col(m) + Eigen::Vector2d(rng.uniform(-0.01, 0.01),
                                                     rng.uniform(-0.01, 0.01));
      inv_update(cache, m, new_pos);
    }
    CHECK(cache.inverse_residual() < 1e-6);
  }
}

TEST_CASE("rate is nondecreasing in power without interference") {
  Rng rng(61);
  auto inst = random_instance(rng, 3, 2, 1, 4);
  double prev = achievable_rate(inst.t, inst.r, inst.qs, 0, inst.ch, inst.noise);
  for (double c : {1.5, 2.0, 4.0, 8.0}) {
    CovarianceSet scaled = inst.qs;
    for (auto& q : scaled.q) q *= c;
    const double rate =
        achievable_rate(inst.t, inst.r, scaled, 0, inst.ch, inst.noise);
    CHECK(rate >= prev - 1e-12);
    prev = rate;
  }
}

TEST_CASE("covariance validation") {
  CovarianceSet qs;
  qs.q.push_back(Eigen::MatrixXcd::Identity(2, 2));
  CHECK_NOTHROW(validate_covariance(qs, 2.0 + 1e-12));
  CHECK_THROWS_AS(validate_covariance(qs, 1.0), std::invalid_argument);
  CovarianceSet indefinite;
  Eigen::MatrixXcd m(2, 2);
  m << 1.0, 0.0, 0.0, -0.5;
  indefinite.q.push_back(m);
  CHECK_THROWS_AS(validate_covariance(indefinite, 10.0), std::invalid_argument);
}

TEST_SUITE_END();
