#include <cmath>

#include "doctest.h"
#include "mamimo/short_term.hpp"
#include "support/oracles.hpp"

using namespace mamimo;

using oracles::ShortTermInstance;
using oracles::short_term_instance;
using oracles::interior_single_antenna_instance;

namespace {

ShortTermInstance make_instance(Rng& rng, bool pmm, int m_rx, int paths,
                                int k_users = 1) {
  return short_term_instance(rng, pmm, m_rx, paths, k_users);
}

}  // namespace

TEST_SUITE_BEGIN("short_term");

TEST_CASE("box projection") {
  const RegionSpec region = RegionSpec::receive_gmm(0.03, 0.03);
  const Rect& rect = region.rects.front();
  SUBCASE("interior point is unchanged") {
    Apv p(2, 1);
    p.col(0) = Eigen::Vector2d(0.02, 0.01);
    CHECK((project_region(p, region) - p).norm() == doctest::Approx(0.0));
  }
  SUBCASE("clamping only the violating coordinate") {
    const Eigen::Vector2d p(-1.0, 0.5 * rect.ymax);
    const Eigen::Vector2d q = project_point(p, rect);
    CHECK(q.x() == doctest::Approx(rect.xmin));
    CHECK(q.y() == doctest::Approx(0.5 * rect.ymax));
  }
  SUBCASE("idempotence") {
    Rng rng(3);
    Apv p(2, 3);
    for (int c = 0; c < 3; ++c) {
      p.col(c) = Eigen::Vector2d(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
    }
    const Apv once = project_region(p, region);
    CHECK((project_region(once, region) - once).norm() == doctest::Approx(0.0));
  }
}

TEST_CASE("active mask") {
  const RegionSpec region = RegionSpec::receive_pmm(0.03, 0.03, 2);
  SUBCASE("interior update keeps every coordinate") {
    Eigen::VectorXd pre(4);
    pre << 0.01, 0.01, 0.07, 0.02;
    CHECK(active_mask(pre, region).minCoeff() == doctest::Approx(1.0));
  }
  SUBCASE("one clamped coordinate gives exactly one zero") {
    Eigen::VectorXd pre(4);
    pre << -0.01, 0.01, 0.07, 0.02;
    const Eigen::VectorXd mask = active_mask(pre, region);
    CHECK(mask.sum() == doctest::Approx(3.0));
    CHECK(mask[0] == doctest::Approx(0.0));
  }
  SUBCASE("mask annihilates the projection displacement") {
    Rng rng(5);
    for (int it = 0; it < 20; ++it) {
      Eigen::VectorXd pre(4);
      for (int i = 0; i < 4; ++i) pre[i] = rng.uniform(-0.05, 0.12);
      const Eigen::VectorXd mask = active_mask(pre, region);
      const Eigen::VectorXd post = stack(project_region(unstack(pre), region));
      CHECK((mask.array() * (post - pre).array()).abs().maxCoeff() ==
            doctest::Approx(0.0));
    }
  }
}

TEST_CASE("gradient-ascent optimizer") {
  Rng rng(7);
  BacktrackParams params;
  params.max_iterations = 15;
  SUBCASE("zero channel returns the start point") {
    auto inst = make_instance(rng, false, 2, 3);
    inst.ch.sigma.setZero();
    const auto res = ga_optimize(inst.t, inst.qs, 0, inst.ch, inst.noise,
                                 inst.region, 0.03, inst.r_init, params);
    CHECK((res.r - inst.r_init).norm() == doctest::Approx(0.0));
  }
  SUBCASE("infeasible start is rejected") {
    auto inst = make_instance(rng, false, 2, 3);
    Apv bad = inst.r_init;
    bad.col(1) = bad.col(0);  // violates the pairwise distance
    CHECK_THROWS_AS(ga_optimize(inst.t, inst.qs, 0, inst.ch, inst.noise,
                                inst.region, 0.03, bad, params),
                    std::invalid_argument);
  }
  SUBCASE("monotone trace, feasible output") {
    for (int it = 0; it < 25; ++it) {
      auto inst = make_instance(rng, false, 2, 4, 2);
      const auto res = ga_optimize(inst.t, inst.qs, 0, inst.ch, inst.noise,
                                   inst.region, 0.03, inst.r_init, params);
      for (std::size_t i = 1; i < res.rate_trace.size(); ++i) {
        CHECK(res.rate_trace[i] >= res.rate_trace[i - 1] - 1e-12);
      }
      CHECK(in_region(res.r, inst.region, 1e-12));
      CHECK(pairwise_distance_ok(res.r, 0.03, 1e-12));
    }
  }
  SUBCASE("single antenna matches a dense grid search") {
    BacktrackParams grid_params;
    for (int it = 0; it < 4; ++it) {
      auto inst = interior_single_antenna_instance(rng, false);
      const auto res = ga_optimize(inst.t, inst.qs, 0, inst.ch, inst.noise,
                                   inst.region, 0.03, inst.r_init, grid_params);
      const double best = oracles::grid_search_best_rate(
          [&](const Eigen::Vector2d& p) {
            Apv r(2, 1);
            r.col(0) = p;
            return achievable_rate(inst.t, r, inst.qs, 0, inst.ch, inst.noise);
          },
          inst.region.rects.front(), 200);
      CHECK(res.final_rate >= best - 1e-3);
    }
  }
}

TEST_CASE("gradient-projection optimizer") {
  Rng rng(11);
  BacktrackParams params;
  params.max_iterations = 15;
  SUBCASE("zero channel returns the start point") {
    auto inst = make_instance(rng, true, 2, 3);
    inst.ch.sigma.setZero();
    const auto res = gp_optimize(inst.t, inst.qs, 0, inst.ch, inst.noise,
                                 inst.region, inst.r_init, params);
    CHECK((res.r - inst.r_init).norm() == doctest::Approx(0.0));
    CHECK(res.iterations == params.max_iterations);  // fixed count, no early exit
  }
  SUBCASE("iterates stay inside the region") {
    for (int it = 0; it < 10; ++it) {
      auto inst = make_instance(rng, true, 2, 4, 2);
      const auto res = gp_optimize(inst.t, inst.qs, 0, inst.ch, inst.noise,
                                   inst.region, inst.r_init, params);
      CHECK(in_region(res.r, inst.region, 1e-12));
      CHECK((project_region(res.r, inst.region) - res.r).norm() ==
            doctest::Approx(0.0));
      for (std::size_t i = 1; i < res.rate_trace.size(); ++i) {
        CHECK(res.rate_trace[i] >= res.rate_trace[i - 1] - 1e-12);
      }
    }
  }
  SUBCASE("single antenna matches a dense grid search") {
    BacktrackParams grid_params;
    for (int it = 0; it < 4; ++it) {
      auto inst = interior_single_antenna_instance(rng, true);
      const auto res = gp_optimize(inst.t, inst.qs, 0, inst.ch, inst.noise,
                                   inst.region, inst.r_init, grid_params);
      const double best = oracles::grid_search_best_rate(
          [&](const Eigen::Vector2d& p) {
            Apv r(2, 1);
            r.col(0) = p;
            return achievable_rate(inst.t, r, inst.qs, 0, inst.ch, inst.noise);
          },
          inst.region.rects.front(), 200);
      CHECK(res.final_rate >= best - 1e-3);
    }
  }
}

TEST_CASE("short-term stationarity residual") {
  Rng rng(13);
  SUBCASE("zero channel gives zero residual") {
    auto inst = make_instance(rng, true, 2, 3);
    inst.ch.sigma.setZero();
    const Eigen::VectorXd mask = Eigen::VectorXd::Ones(4);
    CHECK(kkt_residual_short(inst.t, inst.qs, 0, inst.ch, inst.noise, inst.r_init,
                             mask) == doctest::Approx(0.0));
  }
  SUBCASE("a long run reaches a small residual at an interior optimum") {
    auto inst = interior_single_antenna_instance(rng, true);
    BacktrackParams params;
    params.max_iterations = 400;
    const auto res = gp_optimize(inst.t, inst.qs, 0, inst.ch, inst.noise,
                                 inst.region, inst.r_init, params);
    const double resid = kkt_residual_short(inst.t, inst.qs, 0, inst.ch,
                                            inst.noise, res.r, res.final_mask);
    CHECK(resid < 1e-4 * std::max(1.0, res.final_rate));
  }
  SUBCASE("residual shrinks with the iteration budget") {
    BacktrackParams few, many;
    few.max_iterations = 3;
    many.max_iterations = 30;
    std::vector<double> r_few, r_many;
    for (int it = 0; it < 100; ++it) {
      auto inst = make_instance(rng, true, 2, 4, 2);
      const auto a = gp_optimize(inst.t, inst.qs, 0, inst.ch, inst.noise,
                                 inst.region, inst.r_init, few);
      const auto b = gp_optimize(inst.t, inst.qs, 0, inst.ch, inst.noise,
                                 inst.region, inst.r_init, many);
      r_few.push_back(kkt_residual_short(inst.t, inst.qs, 0, inst.ch, inst.noise,
                                         a.r, a.final_mask));
      r_many.push_back(kkt_residual_short(inst.t, inst.qs, 0, inst.ch, inst.noise,
                                          b.r, b.final_mask));
    }
    CHECK(oracles::median(r_many) < oracles::median(r_few));
  }
}

TEST_SUITE_END();
