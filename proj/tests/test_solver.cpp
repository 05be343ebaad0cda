#include <cmath>

#include "doctest.h"
#include "mamimo/solver.hpp"
#include "support/oracles.hpp"

using namespace mamimo;

namespace {

// One-user, one-antenna problem with prescribed linear coefficients.
struct TinySetup {
  SurrogateState state{1, 1, -1.0, -1.0};
  SurrogateProblem prob;

  TinySetup(const Eigen::Vector2d& delta_t, double delta_q, double rate,
            const Eigen::Vector2d& t_anchor, double q_anchor, double power,
            double r_min) {
    BatchGradients g;
    g.delta_t.push_back(Eigen::VectorXd(delta_t));
    g.rate_mean.push_back(rate);
    Eigen::MatrixXcd dq(1, 1);
    dq(0, 0) = delta_q;
    g.delta_q.push_back({dq});
    CovarianceSet qa;
    qa.q.push_back(q_anchor * Eigen::MatrixXcd::Identity(1, 1));
    state.update(Eigen::VectorXd(t_anchor), qa, g);

    prob.surrogate = &state;
    prob.n_tx = 1;
    prob.k_users = 1;
    prob.power_w = power;
    prob.r_min = r_min;
    prob.min_dist = 0.0;
    prob.tau_h = -1.0;
    prob.t_box = Rect{-1.0, 1.0, -1.0, 1.0};
    prob.t_anchor = Eigen::VectorXd(t_anchor);
    prob.q_anchor = qa;
  }
};

double tiny_objective(const TinySetup& s, const Eigen::Vector2d& t, double q) {
  CovarianceSet qs;
  qs.q.push_back(q * Eigen::MatrixXcd::Identity(1, 1));
  return s.state.value(0, Eigen::VectorXd(t), qs);
}

}  // namespace

TEST_SUITE_BEGIN("solver");

TEST_CASE("unconstrained vertex") {
  const Eigen::Vector2d delta_t(0.4, -0.2);
  const Eigen::Vector2d anchor(0.1, 0.1);
  TinySetup s(delta_t, 0.0, 3.0, anchor, 0.3, 1.0, -100.0);
  const SolverReport rep = solve_objective(s.prob);
  CHECK(rep.status == SolveStatus::Converged);
  const Eigen::VectorXd expect = Eigen::VectorXd(anchor) + 0.5 * Eigen::VectorXd(delta_t);
  CHECK((rep.point.t - expect).norm() < 1e-7);
  // the covariance linear coefficient is zero, so the anchor maximizes it
  CHECK(std::abs(rep.point.q.q[0](0, 0).real() - 0.3) < 1e-7);
}

TEST_CASE("grid-oracle agreement on a tiny instance") {
  Rng rng(211);
  for (int trial = 0; trial < 3; ++trial) {
    const Eigen::Vector2d delta_t(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
    const double delta_q = rng.uniform(0.0, 3.0);
    const Eigen::Vector2d anchor(rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3));
    TinySetup s(delta_t, delta_q, 2.0, anchor, 0.4, 1.0, -100.0);

    const SolverReport rep = solve_objective(s.prob);
    double best = -1e300;
    const int res = 160;
    for (int ix = 0; ix <= res; ++ix) {
      for (int iy = 0; iy <= res; ++iy) {
        const Eigen::Vector2d t(-1.0 + 2.0 * ix / res, -1.0 + 2.0 * iy / res);
        for (int iq = 0; iq <= res; ++iq) {
          best = std::max(best, tiny_objective(s, t, 1.0 * iq / res));
        }
      }
    }
    CHECK(rep.objective >= best - 1e-3);
    CHECK(rep.objective <= best + 1e-3);
  }
}

TEST_CASE("phase-1 feasibility gate") {
  SUBCASE("unreachable rate floor reports infeasible") {
    TinySetup s({0.1, 0.1}, 0.5, 2.0, {0.0, 0.0}, 0.4, 1.0, 1e6);
    const SolverReport rep = solve_objective(s.prob);
    CHECK(rep.status == SolveStatus::Infeasible);
    CHECK(rep.point.alpha < 0.0);
  }
  SUBCASE("feasible floor reports nonnegative slack") {
    TinySetup s({0.1, 0.1}, 0.5, 2.0, {0.0, 0.0}, 0.4, 1.0, 0.5);
    const SolverReport rep = solve_feasibility(s.prob);
    CHECK(rep.point.alpha >= -1e-8);
  }
  SUBCASE("shifting the floor shifts the slack one-for-one") {
    TinySetup a({0.1, 0.1}, 0.5, 2.0, {0.0, 0.0}, 0.4, 1.0, 0.5);
    TinySetup b({0.1, 0.1}, 0.5, 2.0, {0.0, 0.0}, 0.4, 1.0, 0.9);
    const double alpha_a = solve_feasibility(a.prob).point.alpha;
    const double alpha_b = solve_feasibility(b.prob).point.alpha;
    CHECK(alpha_a - alpha_b == doctest::Approx(0.4).epsilon(1e-5));
  }
}

TEST_CASE("positive semidefinite projection") {
  SUBCASE("clamps the negative eigenvalue") {
    Eigen::MatrixXcd a(2, 2);
    a << 1.0, 0.0, 0.0, -1.0;
    const Eigen::MatrixXcd p = project_psd(a);
    CHECK(std::abs(p(0, 0).real() - 1.0) < 1e-14);
    CHECK(std::abs(p(1, 1).real()) < 1e-14);
  }
  SUBCASE("positive semidefinite input is unchanged") {
    Rng rng(223);
    Eigen::MatrixXcd a(3, 3);
    for (int p = 0; p < 3; ++p) {
      for (int q = 0; q < 3; ++q) a(p, q) = rng.complex_normal(1.0);
    }
    const Eigen::MatrixXcd psd = a * a.adjoint();
    CHECK((project_psd(psd) - psd).norm() < 1e-12 * psd.norm());
  }
  SUBCASE("no random feasible point is closer") {
    Rng rng(227);
    Eigen::MatrixXcd a(3, 3);
    for (int p = 0; p < 3; ++p) {
      for (int q = 0; q < 3; ++q) a(p, q) = rng.complex_normal(1.0);
    }
    a = 0.5 * (a + a.adjoint().eval());
    const Eigen::MatrixXcd proj = project_psd(a);
    const double dist = (a - proj).norm();
    for (int it = 0; it < 100; ++it) {
      Eigen::MatrixXcd b(3, 3);
      for (int p = 0; p < 3; ++p) {
        for (int q = 0; q < 3; ++q) b(p, q) = rng.complex_normal(1.0);
      }
      const Eigen::MatrixXcd feasible = b * b.adjoint();
      CHECK((a - feasible).norm() >= dist - 1e-12);
    }
  }
}

TEST_CASE("joint covariance projection") {
  Rng rng(229);
  SUBCASE("feasible stacks are unchanged") {
    CovarianceSet qs;
    qs.q.assign(2, 0.2 * Eigen::MatrixXcd::Identity(2, 2));
    CovarianceSet copy = qs;
    project_covariance_budget(copy, 1.0);
    CHECK((copy.q[0] - qs.q[0]).norm() < 1e-14);
  }
  SUBCASE("projection lands on the budget and stays positive semidefinite") {
    for (int it = 0; it < 10; ++it) {
      CovarianceSet qs;
      for (int i = 0; i < 3; ++i) {
        Eigen::MatrixXcd a(2, 2);
        for (int p = 0; p < 2; ++p) {
          for (int q = 0; q < 2; ++q) a(p, q) = rng.complex_normal(1.0);
        }
        qs.q.push_back(0.5 * (a + a.adjoint().eval()));
      }
      const double budget = 0.7;
      CovarianceSet proj = qs;
      project_covariance_budget(proj, budget);
      double min_eig = 1e300;
      for (const auto& q : proj.q) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(q, Eigen::EigenvaluesOnly);
        min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
      }
      CHECK(min_eig >= -1e-12);
      CHECK(proj.q.size() == 3);
      CHECK(proj.q[0].rows() == 2);
      CHECK(CovarianceSet{proj}.total_trace() <= budget + 1e-9);
      // no random feasible stack is closer (projection optimality probe)
      auto dist = [&](const CovarianceSet& a, const CovarianceSet& b) {
        double acc = 0.0;
        for (std::size_t i = 0; i < a.q.size(); ++i) acc += (a.q[i] - b.q[i]).squaredNorm();
        return std::sqrt(acc);
      };
      const double d_proj = dist(qs, proj);
      for (int probe = 0; probe < 30; ++probe) {
        CovarianceSet cand;
        for (int i = 0; i < 3; ++i) {
          Eigen::MatrixXcd a(2, 2);
          for (int p = 0; p < 2; ++p) {
            for (int q = 0; q < 2; ++q) a(p, q) = rng.complex_normal(0.3);
          }
          cand.q.push_back(a * a.adjoint());
        }
        const double total = cand.total_trace();
        if (total > budget) {
          for (auto& q : cand.q) q *= budget / total;
        }
        CHECK(dist(qs, cand) >= d_proj - 1e-10);
      }
    }
  }
}

TEST_CASE("KKT residuals") {
  SUBCASE("zero at an interior vertex with zero multipliers") {
    const Eigen::Vector2d delta_t(0.4, -0.2);
    const Eigen::Vector2d anchor(0.0, 0.0);
    TinySetup s(delta_t, 0.0, 3.0, anchor, 0.3, 1.0, -100.0);
    SolverPoint x;
    x.t = Eigen::VectorXd(anchor) + 0.5 * Eigen::VectorXd(delta_t);
    x.q = s.prob.q_anchor;
    const Eigen::VectorXd zero_mult = Eigen::VectorXd::Zero(1);
    const KktResiduals res = kkt_residuals(s.prob, x, zero_mult, false);
    CHECK(res.stationarity < 1e-10);
    CHECK(res.complementarity < 1e-10);
  }
  SUBCASE("perturbation grows the stationarity residual") {
    const Eigen::Vector2d delta_t(0.4, -0.2);
    TinySetup s(delta_t, 0.0, 3.0, {0.0, 0.0}, 0.3, 1.0, -100.0);
    SolverPoint x;
    x.t = 0.5 * Eigen::VectorXd(Eigen::Vector2d(delta_t));
    x.q = s.prob.q_anchor;
    x.t[0] += 1e-3;
    const Eigen::VectorXd zero_mult = Eigen::VectorXd::Zero(1);
    CHECK(kkt_residuals(s.prob, x, zero_mult, false).stationarity >= 1e-4);
  }
  SUBCASE("converged reports respect the declared tolerances") {
    TinySetup s({0.3, 0.2}, 1.0, 2.0, {0.1, -0.1}, 0.4, 1.0, 0.5);
    const SolverReport rep = solve_objective(s.prob);
    REQUIRE(rep.status == SolveStatus::Converged);
    CHECK(rep.residuals.primal <= 1e-8);
    CHECK(rep.residuals.stationarity <= 1e-6);
  }
  SUBCASE("negative multipliers are rejected") {
    TinySetup s({0.3, 0.2}, 1.0, 2.0, {0.1, -0.1}, 0.4, 1.0, 0.5);
    SolverPoint x = s.prob.anchor_point();
    Eigen::VectorXd bad = Eigen::VectorXd::Constant(1, -1.0);
    CHECK_THROWS_AS(kkt_residuals(s.prob, x, bad, false), std::invalid_argument);
  }
}

TEST_CASE("hard feasibility under iteration caps") {
  TinySetup s({0.9, -0.7}, 2.0, 2.0, {0.0, 0.0}, 0.4, 0.5, 0.5);
  s.prob.options.max_outer = 1;
  s.prob.options.max_inner = 3;
  const SolverReport rep = solve_objective(s.prob);
  CHECK(rep.point.t.cwiseAbs().maxCoeff() <= 1.0 + 1e-12);
  CHECK(rep.point.q.q[0](0, 0).real() >= -1e-9);
  CHECK(rep.point.q.total_trace() <= 0.5 + 1e-9);
}

TEST_CASE("deterministic reruns") {
  TinySetup s({0.3, 0.2}, 1.0, 2.0, {0.1, -0.1}, 0.4, 1.0, 0.5);
  const SolverReport a = solve_objective(s.prob);
  const SolverReport b = solve_objective(s.prob);
  CHECK((a.point.t - b.point.t).norm() == 0.0);
  CHECK((a.point.q.q[0] - b.point.q.q[0]).norm() == 0.0);
  CHECK(a.objective == b.objective);
  CHECK(a.inner_iterations == b.inner_iterations);
}

TEST_CASE("solver objective beats the feasible anchor") {
  Rng rng(233);
  for (int it = 0; it < 5; ++it) {
    const Eigen::Vector2d delta_t(rng.uniform(-1, 1), rng.uniform(-1, 1));
    TinySetup s(delta_t, rng.uniform(0.0, 2.0), 3.0, {0.0, 0.0}, 0.2, 1.0, -100.0);
    const double anchor_value = tiny_objective(s, {0.0, 0.0}, 0.2);
    const SolverReport rep = solve_objective(s.prob);
    CHECK(rep.objective >= anchor_value - 1e-9);
  }
}

TEST_SUITE_END();
