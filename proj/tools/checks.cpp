#include "checks.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <vector>

#include "mamimo/short_term.hpp"
#include "mamimo/solver.hpp"
#include "mamimo/surrogate.hpp"
#include "mamimo/two_timescale.hpp"

namespace mamimo::checks {

namespace {

struct Instance {
  Apv t, r;
  CovarianceSet qs;
  UtChannel ch;
  double noise = 1e-3;
  int k = 0;
};

Instance random_instance(Rng& rng, int n, int m, int k_users, int paths) {
  Instance inst;
  inst.t.resize(2, n);
  inst.r.resize(2, m);
  for (int c = 0; c < n; ++c) {
    inst.t.col(c) = Eigen::Vector2d(rng.uniform(0.0, 0.2), rng.uniform(0.0, 0.1));
  }
  for (int c = 0; c < m; ++c) {
    inst.r.col(c) = Eigen::Vector2d(rng.uniform(0.0, 0.1), rng.uniform(0.0, 0.05));
  }
  auto angles = [&](Eigen::ArrayXd& th, Eigen::ArrayXd& ph) {
    th.resize(paths);
    ph.resize(paths);
    for (int l = 0; l < paths; ++l) {
      th[l] = rng.uniform(0.0, M_PI);
      ph[l] = rng.uniform(0.0, M_PI);
    }
  };
  angles(inst.ch.angles.theta_t, inst.ch.angles.phi_t);
  angles(inst.ch.angles.theta_r, inst.ch.angles.phi_r);
  inst.ch.lambda = 0.06;
  inst.ch.sigma.resize(paths);
  for (int l = 0; l < paths; ++l) inst.ch.sigma[l] = rng.complex_normal(0.01);
  for (int i = 0; i < k_users; ++i) {
    Eigen::MatrixXcd a(n, n);
    for (int p = 0; p < n; ++p) {
      for (int q = 0; q < n; ++q) a(p, q) = rng.complex_normal(1.0);
    }
    inst.qs.q.push_back(0.02 * (a * a.adjoint()));
  }
  inst.k = static_cast<int>(rng.next_u64() % static_cast<unsigned>(k_users));
  return inst;
}

// Channel entry by direct summation over paths.
Eigen::MatrixXcd naive_channel(const Instance& inst) {
  const int m = static_cast<int>(inst.r.cols());
  const int n = static_cast<int>(inst.t.cols());
  const int paths = static_cast<int>(inst.ch.sigma.size());
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(m, n);
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < n; ++b) {
      std::complex<double> acc = 0.0;
      for (int l = 0; l < paths; ++l) {
        const auto fr = field_response(inst.r.col(a), inst.ch.angles.theta_r,
                                       inst.ch.angles.phi_r, inst.ch.lambda);
        const auto gt = field_response(inst.t.col(b), inst.ch.angles.theta_t,
                                       inst.ch.angles.phi_t, inst.ch.lambda);
        acc += std::conj(fr[l]) * inst.ch.sigma[l] * gt[l];
      }
      h(a, b) = acc;
    }
  }
  return h;
}

double central_diff(const std::function<double(double)>& f, double h) {
  return (f(h) - f(-h)) / (2.0 * h);
}

bool report(const char* name, bool ok, double worst) {
  std::printf("[%s] %-34s worst %.3e\n", ok ? "PASS" : "FAIL", name, worst);
  return ok;
}

}  // namespace

int run_all(unsigned long long seed) {
  Rng rng(seed);
  int failures = 0;

  {  // channel model against direct path summation
    double worst = 0.0;
    for (int it = 0; it < 10; ++it) {
      Instance inst = random_instance(rng, 3, 2, 2, 4);
      const Eigen::MatrixXcd h = channel_matrix(
          inst.t, inst.r, ChannelSample{inst.ch.sigma}, inst.ch.angles, inst.ch.lambda);
      worst = std::max(worst, (h - naive_channel(inst)).cwiseAbs().maxCoeff());
      const Eigen::VectorXcd f = field_response(
          inst.r.col(0), inst.ch.angles.theta_r, inst.ch.angles.phi_r, inst.ch.lambda);
      worst = std::max(worst, (f.cwiseAbs().array() - 1.0).abs().maxCoeff());
    }
    if (!report("channel vs path summation", worst < 1e-12, worst)) ++failures;
  }

  {  // the two rate forms
    double worst = 0.0;
    for (int it = 0; it < 50; ++it) {
      Instance inst = random_instance(rng, 4, 2, 3, 5);
      const double a = achievable_rate(inst.t, inst.r, inst.qs, inst.k, inst.ch, inst.noise);
      const double b = rate_reformulated(inst.t, inst.r, inst.qs, inst.k, inst.ch, inst.noise);
      worst = std::max(worst, std::abs(a - b));
    }
    if (!report("rate identity", worst < 1e-9, worst)) ++failures;
  }

  {  // analytic gradients against central differences
    double worst = 0.0;
    for (int it = 0; it < 10; ++it) {
      Instance inst = random_instance(rng, 3, 2, 2, 4);
      const Eigen::VectorXd gt = grad_t(inst.t, inst.r, inst.qs, inst.k, inst.ch, inst.noise);
      const Eigen::VectorXd gr = grad_r_full(inst.t, inst.r, inst.qs, inst.k, inst.ch, inst.noise);
      for (int c = 0; c < inst.t.cols(); ++c) {
        for (int d = 0; d < 2; ++d) {
          const double fd = central_diff(
              [&](double h) {
                Apv tp = inst.t;
                tp(d, c) += h;
                return achievable_rate(tp, inst.r, inst.qs, inst.k, inst.ch, inst.noise);
              },
              1e-7);
          worst = std::max(worst, std::abs(fd - gt[2 * c + d]) /
                                      std::max(1.0, std::abs(fd)));
        }
      }
      InverseCache cache(inst.t, inst.qs, inst.k, inst.ch, inst.noise, inst.r);
      for (int c = 0; c < inst.r.cols(); ++c) {
        const Eigen::Vector2d gs = grad_r_single(cache, inst.r, c);
        for (int d = 0; d < 2; ++d) {
          const double fd = central_diff(
              [&](double h) {
                Apv rp = inst.r;
                rp(d, c) += h;
                return achievable_rate(inst.t, rp, inst.qs, inst.k, inst.ch, inst.noise);
              },
              1e-7);
          const double rel_den = std::max(1.0, std::abs(fd));
          worst = std::max(worst, std::abs(fd - gr[2 * c + d]) / rel_den);
          worst = std::max(worst, std::abs(fd - gs[d]) / rel_den);
        }
      }
      const int i = (inst.k + 1) % inst.qs.size();
      const Eigen::MatrixXcd gq = grad_q(inst.t, inst.r, inst.qs, inst.k, i, inst.ch, inst.noise);
      Eigen::MatrixXcd dir(inst.t.cols(), inst.t.cols());
      for (int p = 0; p < dir.rows(); ++p) {
        for (int q = 0; q < dir.cols(); ++q) dir(p, q) = rng.complex_normal(1.0);
      }
      dir = 0.5 * (dir + dir.adjoint().eval());
      const double fd = central_diff(
          [&](double h) {
            CovarianceSet qs2 = inst.qs;
            qs2.q[static_cast<std::size_t>(i)] += h * dir;
            return achievable_rate(inst.t, inst.r, qs2, inst.k, inst.ch, inst.noise);
          },
          1e-6);
      const double an = (gq * dir).trace().real();
      worst = std::max(worst, std::abs(fd - an) / std::max(1.0, std::abs(fd)));
    }
    if (!report("gradients vs finite differences", worst < 1e-4, worst)) ++failures;
  }

  {  // chained rank-two inverse updates
    double worst = 0.0;
    Instance inst = random_instance(rng, 4, 3, 2, 5);
    InverseCache cache(inst.t, inst.qs, inst.k, inst.ch, inst.noise, inst.r);
    for (int step = 0; step < 30; ++step) {
      const int m = step % 3;
      Eigen::Vector2d pos = cache.positions().col(m);
      pos += Eigen::Vector2d(rng.uniform(-0.01, 0.01), rng.uniform(-0.01, 0.01));
      inv_update(cache, m, pos);
      worst = std::max(worst, cache.inverse_residual());
    }
    if (!report("inverse update drift", worst < 1e-6, worst)) ++failures;
  }

  {  // surrogate recursion in compact form vs explicit recursion
    const int n = 2, k_users = 2;
    SurrogateState state(k_users, n, -1.0, -0.5);
    struct Term {
      double w;
      Eigen::VectorXd anchor_t;
      CovarianceSet anchor_q;
      BatchGradients g;
    };
    std::vector<Term> terms;
    Eigen::VectorXd t_anchor(2 * n);
    CovarianceSet q_anchor;
    q_anchor.q.assign(k_users, Eigen::MatrixXcd::Identity(n, n));
    double worst = 0.0;
    for (int ell = 1; ell <= 20; ++ell) {
      for (int i = 0; i < t_anchor.size(); ++i) t_anchor[i] = rng.uniform(-1.0, 1.0);
      BatchGradients g;
      for (int k = 0; k < k_users; ++k) {
        Eigen::VectorXd dt(2 * n);
        for (int i = 0; i < dt.size(); ++i) dt[i] = rng.uniform(-1.0, 1.0);
        g.delta_t.push_back(dt);
        g.rate_mean.push_back(rng.uniform(0.0, 5.0));
        std::vector<Eigen::MatrixXcd> dq;
        for (int i = 0; i < k_users; ++i) {
          Eigen::MatrixXcd a(n, n);
          for (int p = 0; p < n; ++p) {
            for (int q = 0; q < n; ++q) a(p, q) = rng.complex_normal(1.0);
          }
          dq.push_back(0.5 * (a + a.adjoint().eval()));
        }
        g.delta_q.push_back(dq);
      }
      state.update(t_anchor, q_anchor, g);
      terms.push_back({ell == 1 ? 1.0 : StepSequences::rho(ell), t_anchor, q_anchor, g});

      // probe point
      Eigen::VectorXd t_probe(2 * n);
      for (int i = 0; i < t_probe.size(); ++i) t_probe[i] = rng.uniform(-1.0, 1.0);
      CovarianceSet q_probe = q_anchor;
      for (int k = 0; k < k_users; ++k) {
        const double ref_unused = 0.0;
        (void)ref_unused;
        double unfolded = 0.0;
        double weight_rest = 1.0;
        for (int j = static_cast<int>(terms.size()) - 1; j >= 0; --j) {
          const Term& tm = terms[static_cast<std::size_t>(j)];
          double gval = tm.g.rate_mean[static_cast<std::size_t>(k)] +
                        tm.g.delta_t[static_cast<std::size_t>(k)].dot(t_probe - tm.anchor_t) -
                        (t_probe - tm.anchor_t).squaredNorm();
          for (int i = 0; i < k_users; ++i) {
            const Eigen::MatrixXcd dq =
                q_probe.q[static_cast<std::size_t>(i)] - tm.anchor_q.q[static_cast<std::size_t>(i)];
            gval += (tm.g.delta_q[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)]
                         .adjoint() * dq)
                        .trace()
                        .real() -
                    0.5 * dq.squaredNorm();
          }
          unfolded += weight_rest * tm.w * gval;
          weight_rest *= (1.0 - tm.w);
        }
        worst = std::max(worst, std::abs(unfolded - state.value(k, t_probe, q_probe)));
      }
    }
    if (!report("surrogate compact vs recursion", worst < 1e-10, worst)) ++failures;
  }

  {  // distance surrogate lower-bounds the true squared distance
    double worst = -1e300;
    for (int it = 0; it < 200; ++it) {
      const Eigen::Vector2d ai(rng.uniform(-1, 1), rng.uniform(-1, 1));
      const Eigen::Vector2d aj(rng.uniform(-1, 1), rng.uniform(-1, 1));
      const Eigen::Vector2d ti(rng.uniform(-2, 2), rng.uniform(-2, 2));
      const Eigen::Vector2d tj(rng.uniform(-2, 2), rng.uniform(-2, 2));
      const double h = distance_surrogate(ai, aj, ti, tj, -1.0);
      worst = std::max(worst, h - (ti - tj).squaredNorm());
    }
    if (!report("distance surrogate minorant", worst <= 1e-12, worst)) ++failures;
  }

  {  // projections
    double worst = 0.0;
    const RegionSpec region = RegionSpec::receive_gmm(0.03, 0.03);
    Apv pts(2, 3);
    pts << -0.5, 0.02, 0.4, 0.5, 0.01, -0.2;
    const Apv once = project_region(pts, region);
    const Apv twice = project_region(once, region);
    worst = std::max(worst, (once - twice).cwiseAbs().maxCoeff());
    Eigen::MatrixXcd a(2, 2);
    a << 1.0, 0.0, 0.0, -1.0;
    const Eigen::MatrixXcd p = project_psd(a);
    worst = std::max(worst, std::abs(p(0, 0).real() - 1.0));
    worst = std::max(worst, std::abs(p(1, 1).real()));
    if (!report("projection sanity", worst < 1e-12, worst)) ++failures;
  }

  {  // unconstrained vertex of the convex subproblem
    const int n = 1, k_users = 1;
    SurrogateState state(k_users, n, -1.0, -1.0);
    BatchGradients g;
    Eigen::VectorXd dt(2);
    dt << 0.4, -0.2;
    g.delta_t.push_back(dt);
    g.rate_mean.push_back(3.0);
    g.delta_q.push_back({Eigen::MatrixXcd::Zero(1, 1)});
    Eigen::VectorXd t_anchor(2);
    t_anchor << 0.1, 0.1;
    CovarianceSet q_anchor;
    q_anchor.q.push_back(0.3 * Eigen::MatrixXcd::Identity(1, 1));
    state.update(t_anchor, q_anchor, g);

    SurrogateProblem prob;
    prob.surrogate = &state;
    prob.n_tx = n;
    prob.k_users = k_users;
    prob.power_w = 1.0;
    prob.r_min = -100.0;
    prob.min_dist = 0.0;
    prob.tau_h = -1.0;
    prob.t_box = Rect{-1.0, 1.0, -1.0, 1.0};
    prob.t_anchor = t_anchor;
    prob.q_anchor = q_anchor;
    const SolverReport rep = solve_objective(prob);
    const Eigen::VectorXd expect = t_anchor + 0.5 * dt;
    double worst = (rep.point.t - expect).norm();
    const SolverReport rep2 = solve_objective(prob);
    worst = std::max(worst, (rep.point.t - rep2.point.t).norm());
    worst = std::max(worst, std::abs(rep.objective - rep2.objective));
    if (!report("solver vertex + determinism", worst < 1e-6, worst)) ++failures;
  }

  std::printf("%d group(s) failed\n", failures);
  return failures;
}

}  // namespace mamimo::checks
