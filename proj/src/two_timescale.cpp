#include "mamimo/two_timescale.hpp"

#include <cmath>
#include <stdexcept>

namespace mamimo {

SchemeId scheme_from_string(const std::string& name) {
  if (name == "proposed-gmm") return SchemeId::ProposedGmm;
  if (name == "proposed-pmm") return SchemeId::ProposedPmm;
  if (name == "decoupled-gmm") return SchemeId::DecoupledGmm;
  if (name == "scsit-gmm") return SchemeId::ScsitGmm;
  if (name == "scsit-upa") return SchemeId::ScsitUpa;
  throw std::invalid_argument("unknown scheme: " + name);
}

std::string scheme_to_string(SchemeId scheme) {
  switch (scheme) {
    case SchemeId::ProposedGmm: return "proposed-gmm";
    case SchemeId::ProposedPmm: return "proposed-pmm";
    case SchemeId::DecoupledGmm: return "decoupled-gmm";
    case SchemeId::ScsitGmm: return "scsit-gmm";
    case SchemeId::ScsitUpa: return "scsit-upa";
  }
  throw std::invalid_argument("unknown scheme id");
}

RegionSpec transmit_region(const SystemConfig& cfg) {
  return RegionSpec::transmit_gmm(cfg.x_t_m, cfg.min_dist_m);
}

RegionSpec receive_region(const SystemConfig& cfg, bool pmm) {
  return pmm ? RegionSpec::receive_pmm(cfg.x_r_m, cfg.min_dist_m, cfg.m_rx)
             : RegionSpec::receive_gmm(cfg.x_r_m, cfg.min_dist_m);
}

Apv initial_transmit_apv(const SystemConfig& cfg) {
  const RegionSpec region = transmit_region(cfg);
  return upa_positions(cfg.n_tx, cfg.min_dist_m + 0.5 * cfg.x_t_m,
                       region.rects.front());
}

Apv initial_receive_apv(const SystemConfig& cfg, bool pmm) {
  const RegionSpec region = receive_region(cfg, pmm);
  if (pmm) return region_centers(region, cfg.m_rx);
  return upa_positions(cfg.m_rx, cfg.min_dist_m + 0.5 * cfg.x_r_m,
                       region.rects.front());
}

CovarianceSet initial_covariance(const SystemConfig& cfg) {
  CovarianceSet qs;
  const double diag = cfg.power_w / (cfg.k_users * cfg.n_tx);
  qs.q.assign(static_cast<std::size_t>(cfg.k_users),
              diag * Eigen::MatrixXcd::Identity(cfg.n_tx, cfg.n_tx));
  return qs;
}

RealizationDraws draw_realization(const SystemConfig& cfg, int iterations,
                                  int batch_size, int eval_samples, Rng& rng,
                                  bool redraw_angles_per_sample) {
  RealizationDraws d;
  d.stats.reserve(static_cast<std::size_t>(cfg.k_users));
  for (int k = 0; k < cfg.k_users; ++k) {
    d.stats.push_back(draw_statistical_state(cfg, rng));
  }
  auto make_channel = [&](int k) {
    const StatisticalState& base = d.stats[static_cast<std::size_t>(k)];
    if (redraw_angles_per_sample) {
      StatisticalState fresh = draw_statistical_state(cfg, rng);
      fresh.distance_m = base.distance_m;
      fresh.avg_gain = base.avg_gain;
      const ChannelSample s = draw_channel_sample(fresh, rng);
      return make_ut_channel(fresh, s, cfg.lambda_m);
    }
    const ChannelSample s = draw_channel_sample(base, rng);
    return make_ut_channel(base, s, cfg.lambda_m);
  };
  d.train.resize(static_cast<std::size_t>(iterations));
  for (int it = 0; it < iterations; ++it) {
    auto& per_user = d.train[static_cast<std::size_t>(it)];
    per_user.resize(static_cast<std::size_t>(cfg.k_users));
    for (int k = 0; k < cfg.k_users; ++k) {
      for (int b = 0; b < batch_size; ++b) {
        per_user[static_cast<std::size_t>(k)].push_back(make_channel(k));
      }
    }
  }
  d.eval.resize(static_cast<std::size_t>(eval_samples));
  for (int s = 0; s < eval_samples; ++s) {
    for (int k = 0; k < cfg.k_users; ++k) {
      d.eval[static_cast<std::size_t>(s)].push_back(make_channel(k));
    }
  }
  return d;
}

ShortTermResult short_term_solve(SchemeId scheme, const SystemConfig& cfg,
                                 const LongTermParams& params, const Apv& t,
                                 const CovarianceSet& qs, int k,
                                 const UtChannel& ch) {
  const bool pmm = scheme == SchemeId::ProposedPmm;
  const RegionSpec region = receive_region(cfg, pmm);
  const Apv base_init = initial_receive_apv(cfg, pmm);

  auto run_from = [&](const Apv& init) {
    if (pmm) {
      return gp_optimize(t, qs, k, ch, cfg.noise_w, region, init,
                         params.short_term, params.gp_epsilon_exit);
    }
    return ga_optimize(t, qs, k, ch, cfg.noise_w, region, cfg.min_dist_m, init,
                       params.short_term);
  };

  ShortTermResult best = run_from(base_init);
  // Optional deterministic multi-start: whole-vector translations of the
  // initial layout, clamped back into the region.
  const Eigen::Vector2d shifts[] = {{1, 0}, {-1, 0}, {0, 1},  {0, -1},
                                    {1, 1}, {-1, 1}, {1, -1}, {-1, -1}};
  for (int s = 1; s < params.ga_starts; ++s) {
    const Eigen::Vector2d dir = shifts[(s - 1) % 8];
    const double scale = 0.3 * (1.0 + (s - 1) / 8);
    Apv init = base_init;
    for (Eigen::Index c = 0; c < init.cols(); ++c) {
      const Rect& rect = region.rect_for(static_cast<int>(c));
      init.col(c) += Eigen::Vector2d(dir.x() * scale * rect.width(),
                                     dir.y() * scale * rect.height());
    }
    init = project_region(init, region);
    if (!pairwise_distance_ok(init, cfg.min_dist_m, 1e-12)) continue;
    ShortTermResult cand = run_from(init);
    if (cand.final_rate > best.final_rate) best = std::move(cand);
  }
  return best;
}

namespace {

double min_eigenvalue(const CovarianceSet& qs) {
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& qi : qs.q) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(qi, Eigen::EigenvaluesOnly);
    worst = std::min(worst, es.eigenvalues().minCoeff());
  }
  return worst;
}

LongTermSolution long_term_loop(SchemeId scheme, const SystemConfig& cfg,
                                const LongTermParams& params,
                                const RealizationDraws& draws) {
  const bool pmm = scheme == SchemeId::ProposedPmm;
  const bool scsit_gmm = scheme == SchemeId::ScsitGmm;
  const bool upa = scheme == SchemeId::ScsitUpa;
  const bool decoupled = scheme == SchemeId::DecoupledGmm;

  const RegionSpec t_region = transmit_region(cfg);
  const RegionSpec r_region = receive_region(cfg, pmm);

  Apv t = upa ? upa_positions(cfg.n_tx, params.upa_spacing_tx_m,
                              t_region.rects.front())
              : initial_transmit_apv(cfg);
  CovarianceSet qs = initial_covariance(cfg);
  Apv r_init = upa ? upa_positions(cfg.m_rx, params.upa_spacing_rx_m,
                                   r_region.rects.front())
                   : initial_receive_apv(cfg, pmm);

  Eigen::VectorXd t_vec = stack(t);
  std::vector<Eigen::VectorXd> r_vecs(static_cast<std::size_t>(cfg.k_users),
                                      stack(r_init));

  const double tau_q = params.tau_q_value(cfg.power_w);
  SurrogateState surrogate =
      scsit_gmm ? SurrogateState(cfg.k_users, cfg.n_tx, params.tau_t, tau_q,
                                 cfg.m_rx, params.tau_r)
                : SurrogateState(cfg.k_users, cfg.n_tx, params.tau_t, tau_q);

  LongTermSolution sol;
  sol.scheme = scheme;
  const int iterations =
      std::min<int>(params.iterations, static_cast<int>(draws.train.size()));
  sol.trace.reserve(static_cast<std::size_t>(iterations));

  for (int ell = 1; ell <= iterations; ++ell) {
    const auto& batch = draws.train[static_cast<std::size_t>(ell - 1)];

    // Receive policy for the surrogate construction.
    std::vector<std::vector<Apv>> apvs(static_cast<std::size_t>(cfg.k_users));
    const Apv t_now = unstack(t_vec);
    for (int k = 0; k < cfg.k_users; ++k) {
      auto& per_user = apvs[static_cast<std::size_t>(k)];
      const auto& user_batch = batch[static_cast<std::size_t>(k)];
      per_user.reserve(user_batch.size());
      for (const UtChannel& ch : user_batch) {
        if (scheme == SchemeId::ProposedGmm || pmm) {
          per_user.push_back(
              short_term_solve(scheme, cfg, params, t_now, qs, k, ch).r);
        } else if (decoupled || upa) {
          per_user.push_back(r_init);
        } else {  // receive positions are long-term variables
          per_user.push_back(unstack(r_vecs[static_cast<std::size_t>(k)]));
        }
      }
    }

    const BatchGradients grads =
        mini_batch_gradients(t_now, qs, batch, apvs, cfg.noise_w,
                             pmm ? ShortTermMode::Pmm : ShortTermMode::Gmm,
                             scsit_gmm);
    surrogate.update(t_vec, qs, grads, scsit_gmm ? &r_vecs : nullptr);

    SurrogateProblem prob;
    prob.surrogate = &surrogate;
    prob.n_tx = cfg.n_tx;
    prob.k_users = cfg.k_users;
    prob.m_rx = cfg.m_rx;
    prob.power_w = cfg.power_w;
    prob.r_min = cfg.r_min;
    prob.min_dist = cfg.min_dist_m;
    prob.tau_h = params.tau_h;
    prob.optimize_t = !upa;
    prob.t_box = t_region.rects.front();
    prob.t_anchor = t_vec;
    prob.optimize_r = scsit_gmm;
    if (scsit_gmm) {
      prob.r_region = r_region;
      prob.r_anchor = r_vecs;
      prob.min_dist_r = cfg.min_dist_m;
    }
    prob.q_anchor = qs;
    prob.options = params.solver;

    const SolverReport rep = solve_objective(prob);

    IterationTrace tr;
    tr.batch_sum_rate = 0.0;
    for (double rk : grads.rate_mean) tr.batch_sum_rate += rk;
    tr.alpha = rep.feasibility_alpha;
    tr.objective_feasible = rep.status != SolveStatus::Infeasible;
    tr.solver_converged = rep.status == SolveStatus::Converged;

    // Convex-combination update toward the subproblem solution.
    const double gamma = StepSequences::gamma(ell);
    blend_variables(t_vec, qs, rep.point.t, rep.point.q, gamma);
    if (scsit_gmm) {
      for (int k = 0; k < cfg.k_users; ++k) {
        auto& rk = r_vecs[static_cast<std::size_t>(k)];
        rk = (1.0 - gamma) * rk + gamma * rep.point.r[static_cast<std::size_t>(k)];
      }
    }

    tr.surrogate_sum = surrogate.value_sum(t_vec, qs, scsit_gmm ? &r_vecs : nullptr);
    tr.min_pair_dist_t = min_pairwise_distance(unstack(t_vec));
    tr.total_trace_q = qs.total_trace();
    tr.min_eig_q = min_eigenvalue(qs);
    sol.trace.push_back(tr);
  }

  sol.t = unstack(t_vec);
  sol.q = qs;
  if (scsit_gmm) {
    sol.r_fixed.reserve(static_cast<std::size_t>(cfg.k_users));
    for (const auto& rk : r_vecs) sol.r_fixed.push_back(unstack(rk));
  } else if (upa || decoupled) {
    sol.r_fixed.assign(static_cast<std::size_t>(cfg.k_users), r_init);
  }
  return sol;
}

}  // namespace

LongTermSolution cssca_gmm(const SystemConfig& cfg, const LongTermParams& params,
                           const RealizationDraws& draws) {
  return long_term_loop(SchemeId::ProposedGmm, cfg, params, draws);
}

LongTermSolution pdd_ssca_pmm(const SystemConfig& cfg,
                              const LongTermParams& params,
                              const RealizationDraws& draws) {
  return long_term_loop(SchemeId::ProposedPmm, cfg, params, draws);
}

LongTermSolution run_scheme(SchemeId scheme, const SystemConfig& cfg,
                            const LongTermParams& params,
                            const RealizationDraws& draws) {
  return long_term_loop(scheme, cfg, params, draws);
}

EvalResult evaluate_solution(const LongTermSolution& sol, const SystemConfig& cfg,
                             const LongTermParams& params,
                             const std::vector<std::vector<UtChannel>>& eval_samples) {
  EvalResult out;
  out.mean_rate_per_ut.assign(static_cast<std::size_t>(cfg.k_users), 0.0);
  out.r_trajectory.reserve(eval_samples.size());
  const bool adaptive = sol.scheme == SchemeId::ProposedGmm ||
                        sol.scheme == SchemeId::ProposedPmm ||
                        sol.scheme == SchemeId::DecoupledGmm;
  const double inv_s = eval_samples.empty()
                           ? 0.0
                           : 1.0 / static_cast<double>(eval_samples.size());
  for (const auto& per_user : eval_samples) {
    std::vector<Apv> snapshot;
    snapshot.reserve(static_cast<std::size_t>(cfg.k_users));
    for (int k = 0; k < cfg.k_users; ++k) {
      const UtChannel& ch = per_user[static_cast<std::size_t>(k)];
      Apv r_k;
      if (adaptive) {
        // Decoupling only affects the training loop: at run time every
        // adaptive scheme repositions per channel sample.
        const SchemeId mode = sol.scheme == SchemeId::DecoupledGmm
                                  ? SchemeId::ProposedGmm
                                  : sol.scheme;
        r_k = short_term_solve(mode, cfg, params, sol.t, sol.q, k, ch).r;
      } else {
        r_k = sol.r_fixed[static_cast<std::size_t>(k)];
      }
      out.mean_rate_per_ut[static_cast<std::size_t>(k)] +=
          inv_s * achievable_rate(sol.t, r_k, sol.q, k, ch, cfg.noise_w);
      snapshot.push_back(std::move(r_k));
    }
    out.r_trajectory.push_back(std::move(snapshot));
  }
  out.sum_rate = 0.0;
  for (double v : out.mean_rate_per_ut) out.sum_rate += v;
  return out;
}

}  // namespace mamimo
