#include "mamimo/sim.hpp"

#include <atomic>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <nlohmann/json.hpp>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace mamimo {

const char* const kArtifactVersion = "mamimo 1.0.0";

namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

void MetricsRow::validate() const {
  if (!(feasibility_ratio >= 0.0 && feasibility_ratio <= 1.0)) {
    throw std::runtime_error("feasibility ratio outside [0,1]");
  }
  if (avg_sum_rate < 0.0 || !std::isfinite(avg_sum_rate)) {
    throw std::runtime_error("average sum rate must be a nonnegative finite number");
  }
  if (realizations < 1) throw std::runtime_error("row without realizations");
}

double feasibility_ratio(const std::vector<std::vector<double>>& per_ut_mean_rates,
                         double r_min) {
  if (per_ut_mean_rates.empty()) return 0.0;
  int feasible = 0;
  for (const auto& rates : per_ut_mean_rates) {
    double worst = std::numeric_limits<double>::infinity();
    for (double r : rates) worst = std::min(worst, r);
    if (worst >= r_min) ++feasible;
  }
  return static_cast<double>(feasible) /
         static_cast<double>(per_ut_mean_rates.size());
}

EnergyMetrics energy_metrics(const std::vector<std::vector<Apv>>& trajectory,
                             const std::vector<Apv>& start,
                             const std::vector<double>& mean_rate_per_ut,
                             const ExperimentConfig& cfg) {
  EnergyMetrics out;
  if (trajectory.empty() || start.empty()) return out;
  const std::size_t k_users = start.size();
  const double intervals_per_s = 1.0 / cfg.coherence_s;
  double eff_acc = 0.0;
  double delay_acc = 0.0;
  for (std::size_t k = 0; k < k_users; ++k) {
    double total_dist = 0.0;
    double delay_sum = 0.0;
    const Apv* prev = &start[k];
    for (const auto& snapshot : trajectory) {
      const Apv& cur = snapshot[k];
      double interval_total = 0.0;
      double interval_max = 0.0;
      for (Eigen::Index m = 0; m < cur.cols(); ++m) {
        const double d = (cur.col(m) - prev->col(m)).norm();
        interval_total += d;
        interval_max = std::max(interval_max, d);
      }
      total_dist += interval_total;
      delay_sum += interval_max / cfg.reposition_mps;
      prev = &cur;
    }
    const double n_intervals = static_cast<double>(trajectory.size());
    const double power_w =
        cfg.move_coeff_j_per_m * (total_dist / n_intervals) * intervals_per_s;
    const double eff = power_w > 1e-15
                           ? mean_rate_per_ut[k] / power_w
                           : cfg.efficiency_cap;
    eff_acc += std::min(eff, cfg.efficiency_cap);
    delay_acc += delay_sum / n_intervals;
  }
  out.efficiency = eff_acc / static_cast<double>(k_users);
  out.delay_s = delay_acc / static_cast<double>(k_users);
  return out;
}

void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  if (workers <= 0) {
    workers = static_cast<int>(std::thread::hardware_concurrency());
    if (workers <= 0) workers = 4;
  }
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr err;
  std::mutex err_mutex;
  auto body = [&] {
    while (true) {
      const int i = next.fetch_add(1);
      if (i >= n) break;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!err) err = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) pool.emplace_back(body);
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

namespace {

struct RealizationMetrics {
  double sum_rate = 0.0;
  std::vector<double> per_ut;
  double efficiency = 0.0;
  double delay = 0.0;
};

struct PointResult {
  std::vector<std::vector<RealizationMetrics>> per_scheme;  // [scheme][realization]
  std::vector<TraceEntry> traces;
};

PointResult run_point(const ExperimentConfig& cfg) {
  const SystemConfig sys = cfg.system();
  const LongTermParams params = cfg.params();
  const int n_schemes = static_cast<int>(cfg.schemes.size());

  PointResult out;
  out.per_scheme.assign(static_cast<std::size_t>(n_schemes), {});
  for (auto& v : out.per_scheme) {
    v.resize(static_cast<std::size_t>(cfg.realizations));
  }
  std::vector<TraceEntry> trace_slots(static_cast<std::size_t>(n_schemes));

  parallel_for(cfg.realizations, cfg.workers, [&](int real_idx) {
    Rng rng(Rng::derive(cfg.seed, static_cast<std::uint64_t>(real_idx)));
    const RealizationDraws draws =
        draw_realization(sys, cfg.iters_long, cfg.batch_size, cfg.eval_samples,
                         rng, cfg.redraw_angles_per_sample);
    for (int s = 0; s < n_schemes; ++s) {
      const SchemeId scheme = scheme_from_string(cfg.schemes[static_cast<std::size_t>(s)]);
      const LongTermSolution sol = run_scheme(scheme, sys, params, draws);
      const EvalResult eval = evaluate_solution(sol, sys, params, draws.eval);

      RealizationMetrics& metrics =
          out.per_scheme[static_cast<std::size_t>(s)][static_cast<std::size_t>(real_idx)];
      metrics.sum_rate = eval.sum_rate;
      metrics.per_ut = eval.mean_rate_per_ut;

      std::vector<Apv> start;
      if (!sol.r_fixed.empty()) {
        start = sol.r_fixed;
      } else {
        start.assign(static_cast<std::size_t>(sys.k_users),
                     initial_receive_apv(sys, scheme == SchemeId::ProposedPmm));
      }
      const EnergyMetrics energy =
          energy_metrics(eval.r_trajectory, start, eval.mean_rate_per_ut, cfg);
      metrics.efficiency = energy.efficiency;
      metrics.delay = energy.delay_s;

      if (cfg.trace && real_idx == 0) {
        TraceEntry entry;
        entry.scheme = cfg.schemes[static_cast<std::size_t>(s)];
        entry.long_term = sol.trace;
        if (scheme == SchemeId::ProposedGmm || scheme == SchemeId::ProposedPmm) {
          // Short-term convergence at the starting long-term point.
          const Apv t0 = initial_transmit_apv(sys);
          const CovarianceSet q0 = initial_covariance(sys);
          entry.short_term_rates =
              short_term_solve(scheme, sys, params, t0, q0, 0,
                               draws.eval.front().front())
                  .rate_trace;
        }
        trace_slots[static_cast<std::size_t>(s)] = std::move(entry);
      }
    }
  });

  if (cfg.trace) out.traces = std::move(trace_slots);
  return out;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  // Fail on unwritable output before any compute.
  fs::create_directories(cfg.out_dir);
  {
    const fs::path probe = fs::path(cfg.out_dir) / ".write_probe";
    std::ofstream test(probe);
    if (!test) throw std::runtime_error("output directory is not writable: " + cfg.out_dir);
    test.close();
    fs::remove(probe);
  }

  std::vector<std::pair<std::string, double>> points;
  if (cfg.sweep_axis.empty()) {
    points.emplace_back("none", 0.0);
  } else {
    for (double v : cfg.sweep_values) points.emplace_back(cfg.sweep_axis, v);
  }

  ExperimentResult result;
  for (const auto& [axis, value] : points) {
    const ExperimentConfig point_cfg =
        axis == "none" ? cfg : apply_sweep(cfg, axis, value);
    PointResult point = run_point(point_cfg);
    for (std::size_t s = 0; s < cfg.schemes.size(); ++s) {
      const auto& reals = point.per_scheme[s];
      MetricsRow row;
      row.scheme = cfg.schemes[s];
      row.sweep_name = axis;
      row.sweep_value = value;
      row.realizations = cfg.realizations;
      row.seed = cfg.seed;
      std::vector<std::vector<double>> per_ut;
      per_ut.reserve(reals.size());
      double rate_acc = 0.0, eff_acc = 0.0, delay_acc = 0.0;
      for (const auto& m : reals) {
        rate_acc += m.sum_rate;
        eff_acc += m.efficiency;
        delay_acc += m.delay;
        per_ut.push_back(m.per_ut);
      }
      const double inv = 1.0 / static_cast<double>(reals.size());
      row.avg_sum_rate = rate_acc * inv;
      row.energy_eff = eff_acc * inv;
      row.repositioning_delay = delay_acc * inv;
      row.feasibility_ratio = feasibility_ratio(per_ut, point_cfg.r_min_bpshz);
      row.validate();
      result.rows.push_back(std::move(row));
    }
    for (auto& entry : point.traces) {
      entry.sweep_name = axis;
      entry.sweep_value = value;
      result.traces.push_back(std::move(entry));
    }
  }
  return result;
}

void emit_results(const ExperimentResult& result, const ExperimentConfig& cfg) {
  if (result.rows.empty()) throw std::invalid_argument("no rows to emit");
  fs::create_directories(cfg.out_dir);
  const fs::path csv_path = fs::path(cfg.out_dir) / "metrics.csv";
  {
    std::ofstream csv(csv_path);
    if (!csv) throw std::runtime_error("cannot write " + csv_path.string());
    csv << "scheme,sweep_name,sweep_value,avg_sum_rate,feasibility_ratio,"
           "energy_eff,repositioning_delay,realizations,seed\n";
    for (const MetricsRow& row : result.rows) {
      csv << row.scheme << ',' << row.sweep_name << ','
          << format_double(row.sweep_value) << ','
          << format_double(row.avg_sum_rate) << ','
          << format_double(row.feasibility_ratio) << ','
          << format_double(row.energy_eff) << ','
          << format_double(row.repositioning_delay) << ',' << row.realizations
          << ',' << row.seed << '\n';
    }
    if (!csv) throw std::runtime_error("write failure on " + csv_path.string());
  }

  ordered_json manifest;
  manifest["artifact_version"] = kArtifactVersion;
  ordered_json jc;
  jc["n_tx"] = cfg.n_tx;
  jc["m_rx"] = cfg.m_rx;
  jc["k_users"] = cfg.k_users;
  jc["l_paths"] = cfg.l_paths;
  jc["lambda_m"] = cfg.lambda_m;
  jc["d_lambda"] = cfg.d_lambda;
  jc["x_t_lambda"] = cfg.x_t_lambda;
  jc["x_r_lambda"] = cfg.x_r_lambda;
  jc["noise_dbm"] = cfg.noise_dbm;
  jc["c0_db"] = cfg.c0_db;
  jc["alpha0"] = cfg.alpha0;
  jc["power_dbm"] = cfg.power_dbm;
  jc["r_min_bpshz"] = cfg.r_min_bpshz;
  jc["ut_dist_min_m"] = cfg.ut_dist_min_m;
  jc["ut_dist_max_m"] = cfg.ut_dist_max_m;
  jc["iters_long"] = cfg.iters_long;
  jc["batch_size"] = cfg.batch_size;
  jc["iters_short"] = cfg.iters_short;
  jc["tau_t"] = cfg.tau_t;
  jc["tau_h"] = cfg.tau_h;
  jc["tau_r"] = cfg.tau_r;
  if (cfg.tau_q.has_value()) jc["tau_q"] = *cfg.tau_q;
  else jc["tau_q"] = "auto";
  jc["step_initial"] = cfg.step_initial;
  jc["step_shrink"] = cfg.step_shrink;
  jc["armijo_xi"] = cfg.armijo_xi;
  jc["epsilon_short"] = cfg.epsilon_short;
  jc["max_backtracks"] = cfg.max_backtracks;
  jc["ga_starts"] = cfg.ga_starts;
  jc["gp_epsilon_exit"] = cfg.gp_epsilon_exit;
  jc["redraw_angles_per_sample"] = cfg.redraw_angles_per_sample;
  jc["upa_spacing_tx_lambda"] = cfg.upa_spacing_tx_lambda;
  jc["upa_spacing_rx_lambda"] = cfg.upa_spacing_rx_lambda;
  jc["realizations"] = cfg.realizations;
  jc["eval_samples"] = cfg.eval_samples;
  jc["schemes"] = cfg.schemes;
  jc["sweep_axis"] = cfg.sweep_axis;
  jc["sweep_values"] = cfg.sweep_values;
  jc["seed"] = cfg.seed;
  jc["trace"] = cfg.trace;
  jc["move_coeff_j_per_m"] = cfg.move_coeff_j_per_m;
  jc["coherence_s"] = cfg.coherence_s;
  jc["reposition_mps"] = cfg.reposition_mps;
  jc["efficiency_cap"] = cfg.efficiency_cap;
  // out_dir and workers are execution-environment knobs, deliberately not
  // part of the reproducible identity.
  manifest["config"] = std::move(jc);

  if (!result.traces.empty()) {
    ordered_json traces = ordered_json::array();
    for (const TraceEntry& entry : result.traces) {
      ordered_json jt;
      jt["scheme"] = entry.scheme;
      jt["sweep_name"] = entry.sweep_name;
      jt["sweep_value"] = entry.sweep_value;
      ordered_json lt = ordered_json::array();
      for (const IterationTrace& it : entry.long_term) {
        ordered_json ji;
        ji["batch_sum_rate"] = it.batch_sum_rate;
        ji["surrogate_sum"] = it.surrogate_sum;
        ji["alpha"] = it.alpha;
        ji["objective_feasible"] = it.objective_feasible;
        ji["solver_converged"] = it.solver_converged;
        ji["min_pair_dist_t"] = it.min_pair_dist_t;
        ji["total_trace_q"] = it.total_trace_q;
        ji["min_eig_q"] = it.min_eig_q;
        lt.push_back(std::move(ji));
      }
      jt["long_term"] = std::move(lt);
      jt["short_term_rates"] = entry.short_term_rates;
      traces.push_back(std::move(jt));
    }
    manifest["traces"] = std::move(traces);
  }

  const fs::path manifest_path = fs::path(cfg.out_dir) / "manifest.json";
  std::ofstream mf(manifest_path);
  if (!mf) throw std::runtime_error("cannot write " + manifest_path.string());
  mf << manifest.dump(2) << '\n';
  if (!mf) throw std::runtime_error("write failure on " + manifest_path.string());
}

std::vector<MetricsRow> parse_metrics_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty metrics table");
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    MetricsRow row;
    std::getline(ss, row.scheme, ',');
    std::getline(ss, row.sweep_name, ',');
    auto next_double = [&]() {
      std::getline(ss, field, ',');
      return std::stod(field);
    };
    row.sweep_value = next_double();
    row.avg_sum_rate = next_double();
    row.feasibility_ratio = next_double();
    row.energy_eff = next_double();
    row.repositioning_delay = next_double();
    std::getline(ss, field, ',');
    row.realizations = std::stoi(field);
    std::getline(ss, field, ',');
    row.seed = std::stoull(field);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace mamimo
