#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "checks.hpp"
#include "mamimo/sim.hpp"

namespace {

using namespace mamimo;

struct CommonOpts {
  std::string config_path;
  std::string preset;
  std::string schemes;
  std::string sweep;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out;
  int workers = -1;
  bool trace = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "configuration file (key = value)");
  cmd->add_option("--preset", opts.preset, "desk or paper")
      ->check(CLI::IsMember({"desk", "paper"}));
  cmd->add_option("--scheme", opts.schemes, "comma-separated scheme list");
  cmd->add_option("--sweep", opts.sweep, "AXIS=v1,v2,... sweep specification");
  cmd->add_option("--seed", opts.seed, "master seed")->each([&](const std::string&) {
    opts.seed_set = true;
  });
  cmd->add_option("--out", opts.out, "output directory");
  cmd->add_option("--workers", opts.workers, "worker threads (0 = hardware)");
  cmd->add_flag("--trace", opts.trace, "record per-iteration convergence traces");
}

ExperimentConfig resolve_config(const CommonOpts& opts) {
  ExperimentConfig cfg;
  if (!opts.config_path.empty()) cfg = load_config_file(opts.config_path);
  if (!opts.preset.empty()) apply_preset(cfg, opts.preset);
  if (!opts.schemes.empty()) apply_config_line(cfg, "schemes", opts.schemes);
  if (!opts.sweep.empty()) {
    const auto eq = opts.sweep.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("--sweep expects AXIS=v1,v2,...");
    }
    apply_config_line(cfg, "sweep_axis", opts.sweep.substr(0, eq));
    apply_config_line(cfg, "sweep_values", opts.sweep.substr(eq + 1));
  }
  if (opts.seed_set) cfg.seed = opts.seed;
  if (!opts.out.empty()) cfg.out_dir = opts.out;
  if (opts.workers >= 0) cfg.workers = opts.workers;
  if (opts.trace) cfg.trace = true;
  cfg.validate();
  return cfg;
}

int cmd_run(const CommonOpts& opts) {
  const ExperimentConfig cfg = resolve_config(opts);
  const ExperimentResult result = run_experiment(cfg);
  emit_results(result, cfg);
  std::printf("wrote %zu metric rows to %s\n", result.rows.size(),
              cfg.out_dir.c_str());
  for (const MetricsRow& row : result.rows) {
    std::printf("  %-14s %-12s %8.4g  rate %7.4f  feas %5.3f\n",
                row.scheme.c_str(), row.sweep_name.c_str(), row.sweep_value,
                row.avg_sum_rate, row.feasibility_ratio);
  }
  return 0;
}

int cmd_trace(const CommonOpts& opts) {
  CommonOpts patched = opts;
  patched.trace = true;
  ExperimentConfig cfg = resolve_config(patched);
  cfg.realizations = 1;
  const ExperimentResult result = run_experiment(cfg);
  emit_results(result, cfg);

  namespace fs = std::filesystem;
  for (const TraceEntry& entry : result.traces) {
    const fs::path base = fs::path(cfg.out_dir) / (entry.scheme + "_trace.csv");
    std::ofstream out(base);
    out << "iteration,batch_sum_rate,surrogate_sum,alpha,objective_feasible,"
           "min_pair_dist_t,total_trace_q,min_eig_q\n";
    for (std::size_t i = 0; i < entry.long_term.size(); ++i) {
      const IterationTrace& it = entry.long_term[i];
      out << (i + 1) << ',' << it.batch_sum_rate << ',' << it.surrogate_sum
          << ',' << it.alpha << ',' << (it.objective_feasible ? 1 : 0) << ','
          << it.min_pair_dist_t << ',' << it.total_trace_q << ','
          << it.min_eig_q << '\n';
    }
    if (!entry.short_term_rates.empty()) {
      const fs::path st = fs::path(cfg.out_dir) / (entry.scheme + "_short_term.csv");
      std::ofstream sout(st);
      sout << "iteration,rate\n";
      for (std::size_t i = 0; i < entry.short_term_rates.size(); ++i) {
        sout << i << ',' << entry.short_term_rates[i] << '\n';
      }
    }
  }
  std::printf("trace written to %s\n", cfg.out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"movable-antenna two-timescale sum-rate simulator"};
  app.require_subcommand(1);

  CommonOpts run_opts, trace_opts;
  std::uint64_t check_seed = 1234;

  CLI::App* run_cmd = app.add_subcommand("run", "run a Monte Carlo experiment");
  add_common(run_cmd, run_opts);

  CLI::App* check_cmd =
      app.add_subcommand("check", "run the oracle/invariant battery");
  check_cmd->add_option("--seed", check_seed, "battery seed");

  CLI::App* trace_cmd = app.add_subcommand(
      "trace", "dump single-realization convergence traces");
  add_common(trace_cmd, trace_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) return cmd_run(run_opts);
    if (check_cmd->parsed()) return mamimo::checks::run_all(check_seed) == 0 ? 0 : 1;
    if (trace_cmd->parsed()) return cmd_trace(trace_opts);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
