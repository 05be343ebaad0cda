#pragma once

#include <string>
#include <vector>

#include "mamimo/config.hpp"

namespace mamimo {

struct MetricsRow {
  std::string scheme;
  std::string sweep_name;
  double sweep_value = 0.0;
  double avg_sum_rate = 0.0;
  double feasibility_ratio = 0.0;
  double energy_eff = 0.0;
  double repositioning_delay = 0.0;
  int realizations = 0;
  std::uint64_t seed = 0;

  void validate() const;
};

// Fraction of realizations whose worst per-user mean rate meets the floor.
double feasibility_ratio(const std::vector<std::vector<double>>& per_ut_mean_rates,
                         double r_min);

struct EnergyMetrics {
  double efficiency = 0.0;  // bits/s/Hz per watt of repositioning power
  double delay_s = 0.0;     // mean worst-antenna move time per interval
};

// trajectory[sample][k] holds the receive positions used in each coherence
// interval; start[k] is the position before the first interval. A terminal
// that never moves reports the documented efficiency cap instead of a
// division error.
EnergyMetrics energy_metrics(const std::vector<std::vector<Apv>>& trajectory,
                             const std::vector<Apv>& start,
                             const std::vector<double>& mean_rate_per_ut,
                             const ExperimentConfig& cfg);

struct TraceEntry {
  std::string scheme;
  std::string sweep_name;
  double sweep_value = 0.0;
  std::vector<IterationTrace> long_term;  // realization 0
  std::vector<double> short_term_rates;   // one short-term run at the start point
};

struct ExperimentResult {
  std::vector<MetricsRow> rows;
  std::vector<TraceEntry> traces;  // populated when cfg.trace is set
};

// Runs the sweep x scheme x realization grid with a worker pool over
// realizations. Deterministic for a fixed (config, seed) regardless of the
// worker count. Verifies the output directory is writable before computing.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

// Writes metrics.csv and manifest.json (resolved config, artifact version,
// optional traces) into cfg.out_dir.
void emit_results(const ExperimentResult& result, const ExperimentConfig& cfg);

// Round-trips the emitted table.
std::vector<MetricsRow> parse_metrics_csv(const std::string& path);

// Shared helper: run fn(i) for i in [0, n) on a pool; exceptions from
// workers are rethrown on the calling thread.
void parallel_for(int n, int workers, const std::function<void(int)>& fn);

extern const char* const kArtifactVersion;

}  // namespace mamimo
