#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mamimo/two_timescale.hpp"

namespace mamimo {

// Experiment configuration in file units (dBm/dB, carrier wavelengths).
// Defaults reproduce the reference operating point; the desk preset scales
// everything down to minutes.
struct ExperimentConfig {
  // system
  int n_tx = 8;
  int m_rx = 2;
  int k_users = 4;
  int l_paths = 10;
  double lambda_m = 0.06;
  double d_lambda = 0.5;
  double x_t_lambda = 0.5;
  double x_r_lambda = 0.5;
  double noise_dbm = -80.0;
  double c0_db = -40.0;
  double alpha0 = 2.8;
  double power_dbm = 20.0;
  double r_min_bpshz = 1.0;
  double ut_dist_min_m = 20.0;
  double ut_dist_max_m = 100.0;

  // algorithm
  int iters_long = 100;
  int batch_size = 10;
  int iters_short = 30;
  double tau_t = -1.0;
  double tau_h = -1.0;
  double tau_r = -1.0;
  std::optional<double> tau_q;  // absent -> -P^-2 at the linear power
  double step_initial = 10.0;
  double step_shrink = 0.5;
  double armijo_xi = 0.6;
  double epsilon_short = 1e-6;
  int max_backtracks = 60;
  int ga_starts = 1;
  bool gp_epsilon_exit = false;
  bool redraw_angles_per_sample = false;
  double upa_spacing_tx_lambda = 0.5;
  double upa_spacing_rx_lambda = 0.5;

  // harness
  int realizations = 1000;
  int eval_samples = 200;
  std::vector<std::string> schemes = {"proposed-gmm", "proposed-pmm",
                                      "decoupled-gmm", "scsit-gmm",
                                      "scsit-upa"};
  std::string sweep_axis;             // empty -> single operating point
  std::vector<double> sweep_values;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  int workers = 0;  // 0 -> hardware concurrency
  bool trace = false;

  // repositioning metrics
  double move_coeff_j_per_m = 1.0;
  double coherence_s = 0.1;
  double reposition_mps = 10.0;
  double efficiency_cap = 1e12;  // reported when a terminal never moves

  void validate() const;
  SystemConfig system() const;
  LongTermParams params() const;
};

// Strict flat key=value file; '#' comments; unknown keys are errors.
ExperimentConfig load_config_file(const std::string& path);
void apply_config_line(ExperimentConfig& cfg, const std::string& key,
                       const std::string& value);

// desk: minutes-scale sizes exercising every code path; paper: the full
// reference operating point.
void apply_preset(ExperimentConfig& cfg, const std::string& name);

// Applies one sweep-axis value; adjusts the fixed-array spacing of the
// uniform-array benchmark along the region-size axes.
ExperimentConfig apply_sweep(const ExperimentConfig& cfg,
                             const std::string& axis, double value);

}  // namespace mamimo
