#include "mamimo/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mamimo {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw std::invalid_argument("config key '" + key + "': bad number '" + value + "'");
  }
}

int parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(value, &used);
    if (used != value.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw std::invalid_argument("config key '" + key + "': bad integer '" + value + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true") return true;
  if (value == "0" || value == "false") return false;
  throw std::invalid_argument("config key '" + key + "': bad boolean '" + value + "'");
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

void ExperimentConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw std::invalid_argument(std::string(name) + " must be positive");
  };
  if (n_tx < 1 || m_rx < 1 || k_users < 1 || l_paths < 1) {
    throw std::invalid_argument("antenna/user/path counts must be at least 1");
  }
  positive(lambda_m, "lambda_m");
  positive(d_lambda, "d_lambda");
  positive(x_t_lambda, "x_t_lambda");
  positive(x_r_lambda, "x_r_lambda");
  positive(step_initial, "step_initial");
  positive(epsilon_short, "epsilon_short");
  positive(coherence_s, "coherence_s");
  positive(reposition_mps, "reposition_mps");
  if (!(step_shrink > 0.0 && step_shrink < 1.0)) {
    throw std::invalid_argument("step_shrink must lie in (0,1)");
  }
  if (!(armijo_xi > 0.0 && armijo_xi < 1.0)) {
    throw std::invalid_argument("armijo_xi must lie in (0,1)");
  }
  if (tau_t >= 0.0 || tau_h >= 0.0 || tau_r >= 0.0 ||
      (tau_q.has_value() && *tau_q >= 0.0)) {
    throw std::invalid_argument("surrogate curvatures must be negative");
  }
  if (iters_long < 0 || iters_short < 0 || batch_size < 1 || realizations < 1 ||
      eval_samples < 1 || ga_starts < 1 || max_backtracks < 1) {
    throw std::invalid_argument("iteration/sample counts out of range");
  }
  if (ut_dist_min_m <= 0.0 || ut_dist_max_m < ut_dist_min_m) {
    throw std::invalid_argument("terminal distance range is invalid");
  }
  if (schemes.empty()) throw std::invalid_argument("no schemes selected");
  for (const auto& s : schemes) scheme_from_string(s);
  if (!sweep_axis.empty() && sweep_values.empty()) {
    throw std::invalid_argument("sweep axis given without sweep values");
  }
  for (double v : sweep_values) {
    if (!std::isfinite(v)) throw std::invalid_argument("sweep values must be finite");
  }
}

SystemConfig ExperimentConfig::system() const {
  SystemConfig sys;
  sys.n_tx = n_tx;
  sys.m_rx = m_rx;
  sys.k_users = k_users;
  sys.paths = l_paths;
  sys.lambda_m = lambda_m;
  sys.min_dist_m = d_lambda * lambda_m;
  sys.x_t_m = x_t_lambda * lambda_m;
  sys.x_r_m = x_r_lambda * lambda_m;
  sys.noise_w = dbm_to_watt(noise_dbm);
  sys.c0 = db_to_linear(c0_db);
  sys.alpha0 = alpha0;
  sys.power_w = dbm_to_watt(power_dbm);
  sys.r_min = r_min_bpshz;
  sys.ut_dist_min_m = ut_dist_min_m;
  sys.ut_dist_max_m = ut_dist_max_m;
  return sys;
}

LongTermParams ExperimentConfig::params() const {
  LongTermParams p;
  p.iterations = iters_long;
  p.batch_size = batch_size;
  p.short_term.initial_step = step_initial;
  p.short_term.shrink = step_shrink;
  p.short_term.sufficient_increase = armijo_xi;
  p.short_term.epsilon = epsilon_short;
  p.short_term.max_iterations = iters_short;
  p.short_term.max_backtracks = max_backtracks;
  p.tau_t = tau_t;
  p.tau_h = tau_h;
  p.tau_r = tau_r;
  p.tau_q = tau_q;
  p.gp_epsilon_exit = gp_epsilon_exit;
  p.ga_starts = ga_starts;
  p.upa_spacing_tx_m = upa_spacing_tx_lambda * lambda_m;
  p.upa_spacing_rx_m = upa_spacing_rx_lambda * lambda_m;
  return p;
}

void apply_config_line(ExperimentConfig& cfg, const std::string& key,
                       const std::string& value) {
  if (key == "n_tx") cfg.n_tx = parse_int(key, value);
  else if (key == "m_rx") cfg.m_rx = parse_int(key, value);
  else if (key == "k_users") cfg.k_users = parse_int(key, value);
  else if (key == "l_paths") cfg.l_paths = parse_int(key, value);
  else if (key == "lambda_m") cfg.lambda_m = parse_double(key, value);
  else if (key == "d_lambda") cfg.d_lambda = parse_double(key, value);
  else if (key == "x_t_lambda") cfg.x_t_lambda = parse_double(key, value);
  else if (key == "x_r_lambda") cfg.x_r_lambda = parse_double(key, value);
  else if (key == "noise_dbm") cfg.noise_dbm = parse_double(key, value);
  else if (key == "c0_db") cfg.c0_db = parse_double(key, value);
  else if (key == "alpha0") cfg.alpha0 = parse_double(key, value);
  else if (key == "power_dbm") cfg.power_dbm = parse_double(key, value);
  else if (key == "r_min_bpshz") cfg.r_min_bpshz = parse_double(key, value);
  else if (key == "ut_dist_min_m") cfg.ut_dist_min_m = parse_double(key, value);
  else if (key == "ut_dist_max_m") cfg.ut_dist_max_m = parse_double(key, value);
  else if (key == "iters_long") cfg.iters_long = parse_int(key, value);
  else if (key == "batch_size") cfg.batch_size = parse_int(key, value);
  else if (key == "iters_short") cfg.iters_short = parse_int(key, value);
  else if (key == "tau_t") cfg.tau_t = parse_double(key, value);
  else if (key == "tau_h") cfg.tau_h = parse_double(key, value);
  else if (key == "tau_r") cfg.tau_r = parse_double(key, value);
  else if (key == "tau_q") {
    if (value == "auto") cfg.tau_q.reset();
    else cfg.tau_q = parse_double(key, value);
  } else if (key == "step_initial") cfg.step_initial = parse_double(key, value);
  else if (key == "step_shrink") cfg.step_shrink = parse_double(key, value);
  else if (key == "armijo_xi") cfg.armijo_xi = parse_double(key, value);
  else if (key == "epsilon_short") cfg.epsilon_short = parse_double(key, value);
  else if (key == "max_backtracks") cfg.max_backtracks = parse_int(key, value);
  else if (key == "ga_starts") cfg.ga_starts = parse_int(key, value);
  else if (key == "gp_epsilon_exit") cfg.gp_epsilon_exit = parse_bool(key, value);
  else if (key == "redraw_angles_per_sample") cfg.redraw_angles_per_sample = parse_bool(key, value);
  else if (key == "upa_spacing_tx_lambda") cfg.upa_spacing_tx_lambda = parse_double(key, value);
  else if (key == "upa_spacing_rx_lambda") cfg.upa_spacing_rx_lambda = parse_double(key, value);
  else if (key == "realizations") cfg.realizations = parse_int(key, value);
  else if (key == "eval_samples") cfg.eval_samples = parse_int(key, value);
  else if (key == "schemes") cfg.schemes = split_list(value);
  else if (key == "sweep_axis") cfg.sweep_axis = value;
  else if (key == "sweep_values") {
    cfg.sweep_values.clear();
    for (const auto& item : split_list(value)) {
      cfg.sweep_values.push_back(parse_double(key, item));
    }
  } else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(std::stoull(value));
  else if (key == "out_dir") cfg.out_dir = value;
  else if (key == "workers") cfg.workers = parse_int(key, value);
  else if (key == "trace") cfg.trace = parse_bool(key, value);
  else if (key == "move_coeff_j_per_m") cfg.move_coeff_j_per_m = parse_double(key, value);
  else if (key == "coherence_s") cfg.coherence_s = parse_double(key, value);
  else if (key == "reposition_mps") cfg.reposition_mps = parse_double(key, value);
  else if (key == "efficiency_cap") cfg.efficiency_cap = parse_double(key, value);
  else throw std::invalid_argument("unknown config key: " + key);
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  ExperimentConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  " is not key = value");
    }
    apply_config_line(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  cfg.validate();
  return cfg;
}

void apply_preset(ExperimentConfig& cfg, const std::string& name) {
  if (name == "paper") return;  // the defaults
  if (name == "desk") {
    cfg.n_tx = 4;
    cfg.m_rx = 2;
    cfg.k_users = 2;
    cfg.l_paths = 4;
    cfg.iters_long = 30;
    cfg.batch_size = 4;
    cfg.iters_short = 15;
    cfg.realizations = 50;
    cfg.eval_samples = 100;
    return;
  }
  throw std::invalid_argument("unknown preset: " + name);
}

ExperimentConfig apply_sweep(const ExperimentConfig& cfg, const std::string& axis,
                             double value) {
  ExperimentConfig out = cfg;
  if (axis == "power_dbm") {
    out.power_dbm = value;
  } else if (axis == "x_t_lambda") {
    out.x_t_lambda = value;
    out.upa_spacing_tx_lambda = out.d_lambda + 0.5 * value;
  } else if (axis == "x_r_lambda") {
    out.x_r_lambda = value;
    out.upa_spacing_rx_lambda = out.d_lambda + 0.5 * value;
  } else if (axis == "d_lambda") {
    out.d_lambda = value;
  } else if (axis == "r_min_bpshz") {
    out.r_min_bpshz = value;
  } else {
    throw std::invalid_argument("unknown sweep axis: " + axis);
  }
  out.validate();
  return out;
}

}  // namespace mamimo
