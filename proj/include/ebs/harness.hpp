// Copyright 2026 The ebstop Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ebs/mlp.hpp"
#include "ebs/optim.hpp"
#include "ebs/problems.hpp"

namespace ebs {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Flat key=value run description. Every key has a default; files list only
// what they change. Keys not in the registry are rejected with their line
// number, later assignments win.
struct RunConfig {
  std::string problem = "quadratic";

  // quadratic
  int dim = 1000;
  std::string spectrum = "exponential";  // uniform | exponential | structured
  double eig_min = 0.1;
  double eig_max = 10.0;
  int n_large = 20;
  double noise_scale = 10.0;
  std::string init = "gaussian";  // gaussian | counterexample
  double init_scale = 3.1622776601683795;
  double counter_scale = 3.0;

  // fourier / blobs_mlp split sizes
  int n_train = 20;
  int n_val = 10;
  int n_test = 2000;
  double noise_std = 0.5;  // fourier observation noise

  // wdbc
  std::string data_path = "data/wdbc.data";
  int val_size = 0;

  // blobs_mlp
  int classes = 3;
  int blob_dim = 2;
  double blob_noise = 1.0;
  std::vector<int> hidden = {16, 16};

  // optimizer
  std::string optimizer = "gd";  // gd | sgd | rmsprop | masked_sgd_greedy |
                                 // masked_sgd_nongreedy
  double learning_rate = 0.01;
  int batch_size = 0;  // 0: full batch
  double rmsprop_gamma = 0.95;
  double rmsprop_epsilon = 1e-8;
  double mask_beta = 0.99;
  double mask_threshold = 1.0;
  double mask_warmup = 10.0;
  double rmsprop_off_threshold = 0.1;

  // stopper
  std::string stopper = "eb";  // none | eb | validation
  double eb_beta = 0.99;
  double eb_warmup = -9.0;
  bool eb_grouped = false;
  bool eb_stop_at_boundary = true;
  int patience = 10;
  int eval_interval = 1;

  // run
  std::uint64_t seed = 1;
  long max_steps = 10000;
  long log_interval = 0;  // 0: auto
  std::string out;        // CSV log path; empty disables the file
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline long parse_integer(const std::string& s) {
  long v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw std::invalid_argument("expected an integer, got '" + s + "'");
  return v;
}

inline double parse_number(const std::string& s) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw std::invalid_argument("expected a number, got '" + s + "'");
  return v;
}

inline bool parse_flag(const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw std::invalid_argument("expected true/false, got '" + s + "'");
}

inline std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  if (trim(s).empty()) return out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = s.find(',', start);
    out.push_back(static_cast<int>(parse_integer(trim(
        s.substr(start, comma == std::string::npos ? comma : comma - start)))));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

using ConfigSetter = std::function<void(RunConfig&, const std::string&)>;

inline const std::map<std::string, ConfigSetter>& config_setters() {
  static const std::map<std::string, ConfigSetter> setters = {
      {"problem", [](RunConfig& c, const std::string& v) { c.problem = v; }},
      {"dim",
       [](RunConfig& c, const std::string& v) {
         c.dim = static_cast<int>(parse_integer(v));
       }},
      {"spectrum", [](RunConfig& c, const std::string& v) { c.spectrum = v; }},
      {"eig_min",
       [](RunConfig& c, const std::string& v) { c.eig_min = parse_number(v); }},
      {"eig_max",
       [](RunConfig& c, const std::string& v) { c.eig_max = parse_number(v); }},
      {"n_large",
       [](RunConfig& c, const std::string& v) {
         c.n_large = static_cast<int>(parse_integer(v));
       }},
      {"noise_scale",
       [](RunConfig& c, const std::string& v) {
         c.noise_scale = parse_number(v);
       }},
      {"init", [](RunConfig& c, const std::string& v) { c.init = v; }},
      {"init_scale",
       [](RunConfig& c, const std::string& v) {
         c.init_scale = parse_number(v);
       }},
      {"counter_scale",
       [](RunConfig& c, const std::string& v) {
         c.counter_scale = parse_number(v);
       }},
      {"n_train",
       [](RunConfig& c, const std::string& v) {
         c.n_train = static_cast<int>(parse_integer(v));
       }},
      {"n_val",
       [](RunConfig& c, const std::string& v) {
         c.n_val = static_cast<int>(parse_integer(v));
       }},
      {"n_test",
       [](RunConfig& c, const std::string& v) {
         c.n_test = static_cast<int>(parse_integer(v));
       }},
      {"noise_std",
       [](RunConfig& c, const std::string& v) {
         c.noise_std = parse_number(v);
       }},
      {"data_path",
       [](RunConfig& c, const std::string& v) { c.data_path = v; }},
      {"val_size",
       [](RunConfig& c, const std::string& v) {
         c.val_size = static_cast<int>(parse_integer(v));
       }},
      {"classes",
       [](RunConfig& c, const std::string& v) {
         c.classes = static_cast<int>(parse_integer(v));
       }},
      {"blob_dim",
       [](RunConfig& c, const std::string& v) {
         c.blob_dim = static_cast<int>(parse_integer(v));
       }},
      {"blob_noise",
       [](RunConfig& c, const std::string& v) {
         c.blob_noise = parse_number(v);
       }},
      {"hidden",
       [](RunConfig& c, const std::string& v) { c.hidden = parse_int_list(v); }},
      {"optimizer",
       [](RunConfig& c, const std::string& v) { c.optimizer = v; }},
      {"learning_rate",
       [](RunConfig& c, const std::string& v) {
         c.learning_rate = parse_number(v);
       }},
      {"batch_size",
       [](RunConfig& c, const std::string& v) {
         c.batch_size = static_cast<int>(parse_integer(v));
       }},
      {"rmsprop_gamma",
       [](RunConfig& c, const std::string& v) {
         c.rmsprop_gamma = parse_number(v);
       }},
      {"rmsprop_epsilon",
       [](RunConfig& c, const std::string& v) {
         c.rmsprop_epsilon = parse_number(v);
       }},
      {"mask_beta",
       [](RunConfig& c, const std::string& v) {
         c.mask_beta = parse_number(v);
       }},
      {"mask_threshold",
       [](RunConfig& c, const std::string& v) {
         c.mask_threshold = parse_number(v);
       }},
      {"mask_warmup",
       [](RunConfig& c, const std::string& v) {
         c.mask_warmup = parse_number(v);
       }},
      {"rmsprop_off_threshold",
       [](RunConfig& c, const std::string& v) {
         c.rmsprop_off_threshold = parse_number(v);
       }},
      {"stopper", [](RunConfig& c, const std::string& v) { c.stopper = v; }},
      {"eb_beta",
       [](RunConfig& c, const std::string& v) { c.eb_beta = parse_number(v); }},
      {"eb_warmup",
       [](RunConfig& c, const std::string& v) {
         c.eb_warmup = parse_number(v);
       }},
      {"eb_grouped",
       [](RunConfig& c, const std::string& v) { c.eb_grouped = parse_flag(v); }},
      {"eb_stop_at_boundary",
       [](RunConfig& c, const std::string& v) {
         c.eb_stop_at_boundary = parse_flag(v);
       }},
      {"patience",
       [](RunConfig& c, const std::string& v) {
         c.patience = static_cast<int>(parse_integer(v));
       }},
      {"eval_interval",
       [](RunConfig& c, const std::string& v) {
         c.eval_interval = static_cast<int>(parse_integer(v));
       }},
      {"seed",
       [](RunConfig& c, const std::string& v) {
         c.seed = static_cast<std::uint64_t>(parse_integer(v));
       }},
      {"max_steps",
       [](RunConfig& c, const std::string& v) { c.max_steps = parse_integer(v); }},
      {"log_interval",
       [](RunConfig& c, const std::string& v) {
         c.log_interval = parse_integer(v);
       }},
      {"out", [](RunConfig& c, const std::string& v) { c.out = v; }},
  };
  return setters;
}

inline void set_config_key(RunConfig& cfg, const std::string& key,
                           const std::string& value,
                           const std::string& where) {
  const auto& setters = config_setters();
  const auto it = setters.find(key);
  if (it == setters.end())
    throw ConfigError(where + ": unknown key '" + key + "'");
  try {
    it->second(cfg, value);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": key '" + key + "': " + e.what());
  }
}

template <typename T>
void require(bool ok, const T& message) {
  if (!ok) throw ConfigError(message);
}

}  // namespace detail

// Cross-field validation shared by files and --set overrides.
inline void validate_config(const RunConfig& cfg) {
  using detail::require;
  require(cfg.problem == "quadratic" || cfg.problem == "fourier" ||
              cfg.problem == "wdbc" || cfg.problem == "blobs_mlp",
          "config: problem must be quadratic, fourier, wdbc or blobs_mlp");
  require(cfg.spectrum == "uniform" || cfg.spectrum == "exponential" ||
              cfg.spectrum == "structured",
          "config: spectrum must be uniform, exponential or structured");
  require(cfg.init == "gaussian" || cfg.init == "counterexample",
          "config: init must be gaussian or counterexample");
  require(cfg.optimizer == "gd" || cfg.optimizer == "sgd" ||
              cfg.optimizer == "rmsprop" ||
              cfg.optimizer == "masked_sgd_greedy" ||
              cfg.optimizer == "masked_sgd_nongreedy",
          "config: unknown optimizer '" + cfg.optimizer + "'");
  require(cfg.stopper == "none" || cfg.stopper == "eb" ||
              cfg.stopper == "validation",
          "config: stopper must be none, eb or validation");
  require(cfg.dim >= 1, "config: dim must be >= 1");
  require(cfg.eig_min > 0.0 && cfg.eig_max >= cfg.eig_min,
          "config: need 0 < eig_min <= eig_max");
  require(cfg.noise_scale > 0.0, "config: noise_scale must be > 0");
  require(cfg.init_scale >= 0.0, "config: init_scale must be >= 0");
  require(cfg.n_train >= 1, "config: n_train must be >= 1");
  require(cfg.n_val >= 0, "config: n_val must be >= 0");
  require(cfg.n_test >= 1, "config: n_test must be >= 1");
  require(cfg.noise_std >= 0.0, "config: noise_std must be >= 0");
  require(cfg.val_size >= 0, "config: val_size must be >= 0");
  require(cfg.classes >= 2, "config: classes must be >= 2");
  require(cfg.blob_dim >= 1, "config: blob_dim must be >= 1");
  require(cfg.blob_noise > 0.0, "config: blob_noise must be > 0");
  for (int h : cfg.hidden)
    require(h >= 1, "config: hidden layer sizes must be >= 1");
  require(cfg.learning_rate > 0.0, "config: learning_rate must be > 0");
  require(cfg.batch_size >= 0, "config: batch_size must be >= 0");
  require(cfg.rmsprop_gamma >= 0.0 && cfg.rmsprop_gamma < 1.0,
          "config: rmsprop_gamma must be in [0, 1)");
  require(cfg.rmsprop_epsilon >= 0.0, "config: rmsprop_epsilon must be >= 0");
  require(cfg.mask_beta >= 0.0 && cfg.mask_beta < 1.0,
          "config: mask_beta must be in [0, 1)");
  require(cfg.rmsprop_off_threshold > 0.0 && cfg.rmsprop_off_threshold < 1.0,
          "config: rmsprop_off_threshold must be in (0, 1)");
  require(cfg.eb_beta >= 0.0 && cfg.eb_beta < 1.0,
          "config: eb_beta must be in [0, 1)");
  require(cfg.patience >= 1, "config: patience must be >= 1");
  require(cfg.eval_interval >= 1, "config: eval_interval must be >= 1");
  require(cfg.max_steps >= 1, "config: max_steps must be >= 1");
  require(cfg.log_interval >= 0, "config: log_interval must be >= 0");
}

// Parses config text. Lines are `key = value`; blank lines and lines whose
// first non-space character is '#' are skipped.
inline RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::size_t eq = t.find('=');
    const std::string where = "line " + std::to_string(line_no);
    if (eq == std::string::npos)
      throw ConfigError(where + ": expected key=value, got '" + t + "'");
    const std::string key = detail::trim(t.substr(0, eq));
    const std::string value = detail::trim(t.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": empty key");
    detail::set_config_key(cfg, key, value, where);
  }
  validate_config(cfg);
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("failed reading config file '" + path + "'");
  return parse_config_text(buf.str());
}

// Applies one `key=value` command-line override.
inline void apply_override(RunConfig& cfg, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ConfigError("--set expects key=value, got '" + assignment + "'");
  detail::set_config_key(cfg, detail::trim(assignment.substr(0, eq)),
                         detail::trim(assignment.substr(eq + 1)),
                         "--set '" + assignment + "'");
}

// Stream ids deriving every random object from the run seed:
//   0 problem and data generation, 1 initial point, 2 batch sampling.
inline constexpr std::uint64_t kStreamData = 0;
inline constexpr std::uint64_t kStreamInit = 1;
inline constexpr std::uint64_t kStreamBatch = 2;

inline std::unique_ptr<Problem> build_problem(const RunConfig& cfg) {
  validate_config(cfg);
  RngStream data_rng(cfg.seed, kStreamData);
  if (cfg.problem == "quadratic") {
    SpectrumKind kind;
    kind.shape = cfg.spectrum == "uniform"     ? SpectrumShape::kUniform
                 : cfg.spectrum == "structured" ? SpectrumShape::kStructured
                                                : SpectrumShape::kExponential;
    kind.eig_min = cfg.eig_min;
    kind.eig_max = cfg.eig_max;
    kind.n_large = cfg.n_large;
    QuadraticInit init;
    init.counterexample = cfg.init == "counterexample";
    init.init_scale = cfg.init_scale;
    init.counter_scale = cfg.counter_scale;
    return std::make_unique<QuadraticObjective>(
        make_quadratic(cfg.dim, kind, cfg.noise_scale, data_rng), init);
  }
  if (cfg.problem == "fourier") {
    return std::make_unique<LeastSquaresProblem>(
        make_fourier_toy(cfg.n_train, cfg.n_val, cfg.noise_std, data_rng,
                         cfg.n_test),
        "fourier");
  }
  if (cfg.problem == "wdbc") {
    {
      std::ifstream probe(cfg.data_path);
      if (!probe)
        throw IoError("cannot open data file '" + cfg.data_path + "'");
    }
    return std::make_unique<LogisticProblem>(
        load_wdbc(cfg.data_path, cfg.val_size, data_rng),
        /*expand_poly2=*/true, "wdbc");
  }
  // blobs_mlp
  std::vector<int> sizes;
  sizes.push_back(cfg.blob_dim);
  for (int h : cfg.hidden) sizes.push_back(h);
  sizes.push_back(cfg.classes);
  return std::make_unique<MlpProblem>(
      MlpArchitecture(std::move(sizes)),
      make_blobs(cfg.classes, cfg.blob_dim, cfg.n_train, cfg.n_val, cfg.n_test,
                 cfg.blob_noise, data_rng));
}

inline OptimizerConfig optimizer_config(const RunConfig& cfg) {
  OptimizerConfig o;
  o.kind = cfg.optimizer == "gd"        ? OptimizerKind::kGd
           : cfg.optimizer == "sgd"     ? OptimizerKind::kSgd
           : cfg.optimizer == "rmsprop" ? OptimizerKind::kRmsprop
           : cfg.optimizer == "masked_sgd_greedy"
               ? OptimizerKind::kMaskedSgdGreedy
               : OptimizerKind::kMaskedSgdNonGreedy;
  o.learning_rate = cfg.learning_rate;
  o.batch_size = cfg.batch_size;
  o.rmsprop_gamma = cfg.rmsprop_gamma;
  o.rmsprop_epsilon = cfg.rmsprop_epsilon;
  o.mask_beta = cfg.mask_beta;
  o.mask_threshold = cfg.mask_threshold;
  o.mask_f_warmup = cfg.mask_warmup;
  o.rmsprop_off_threshold = cfg.rmsprop_off_threshold;
  return o;
}

inline StopperConfig stopper_config(const RunConfig& cfg) {
  StopperConfig s;
  s.kind = cfg.stopper == "eb"           ? StopperKind::kEb
           : cfg.stopper == "validation" ? StopperKind::kValidation
                                         : StopperKind::kNone;
  s.eb_beta = cfg.eb_beta;
  s.eb_warmup = cfg.eb_warmup;
  s.eb_grouped = cfg.eb_grouped;
  s.eb_stop_at_boundary = cfg.eb_stop_at_boundary;
  s.patience = cfg.patience;
  s.eval_interval = cfg.eval_interval;
  return s;
}

// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

namespace detail {

struct CsvLayout {
  bool has_val = false;
  std::vector<std::string> crit_labels;  // empty: no criterion columns
  std::vector<std::string> mask_labels;  // empty: no mask columns
  bool has_rms = false;

  std::string header() const {
    std::string h = "step,train_loss,test_loss";
    if (has_val) h += ",val_loss";
    for (const auto& l : crit_labels) h += ",crit_" + l;
    if (!crit_labels.empty()) h += ",crit_smoothed";
    if (!mask_labels.empty()) {
      h += ",off_frac";
      for (const auto& l : mask_labels) h += ",off_" + l;
    }
    if (has_rms) h += ",off_frac";
    h += ",event";
    return h;
  }

  std::string row(const TrainRecord& r) const {
    std::string s = std::to_string(r.step);
    s += "," + format_double(r.train_loss);
    s += "," + format_double(r.test_loss);
    if (has_val) s += "," + format_double(r.val_loss);
    for (Eigen::Index i = 0; i < r.criterion_groups.size(); ++i)
      s += "," + format_double(r.criterion_groups[i]);
    if (!crit_labels.empty()) s += "," + format_double(r.criterion_smoothed);
    if (!mask_labels.empty()) {
      s += "," + format_double(r.off_fraction);
      for (Eigen::Index i = 0; i < r.off_fraction_groups.size(); ++i)
        s += "," + format_double(r.off_fraction_groups[i]);
    }
    if (has_rms) s += "," + format_double(r.off_fraction);
    s += "," + r.event;
    return s;
  }
};

inline CsvLayout csv_layout(const RunConfig& cfg, const Problem& problem) {
  CsvLayout layout;
  layout.has_val = problem.has_validation();
  if (cfg.stopper == "eb") {
    const Partition p = cfg.eb_grouped ? problem.parameter_groups()
                                       : Partition::single(problem.dim());
    for (int i = 0; i < p.group_count(); ++i)
      layout.crit_labels.push_back(p.label(i));
  }
  if (cfg.optimizer == "masked_sgd_greedy" ||
      cfg.optimizer == "masked_sgd_nongreedy") {
    const Partition p = problem.parameter_groups();
    for (int i = 0; i < p.group_count(); ++i)
      layout.mask_labels.push_back(p.label(i));
  }
  layout.has_rms = cfg.optimizer == "rmsprop";
  return layout;
}

}  // namespace detail

struct RunOutput {
  RunSummary summary;
  std::string log_path;  // empty when no file was written
};

// Builds the configured problem, trains it, and (when `out` is set) streams
// one CSV row per logged record. Identical config and seed produce a
// byte-identical file: all values are written with round-trip formatting and
// nothing time- or platform-dependent is serialized.
inline RunOutput run(const RunConfig& cfg) {
  validate_config(cfg);
  const std::unique_ptr<Problem> problem = build_problem(cfg);
  RngStream init_rng(cfg.seed, kStreamInit);
  const Eigen::VectorXd w0 = problem->initial_point(init_rng);

  std::ofstream file;
  const detail::CsvLayout layout = detail::csv_layout(cfg, *problem);
  RecordSink sink;
  if (!cfg.out.empty()) {
    file.open(cfg.out, std::ios::out | std::ios::trunc);
    if (!file) throw IoError("cannot open log file '" + cfg.out + "'");
    file << layout.header() << "\n";
    sink = [&file, &layout](const TrainRecord& rec) {
      file << layout.row(rec) << "\n";
    };
  }

  TrainOptions options;
  options.max_steps = cfg.max_steps;
  options.log_interval = cfg.log_interval;
  RunSummary summary =
      train_loop(*problem, optimizer_config(cfg), stopper_config(cfg), options,
                 w0, RngStream(cfg.seed, kStreamBatch), sink);

  if (!cfg.out.empty()) {
    file.flush();
    if (!file) throw IoError("failed writing log file '" + cfg.out + "'");
  }
  return RunOutput{std::move(summary), cfg.out};
}

inline void write_summary(std::ostream& os, const RunConfig& cfg,
                          const RunSummary& s) {
  os << "problem=" << cfg.problem << " optimizer=" << cfg.optimizer
     << " stopper=" << cfg.stopper << " seed=" << cfg.seed << "\n";
  os << "stop_step=" << s.stop_step << " reason=" << to_string(s.reason)
     << "\n";
  os << "train_loss=" << format_double(s.train_loss_at_stop)
     << " test_loss=" << format_double(s.test_loss_at_stop);
  if (cfg.stopper == "eb")
    os << " criterion=" << format_double(s.criterion_at_stop);
  os << "\n";
  os << "hindsight_best_step=" << s.hindsight_best_step
     << " hindsight_best_test_loss=" << format_double(s.hindsight_best_test_loss)
     << "\n";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "wall_seconds=%.3f", s.wall_seconds);
  os << buf << "\n";
  if (!cfg.out.empty()) os << "log=" << cfg.out << "\n";
}

// Key describing the optimization problem instance a config generates. Two
// configs may only be compared when these match. The validation split size
// of the wdbc problem is excluded on purpose: its splits nest, so runs
// holding out different validation pools still share the test set.
inline std::string problem_identity(const RunConfig& cfg) {
  std::string id = cfg.problem + "|seed=" + std::to_string(cfg.seed);
  if (cfg.problem == "quadratic") {
    id += "|dim=" + std::to_string(cfg.dim) + "|spectrum=" + cfg.spectrum +
          "|eig=" + format_double(cfg.eig_min) + ":" +
          format_double(cfg.eig_max) + "|n_large=" + std::to_string(cfg.n_large) +
          "|noise=" + format_double(cfg.noise_scale) + "|init=" + cfg.init +
          "|init_scale=" + format_double(cfg.init_scale) +
          "|counter=" + format_double(cfg.counter_scale);
  } else if (cfg.problem == "fourier") {
    id += "|n=" + std::to_string(cfg.n_train) + ":" + std::to_string(cfg.n_val) +
          ":" + std::to_string(cfg.n_test) +
          "|noise=" + format_double(cfg.noise_std);
  } else if (cfg.problem == "wdbc") {
    id += "|data=" + cfg.data_path;
  } else {
    id += "|classes=" + std::to_string(cfg.classes) +
          "|blob_dim=" + std::to_string(cfg.blob_dim) +
          "|blob_noise=" + format_double(cfg.blob_noise) +
          "|n=" + std::to_string(cfg.n_train) + ":" + std::to_string(cfg.n_val) +
          ":" + std::to_string(cfg.n_test) + "|hidden=";
    for (int h : cfg.hidden) id += std::to_string(h) + ",";
  }
  return id;
}

struct CompareRow {
  std::string label;
  std::string stopper;
  long stop_step = 0;
  double test_at_stop = 0.0;
  long hindsight_best_step = 0;
  double hindsight_best_test = 0.0;
  double regret = 0.0;  // test_at_stop - hindsight_best_test, >= 0
};

// Runs each labeled config on the shared problem and tabulates how its
// stopping choice compares with hindsight. All configs must describe the
// same problem instance (see problem_identity); a single config is allowed
// and yields a one-row table.
inline std::vector<CompareRow> compare(
    const std::vector<std::pair<std::string, RunConfig>>& runs) {
  if (runs.empty()) throw ConfigError("compare: need at least one config");
  const std::string identity = problem_identity(runs.front().second);
  for (const auto& [label, cfg] : runs) {
    if (problem_identity(cfg) != identity)
      throw ConfigError("compare: config '" + label +
                        "' describes a different problem or seed (" +
                        problem_identity(cfg) + " vs " + identity + ")");
  }
  std::vector<CompareRow> rows;
  for (const auto& [label, cfg] : runs) {
    const RunOutput out = run(cfg);
    CompareRow row;
    row.label = label;
    row.stopper = cfg.stopper;
    row.stop_step = out.summary.stop_step;
    row.test_at_stop = out.summary.test_loss_at_stop;
    row.hindsight_best_step = out.summary.hindsight_best_step;
    row.hindsight_best_test = out.summary.hindsight_best_test_loss;
    row.regret = row.test_at_stop - row.hindsight_best_test;
    rows.push_back(std::move(row));
  }
  return rows;
}

inline void print_compare_table(std::ostream& os,
                                const std::vector<CompareRow>& rows) {
  char line[256];
  std::snprintf(line, sizeof(line), "%-24s %-12s %10s %14s %10s %14s %12s",
                "config", "stopper", "stop_step", "test_at_stop", "best_step",
                "best_test", "regret");
  os << line << "\n";
  for (const auto& r : rows) {
    std::snprintf(line, sizeof(line), "%-24s %-12s %10ld %14.6g %10ld %14.6g %12.4g",
                  r.label.c_str(), r.stopper.c_str(), r.stop_step,
                  r.test_at_stop, r.hindsight_best_step, r.hindsight_best_test,
                  r.regret);
    os << line << "\n";
  }
}

// ---------------------------------------------------------------------------
// Finite-difference gradient checks
// ---------------------------------------------------------------------------

struct GradCheckResult {
  std::string name;
  double max_rel_err = 0.0;
  bool pass = false;
};

namespace detail {

inline double grad_rel_err(const Eigen::VectorXd& analytic,
                           const Eigen::VectorXd& fd) {
  return (analytic - fd).norm() / std::max(fd.norm(), 1e-10);
}

// Mean training gradient via the per-sample interface.
inline Eigen::VectorXd mean_train_gradient(const Problem& p,
                                           const Eigen::VectorXd& w) {
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(p.dim());
  Eigen::VectorXd g(p.dim());
  for (int i = 0; i < p.train_size(); ++i) {
    p.sample_loss_grad(w, i, g);
    acc += g;
  }
  return acc / static_cast<double>(p.train_size());
}

inline GradCheckResult check_problem_gradient(const std::string& name,
                                              const Problem& p,
                                              double point_scale,
                                              RngStream& rng,
                                              int points = 10,
                                              double tolerance = 1e-5) {
  GradCheckResult res;
  res.name = name;
  const auto loss = [&p](const Eigen::VectorXd& w) { return p.train_loss(w); };
  for (int i = 0; i < points; ++i) {
    const Eigen::VectorXd w =
        gaussian_vector(p.dim(), 0.0, point_scale, rng);
    const Eigen::VectorXd analytic = p.analytic_noise()
                                         ? p.full_gradient(w)
                                         : mean_train_gradient(p, w);
    const Eigen::VectorXd fd = finite_diff_gradient(loss, w, 1e-6);
    res.max_rel_err = std::max(res.max_rel_err, grad_rel_err(analytic, fd));
  }
  res.pass = res.max_rel_err <= tolerance;
  return res;
}

}  // namespace detail

// Checks every analytic gradient in the library against central finite
// differences at randomized points. Deterministic for a fixed seed.
inline std::vector<GradCheckResult> gradient_check_suite(std::uint64_t seed) {
  std::vector<GradCheckResult> results;
  RngStream rng(seed, 0);

  {
    SpectrumKind kind;
    kind.shape = SpectrumShape::kUniform;
    kind.eig_min = 0.5;
    kind.eig_max = 5.0;
    QuadraticObjective quad(make_quadratic(12, kind, 2.0, rng));
    results.push_back(
        detail::check_problem_gradient("quadratic", quad, 1.0, rng));
  }
  {
    LeastSquaresProblem fourier(make_fourier_toy(16, 0, 0.3, rng, 8),
                                "fourier");
    results.push_back(
        detail::check_problem_gradient("fourier_least_squares", fourier, 0.5,
                                       rng));
  }
  {
    const int n = 24, d = 10;
    SupervisedDataset data;
    data.features.resize(n, d);
    data.targets.resize(n);
    for (int i = 0; i < n; ++i) {
      for (int c = 0; c < d; ++c) data.features(i, c) = rng.next_gaussian();
      data.targets[i] = rng.next_unit() < 0.5 ? 0.0 : 1.0;
    }
    for (int i = 0; i < 16; ++i) data.train_idx.push_back(i);
    for (int i = 16; i < n; ++i) data.test_idx.push_back(i);
    LogisticProblem logistic(data, /*expand_poly2=*/false);
    results.push_back(
        detail::check_problem_gradient("logistic", logistic, 0.5, rng));
    LogisticProblem expanded(std::move(data), /*expand_poly2=*/true,
                             "logistic_poly2");
    results.push_back(
        detail::check_problem_gradient("logistic_poly2", expanded, 0.3, rng));
  }
  {
    const MlpArchitecture arch({8, 16, 8, 3});
    GradCheckResult res;
    res.name = "mlp_per_sample";
    for (int i = 0; i < 10; ++i) {
      const Eigen::VectorXd params =
          gaussian_vector(arch.param_count(), 0.0, 0.5, rng);
      const Eigen::VectorXd x = gaussian_vector(arch.inputs(), 0.0, 1.0, rng);
      const int label = static_cast<int>(rng.next_below(
          static_cast<std::uint64_t>(arch.outputs())));
      const auto [loss, analytic] = mlp_forward_backward(arch, params, x, label);
      (void)loss;
      const Eigen::VectorXd fd = finite_diff_gradient(
          [&](const Eigen::VectorXd& p) {
            return mlp_loss_grad(arch, p, x, label, nullptr);
          },
          params, 1e-6);
      res.max_rel_err =
          std::max(res.max_rel_err, detail::grad_rel_err(analytic, fd));
    }
    res.pass = res.max_rel_err <= 1e-5;
    results.push_back(std::move(res));
  }
  {
    MlpProblem mlp(MlpArchitecture({2, 6, 3}),
                   make_blobs(3, 2, 24, 0, 6, 1.0, rng));
    results.push_back(
        detail::check_problem_gradient("mlp_train_loss", mlp, 0.5, rng));
  }
  return results;
}

}  // namespace ebs
