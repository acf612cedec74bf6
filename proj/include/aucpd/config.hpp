#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "aucpd/errors.hpp"

namespace aucpd {

// Experiment configuration: flat tables in a TOML-style text file, overridden
// by command-line `section.key=value` pairs. Unknown keys are rejected.
struct ExperimentConfig {
  // [data]
  std::string data_source = "synthetic";  // synthetic | libsvm | csv
  std::string data_path;
  std::string data_test_path;
  std::int64_t label_column = 0;
  double train_frac = 0.8;  // file sources without a test file
  std::int64_t n_train = 4000;
  std::int64_t n_test = 2000;
  std::int64_t dim = 20;
  double p = 0.5;
  double scale = 1.0;
  double separation = 2.0;
  double drop_frac = 0.0;

  // [model]
  std::string model_kind = "linear_sigmoid";
  std::int64_t hidden = 16;
  double c1 = 1.0;
  double c2 = 0.01;

  // [optimizer]
  std::string optimizer = "ppd_sg";
  std::vector<std::string> optimizers;  // race contenders
  std::string mode = "practical";
  std::string prior = "known";  // known | streaming
  double eta0 = 0.1;
  double gamma = 10.0;
  double mu = 0.0;
  double L = 0.0;
  double L_tilde = 0.0;
  double G = 0.0;
  double sigma2 = 0.0;
  double delta = 0.0;
  double R1 = 100.0;
  double R2 = 2.0;
  std::int64_t T0 = 200;
  std::int64_t m0 = 32;
  std::int64_t K = 5;
  std::int64_t batch = 1;
  std::int64_t total_steps = 10000;
  std::int64_t adagrad_T_max = 1000000;
  std::vector<std::int64_t> decay_steps;

  // [run]
  std::uint64_t seed = 0;
  std::int64_t eval_every = 200;
  std::string out_dir = "out";
  double target_auc = 0.0;  // race target; 0 disables
  std::string timing = "logical";  // logical | wall

  // [plcheck]
  std::int64_t pl_dim = 3;
  std::int64_t pl_n = 2000;
  std::int64_t pl_probes = 500;
  std::int64_t pl_restarts = 20;
  double pl_c1 = 1.0;
  double pl_c2 = 0.1;
  double pl_radius = 10.0;
  double pl_safety = 0.9;
  double pl_tol = 1e-6;
};

namespace config_detail {

struct RawValue {
  std::string text;
  std::size_t line = 0;
};

inline std::string trim(std::string_view s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline double to_double(const RawValue& v, const std::string& key) {
  double d = 0.0;
  const std::string t = trim(v.text);
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), d);
  if (ec != std::errc{} || p != t.data() + t.size())
    throw ConfigError("config key " + key + ": expected a number, got '" + t + "'");
  return d;
}

inline std::int64_t to_int(const RawValue& v, const std::string& key) {
  std::int64_t i = 0;
  const std::string t = trim(v.text);
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), i);
  if (ec != std::errc{} || p != t.data() + t.size())
    throw ConfigError("config key " + key + ": expected an integer, got '" + t + "'");
  return i;
}

inline std::uint64_t to_uint(const RawValue& v, const std::string& key) {
  std::uint64_t i = 0;
  const std::string t = trim(v.text);
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), i);
  if (ec != std::errc{} || p != t.data() + t.size())
    throw ConfigError("config key " + key + ": expected an unsigned integer, got '" + t + "'");
  return i;
}

inline std::string to_str(const RawValue& v, const std::string& key) {
  std::string t = trim(v.text);
  if (t.size() >= 2 && t.front() == '"' && t.back() == '"') return t.substr(1, t.size() - 2);
  if (t.find(' ') != std::string::npos)
    throw ConfigError("config key " + key + ": unquoted string with spaces");
  return t;
}

inline std::vector<std::string> to_list(const RawValue& v, const std::string& key) {
  std::string t = trim(v.text);
  if (t.size() < 2 || t.front() != '[' || t.back() != ']')
    throw ConfigError("config key " + key + ": expected a [list]");
  t = t.substr(1, t.size() - 2);
  std::vector<std::string> items;
  std::string cur;
  for (char c : t) {
    if (c == ',') {
      items.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  const std::string last = trim(cur);
  if (!last.empty()) items.push_back(last);
  return items;
}

inline std::vector<std::int64_t> to_int_list(const RawValue& v, const std::string& key) {
  std::vector<std::int64_t> out;
  for (const auto& item : to_list(v, key)) out.push_back(to_int(RawValue{item, v.line}, key));
  return out;
}

inline std::vector<std::string> to_str_list(const RawValue& v, const std::string& key) {
  std::vector<std::string> out;
  for (const auto& item : to_list(v, key)) out.push_back(to_str(RawValue{item, v.line}, key));
  return out;
}

// Applies one dotted key; throws ConfigError naming the key when unknown.
inline void apply_key(ExperimentConfig& c, const std::string& key, const RawValue& v) {
  if (key == "data.source") c.data_source = to_str(v, key);
  else if (key == "data.path") c.data_path = to_str(v, key);
  else if (key == "data.test_path") c.data_test_path = to_str(v, key);
  else if (key == "data.label_column") c.label_column = to_int(v, key);
  else if (key == "data.train_frac") c.train_frac = to_double(v, key);
  else if (key == "data.n_train") c.n_train = to_int(v, key);
  else if (key == "data.n_test") c.n_test = to_int(v, key);
  else if (key == "data.dim") c.dim = to_int(v, key);
  else if (key == "data.p") c.p = to_double(v, key);
  else if (key == "data.scale") c.scale = to_double(v, key);
  else if (key == "data.separation") c.separation = to_double(v, key);
  else if (key == "data.drop_frac") c.drop_frac = to_double(v, key);
  else if (key == "model.kind") c.model_kind = to_str(v, key);
  else if (key == "model.hidden") c.hidden = to_int(v, key);
  else if (key == "model.c1") c.c1 = to_double(v, key);
  else if (key == "model.c2") c.c2 = to_double(v, key);
  else if (key == "optimizer.name") c.optimizer = to_str(v, key);
  else if (key == "optimizer.names") c.optimizers = to_str_list(v, key);
  else if (key == "optimizer.mode") c.mode = to_str(v, key);
  else if (key == "optimizer.prior") c.prior = to_str(v, key);
  else if (key == "optimizer.eta0") c.eta0 = to_double(v, key);
  else if (key == "optimizer.gamma") c.gamma = to_double(v, key);
  else if (key == "optimizer.mu") c.mu = to_double(v, key);
  else if (key == "optimizer.L") c.L = to_double(v, key);
  else if (key == "optimizer.L_tilde") c.L_tilde = to_double(v, key);
  else if (key == "optimizer.G") c.G = to_double(v, key);
  else if (key == "optimizer.sigma2") c.sigma2 = to_double(v, key);
  else if (key == "optimizer.delta") c.delta = to_double(v, key);
  else if (key == "optimizer.R1") c.R1 = to_double(v, key);
  else if (key == "optimizer.R2") c.R2 = to_double(v, key);
  else if (key == "optimizer.T0") c.T0 = to_int(v, key);
  else if (key == "optimizer.m0") c.m0 = to_int(v, key);
  else if (key == "optimizer.K") c.K = to_int(v, key);
  else if (key == "optimizer.batch") c.batch = to_int(v, key);
  else if (key == "optimizer.total_steps") c.total_steps = to_int(v, key);
  else if (key == "optimizer.adagrad_T_max") c.adagrad_T_max = to_int(v, key);
  else if (key == "optimizer.decay_steps") c.decay_steps = to_int_list(v, key);
  else if (key == "run.seed") c.seed = to_uint(v, key);
  else if (key == "run.eval_every") c.eval_every = to_int(v, key);
  else if (key == "run.out") c.out_dir = to_str(v, key);
  else if (key == "run.target_auc") c.target_auc = to_double(v, key);
  else if (key == "run.timing") c.timing = to_str(v, key);
  else if (key == "plcheck.dim") c.pl_dim = to_int(v, key);
  else if (key == "plcheck.n") c.pl_n = to_int(v, key);
  else if (key == "plcheck.probes") c.pl_probes = to_int(v, key);
  else if (key == "plcheck.restarts") c.pl_restarts = to_int(v, key);
  else if (key == "plcheck.c1") c.pl_c1 = to_double(v, key);
  else if (key == "plcheck.c2") c.pl_c2 = to_double(v, key);
  else if (key == "plcheck.radius") c.pl_radius = to_double(v, key);
  else if (key == "plcheck.safety") c.pl_safety = to_double(v, key);
  else if (key == "plcheck.tol") c.pl_tol = to_double(v, key);
  else throw ConfigError("unknown config key '" + key + "'");
}

}  // namespace config_detail

inline void apply_override(ExperimentConfig& c, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ConfigError("override must look like section.key=value, got '" + assignment + "'");
  const std::string key = config_detail::trim(assignment.substr(0, eq));
  config_detail::apply_key(c, key, {assignment.substr(eq + 1), 0});
}

inline ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line, section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const std::string t = config_detail::trim(line);
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw ParseError("unterminated section header", line_no);
      section = config_detail::trim(t.substr(1, t.size() - 2));
      if (section.empty()) throw ParseError("empty section name", line_no);
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ParseError("expected key = value", line_no);
    const std::string key = config_detail::trim(t.substr(0, eq));
    if (key.empty()) throw ParseError("empty key", line_no);
    const std::string dotted = section.empty() ? key : section + "." + key;
    config_detail::apply_key(cfg, dotted, {t.substr(eq + 1), line_no});
  }
  return cfg;
}

inline ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

inline void validate_config(const ExperimentConfig& c) {
  const auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  require(c.data_source == "synthetic" || c.data_source == "libsvm" || c.data_source == "csv",
          "data.source must be synthetic|libsvm|csv");
  if (c.data_source != "synthetic") require(!c.data_path.empty(), "data.path is required");
  require(c.p > 0.0 && c.p < 1.0, "data.p must lie in (0,1)");
  require(c.scale > 0.0, "data.scale must be positive");
  require(c.drop_frac >= 0.0 && c.drop_frac < 1.0, "data.drop_frac must lie in [0,1)");
  require(c.dim > 0, "data.dim must be positive");
  require(c.train_frac > 0.0 && c.train_frac < 1.0, "data.train_frac must lie in (0,1)");
  require(c.model_kind == "linear_sigmoid" || c.model_kind == "mlp_sigmoid" ||
              c.model_kind == "leaky_relu_raw",
          "model.kind must be linear_sigmoid|mlp_sigmoid|leaky_relu_raw");
  require(c.hidden > 0, "model.hidden must be positive");
  require(c.mode == "practical" || c.mode == "theoretical",
          "optimizer.mode must be practical|theoretical");
  require(c.prior == "known" || c.prior == "streaming",
          "optimizer.prior must be known|streaming");
  require(c.eta0 > 0.0, "optimizer.eta0 must be positive");
  require(c.T0 >= 1, "optimizer.T0 must be >= 1");
  require(c.m0 >= 1, "optimizer.m0 must be >= 1");
  require(c.K >= 1, "optimizer.K must be >= 1");
  require(c.batch >= 1, "optimizer.batch must be >= 1");
  require(c.total_steps >= 1, "optimizer.total_steps must be >= 1");
  require(c.eval_every >= 0, "run.eval_every must be >= 0");
  require(c.timing == "logical" || c.timing == "wall", "run.timing must be logical|wall");
  require(c.target_auc >= 0.0 && c.target_auc <= 1.0, "run.target_auc must lie in [0,1]");
}

// Canonical text form: fixed section order, sorted keys, shortest-round-trip
// floats. parse(normalize(c)) reproduces c and normalize is idempotent, which
// is what makes the summary's config echo byte-comparable.
inline std::string normalize_config(const ExperimentConfig& c) {
  char buf[64];
  const auto num = [&](double v) {
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, p);
  };
  const auto quote = [](const std::string& s) { return '"' + s + '"'; };
  std::ostringstream out;
  out << "[data]\n";
  out << "dim = " << c.dim << "\n";
  out << "drop_frac = " << num(c.drop_frac) << "\n";
  out << "label_column = " << c.label_column << "\n";
  out << "n_test = " << c.n_test << "\n";
  out << "n_train = " << c.n_train << "\n";
  out << "p = " << num(c.p) << "\n";
  out << "path = " << quote(c.data_path) << "\n";
  out << "scale = " << num(c.scale) << "\n";
  out << "separation = " << num(c.separation) << "\n";
  out << "source = " << quote(c.data_source) << "\n";
  out << "test_path = " << quote(c.data_test_path) << "\n";
  out << "train_frac = " << num(c.train_frac) << "\n";
  out << "\n[model]\n";
  out << "c1 = " << num(c.c1) << "\n";
  out << "c2 = " << num(c.c2) << "\n";
  out << "hidden = " << c.hidden << "\n";
  out << "kind = " << quote(c.model_kind) << "\n";
  out << "\n[optimizer]\n";
  out << "G = " << num(c.G) << "\n";
  out << "K = " << c.K << "\n";
  out << "L = " << num(c.L) << "\n";
  out << "L_tilde = " << num(c.L_tilde) << "\n";
  out << "R1 = " << num(c.R1) << "\n";
  out << "R2 = " << num(c.R2) << "\n";
  out << "T0 = " << c.T0 << "\n";
  out << "adagrad_T_max = " << c.adagrad_T_max << "\n";
  out << "batch = " << c.batch << "\n";
  out << "decay_steps = [";
  for (std::size_t i = 0; i < c.decay_steps.size(); ++i)
    out << (i ? ", " : "") << c.decay_steps[i];
  out << "]\n";
  out << "delta = " << num(c.delta) << "\n";
  out << "eta0 = " << num(c.eta0) << "\n";
  out << "gamma = " << num(c.gamma) << "\n";
  out << "m0 = " << c.m0 << "\n";
  out << "mode = " << quote(c.mode) << "\n";
  out << "mu = " << num(c.mu) << "\n";
  out << "name = " << quote(c.optimizer) << "\n";
  out << "names = [";
  for (std::size_t i = 0; i < c.optimizers.size(); ++i)
    out << (i ? ", " : "") << quote(c.optimizers[i]);
  out << "]\n";
  out << "prior = " << quote(c.prior) << "\n";
  out << "sigma2 = " << num(c.sigma2) << "\n";
  out << "total_steps = " << c.total_steps << "\n";
  out << "\n[run]\n";
  out << "eval_every = " << c.eval_every << "\n";
  out << "out = " << quote(c.out_dir) << "\n";
  out << "seed = " << c.seed << "\n";
  out << "target_auc = " << num(c.target_auc) << "\n";
  out << "timing = " << quote(c.timing) << "\n";
  out << "\n[plcheck]\n";
  out << "c1 = " << num(c.pl_c1) << "\n";
  out << "c2 = " << num(c.pl_c2) << "\n";
  out << "dim = " << c.pl_dim << "\n";
  out << "n = " << c.pl_n << "\n";
  out << "probes = " << c.pl_probes << "\n";
  out << "radius = " << num(c.pl_radius) << "\n";
  out << "restarts = " << c.pl_restarts << "\n";
  out << "safety = " << num(c.pl_safety) << "\n";
  out << "tol = " << num(c.pl_tol) << "\n";
  return out.str();
}

}  // namespace aucpd
