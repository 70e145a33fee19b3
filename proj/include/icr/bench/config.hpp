#pragma once

// Declarative experiment description. A config file is plain `key = value`
// text; `#` starts a comment and lists are comma separated:
//
//   kind    = synth-large
//   p = 512
//   q = 128
//   s = 30
//   methods = ICR, ElasticNet
//
// Flags given on the command line are applied on top of the file.

#include "icr/oracle.hpp"
#include "icr/refinement.hpp"
#include "icr/synth.hpp"

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace icr::bench {

enum class ExperimentKind { SynthGlobal, SynthLarge, SparsitySweep, Mnist };
enum class Method { ICR, ICR_NN, ElasticNet, Oracle };

inline const char* to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::SynthGlobal: return "synth-global";
    case ExperimentKind::SynthLarge: return "synth-large";
    case ExperimentKind::SparsitySweep: return "sweep";
    case ExperimentKind::Mnist: return "mnist";
  }
  return "?";
}

inline const char* to_string(Method m) {
  switch (m) {
    case Method::ICR: return "ICR";
    case Method::ICR_NN: return "ICR-NN";
    case Method::ElasticNet: return "ElasticNet";
    case Method::Oracle: return "Oracle";
  }
  return "?";
}

inline ExperimentKind parse_kind(const std::string& s) {
  for (auto k : {ExperimentKind::SynthGlobal, ExperimentKind::SynthLarge, ExperimentKind::SparsitySweep, ExperimentKind::Mnist})
    if (s == to_string(k)) return k;
  throw Error(ErrorCode::ConfigError, "unknown experiment kind '" + s + "'");
}

inline Method parse_method(const std::string& s) {
  for (auto m : {Method::ICR, Method::ICR_NN, Method::ElasticNet, Method::Oracle})
    if (s == to_string(m)) return m;
  throw Error(ErrorCode::ConfigError, "unknown method '" + s + "'");
}

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::SynthLarge;
  Index p = 512;
  Index q = 128;
  Index s = 30;
  std::vector<Index> sweep_s{5, 15, 30, 50, 70};
  double sigma = 0.01;
  double lambda = PriorHyper{}.lambda;
  /// Unset for mnist means: empirical active-pixel fraction of the image set.
  std::optional<double> kappa = PriorHyper{}.kappa;
  int trials = 100;
  std::uint64_t master_seed = 1;
  std::vector<Method> methods{Method::ICR, Method::ElasticNet};
  double tau = 1e-6;

  double icr_tol = 1e-6;
  int max_outer_iters = 500;
  double inner_tol = 1e-8;
  int max_inner_iters = 10'000;
  std::int64_t enumeration_budget = std::int64_t{1} << 20;

  bool nonneg_signal = false;
  /// Record ICR traces and run the convergence diagnostics on every trial.
  bool diagnostics = false;

  std::string mnist_path;
  /// Number of images taken from the file; 0 means all.
  int images = 0;

  // Execution settings; not part of the echoed configuration.
  std::string out;
  int jobs = 1;
  bool timing = false;

  IcrOptions icr_options(Variant v) const {
    IcrOptions o;
    o.variant = v;
    o.tol = icr_tol;
    o.max_outer_iters = max_outer_iters;
    o.inner.tol = inner_tol;
    o.inner.max_iters = max_inner_iters;
    o.record_trace = diagnostics;
    return o;
  }

  InnerOptions inner_options() const { return {inner_tol, max_inner_iters}; }

  bool has(Method m) const { return std::find(methods.begin(), methods.end(), m) != methods.end(); }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
  std::istringstream in(v);
  T out{};
  in >> out;
  if (in.fail() || !(in >> std::ws).eof()) throw Error(ErrorCode::ConfigError, key + ": cannot parse '" + v + "'");
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error(ErrorCode::ConfigError, key + ": expected a boolean, got '" + v + "'");
}

}  // namespace detail

/// Applies one `key = value` setting. Unknown keys are a ConfigError.
inline void apply_setting(ExperimentConfig& c, const std::string& key, const std::string& raw) {
  using detail::parse_number;
  const std::string v = detail::trim(raw);
  if (key == "kind") c.kind = parse_kind(v);
  else if (key == "p") c.p = parse_number<Index>(key, v);
  else if (key == "q") c.q = parse_number<Index>(key, v);
  else if (key == "s") c.s = parse_number<Index>(key, v);
  else if (key == "sweep_s") {
    c.sweep_s.clear();
    for (const auto& item : detail::split_list(v)) c.sweep_s.push_back(parse_number<Index>(key, item));
  } else if (key == "sigma") c.sigma = parse_number<double>(key, v);
  else if (key == "lambda") c.lambda = parse_number<double>(key, v);
  else if (key == "kappa") {
    if (v == "auto") c.kappa.reset();
    else c.kappa = parse_number<double>(key, v);
  } else if (key == "trials") c.trials = parse_number<int>(key, v);
  else if (key == "seed") c.master_seed = parse_number<std::uint64_t>(key, v);
  else if (key == "methods") {
    c.methods.clear();
    for (const auto& item : detail::split_list(v)) c.methods.push_back(parse_method(item));
  } else if (key == "tau") c.tau = parse_number<double>(key, v);
  else if (key == "icr_tol") c.icr_tol = parse_number<double>(key, v);
  else if (key == "max_outer_iters") c.max_outer_iters = parse_number<int>(key, v);
  else if (key == "inner_tol") c.inner_tol = parse_number<double>(key, v);
  else if (key == "max_inner_iters") c.max_inner_iters = parse_number<int>(key, v);
  else if (key == "enumeration_budget") c.enumeration_budget = parse_number<std::int64_t>(key, v);
  else if (key == "nonneg_signal") c.nonneg_signal = detail::parse_bool(key, v);
  else if (key == "diagnostics") c.diagnostics = detail::parse_bool(key, v);
  else if (key == "mnist_path") c.mnist_path = v;
  else if (key == "images") c.images = parse_number<int>(key, v);
  else if (key == "out") c.out = v;
  else if (key == "jobs") c.jobs = parse_number<int>(key, v);
  else if (key == "timing") c.timing = detail::parse_bool(key, v);
  else throw Error(ErrorCode::ConfigError, "unknown config key '" + key + "'");
}

inline void apply_config_text(ExperimentConfig& c, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::ConfigError, "line " + std::to_string(lineno) + ": expected key = value");
    apply_setting(c, detail::trim(line.substr(0, eq)), line.substr(eq + 1));
  }
}

inline void apply_config_file(ExperimentConfig& c, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  apply_config_text(c, ss.str());
}

/// Throws ConfigError on any inconsistency, including an oracle request that
/// would exceed the enumeration budget.
inline void validate(const ExperimentConfig& c) {
  auto check = [](bool ok, const std::string& what) {
    if (!ok) throw Error(ErrorCode::ConfigError, what);
  };
  check(c.trials >= 1, "trials must be >= 1");
  check(c.jobs >= 1, "jobs must be >= 1");
  check(c.sigma >= 0 && std::isfinite(c.sigma), "sigma must be finite and >= 0");
  check(c.lambda >= 0 && std::isfinite(c.lambda), "lambda must be finite and >= 0");
  check(!c.kappa || (*c.kappa > 0 && *c.kappa < 1), "kappa must lie in (0,1)");
  check(c.kappa || c.kind == ExperimentKind::Mnist, "kappa = auto is only meaningful for mnist");
  check(c.tau > 0, "tau must be positive");
  check(c.icr_tol > 0 && c.inner_tol > 0, "tolerances must be positive");
  check(c.max_outer_iters >= 1 && c.max_inner_iters >= 1, "iteration limits must be >= 1");
  check(!c.methods.empty(), "at least one method is required");

  if (c.kind == ExperimentKind::Mnist) {
    check(!c.mnist_path.empty(), "mnist needs mnist_path");
    check(!c.has(Method::Oracle), "Oracle is not available for mnist");
    check(c.q >= 1, "q must be >= 1");
    check(c.images >= 0, "images must be >= 0");
    return;
  }

  check(c.p >= 1 && c.q >= 1, "p and q must be >= 1");
  if (c.kind == ExperimentKind::SparsitySweep) {
    check(!c.sweep_s.empty(), "sweep_s must not be empty");
    for (Index s : c.sweep_s) check(s >= 0 && s <= c.p, "sweep sparsity out of range [0, p]");
  } else {
    check(c.s >= 0 && c.s <= c.p, "s must lie in [0, p]");
  }
  const bool needs_oracle = c.kind == ExperimentKind::SynthGlobal || c.has(Method::Oracle);
  if (needs_oracle) {
    const std::int64_t need = count_supports(c.p, c.p);
    check(need <= c.enumeration_budget, "global enumeration needs " + std::to_string(need) +
                                            " supports, budget is " + std::to_string(c.enumeration_budget));
  }
}

/// Every setting that influences results. Execution settings (out, jobs,
/// timing) are left out so the echo is identical across --jobs values.
inline nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["kind"] = to_string(c.kind);
  j["p"] = c.p;
  j["q"] = c.q;
  j["s"] = c.s;
  j["sweep_s"] = c.sweep_s;
  j["sigma"] = c.sigma;
  j["lambda"] = c.lambda;
  j["kappa"] = c.kappa ? nlohmann::json(*c.kappa) : nlohmann::json("auto");
  j["trials"] = c.trials;
  j["seed"] = c.master_seed;
  std::vector<std::string> methods;
  for (Method m : c.methods) methods.emplace_back(to_string(m));
  j["methods"] = methods;
  j["tau"] = c.tau;
  j["icr_tol"] = c.icr_tol;
  j["max_outer_iters"] = c.max_outer_iters;
  j["inner_tol"] = c.inner_tol;
  j["max_inner_iters"] = c.max_inner_iters;
  j["enumeration_budget"] = c.enumeration_budget;
  j["nonneg_signal"] = c.nonneg_signal;
  j["diagnostics"] = c.diagnostics;
  j["mnist_path"] = c.mnist_path;
  j["images"] = c.images;
  return j;
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  try {
    c.kind = parse_kind(j.at("kind").get<std::string>());
    c.p = j.at("p").get<Index>();
    c.q = j.at("q").get<Index>();
    c.s = j.at("s").get<Index>();
    c.sweep_s = j.at("sweep_s").get<std::vector<Index>>();
    c.sigma = j.at("sigma").get<double>();
    c.lambda = j.at("lambda").get<double>();
    if (j.at("kappa").is_string()) c.kappa.reset();
    else c.kappa = j.at("kappa").get<double>();
    c.trials = j.at("trials").get<int>();
    c.master_seed = j.at("seed").get<std::uint64_t>();
    c.methods.clear();
    for (const auto& m : j.at("methods")) c.methods.push_back(parse_method(m.get<std::string>()));
    c.tau = j.at("tau").get<double>();
    c.icr_tol = j.at("icr_tol").get<double>();
    c.max_outer_iters = j.at("max_outer_iters").get<int>();
    c.inner_tol = j.at("inner_tol").get<double>();
    c.max_inner_iters = j.at("max_inner_iters").get<int>();
    c.enumeration_budget = j.at("enumeration_budget").get<std::int64_t>();
    c.nonneg_signal = j.at("nonneg_signal").get<bool>();
    c.diagnostics = j.at("diagnostics").get<bool>();
    c.mnist_path = j.at("mnist_path").get<std::string>();
    c.images = j.at("images").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("config echo: ") + e.what());
  }
  return c;
}

}  // namespace icr::bench
