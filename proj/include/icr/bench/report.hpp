#pragma once

// CSV and JSON results. CSV values carry 6 significant digits; JSON keeps
// full double precision (shortest round-trip form) and echoes the config.

#include "icr/bench/runner.hpp"

#include <cstdio>
#include <fstream>
#include <string>

namespace icr::bench {

inline constexpr const char* kCsvHeader =
    "method,p,q,s,lambda,kappa,sigma,trials,avg_cost,mse,support_match_pct,avg_sparsity,avg_iters,wall_time_s";

namespace detail {

inline std::string g6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline void write_text(const std::string& text, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << text;
  out.flush();
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

}  // namespace detail

inline std::string csv_string(const std::vector<MetricsRow>& rows) {
  using detail::g6;
  std::string out = kCsvHeader;
  out += '\n';
  for (const auto& r : rows) {
    out += r.method + ',' + std::to_string(r.p) + ',' + std::to_string(r.q) + ',' + std::to_string(r.s) + ',' +
           g6(r.lambda) + ',' + g6(r.kappa) + ',' + g6(r.sigma) + ',' + std::to_string(r.trials) + ',' +
           g6(r.avg_cost) + ',' + g6(r.mse) + ',' + g6(r.support_match_pct) + ',' + g6(r.avg_sparsity) + ',' +
           g6(r.avg_iters) + ',' + g6(r.wall_time_s) + '\n';
  }
  return out;
}

inline void emit_csv(const std::vector<MetricsRow>& rows, const std::string& path) {
  detail::write_text(csv_string(rows), path);
}

inline nlohmann::json row_to_json(const MetricsRow& r) {
  return {{"method", r.method},
          {"p", r.p},
          {"q", r.q},
          {"s", r.s},
          {"lambda", r.lambda},
          {"kappa", r.kappa},
          {"sigma", r.sigma},
          {"trials", r.trials},
          {"avg_cost", r.avg_cost},
          {"mse", r.mse},
          {"support_match_pct", r.support_match_pct},
          {"avg_sparsity", r.avg_sparsity},
          {"avg_iters", r.avg_iters},
          {"wall_time_s", r.wall_time_s}};
}

inline MetricsRow row_from_json(const nlohmann::json& j) {
  MetricsRow r;
  r.method = j.at("method").get<std::string>();
  r.p = j.at("p").get<Index>();
  r.q = j.at("q").get<Index>();
  r.s = j.at("s").get<Index>();
  r.lambda = j.at("lambda").get<double>();
  r.kappa = j.at("kappa").get<double>();
  r.sigma = j.at("sigma").get<double>();
  r.trials = j.at("trials").get<int>();
  r.avg_cost = j.at("avg_cost").get<double>();
  r.mse = j.at("mse").get<double>();
  r.support_match_pct = j.at("support_match_pct").get<double>();
  r.avg_sparsity = j.at("avg_sparsity").get<double>();
  r.avg_iters = j.at("avg_iters").get<double>();
  r.wall_time_s = j.at("wall_time_s").get<double>();
  return r;
}

inline nlohmann::json diagnostics_to_json(const DiagnosticsSummary& d) {
  return {{"method", d.method},
          {"s", d.s},
          {"traces", d.traces},
          {"converged", d.converged},
          {"quasi_cauchy_passed", d.quasi_cauchy_passed},
          {"too_short", d.too_short},
          {"lemma1_violations", d.lemma1_violations},
          {"lemma1_assumptions_hold", d.lemma1_assumptions_hold},
          {"monotone_violations", d.monotone_violations}};
}

inline nlohmann::json result_to_json(const ExperimentConfig& cfg, const ExperimentResult& res) {
  nlohmann::json j;
  j["config"] = config_to_json(cfg);
  j["status"] = res.ok() ? "ok" : "failed";
  j["kappa_used"] = res.kappa;
  j["rows"] = nlohmann::json::array();
  for (const auto& r : res.rows) j["rows"].push_back(row_to_json(r));
  if (!res.diagnostics.empty()) {
    j["diagnostics"] = nlohmann::json::array();
    for (const auto& d : res.diagnostics) j["diagnostics"].push_back(diagnostics_to_json(d));
  }
  j["failures"] = nlohmann::json::array();
  for (const auto& f : res.failures)
    j["failures"].push_back({{"s", f.s}, {"trial", f.trial}, {"method", f.method}, {"error", f.error}});
  if (!res.images.empty()) {
    j["images"] = nlohmann::json::array();
    for (const auto& im : res.images) {
      nlohmann::json per;
      per["index"] = im.index;
      for (std::size_t m = 0; m < im.mse.size() && m < cfg.methods.size(); ++m)
      {
        const char* name = to_string(cfg.methods[m]);
        per["mse"][name] = std::isfinite(im.mse[m]) ? nlohmann::json(im.mse[m]) : nlohmann::json();
        per["min_pixel"][name] = std::isfinite(im.min_pixel[m]) ? nlohmann::json(im.min_pixel[m]) : nlohmann::json();
      }
      j["images"].push_back(per);
    }
  }
  return j;
}

inline std::string json_string(const ExperimentConfig& cfg, const ExperimentResult& res) {
  return result_to_json(cfg, res).dump(2) + "\n";
}

inline void emit_json(const ExperimentConfig& cfg, const ExperimentResult& res, const std::string& path) {
  detail::write_text(json_string(cfg, res), path);
}

inline std::vector<MetricsRow> rows_from_json(const nlohmann::json& j) {
  std::vector<MetricsRow> rows;
  for (const auto& r : j.at("rows")) rows.push_back(row_from_json(r));
  return rows;
}

inline nlohmann::json trace_reports_to_json(const ExperimentConfig& cfg, const std::vector<TraceReport>& reports) {
  nlohmann::json j;
  j["config"] = config_to_json(cfg);
  int passed = 0, clean = 0, monotone = 0;
  j["runs"] = nlohmann::json::array();
  for (const auto& r : reports) {
    nlohmann::json run;
    run["trial"] = r.trial;
    run["iterations"] = r.iterations;
    run["converged"] = r.converged;
    if (r.too_short) {
      run["quasi_cauchy"] = "too_short";
    } else {
      run["quasi_cauchy"] = {{"burn_in", r.convergence.burn_in},
                             {"c_prime", r.convergence.c_prime},
                             {"max_violation", r.convergence.max_violation},
                             {"first_quartile_max", r.convergence.first_quartile_max},
                             {"last_quartile_max", r.convergence.last_quartile_max},
                             {"passed", r.convergence.passed}};
      passed += r.convergence.passed;
    }
    nlohmann::json viol = nlohmann::json::array();
    for (const auto& v : r.lemma1.violations)
      viol.push_back({{"coordinate", v.coordinate}, {"below_at", v.below_at}, {"nonzero_at", v.nonzero_at}, {"value", v.value}});
    run["lemma1"] = {{"coordinates_below", r.lemma1.coordinates_below},
                     {"assumptions_hold", r.lemma1.assumptions_hold},
                     {"violations", viol}};
    clean += r.lemma1.clean();
    run["monotone"] = {{"worst_excess", r.monotone.worst_excess}, {"violating_iterations", r.monotone.violating_iterations}};
    monotone += r.monotone.clean();
    if (r.lemma2.size() > 0) {
      std::vector<nlohmann::json> c;
      for (Index i = 0; i < r.lemma2.size(); ++i)
        c.push_back(std::isnan(r.lemma2[i]) ? nlohmann::json() : nlohmann::json(r.lemma2[i]));
      run["lemma2_constants"] = c;
    }
    j["runs"].push_back(run);
  }
  j["summary"] = {{"runs", reports.size()}, {"quasi_cauchy_passed", passed}, {"lemma1_clean", clean}, {"monotone_clean", monotone}};
  return j;
}

}  // namespace icr::bench
