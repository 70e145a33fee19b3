#pragma once

// Monte-Carlo execution of an ExperimentConfig. Trials are independent: each
// one derives its instance from (master_seed, trial index) alone, so they can
// run on any number of threads. Results are stored per trial and reduced in
// trial order, which keeps the output bit-identical for every --jobs value.

#include "icr/bench/config.hpp"
#include "icr/bench/idx.hpp"
#include "icr/diagnostics.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace icr::bench {

struct MetricsRow {
  std::string method;
  Index p = 0, q = 0, s = 0;
  double lambda = 0, kappa = 0, sigma = 0;
  int trials = 0;
  double avg_cost = 0;
  double mse = 0;
  double support_match_pct = 0;
  double avg_sparsity = 0;
  double avg_iters = 0;
  double wall_time_s = 0;

  bool operator==(const MetricsRow&) const = default;
};

/// Convergence diagnostics aggregated over the ICR traces of one row.
struct DiagnosticsSummary {
  std::string method;
  Index s = 0;
  int traces = 0;
  int converged = 0;
  int quasi_cauchy_passed = 0;
  int too_short = 0;
  /// Total Lemma-1 violations over all traces.
  int lemma1_violations = 0;
  /// Traces on which the unit-column / bounded-magnitude assumptions held.
  int lemma1_assumptions_hold = 0;
  /// Traces with at least one monotone-step violation.
  int monotone_violations = 0;

  bool operator==(const DiagnosticsSummary&) const = default;
};

struct TrialFailure {
  Index s = 0;
  int trial = 0;
  std::string method;
  std::string error;
};

struct ImageRecord {
  int index = 0;
  std::vector<double> mse;  // one per method, in config order
  std::vector<double> min_pixel;
};

struct ExperimentResult {
  std::vector<MetricsRow> rows;
  std::vector<DiagnosticsSummary> diagnostics;
  std::vector<TrialFailure> failures;
  std::vector<ImageRecord> images;  // mnist only
  /// kappa actually used (differs from the config when it is "auto").
  double kappa = 0;

  bool ok() const { return failures.empty(); }
};

/// Runs f(i) for i in [0, n) on up to `jobs` threads.
inline void parallel_for(int n, int jobs, const std::function<void(int)>& f) {
  const int workers = std::max(1, std::min(jobs, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) f(i);
    });
  for (auto& t : pool) t.join();
}

namespace detail {

struct MethodOutcome {
  bool ok = false;
  std::string error;
  double cost = 0, mse = 0, sm = 0, sparsity = 0, iters = 0, seconds = 0;
  Vector x;

  // diagnostics, ICR variants only
  bool traced = false;
  bool converged = false;
  bool qc_passed = false;
  bool qc_short = false;
  int lemma1_violations = 0;
  bool lemma1_assumptions = false;
  bool monotone_clean = true;
};

struct TrialOutcome {
  std::string error;  // set when the reference itself failed
  std::vector<MethodOutcome> methods;
};

struct Solved {
  Vector x;
  double iters = 0;
};

inline void analyse_trace(const IcrResult& r, const ProblemInstance& inst, const ExperimentConfig& cfg,
                          MethodOutcome& out) {
  out.traced = true;
  out.converged = r.converged;
  const IcrTrace& trace = *r.trace;
  try {
    out.qc_passed = quasi_cauchy_check(trace).passed;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::TraceTooShort) throw;
    out.qc_short = true;
  }
  const Lemma1Report l1 = lemma1_monitor(trace, inst);
  out.lemma1_violations = static_cast<int>(l1.violations.size());
  out.lemma1_assumptions = l1.assumptions_hold;
  out.monotone_clean = monotone_step_check(trace, inst, cfg.inner_tol).clean();
}

/// Solves one instance with one method and scores it against `reference`.
inline MethodOutcome evaluate(Method m, const ProblemInstance& inst, const Vector& reference, const ExperimentConfig& cfg,
                              const OracleResult* oracle) {
  MethodOutcome out;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    Solved sol;
    switch (m) {
      case Method::ICR:
      case Method::ICR_NN: {
        const Variant v = m == Method::ICR ? Variant::Unconstrained : Variant::NonNegative;
        IcrResult r = icr_run(inst, cfg.icr_options(v));
        sol = {r.x_star, static_cast<double>(r.iterations)};
        if (r.trace) analyse_trace(r, inst, cfg, out);
        break;
      }
      case Method::ElasticNet: {
        SubproblemSolution en = elastic_net(inst, cfg.inner_options());
        if (!en.converged)
          throw Error(ErrorCode::InnerSolverFailure, "elastic net KKT residual " + std::to_string(en.kkt_residual));
        sol = {en.x, static_cast<double>(en.inner_iters)};
        break;
      }
      case Method::Oracle: {
        if (oracle) {
          sol = {oracle->x_g, 0.0};
        } else {
          EnumerationOptions eo;
          eo.budget = cfg.enumeration_budget;
          sol = {global_enumeration(inst, eo).x_g, 0.0};
        }
        break;
      }
    }
    out.cost = map_objective(inst, sol.x);
    out.mse = mse(sol.x, reference);
    out.sm = support_match(sol.x, reference, cfg.tau);
    out.sparsity = static_cast<double>(sparsity_level(sol.x, cfg.tau));
    out.iters = sol.iters;
    out.x = std::move(sol.x);
    out.ok = true;
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  if (cfg.timing) out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

inline TrialOutcome run_synthetic_trial(const ExperimentConfig& cfg, Index s, std::uint64_t seed) {
  TrialOutcome t;
  try {
    SynthOptions so;
    so.nonneg_signal = cfg.nonneg_signal;
    const SynthInstance si = generate_instance(cfg.p, cfg.q, s, cfg.sigma, {cfg.lambda, *cfg.kappa}, seed, so);
    std::optional<OracleResult> oracle;
    if (cfg.kind == ExperimentKind::SynthGlobal || cfg.has(Method::Oracle)) {
      EnumerationOptions eo;
      eo.budget = cfg.enumeration_budget;
      oracle = global_enumeration(si.inst, eo);
    }
    const Vector& reference = cfg.kind == ExperimentKind::SynthGlobal ? oracle->x_g : si.x0;
    for (Method m : cfg.methods)
      t.methods.push_back(evaluate(m, si.inst, reference, cfg, oracle ? &*oracle : nullptr));
  } catch (const std::exception& e) {
    t.error = e.what();
  }
  return t;
}

/// Reduces per-trial outcomes, in trial order, into one row and one
/// diagnostics summary per method.
inline void reduce(const ExperimentConfig& cfg, Index p, Index s, double kappa, const std::vector<TrialOutcome>& trials,
                   ExperimentResult& res) {
  for (std::size_t k = 0; k < trials.size(); ++k)
    if (!trials[k].error.empty()) res.failures.push_back({s, static_cast<int>(k), "reference", trials[k].error});

  for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
    MetricsRow row;
    row.method = to_string(cfg.methods[mi]);
    row.p = p;
    row.q = cfg.q;
    row.s = s;
    row.lambda = cfg.lambda;
    row.kappa = kappa;
    row.sigma = cfg.sigma;
    DiagnosticsSummary diag;
    diag.method = row.method;
    diag.s = s;

    for (std::size_t k = 0; k < trials.size(); ++k) {
      if (!trials[k].error.empty()) continue;
      const MethodOutcome& o = trials[k].methods[mi];
      if (!o.ok) {
        res.failures.push_back({s, static_cast<int>(k), row.method, o.error});
        continue;
      }
      ++row.trials;
      row.avg_cost += o.cost;
      row.mse += o.mse;
      row.support_match_pct += o.sm;
      row.avg_sparsity += o.sparsity;
      row.avg_iters += o.iters;
      row.wall_time_s += o.seconds;
      if (o.traced) {
        ++diag.traces;
        diag.converged += o.converged;
        diag.quasi_cauchy_passed += o.qc_passed;
        diag.too_short += o.qc_short;
        diag.lemma1_violations += o.lemma1_violations;
        diag.lemma1_assumptions_hold += o.lemma1_assumptions;
        diag.monotone_violations += !o.monotone_clean;
      }
    }
    if (row.trials > 0) {
      const double n = row.trials;
      row.avg_cost /= n;
      row.mse /= n;
      row.support_match_pct /= n;
      row.avg_sparsity /= n;
      row.avg_iters /= n;
    }
    res.rows.push_back(row);
    if (diag.traces > 0) res.diagnostics.push_back(diag);
  }
}

}  // namespace detail

/// Seed of trial `trial` at sweep position `level` (0 for single-s kinds).
inline std::uint64_t trial_seed(std::uint64_t master, std::size_t level, int trial) {
  return split_seed(split_seed(master, level), static_cast<std::uint64_t>(trial));
}

/// Runs a synthetic experiment (SynthGlobal, SynthLarge or SparsitySweep).
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  require(cfg.kind != ExperimentKind::Mnist, ErrorCode::ConfigError, "use mnist_recovery_experiment for mnist");
  ExperimentResult res;
  res.kappa = *cfg.kappa;

  const std::vector<Index> levels = cfg.kind == ExperimentKind::SparsitySweep ? cfg.sweep_s : std::vector<Index>{cfg.s};
  for (std::size_t li = 0; li < levels.size(); ++li) {
    std::vector<detail::TrialOutcome> trials(static_cast<std::size_t>(cfg.trials));
    parallel_for(cfg.trials, cfg.jobs, [&](int k) {
      trials[static_cast<std::size_t>(k)] = detail::run_synthetic_trial(cfg, levels[li], trial_seed(cfg.master_seed, li, k));
    });
    detail::reduce(cfg, cfg.p, levels[li], res.kappa, trials, res);
  }
  return res;
}

/// Fraction of strictly positive pixels over a set of images.
inline double active_pixel_fraction(const std::vector<Matrix>& images) {
  double active = 0, total = 0;
  for (const auto& img : images) {
    active += static_cast<double>((img.array() > 0).count());
    total += static_cast<double>(img.size());
  }
  return total > 0 ? active / total : 0.0;
}

/// Compressive recovery of images: y = A x0 + n with a fresh q x 784 Gaussian
/// unit-column A per image. Writes P2 graymaps of the originals and every
/// reconstruction into `image_dir` when it is non-empty.
inline ExperimentResult mnist_recovery_experiment(const ExperimentConfig& cfg, const ImageSet& set,
                                                  const std::string& image_dir = {}) {
  validate(cfg);
  require(cfg.kind == ExperimentKind::Mnist, ErrorCode::ConfigError, "config kind must be mnist");
  for (Method m : cfg.methods)
    require(m != Method::Oracle, ErrorCode::ConfigError, "Oracle is not available for mnist");

  const std::size_t n_images =
      cfg.images > 0 ? std::min<std::size_t>(static_cast<std::size_t>(cfg.images), set.count()) : set.count();
  require(n_images >= 1, ErrorCode::ConfigError, "image set is empty");
  std::vector<Matrix> images(set.images.begin(), set.images.begin() + static_cast<std::ptrdiff_t>(n_images));

  ExperimentResult res;
  res.kappa = cfg.kappa ? *cfg.kappa : active_pixel_fraction(images);
  require(res.kappa > 0 && res.kappa < 1, ErrorCode::ConfigError, "kappa must lie in (0,1); images are blank or saturated");

  const Index p = kImageSide * kImageSide;
  std::vector<detail::TrialOutcome> trials(n_images);
  parallel_for(static_cast<int>(n_images), cfg.jobs, [&](int k) {
    detail::TrialOutcome& t = trials[static_cast<std::size_t>(k)];
    try {
      std::mt19937_64 rng(trial_seed(cfg.master_seed, 0, k));
      Matrix A = gaussian_unit_columns(cfg.q, p, rng);
      const Vector x0 = vectorize(images[static_cast<std::size_t>(k)]);
      std::normal_distribution<double> normal(0.0, 1.0);
      Vector y = A * x0;
      for (Index i = 0; i < y.size(); ++i) y[i] += cfg.sigma * normal(rng);
      InstanceChecks checks;
      checks.unit_columns = true;
      const ProblemInstance inst =
          ProblemInstance::from_prior(std::move(A), std::move(y), cfg.lambda, cfg.sigma * cfg.sigma, res.kappa, checks);
      for (Method m : cfg.methods) t.methods.push_back(detail::evaluate(m, inst, x0, cfg, nullptr));
    } catch (const std::exception& e) {
      t.error = e.what();
    }
  });

  double active = 0;
  for (const auto& img : images) active += static_cast<double>((img.array() > 0).count());
  const auto s = static_cast<Index>(std::lround(active / static_cast<double>(n_images)));
  detail::reduce(cfg, p, s, res.kappa, trials, res);

  for (std::size_t k = 0; k < n_images; ++k) {
    ImageRecord rec;
    rec.index = static_cast<int>(k);
    for (const auto& o : trials[k].methods) {
      rec.mse.push_back(o.ok ? o.mse : std::nan(""));
      rec.min_pixel.push_back(o.ok && o.x.size() > 0 ? o.x.minCoeff() : std::nan(""));
    }
    res.images.push_back(std::move(rec));
  }

  if (!image_dir.empty()) {
    std::filesystem::create_directories(image_dir);
    for (std::size_t k = 0; k < n_images; ++k) {
      const std::string idx = std::to_string(k);
      write_pgm(images[k], image_dir + "/original_" + idx + ".pgm");
      for (std::size_t mi = 0; mi < cfg.methods.size() && mi < trials[k].methods.size(); ++mi) {
        const auto& o = trials[k].methods[mi];
        if (!o.ok) continue;
        write_pgm(unvectorize(o.x, kImageSide, kImageSide),
                  image_dir + "/" + to_string(cfg.methods[mi]) + "_" + idx + ".pgm");
      }
    }
  }
  return res;
}

struct TraceReport {
  int trial = 0;
  int iterations = 0;
  bool converged = false;
  ConvergenceReport convergence;
  bool too_short = false;
  Lemma1Report lemma1;
  MonotoneStepReport monotone;
  /// Per-coordinate Lemma-2 constants, filled when requested.
  Vector lemma2;
};

/// Detailed convergence reports for ICR runs on synthetic instances
/// (p, q, s from the config; first ICR variant listed, default unconstrained).
inline std::vector<TraceReport> diagnose_runs(const ExperimentConfig& cfg, bool with_lemma2 = false,
                                              QuasiCauchyOptions qc = {}) {
  validate(cfg);
  Variant variant = Variant::Unconstrained;
  for (Method m : cfg.methods)
    if (m == Method::ICR || m == Method::ICR_NN) {
      variant = m == Method::ICR ? Variant::Unconstrained : Variant::NonNegative;
      break;
    }
  IcrOptions opts = cfg.icr_options(variant);
  opts.record_trace = true;

  std::vector<TraceReport> reports(static_cast<std::size_t>(cfg.trials));
  std::vector<std::string> errors(static_cast<std::size_t>(cfg.trials));
  parallel_for(cfg.trials, cfg.jobs, [&](int k) {
    TraceReport& rep = reports[static_cast<std::size_t>(k)];
    rep.trial = k;
    try {
      SynthOptions so;
      so.nonneg_signal = cfg.nonneg_signal;
      const SynthInstance si = generate_instance(cfg.p, cfg.q, cfg.s, cfg.sigma, {cfg.lambda, *cfg.kappa},
                                                 trial_seed(cfg.master_seed, 0, k), so);
      const IcrResult r = icr_run(si.inst, opts);
      rep.iterations = r.iterations;
      rep.converged = r.converged;
      try {
        rep.convergence = quasi_cauchy_check(*r.trace, qc);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::TraceTooShort) throw;
        rep.too_short = true;
      }
      rep.lemma1 = lemma1_monitor(*r.trace, si.inst);
      rep.monotone = monotone_step_check(*r.trace, si.inst, cfg.inner_tol);
      if (with_lemma2) rep.lemma2 = lemma2_constants(*r.trace);
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(k)] = e.what();
    }
  });
  for (std::size_t k = 0; k < errors.size(); ++k)
    if (!errors[k].empty()) throw Error(ErrorCode::InnerSolverFailure, "trial " + std::to_string(k) + ": " + errors[k]);
  return reports;
}

}  // namespace icr::bench
