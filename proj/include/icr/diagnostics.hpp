#pragma once

// Runtime checks of the convergence theory on recorded refinement traces:
//  - the surrogate values a_n = f_n(x^(n)) should settle like c'/n, i.e.
//    n * |a_{n+1} - a_n| stays bounded after a burn-in;
//  - once |mu_j| drops below alpha * rho_j, x_j must stay zero;
//  - each iterate must not be worse than the previous one on its own
//    surrogate (the step the decay argument relies on).

#include "icr/refinement.hpp"

#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace icr {

struct QuasiCauchyOptions {
  double burn_in_fraction = 0.3;
  /// Allowed ratio between the last-quartile and first-quartile maxima of
  /// n * |delta_n| after burn-in.
  double growth_ratio = 1.5;
  /// Deltas with |delta_n| <= noise_floor * max(1, range of a) count as 0.
  double noise_floor = 1e-12;
};

struct ConvergenceReport {
  int burn_in = 0;
  double c_prime = 0;
  /// max(0, last_quartile_max - growth_ratio * first_quartile_max)
  double max_violation = 0;
  double first_quartile_max = 0;
  double last_quartile_max = 0;
  bool passed = false;
  /// delta_n = a_{n+1} - a_n for n = 1..N-1
  std::vector<double> deltas;
  /// n * |delta_n| after the noise floor is applied
  std::vector<double> scaled;
};

/// Bounded-decay check on a sequence of surrogate values a_1..a_N.
inline ConvergenceReport quasi_cauchy_check(std::span<const double> values, QuasiCauchyOptions opts = {}) {
  const auto total = static_cast<int>(values.size());
  if (total < 5) throw Error(ErrorCode::TraceTooShort, "need >= 5 iterations, got " + std::to_string(total));
  require(opts.burn_in_fraction >= 0 && opts.burn_in_fraction < 1, ErrorCode::InvalidArgument,
          "burn_in_fraction must lie in [0,1)");

  double lo = values[0], hi = values[0];
  bool finite = true;
  for (double v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    finite = finite && std::isfinite(v);
  }
  const double floor = finite ? opts.noise_floor * std::max(1.0, hi - lo) : 0.0;

  ConvergenceReport rep;
  for (int n = 1; n < total; ++n) {
    const double d = values[static_cast<std::size_t>(n)] - values[static_cast<std::size_t>(n - 1)];
    rep.deltas.push_back(d);
    const double s = std::abs(d) <= floor ? 0.0 : n * std::abs(d);
    if (!std::isfinite(s)) finite = false;
    rep.scaled.push_back(s);
  }

  // Post burn-in window: n in (N0, N), always holding at least one delta.
  int burn_in = static_cast<int>(std::ceil(opts.burn_in_fraction * total));
  burn_in = std::min(burn_in, total - 2);
  rep.burn_in = burn_in;
  const int first_n = burn_in + 1;
  const int last_n = total - 1;
  const int m = last_n - first_n + 1;
  const int quart = (m + 3) / 4;

  auto scaled_at = [&](int n) { return rep.scaled[static_cast<std::size_t>(n - 1)]; };
  for (int n = first_n; n <= last_n; ++n) rep.c_prime = std::max(rep.c_prime, scaled_at(n));
  for (int n = first_n; n < first_n + quart; ++n) rep.first_quartile_max = std::max(rep.first_quartile_max, scaled_at(n));
  for (int n = last_n - quart + 1; n <= last_n; ++n) rep.last_quartile_max = std::max(rep.last_quartile_max, scaled_at(n));

  if (!finite) {
    rep.max_violation = std::numeric_limits<double>::infinity();
  } else {
    rep.max_violation = std::max(0.0, rep.last_quartile_max - opts.growth_ratio * rep.first_quartile_max);
  }
  rep.passed = rep.max_violation == 0.0;
  return rep;
}

inline std::vector<double> surrogate_values(const IcrTrace& trace) {
  std::vector<double> v;
  v.reserve(trace.size());
  for (const auto& it : trace.iterations) v.push_back(it.surrogate);
  return v;
}

inline ConvergenceReport quasi_cauchy_check(const IcrTrace& trace, QuasiCauchyOptions opts = {}) {
  const std::vector<double> v = surrogate_values(trace);
  return quasi_cauchy_check(std::span<const double>(v), opts);
}

struct FreezeViolation {
  Index coordinate = 0;
  /// Iteration at which |mu_j| first fell below alpha * rho_j (0 = mu^(0)).
  int below_at = 0;
  /// Later iteration whose x_j is nonzero.
  int nonzero_at = 0;
  double value = 0;
};

struct Lemma1Report {
  std::vector<FreezeViolation> violations;
  /// Number of coordinates that dipped below the threshold at some point.
  Index coordinates_below = 0;
  /// Unit columns and |y_i| <= 1 and |x_i| <= 1 on every iterate: the
  /// setting in which the freezing implication is guaranteed.
  bool assumptions_hold = false;

  bool clean() const { return violations.empty(); }
};

/// Check the freezing implication on a trace: if |mu_j^(n)| < alpha rho_j with
/// alpha = 1/(2(q+p)), then x_j^(m) = 0 for every recorded m > n.
inline Lemma1Report lemma1_monitor(const IcrTrace& trace, const ProblemInstance& inst) {
  const Index p = inst.cols();
  const double alpha = 1.0 / (2.0 * static_cast<double>(inst.rows() + p));
  Lemma1Report rep;

  bool unit = true;
  for (Index j = 0; j < p; ++j) unit = unit && std::abs(inst.A().col(j).norm() - 1.0) <= 1e-9;
  bool bounded = inst.y().size() == 0 || inst.y().cwiseAbs().maxCoeff() <= 1.0;
  for (const auto& it : trace.iterations) bounded = bounded && (it.x.size() == 0 || it.x.cwiseAbs().maxCoeff() <= 1.0);
  rep.assumptions_hold = unit && bounded;

  auto mu_at = [&](int n) -> const Vector& { return n == 0 ? trace.mu0 : trace.iterations[static_cast<std::size_t>(n - 1)].mu; };
  const int total = static_cast<int>(trace.size());
  for (Index j = 0; j < p; ++j) {
    int first_below = -1;
    for (int n = 0; n <= total; ++n) {
      const Vector& mu = mu_at(n);
      if (mu.size() != p) continue;
      if (std::abs(mu[j]) < alpha * inst.rho()[j]) {
        first_below = n;
        break;
      }
    }
    if (first_below < 0) continue;
    ++rep.coordinates_below;
    for (int m = first_below + 1; m <= total; ++m) {
      const double v = trace.iterations[static_cast<std::size_t>(m - 1)].x[j];
      if (v != 0.0) rep.violations.push_back({j, first_below, m, v});
    }
  }
  return rep;
}

/// Per-coordinate empirical constants c_j = max_n (n+1) |1/|mu_j^(n+1)| - 1/|mu_j^(n)||
/// over n >= start_n, for coordinates whose mean never vanishes.
/// Coordinates with a zero mean somewhere in the window report NaN.
inline Vector lemma2_constants(const IcrTrace& trace, int start_n = 1) {
  const auto total = static_cast<int>(trace.size());
  if (total == 0) return {};
  const Index p = trace.iterations.front().mu.size();
  Vector c = Vector::Zero(p);
  for (Index j = 0; j < p; ++j) {
    for (int n = std::max(1, start_n); n < total; ++n) {
      const double a = std::abs(trace.iterations[static_cast<std::size_t>(n - 1)].mu[j]);
      const double b = std::abs(trace.iterations[static_cast<std::size_t>(n)].mu[j]);
      if (a == 0.0 || b == 0.0) {
        c[j] = std::numeric_limits<double>::quiet_NaN();
        break;
      }
      c[j] = std::max(c[j], (n + 1) * std::abs(1.0 / b - 1.0 / a));
    }
  }
  return c;
}

struct MonotoneStepReport {
  /// Largest value of f_{n+1}(x^(n+1)) - f_{n+1}(x^(n)) - slack_n (<= 0 means clean).
  double worst_excess = -std::numeric_limits<double>::infinity();
  std::vector<int> violating_iterations;
  bool clean() const { return violating_iterations.empty(); }
};

/// f_{n+1}(x^(n+1)) <= f_{n+1}(x^(n)) + inner_tol (1 + ||x^(n)||_1) for every
/// recorded step, including the first one from x^(0) = 0. If x^(n) is nonzero
/// on a coordinate frozen for step n+1, f_{n+1}(x^(n)) is +inf.
inline MonotoneStepReport monotone_step_check(const IcrTrace& trace, const ProblemInstance& inst, double inner_tol) {
  MonotoneStepReport rep;
  const Index p = inst.cols();
  Vector prev = Vector::Zero(p);
  for (const auto& it : trace.iterations) {
    double at_prev = 0;
    bool infeasible = false;
    for (Index i = 0; i < p; ++i)
      if (it.frozen.contains(i) && prev[i] != 0.0) infeasible = true;
    if (!infeasible) {
      at_prev = weighted_objective(inst, prev, it.weights);
      const double excess = it.surrogate - at_prev - inner_tol * (1.0 + prev.lpNorm<1>());
      rep.worst_excess = std::max(rep.worst_excess, excess);
      if (excess > 0) rep.violating_iterations.push_back(it.n);
    }
    prev = it.x;
  }
  return rep;
}

/// True when mu^(n) equals the batch mean of x^(1..n) within tol for all n.
inline bool trace_means_consistent(const IcrTrace& trace, double tol = 1e-12) {
  if (trace.size() == 0) return true;
  Vector sum = Vector::Zero(trace.iterations.front().x.size());
  int n = 0;
  for (const auto& it : trace.iterations) {
    sum += it.x;
    ++n;
    if ((sum / n - it.mu).cwiseAbs().maxCoeff() > tol * std::max(1.0, it.mu.cwiseAbs().maxCoeff())) return false;
  }
  return true;
}

}  // namespace icr
