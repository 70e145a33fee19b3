#pragma once

// Iterative convex refinement for the spike-and-slab MAP problem.
//
// The binary indicator gamma_i is replaced by x_i / mu_i, where mu is the
// running mean of the iterates, and the resulting convex problem is solved
// repeatedly:
//
//   mu^(0) = A^T y
//   x^(n)  = argmin ||y - A x||^2 + lambda ||x||^2 + sum_i rho_i |x_i| / |mu_i^(n-1)|
//   mu^(n) = (1/n) sum_{k=1..n} x^(k)
//
// until ||x^(n) - x^(n-1)|| <= tol. Coordinates whose |mu_i| falls below
// alpha * rho_i with alpha < 1/(2(q+p)) are frozen at zero for good.

#include "icr/subproblem.hpp"

#include <limits>
#include <optional>
#include <string>

namespace icr {

enum class Variant { Unconstrained, NonNegative };
enum class FreezeMode { LemmaAlpha, Absolute };

inline const char* to_string(Variant v) { return v == Variant::NonNegative ? "nonneg" : "unconstrained"; }

struct IcrOptions {
  Variant variant = Variant::Unconstrained;
  /// Outer stopping tolerance on ||x^(n) - x^(n-1)||_2.
  double tol = 1e-6;
  int max_outer_iters = 500;
  FreezeMode freeze_mode = FreezeMode::LemmaAlpha;
  /// Threshold used in Absolute mode.
  double freeze_epsilon = 1e-12;
  InnerOptions inner;
  bool record_trace = false;
};

struct IcrIteration {
  int n = 0;
  Vector x;         // x^(n)
  Vector mu;        // mu^(n)
  Vector weights;   // rho_i / |mu_i^(n-1)|, 0 on frozen coordinates
  CoordinateSet frozen;  // set in force while solving for x^(n)
  double surrogate = 0;  // f_n(x^(n))
  int inner_iters = 0;
  double kkt_residual = 0;
};

struct IcrTrace {
  Vector mu0;
  std::vector<IcrIteration> iterations;

  std::size_t size() const { return iterations.size(); }
};

struct IcrResult {
  Vector x_star;
  Vector gamma_star;
  /// Last computed iterate x^(n); differs from x_star by at most tol on convergence.
  Vector x_last;
  CoordinateSet frozen;
  int iterations = 0;
  bool converged = false;
  std::optional<IcrTrace> trace;
};

/// Running mean update: mu^(n) = ((n-1) mu^(n-1) + x^(n)) / n. For n = 1 the
/// result is x^(1); mu^(0) only seeds the first weights.
inline Vector update_mu(const Vector& mu_prev, const Vector& x_n, int n) {
  require(n >= 1, ErrorCode::InvalidArgument, "n must be >= 1");
  if (n == 1) return x_n;
  require(mu_prev.size() == x_n.size(), ErrorCode::InvalidDims, "mu and x lengths differ");
  const double nn = static_cast<double>(n);
  return ((nn - 1.0) * mu_prev + x_n) / nn;
}

/// alpha strictly below 1/(2(q+p)).
inline double lemma_alpha(Index rows, Index cols) {
  return (1.0 - 1e-9) / (2.0 * static_cast<double>(rows + cols));
}

struct FreezeUpdate {
  Vector weights;
  CoordinateSet frozen;
};

/// Reweighting with coefficient freezing. Coordinates already frozen stay
/// frozen; any other coordinate with |mu_i| <= threshold_i joins the set.
/// `rows` is q, needed for the lemma threshold alpha * rho_i.
inline FreezeUpdate weights_from_mu(const Vector& rho, const Vector& mu, const CoordinateSet& frozen,
                                    const IcrOptions& opts, Index rows) {
  const Index p = rho.size();
  require(mu.size() == p, ErrorCode::InvalidDims, "mu must have length p");
  FreezeUpdate out{Vector::Zero(p), frozen.dim() == p ? frozen : CoordinateSet(p)};
  const double alpha = lemma_alpha(rows, p);
  for (Index i = 0; i < p; ++i) {
    if (out.frozen.contains(i)) continue;
    const double threshold = opts.freeze_mode == FreezeMode::LemmaAlpha ? alpha * rho[i] : opts.freeze_epsilon;
    const double m = std::abs(mu[i]);
    if (m <= threshold) {
      out.frozen.insert(i);
      continue;
    }
    out.weights[i] = rho[i] / m;
  }
  return out;
}

inline bool stopping(const Vector& x_n, const Vector& x_prev, double tol) {
  require(x_n.size() == x_prev.size(), ErrorCode::InvalidDims, "vectors differ in length");
  return (x_n - x_prev).norm() <= tol;
}

namespace detail {

inline Vector indicator_estimate(const Vector& x, const Vector& mu, const CoordinateSet& frozen) {
  Vector gamma = Vector::Zero(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    if (frozen.contains(i) || x[i] == 0.0 || mu[i] == 0.0) continue;
    gamma[i] = x[i] / mu[i];
  }
  return gamma;
}

}  // namespace detail

inline IcrResult icr_run(const ProblemInstance& inst, const IcrOptions& opts) {
  require(opts.tol > 0, ErrorCode::InvalidArgument, "tol must be positive");
  require(opts.max_outer_iters >= 1, ErrorCode::InvalidArgument, "max_outer_iters must be >= 1");
  const Index p = inst.cols();
  const bool nonneg = opts.variant == Variant::NonNegative;

  IcrResult result;
  if (opts.record_trace) result.trace.emplace();

  Vector mu_prev = inst.aty();
  Vector x_prev = Vector::Zero(p);
  CoordinateSet frozen(p);
  CoordinateSet frozen_prev(p);
  if (result.trace) result.trace->mu0 = mu_prev;

  // Fallback when the outer loop does not converge: lowest MAP cost iterate.
  double best_cost = std::numeric_limits<double>::infinity();
  Vector best_x = x_prev, best_gamma = Vector::Zero(p);

  for (int n = 1; n <= opts.max_outer_iters; ++n) {
    FreezeUpdate fu = weights_from_mu(inst.rho(), mu_prev, frozen, opts, inst.rows());
    frozen = std::move(fu.frozen);

    SubproblemSpec spec(inst, std::move(fu.weights), nonneg, opts.inner);
    spec.frozen = frozen;
    spec.warm_start = x_prev;
    for (Index i = 0; i < p; ++i) {
      if (frozen.contains(i)) spec.warm_start[i] = 0.0;
      if (nonneg && spec.warm_start[i] < 0) spec.warm_start[i] = 0.0;
    }

    SubproblemSolution sol = solve_subproblem(spec);
    if (!sol.converged)
      throw Error(ErrorCode::InnerSolverFailure,
                  "outer iteration " + std::to_string(n) + ": KKT residual " + std::to_string(sol.kkt_residual));

    Vector mu_n = update_mu(mu_prev, sol.x, n);
    result.iterations = n;

    if (result.trace) {
      IcrIteration rec;
      rec.n = n;
      rec.x = sol.x;
      rec.mu = mu_n;
      rec.weights = spec.weights;
      rec.frozen = frozen;
      rec.surrogate = weighted_objective(inst, sol.x, spec.weights);
      rec.inner_iters = sol.inner_iters;
      rec.kkt_residual = sol.kkt_residual;
      result.trace->iterations.push_back(std::move(rec));
    }

    if (stopping(sol.x, x_prev, opts.tol)) {
      result.x_star = x_prev;
      result.gamma_star = detail::indicator_estimate(x_prev, mu_prev, frozen_prev);
      result.x_last = std::move(sol.x);
      result.frozen = frozen;
      result.converged = true;
      return result;
    }

    const double cost = map_objective(inst, sol.x);
    if (cost < best_cost) {
      best_cost = cost;
      best_x = sol.x;
      best_gamma = detail::indicator_estimate(sol.x, mu_n, frozen);
    }
    x_prev = std::move(sol.x);
    mu_prev = std::move(mu_n);
    frozen_prev = frozen;
  }

  result.x_star = std::move(best_x);
  result.gamma_star = std::move(best_gamma);
  result.x_last = std::move(x_prev);
  result.frozen = frozen;
  result.converged = false;
  return result;
}

}  // namespace icr
