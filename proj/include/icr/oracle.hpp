#pragma once

// Exact small-scale reference solutions. For a fixed indicator gamma the MAP
// objective is a ridge regression on the support, so the global optimum is
// found by solving one regularized normal-equation system per support.

#include "icr/subproblem.hpp"

#include <Eigen/Cholesky>

#include <cstdint>
#include <vector>

namespace icr {

using Support = std::vector<Index>;

struct RidgeFit {
  Vector x;
  double cost = 0;
};

namespace detail {

// Solves (G_SS + lambda I) z = b_S; returns false if the system is singular.
inline bool solve_restricted(const ProblemInstance& inst, const Support& support, Vector& z) {
  const auto k = static_cast<Index>(support.size());
  Matrix h(k, k);
  Vector rhs(k);
  for (Index a = 0; a < k; ++a) {
    const Index i = support[static_cast<std::size_t>(a)];
    rhs[a] = inst.aty()[i];
    for (Index b = 0; b < k; ++b) h(a, b) = inst.gram()(i, support[static_cast<std::size_t>(b)]);
    h(a, a) += inst.lambda();
  }
  Eigen::LLT<Matrix> llt(h);
  if (llt.info() != Eigen::Success) return false;
  z = llt.solve(rhs);
  return z.allFinite();
}

}  // namespace detail

/// Ridge regression restricted to `support`, plus the full MAP cost
/// (including sum of rho over the support).
inline RidgeFit ridge_on_support(const ProblemInstance& inst, const Support& support) {
  const Index p = inst.cols();
  RidgeFit fit{Vector::Zero(p), 0};
  for (Index i : support) require(i >= 0 && i < p, ErrorCode::InvalidArgument, "support index out of range");
  if (!support.empty()) {
    Vector z;
    if (!detail::solve_restricted(inst, support, z))
      throw Error(ErrorCode::SingularSystem, "restricted normal equations are singular");
    for (std::size_t a = 0; a < support.size(); ++a) fit.x[support[a]] = z[static_cast<Index>(a)];
  }
  IndicatorVector gamma(p);
  for (Index i : support) gamma.set(i, true);
  fit.cost = map_objective(inst, fit.x, gamma);
  return fit;
}

struct OracleResult {
  Vector x_g;
  IndicatorVector gamma_g;
  Support support;
  double cost = 0;
  std::int64_t supports_examined = 0;
};

/// Number of supports of size <= max_support among p coordinates, saturated
/// at INT64_MAX.
inline std::int64_t count_supports(Index p, Index max_support) {
  std::int64_t total = 0;
  std::int64_t binom = 1;  // C(p, k)
  for (Index k = 0; k <= max_support && k <= p; ++k) {
    if (k > 0) {
      // C(p,k) = C(p,k-1) * (p-k+1) / k, exact at each step
      const auto num = static_cast<std::int64_t>(p - k + 1);
      if (binom > INT64_MAX / num) return INT64_MAX;
      binom = binom * num / static_cast<std::int64_t>(k);
    }
    if (total > INT64_MAX - binom) return INT64_MAX;
    total += binom;
  }
  return total;
}

struct EnumerationOptions {
  Index max_support = -1;  // -1: all of p
  std::int64_t budget = std::int64_t{1} << 20;
  /// Relative slack under which two costs count as tied.
  double tie_tol = 1e-12;
};

/// Exhaustive minimization of the MAP objective over every support of size
/// <= max_support. Supports are visited by size, then lexicographically, and
/// a candidate replaces the incumbent only if strictly better beyond tie_tol,
/// so ties go to the smaller, then lexicographically smaller, support.
inline OracleResult global_enumeration(const ProblemInstance& inst, EnumerationOptions opts = {}) {
  const Index p = inst.cols();
  const Index kmax = opts.max_support < 0 ? p : std::min(opts.max_support, p);
  const std::int64_t needed = count_supports(p, kmax);
  if (needed > opts.budget)
    throw Error(ErrorCode::BudgetExceeded,
                std::to_string(needed) + " supports required, budget is " + std::to_string(opts.budget));

  const double yy = inst.y_squared_norm();
  OracleResult best;
  best.cost = yy;  // empty support
  best.supports_examined = 1;

  Support s;
  Vector z;
  for (Index k = 1; k <= kmax; ++k) {
    s.resize(static_cast<std::size_t>(k));
    for (Index a = 0; a < k; ++a) s[static_cast<std::size_t>(a)] = a;
    while (true) {
      ++best.supports_examined;
      if (!detail::solve_restricted(inst, s, z))
        throw Error(ErrorCode::SingularSystem, "restricted normal equations are singular");
      double cost = yy;
      for (Index a = 0; a < k; ++a) {
        const Index i = s[static_cast<std::size_t>(a)];
        cost += inst.rho()[i] - inst.aty()[i] * z[a];
      }
      if (cost < best.cost - opts.tie_tol * std::max(1.0, std::abs(best.cost))) {
        best.cost = cost;
        best.support = s;
      }
      // next combination in lexicographic order
      Index a = k - 1;
      while (a >= 0 && s[static_cast<std::size_t>(a)] == p - k + a) --a;
      if (a < 0) break;
      ++s[static_cast<std::size_t>(a)];
      for (Index b = a + 1; b < k; ++b) s[static_cast<std::size_t>(b)] = s[static_cast<std::size_t>(b - 1)] + 1;
    }
  }

  const RidgeFit fit = ridge_on_support(inst, best.support);
  best.x_g = fit.x;
  best.gamma_g = IndicatorVector(p);
  for (Index i : best.support) best.gamma_g.set(i, true);
  best.cost = fit.cost;
  return best;
}

/// l1 relaxation of the MAP objective: weighted elastic net with weights rho.
inline SubproblemSolution elastic_net(const ProblemInstance& inst, InnerOptions opts = {}) {
  SubproblemSpec spec(inst, inst.rho(), false, opts);
  return solve_weighted_l1_ridge(spec);
}

}  // namespace icr
