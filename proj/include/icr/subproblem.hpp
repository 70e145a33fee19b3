#pragma once

// Convex inner problems of the refinement loop:
//
//   min_x      ||y - A x||^2 + lambda ||x||^2 + sum_i w_i |x_i|       (unconstrained)
//   min_{x>=0} ||y - A x||^2 + lambda ||x||^2 + sum_i w_i x_i         (non-negative)
//
// with a set of frozen coordinates pinned to 0. Both are solved on the cached
// Gram matrix by cyclic coordinate descent interleaved with Newton steps on
// the current orthant face (the restricted stationarity system, solved
// exactly). The result is certified by an independent KKT residual
// computed from A and y directly.

#include "icr/model.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <functional>

namespace icr {

/// sign(v) * max(|v| - t, 0)
inline double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

struct InnerOptions {
  double tol = 1e-8;
  int max_iters = 10'000;
};

struct SubproblemSpec {
  SubproblemSpec(const ProblemInstance& inst, Vector weights, bool nonneg, InnerOptions opts = {})
      : inst(inst),
        weights(std::move(weights)),
        frozen(inst.cols()),
        nonneg(nonneg),
        warm_start(Vector::Zero(inst.cols())),
        tol(opts.tol),
        max_inner_iters(opts.max_iters) {}

  std::reference_wrapper<const ProblemInstance> inst;
  Vector weights;
  CoordinateSet frozen;
  bool nonneg;
  Vector warm_start;
  double tol;
  int max_inner_iters;
};

struct SubproblemSolution {
  Vector x;
  double kkt_residual = 0;
  int inner_iters = 0;
  bool converged = false;
};

namespace detail {

inline double coordinate_violation(double x, double g, double w, bool nonneg) {
  if (nonneg) {
    if (x < 0) return -x;
    const double gi = g + w;
    return std::max({0.0, -gi, x * gi});
  }
  if (x != 0.0) return std::abs(g + (x > 0 ? w : -w));
  return std::max(0.0, std::abs(g) - w);
}

}  // namespace detail

/// Largest coordinate-wise violation of the optimality conditions, with
/// g = 2 A^T (A x - y) + 2 lambda x:
///   unconstrained, x_i != 0 : |g_i + w_i sign(x_i)|
///   unconstrained, x_i == 0 : max(0, |g_i| - w_i)
///   non-negative            : max(0, -(g_i + w_i), x_i (g_i + w_i))
/// Frozen coordinates only contribute |x_i|.
inline double kkt_residual(const ProblemInstance& inst, const Vector& weights, const CoordinateSet& frozen,
                           bool nonneg, const Vector& x) {
  const Index p = inst.cols();
  require(x.size() == p && weights.size() == p, ErrorCode::InvalidDims, "x and weights must have length p");
  const Vector grad = 2.0 * (inst.A().transpose() * (inst.A() * x - inst.y())) + 2.0 * inst.lambda() * x;
  double worst = 0;
  for (Index i = 0; i < p; ++i) {
    if (frozen.dim() != 0 && frozen.contains(i)) {
      worst = std::max(worst, std::abs(x[i]));
      continue;
    }
    worst = std::max(worst, detail::coordinate_violation(x[i], grad[i], weights[i], nonneg));
  }
  return worst;
}

namespace detail {

inline void validate(const SubproblemSpec& spec) {
  const ProblemInstance& inst = spec.inst;
  const Index p = inst.cols();
  require(spec.weights.size() == p, ErrorCode::InvalidDims, "weights must have length p");
  require(spec.warm_start.size() == p, ErrorCode::InvalidDims, "warm start must have length p");
  require(spec.frozen.dim() == p, ErrorCode::InvalidDims, "frozen set must have dimension p");
  require(spec.tol > 0, ErrorCode::InvalidArgument, "tol must be positive");
  require(spec.max_inner_iters > 0, ErrorCode::InvalidArgument, "max_inner_iters must be positive");
  for (Index i = 0; i < p; ++i) {
    if (spec.frozen.contains(i)) {
      require(spec.warm_start[i] == 0.0, ErrorCode::InvalidArgument,
              "warm start is nonzero on frozen coordinate " + std::to_string(i));
      continue;
    }
    require(std::isfinite(spec.weights[i]) && spec.weights[i] >= 0, ErrorCode::InvalidArgument,
            "weight " + std::to_string(i) + " must be finite and non-negative");
    require(std::isfinite(spec.warm_start[i]), ErrorCode::InvalidArgument, "warm start must be finite");
    if (spec.nonneg)
      require(spec.warm_start[i] >= 0, ErrorCode::InvalidArgument, "warm start must be >= 0 for the non-negative variant");
  }
}

// Minimizer of the smooth part plus the linear term -w_S theta_S / 2 over the
// coordinates in `support`, signs fixed to theta. When the support is wider
// than A is tall, (A_S^T A_S + lambda I)^-1 is applied through the q x q
// system lambda I + A_S A_S^T. Falls back to a least-norm solve when the
// restricted Gram block is singular (lambda = 0 only).
inline Vector solve_face(const ProblemInstance& inst, const SubproblemSpec& spec, const std::vector<Index>& support,
                         const Vector& signs) {
  const auto k = static_cast<Index>(support.size());
  const double lambda = inst.lambda();
  Vector rhs(k);
  for (Index a = 0; a < k; ++a) {
    const Index i = support[static_cast<std::size_t>(a)];
    rhs[a] = inst.aty()[i] - 0.5 * spec.weights[i] * signs[i];
  }
  if (lambda > 0 && k > inst.rows()) {
    Matrix as(inst.rows(), k);
    for (Index a = 0; a < k; ++a) as.col(a) = inst.A().col(support[static_cast<std::size_t>(a)]);
    Matrix small = as * as.transpose();
    small.diagonal().array() += lambda;
    Eigen::LLT<Matrix> llt(small);
    if (llt.info() == Eigen::Success) return (rhs - as.transpose() * llt.solve(as * rhs)) / lambda;
  }
  Matrix h(k, k);
  for (Index a = 0; a < k; ++a) {
    const Index i = support[static_cast<std::size_t>(a)];
    for (Index b = 0; b < k; ++b) h(a, b) = inst.gram()(i, support[static_cast<std::size_t>(b)]);
    h(a, a) += lambda;
  }
  if (lambda > 0 || k <= inst.rows()) {
    Eigen::LLT<Matrix> llt(h);
    if (llt.info() == Eigen::Success) {
      Vector z = llt.solve(rhs);
      if (z.allFinite() && (h * z - rhs).norm() <= 1e-10 * (1.0 + rhs.norm())) return z;
    }
  }
  return h.completeOrthogonalDecomposition().solve(rhs);
}

// Objective without the constant ||y||^2.
inline double reduced_objective(const SubproblemSpec& spec, const Vector& x) {
  const ProblemInstance& inst = spec.inst;
  double pen = 0;
  for (Index i = 0; i < x.size(); ++i)
    if (x[i] != 0.0) pen += spec.weights[i] * std::abs(x[i]);
  return x.dot(inst.gram() * x) + inst.lambda() * x.squaredNorm() - 2.0 * inst.aty().dot(x) + pen;
}

inline int cd_sweeps(const SubproblemSpec& spec, const std::vector<Index>& free, Vector& x, Vector& half_grad,
                     int max_sweeps) {
  const ProblemInstance& inst = spec.inst;
  const Matrix& gram = inst.gram();
  const double lambda = inst.lambda();
  int sweep = 0;
  while (sweep < max_sweeps) {
    ++sweep;
    bool support_changed = false;
    for (Index i : free) {
      const double diag = gram(i, i) + lambda;
      if (diag <= 0) continue;  // zero column with lambda = 0: coordinate has no effect
      const double xi = x[i];
      const double c = diag * xi - half_grad[i];
      const double t = 0.5 * spec.weights[i];
      const double next = spec.nonneg ? std::max(c - t, 0.0) / diag : soft_threshold(c, t) / diag;
      const double step = next - xi;
      if (step == 0.0) continue;
      if ((xi == 0.0) != (next == 0.0)) support_changed = true;
      x[i] = next;
      half_grad.noalias() += step * gram.col(i);
      half_grad[i] += lambda * step;
    }
    if (!x.allFinite())
      throw Error(ErrorCode::NonFiniteIterate, "coordinate descent diverged at sweep " + std::to_string(sweep));
    if (!support_changed && sweep > 1) break;
  }
  return sweep;
}

// One Newton step on the current orthant face. z minimizes the objective
// restricted to the nonzero coordinates with their signs fixed. Two
// candidates are compared and the better one kept: an exact line search
// toward z that stops where the first coordinate reaches zero, and z itself
// with every sign-changed coordinate set to zero
// (drops many coordinates at once). Returns false when x has no support or
// neither candidate improves on x.
inline bool face_step(const SubproblemSpec& spec, const std::vector<Index>& free, Vector& x) {
  const ProblemInstance& inst = spec.inst;
  std::vector<Index> support;
  for (Index i : free)
    if (x[i] != 0.0) support.push_back(i);
  if (support.empty()) return false;

  const Vector z = solve_face(inst, spec, support, x.cwiseSign());
  if (!z.allFinite()) throw Error(ErrorCode::NonFiniteIterate, "restricted solve produced non-finite values");
  // Inconsistent singular face: the objective decreases linearly along the
  // null-space residual r, so move along r until a coordinate reaches zero.
  {
    double r_norm = 0, rhs_norm = 0;
    Vector r = Vector::Zero(x.size());
    for (std::size_t a = 0; a < support.size(); ++a) {
      const Index i = support[a];
      const double rhs = inst.aty()[i] - 0.5 * spec.weights[i] * (x[i] > 0 ? 1.0 : -1.0);
      double hz = inst.lambda() * z[static_cast<Index>(a)];
      for (std::size_t b = 0; b < support.size(); ++b) hz += inst.gram()(i, support[b]) * z[static_cast<Index>(b)];
      r[i] = rhs - hz;
      r_norm = std::max(r_norm, std::abs(r[i]));
      rhs_norm = std::max(rhs_norm, std::abs(rhs));
    }
    if (r_norm > 1e-9 * (1.0 + rhs_norm)) {
      double t = INFINITY;
      Index hit = -1;
      for (Index i : support) {
        if (r[i] == 0.0 || (r[i] > 0) == (x[i] > 0)) continue;
        const double ti = -x[i] / r[i];
        if (ti < t) {
          t = ti;
          hit = i;
        }
      }
      if (hit < 0) return false;
      Vector next = x;
      for (Index i : support) next[i] = x[i] + t * r[i];
      next[hit] = 0.0;
      for (Index i : support)
        if (next[i] != 0.0 && (next[i] > 0) != (x[i] > 0)) next[i] = 0.0;
      if (!(reduced_objective(spec, next) <= reduced_objective(spec, x))) return false;
      x = std::move(next);
      return true;
    }
  }

  auto crosses = [&](std::size_t a) {
    const double zi = z[static_cast<Index>(a)];
    return zi == 0.0 || (zi > 0) != (x[support[a]] > 0);
  };
  double t_block = INFINITY;
  bool any_cross = false;
  for (std::size_t a = 0; a < support.size(); ++a) {
    if (!crosses(a)) continue;
    any_cross = true;
    const double xi = x[support[a]];
    t_block = std::min(t_block, xi / (xi - z[static_cast<Index>(a)]));
  }

  // The objective is an exact quadratic in t along d = z - x until the first
  // crossing; on a regular face its minimizer is t = 1.
  Vector d = Vector::Zero(x.size());
  for (std::size_t a = 0; a < support.size(); ++a) d[support[a]] = z[static_cast<Index>(a)] - x[support[a]];
  const Vector gd = inst.gram() * d;
  double slope = 0;
  for (std::size_t a = 0; a < support.size(); ++a) {
    const Index i = support[a];
    const double g = 2.0 * (inst.gram().row(i).dot(x) + inst.lambda() * x[i] - inst.aty()[i]) +
                     spec.weights[i] * (x[i] > 0 ? 1.0 : -1.0);
    slope += g * d[i];
  }
  const double curv = d.dot(gd) + inst.lambda() * d.squaredNorm();
  double t = curv > 0 ? -slope / (2.0 * curv) : (slope < 0 ? t_block : 0.0);
  t = std::min(std::max(t, 0.0), t_block);
  if (!std::isfinite(t)) t = 0.0;

  Vector blocked = x;
  for (std::size_t a = 0; a < support.size(); ++a) {
    const Index i = support[a];
    const double xi = x[i];
    double next = xi + t * d[i];
    if (crosses(a) && xi / (xi - z[static_cast<Index>(a)]) <= t) next = 0.0;
    if (next != 0.0 && (next > 0) != (xi > 0)) next = 0.0;
    blocked[i] = next;
  }

  // A singular face (lambda = 0) has no minimizer in general, so neither
  // candidate is trusted unless it does not increase the objective.
  const double current = reduced_objective(spec, x);
  double f_blocked = reduced_objective(spec, blocked);
  if (any_cross) {
    Vector projected = x;
    for (std::size_t a = 0; a < support.size(); ++a) projected[support[a]] = crosses(a) ? 0.0 : z[static_cast<Index>(a)];
    const double f_projected = reduced_objective(spec, projected);
    if (f_projected < f_blocked) {
      blocked = std::move(projected);
      f_blocked = f_projected;
    }
  }
  if (!(f_blocked <= current)) return false;
  x = std::move(blocked);
  return true;
}

// Primal-dual active set iteration (a semismooth Newton method on the
// proximal-gradient fixed point). The active set and signs come from one
// proximal step of length 1/L at the current point, L = ||A||^2 + lambda;
// the face system is then solved exactly on that set. Stops when the set
// repeats, when the objective stops decreasing, or after max_steps. x is
// only replaced by improving iterates.
inline int active_set_newton(const SubproblemSpec& spec, const std::vector<Index>& free, Vector& x, int max_steps) {
  const ProblemInstance& inst = spec.inst;
  const double lambda = inst.lambda();
  const double lip = inst.gram_norm() + lambda;
  if (!(lip > 0)) return 0;
  double best = reduced_objective(spec, x);
  std::vector<Index> prev_set;
  Vector prev_signs;
  int steps = 0;
  int stalls = 0;
  Vector cur = x;
  while (steps < max_steps) {
    ++steps;
    const Vector half_grad = inst.gram() * cur + lambda * cur - inst.aty();
    std::vector<Index> set;
    Vector signs = Vector::Zero(x.size());
    for (Index i : free) {
      const double u = cur[i] - half_grad[i] / lip;
      const double t = 0.5 * spec.weights[i] / lip;
      if (spec.nonneg ? u > t : std::abs(u) > t) {
        set.push_back(i);
        signs[i] = u > 0 ? 1.0 : -1.0;
      }
    }
    if (set == prev_set && signs == prev_signs) break;
    Vector next = Vector::Zero(x.size());
    if (!set.empty()) {
      const Vector z = solve_face(inst, spec, set, signs);
      if (!z.allFinite()) break;
      for (std::size_t a = 0; a < set.size(); ++a) next[set[a]] = z[static_cast<Index>(a)];
    }
    const double f = reduced_objective(spec, next);
    if (f < best) {
      best = f;
      x = next;
      stalls = 0;
    } else if (++stalls >= 3) {
      break;
    }
    cur = std::move(next);
    prev_set = std::move(set);
    prev_signs = std::move(signs);
  }
  return steps;
}

inline SubproblemSolution solve(const SubproblemSpec& spec) {
  validate(spec);
  const ProblemInstance& inst = spec.inst;
  const Index p = inst.cols();

  std::vector<Index> free;
  for (Index i = 0; i < p; ++i)
    if (!spec.frozen.contains(i)) free.push_back(i);

  SubproblemSolution sol;
  sol.x = spec.warm_start;
  Vector half_grad = inst.gram() * sol.x + inst.lambda() * sol.x - inst.aty();

  auto certify = [&]() {
    sol.kkt_residual = kkt_residual(inst, spec.weights, spec.frozen, spec.nonneg, sol.x);
    sol.converged = sol.kkt_residual <= spec.tol;
    return sol.converged;
  };

  // Coordinate descent settles the support cheaply; face steps then fix the
  // magnitudes exactly. Short sweeps between face steps let many coordinates
  // enter or leave at once.
  sol.inner_iters = cd_sweeps(spec, free, sol.x, half_grad, std::min(spec.max_inner_iters, 32));
  if (certify()) return sol;
  if (sol.inner_iters < spec.max_inner_iters) {
    sol.inner_iters += active_set_newton(spec, free, sol.x, std::min(spec.max_inner_iters - sol.inner_iters, 50));
    half_grad = inst.gram() * sol.x + inst.lambda() * sol.x - inst.aty();
    if (certify()) return sol;
  }
  while (sol.inner_iters < spec.max_inner_iters) {
    // Face steps repeat while they keep removing coordinates.
    bool moved = false;
    while (sol.inner_iters < spec.max_inner_iters) {
      ++sol.inner_iters;
      const Index before = (sol.x.array() != 0.0).count();
      if (!face_step(spec, free, sol.x)) break;
      moved = true;
      if ((sol.x.array() != 0.0).count() >= before) break;
    }
    if (moved) {
      half_grad = inst.gram() * sol.x + inst.lambda() * sol.x - inst.aty();
      if (certify()) return sol;
    }
    const int budget = std::min(spec.max_inner_iters - sol.inner_iters, 4);
    if (budget <= 0) break;
    sol.inner_iters += cd_sweeps(spec, free, sol.x, half_grad, budget);
    if (certify()) return sol;
  }
  certify();
  return sol;
}

}  // namespace detail

/// Unconstrained weighted-l1 + ridge problem. Returns the last iterate with
/// converged=false when max_inner_iters is exhausted.
inline SubproblemSolution solve_weighted_l1_ridge(const SubproblemSpec& spec) {
  require(!spec.nonneg, ErrorCode::InvalidArgument, "solve_weighted_l1_ridge needs nonneg=false");
  return detail::solve(spec);
}

/// Non-negative QP with linear weights.
inline SubproblemSolution solve_nonneg_weighted_qp(const SubproblemSpec& spec) {
  require(spec.nonneg, ErrorCode::InvalidArgument, "solve_nonneg_weighted_qp needs nonneg=true");
  return detail::solve(spec);
}

inline SubproblemSolution solve_subproblem(const SubproblemSpec& spec) {
  return spec.nonneg ? solve_nonneg_weighted_qp(spec) : solve_weighted_l1_ridge(spec);
}

}  // namespace icr
