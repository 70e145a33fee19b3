#pragma once

// Spike-and-slab recovery problem: measurement model y = A x + n, the penalty
// vector derived from the prior hyperparameters, and the two objectives the
// rest of the library is built around.

#include "icr/types.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <utility>

namespace icr {

/// Activation penalty of a single coefficient. Zero exactly when
/// 2*pi*sigma2*(1-kappa)^2 == lambda*kappa^2; does not validate.
inline double penalty_value(double kappa, double sigma2, double lambda) {
  const double one_minus = 1.0 - kappa;
  const double numer = 2.0 * std::numbers::pi * sigma2 * one_minus * one_minus;
  const double denom = lambda * kappa * kappa;
  return sigma2 * std::log(numer / denom);
}

/// Penalty vector rho for per-coefficient activation probabilities kappa.
/// Throws NonPositivePenalty when any entry is <= 0: such a coefficient would
/// be free (or rewarded) to activate and the sparsity term disappears.
inline Vector compute_rho(const Vector& kappa, double sigma2, double lambda) {
  require(sigma2 > 0 && std::isfinite(sigma2), ErrorCode::InvalidArgument, "sigma2 must be positive");
  require(lambda > 0 && std::isfinite(lambda), ErrorCode::InvalidArgument, "lambda must be positive");
  Vector rho(kappa.size());
  for (Index i = 0; i < kappa.size(); ++i) {
    const double k = kappa[i];
    require(k > 0 && k < 1, ErrorCode::InvalidArgument,
            "kappa[" + std::to_string(i) + "] must lie in (0,1)");
    rho[i] = penalty_value(k, sigma2, lambda);
    require(rho[i] > 0, ErrorCode::NonPositivePenalty,
            "rho[" + std::to_string(i) + "] = " + std::to_string(rho[i]));
  }
  return rho;
}

struct InstanceChecks {
  /// Require every column of A to have unit Euclidean norm (within column_tol).
  bool unit_columns = false;
  /// Require |y_i| <= 1 for every observation.
  bool bounded_observations = false;
  double column_tol = 1e-9;
};

/// Immutable recovery problem. Penalties are computed and validated eagerly;
/// the Gram matrix and A^T y are cached for the solvers.
class ProblemInstance {
 public:
  /// Build from prior hyperparameters (lambda, sigma2, kappa).
  static ProblemInstance from_prior(Matrix A, Vector y, double lambda, double sigma2, Vector kappa,
                                    InstanceChecks checks = {}) {
    Vector rho = compute_rho(kappa, sigma2, lambda);
    ProblemInstance inst(std::move(A), std::move(y), lambda, std::move(rho), checks);
    inst.sigma2_ = sigma2;
    inst.kappa_ = std::move(kappa);
    return inst;
  }

  static ProblemInstance from_prior(Matrix A, Vector y, double lambda, double sigma2, double kappa,
                                    InstanceChecks checks = {}) {
    const Index p = A.cols();
    return from_prior(std::move(A), std::move(y), lambda, sigma2, Vector::Constant(p, kappa), checks);
  }

  /// Build directly from a penalty vector. lambda may be 0 here (pure least
  /// squares); rho must still be strictly positive.
  static ProblemInstance from_penalties(Matrix A, Vector y, double lambda, Vector rho,
                                        InstanceChecks checks = {}) {
    require(lambda >= 0 && std::isfinite(lambda), ErrorCode::InvalidArgument, "lambda must be >= 0");
    for (Index i = 0; i < rho.size(); ++i)
      require(rho[i] > 0 && std::isfinite(rho[i]), ErrorCode::NonPositivePenalty,
              "rho[" + std::to_string(i) + "] must be positive");
    return ProblemInstance(std::move(A), std::move(y), lambda, std::move(rho), checks);
  }

  Index rows() const { return A_.rows(); }
  Index cols() const { return A_.cols(); }
  const Matrix& A() const { return A_; }
  const Vector& y() const { return y_; }
  double lambda() const { return lambda_; }
  const Vector& rho() const { return rho_; }
  const std::optional<double>& sigma2() const { return sigma2_; }
  const std::optional<Vector>& kappa() const { return kappa_; }

  /// A^T A (without the ridge term).
  const Matrix& gram() const { return gram_; }
  const Vector& aty() const { return aty_; }
  double y_squared_norm() const { return y_sq_; }
  /// Largest eigenvalue of A^T A, i.e. ||A||_2^2.
  double gram_norm() const { return gram_norm_; }

 private:
  ProblemInstance(Matrix A, Vector y, double lambda, Vector rho, const InstanceChecks& checks)
      : A_(std::move(A)), y_(std::move(y)), lambda_(lambda), rho_(std::move(rho)) {
    require(A_.rows() >= 1 && A_.cols() >= 1, ErrorCode::InvalidDims, "A must be non-empty");
    require(y_.size() == A_.rows(), ErrorCode::InvalidDims, "y length must equal rows of A");
    require(rho_.size() == A_.cols(), ErrorCode::InvalidDims, "rho length must equal columns of A");
    require(A_.allFinite() && y_.allFinite(), ErrorCode::InvalidArgument, "A and y must be finite");
    if (checks.unit_columns) {
      for (Index j = 0; j < A_.cols(); ++j)
        require(std::abs(A_.col(j).norm() - 1.0) <= checks.column_tol, ErrorCode::InvalidArgument,
                "column " + std::to_string(j) + " of A is not unit norm");
    }
    if (checks.bounded_observations) {
      require(y_.cwiseAbs().maxCoeff() <= 1.0, ErrorCode::InvalidArgument, "|y_i| must not exceed 1");
    }
    gram_ = A_.transpose() * A_;
    aty_ = A_.transpose() * y_;
    y_sq_ = y_.squaredNorm();
    const Matrix small = A_.rows() < A_.cols() ? Matrix(A_ * A_.transpose()) : gram_;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(small, Eigen::EigenvaluesOnly);
    gram_norm_ = std::max(0.0, eig.eigenvalues().maxCoeff());
  }

  Matrix A_;
  Vector y_;
  double lambda_;
  Vector rho_;
  std::optional<double> sigma2_;
  std::optional<Vector> kappa_;
  Matrix gram_;
  Vector aty_;
  double y_sq_ = 0;
  double gram_norm_ = 0;
};

/// Binary activation pattern gamma.
class IndicatorVector {
 public:
  IndicatorVector() = default;
  explicit IndicatorVector(Index p) : bits_(Eigen::VectorXi::Zero(p)) {}
  explicit IndicatorVector(Eigen::VectorXi bits) : bits_(std::move(bits)) {
    for (Index i = 0; i < bits_.size(); ++i)
      require(bits_[i] == 0 || bits_[i] == 1, ErrorCode::InvalidArgument, "indicator entries must be 0 or 1");
  }

  /// gamma_i = 1 iff x_i != 0.
  static IndicatorVector of(const Vector& x) {
    IndicatorVector g(x.size());
    for (Index i = 0; i < x.size(); ++i) g.bits_[i] = x[i] != 0.0 ? 1 : 0;
    return g;
  }

  Index size() const { return bits_.size(); }
  bool operator[](Index i) const { return bits_[i] != 0; }
  void set(Index i, bool on) { bits_[i] = on ? 1 : 0; }
  Index count() const { return bits_.sum(); }
  const Eigen::VectorXi& bits() const { return bits_; }
  bool operator==(const IndicatorVector& o) const { return bits_ == o.bits_; }

 private:
  Eigen::VectorXi bits_;
};

inline double residual_ridge(const ProblemInstance& inst, const Vector& x) {
  return (inst.y() - inst.A() * x).squaredNorm() + inst.lambda() * x.squaredNorm();
}

/// Exact MAP cost ||y - A x||^2 + lambda ||x||^2 + sum_i rho_i gamma_i.
inline double map_objective(const ProblemInstance& inst, const Vector& x, const IndicatorVector& gamma) {
  require(x.size() == inst.cols() && gamma.size() == inst.cols(), ErrorCode::InvalidDims,
          "x and gamma must have length p");
  double penalty = 0;
  for (Index i = 0; i < x.size(); ++i) {
    if (x[i] != 0.0 && !gamma[i])
      throw Error(ErrorCode::InfeasibleIndicator, "x[" + std::to_string(i) + "] != 0 but gamma is 0");
    if (gamma[i]) penalty += inst.rho()[i];
  }
  return residual_ridge(inst, x) + penalty;
}

/// MAP cost with gamma taken as the support of x.
inline double map_objective(const ProblemInstance& inst, const Vector& x) {
  return map_objective(inst, x, IndicatorVector::of(x));
}

/// ||y - A x||^2 + lambda ||x||^2 + sum_i w_i |x_i|.
inline double weighted_objective(const ProblemInstance& inst, const Vector& x, const Vector& weights) {
  double pen = 0;
  for (Index i = 0; i < x.size(); ++i)
    if (x[i] != 0.0) pen += weights[i] * std::abs(x[i]);
  return residual_ridge(inst, x) + pen;
}

/// Per-iteration surrogate f_n(x) with weights rho_i / |mu_prev_i|. The
/// constant ||y||^2 is included, so f_n(0) = ||y||^2. Frozen coordinates must
/// be zero in x and contribute no penalty.
inline double surrogate_objective(const ProblemInstance& inst, const Vector& x, const Vector& mu_prev,
                                  const CoordinateSet& frozen) {
  const Index p = inst.cols();
  require(x.size() == p && mu_prev.size() == p, ErrorCode::InvalidDims, "x and mu_prev must have length p");
  require(frozen.dim() == 0 || frozen.dim() == p, ErrorCode::InvalidDims, "frozen set must have dimension p");
  double pen = 0;
  for (Index i = 0; i < p; ++i) {
    if (frozen.dim() != 0 && frozen.contains(i)) {
      require(x[i] == 0.0, ErrorCode::InvalidArgument, "frozen coordinate " + std::to_string(i) + " is nonzero");
      continue;
    }
    if (mu_prev[i] == 0.0)
      throw Error(ErrorCode::DivisionByFrozenWeight, "mu_prev[" + std::to_string(i) + "] is zero");
    pen += inst.rho()[i] / std::abs(mu_prev[i]) * std::abs(x[i]);
  }
  return residual_ridge(inst, x) + pen;
}

inline double surrogate_objective(const ProblemInstance& inst, const Vector& x, const Vector& mu_prev) {
  return surrogate_objective(inst, x, mu_prev, CoordinateSet{});
}

struct NormalizedColumns {
  Matrix A;
  /// Original column norms; A_original.col(j) == A.col(j) * scales[j].
  Vector scales;
};

/// Rescale every column of A to unit norm and report the factors.
inline NormalizedColumns normalize_columns(const Matrix& A) {
  NormalizedColumns out{A, Vector(A.cols())};
  for (Index j = 0; j < A.cols(); ++j) {
    const double n = A.col(j).norm();
    require(n > 0, ErrorCode::InvalidArgument, "column " + std::to_string(j) + " is zero");
    out.scales[j] = n;
    out.A.col(j) /= n;
  }
  return out;
}

}  // namespace icr
