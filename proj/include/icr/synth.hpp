#pragma once

// Seeded synthetic instances and the figures of merit used to compare
// recovery methods.

#include "icr/model.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>

namespace icr {

/// splitmix64 finalizer.
inline std::uint64_t mix_seed(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed for stream `index` under `master`. Depends only on the pair, so trials
/// can be generated in any order or in parallel.
inline std::uint64_t split_seed(std::uint64_t master, std::uint64_t index) {
  return mix_seed(mix_seed(master) ^ mix_seed(index + 0x632be59bd9b4e019ULL));
}

struct PriorHyper {
  double lambda = 1e-2;
  double kappa = 1e-25;
};

struct SynthInstance {
  ProblemInstance inst;
  Vector x0;
  Index s = 0;
  std::uint64_t seed = 0;
};

/// Gaussian q x p matrix with unit-norm columns.
inline Matrix gaussian_unit_columns(Index q, Index p, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix A(q, p);
  for (Index j = 0; j < p; ++j) {
    for (Index i = 0; i < q; ++i) A(i, j) = normal(rng);
    const double n = A.col(j).norm();
    if (n > 0) A.col(j) /= n;
  }
  return A;
}

struct SynthOptions {
  /// Draw nonzero magnitudes as |N(0,1)| instead of N(0,1).
  bool nonneg_signal = false;
};

/// y = A x0 + n with A Gaussian (unit columns), x0 supported on s uniformly
/// chosen coordinates with N(0,1) values, n ~ N(0, sigma^2 I).
inline SynthInstance generate_instance(Index p, Index q, Index s, double sigma, PriorHyper hyper,
                                       std::uint64_t seed, SynthOptions opts = {}) {
  require(p >= 1 && q >= 1, ErrorCode::InvalidDims, "p and q must be >= 1");
  require(s >= 0 && s <= p, ErrorCode::InvalidDims, "sparsity must lie in [0, p]");
  require(sigma >= 0, ErrorCode::InvalidArgument, "sigma must be >= 0");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  Matrix A = gaussian_unit_columns(q, p, rng);

  std::vector<Index> order(static_cast<std::size_t>(p));
  std::iota(order.begin(), order.end(), Index{0});
  // partial Fisher-Yates
  for (Index k = 0; k < s; ++k) {
    std::uniform_int_distribution<Index> pick(k, p - 1);
    std::swap(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(pick(rng))]);
  }
  Vector x0 = Vector::Zero(p);
  for (Index k = 0; k < s; ++k) {
    double v = normal(rng);
    while (v == 0.0) v = normal(rng);
    x0[order[static_cast<std::size_t>(k)]] = opts.nonneg_signal ? std::abs(v) : v;
  }

  Vector noise(q);
  for (Index i = 0; i < q; ++i) noise[i] = sigma * normal(rng);
  Vector y = A * x0 + noise;

  const double sigma2 = sigma * sigma;
  InstanceChecks checks;
  checks.unit_columns = true;
  return SynthInstance{ProblemInstance::from_prior(std::move(A), std::move(y), hyper.lambda, sigma2, hyper.kappa, checks),
                       std::move(x0), s, seed};
}

/// (1/p) ||x - x_ref||^2
inline double mse(const Vector& x, const Vector& x_ref) {
  require(x.size() == x_ref.size() && x.size() > 0, ErrorCode::InvalidDims, "mse needs equal, non-empty lengths");
  return (x - x_ref).squaredNorm() / static_cast<double>(x.size());
}

enum class SupportMatchMode {
  /// Agreement counted over all p coordinates.
  AllIndices,
  /// Agreement counted over the union of both supports only.
  UnionOfSupports,
};

/// Percentage of coordinates whose active status (|v| > tau) agrees.
inline double support_match(const Vector& x, const Vector& x_ref, double tau,
                            SupportMatchMode mode = SupportMatchMode::AllIndices) {
  require(x.size() == x_ref.size(), ErrorCode::InvalidDims, "support_match needs equal lengths");
  require(tau > 0, ErrorCode::InvalidArgument, "tau must be positive");
  Index agree = 0, counted = 0;
  for (Index i = 0; i < x.size(); ++i) {
    const bool a = std::abs(x[i]) > tau;
    const bool b = std::abs(x_ref[i]) > tau;
    if (mode == SupportMatchMode::UnionOfSupports && !a && !b) continue;
    ++counted;
    if (a == b) ++agree;
  }
  if (counted == 0) return 100.0;
  return 100.0 * static_cast<double>(agree) / static_cast<double>(counted);
}

inline Index sparsity_level(const Vector& x, double tau) {
  require(tau > 0, ErrorCode::InvalidArgument, "tau must be positive");
  return (x.array().abs() > tau).count();
}

}  // namespace icr
