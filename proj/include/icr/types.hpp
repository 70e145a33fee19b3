#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace icr {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class ErrorCode {
  NonPositivePenalty,
  InvalidArgument,
  InfeasibleIndicator,
  DivisionByFrozenWeight,
  NonFiniteIterate,
  InnerSolverFailure,
  SingularSystem,
  BudgetExceeded,
  InvalidDims,
  TraceTooShort,
  BadMagic,
  TruncatedFile,
  DimMismatch,
  IoError,
  ConfigError,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonPositivePenalty: return "NonPositivePenalty";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InfeasibleIndicator: return "InfeasibleIndicator";
    case ErrorCode::DivisionByFrozenWeight: return "DivisionByFrozenWeight";
    case ErrorCode::NonFiniteIterate: return "NonFiniteIterate";
    case ErrorCode::InnerSolverFailure: return "InnerSolverFailure";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::InvalidDims: return "InvalidDims";
    case ErrorCode::TraceTooShort: return "TraceTooShort";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Set of coordinates pinned to zero. Membership only ever grows inside a
/// single refinement run.
class CoordinateSet {
 public:
  CoordinateSet() = default;
  explicit CoordinateSet(Index p) : mask_(static_cast<std::size_t>(p), false) {}

  Index dim() const { return static_cast<Index>(mask_.size()); }
  bool contains(Index i) const { return mask_[static_cast<std::size_t>(i)]; }
  void insert(Index i) { mask_[static_cast<std::size_t>(i)] = true; }

  Index count() const {
    Index n = 0;
    for (bool b : mask_) n += b ? 1 : 0;
    return n;
  }

  std::vector<Index> indices() const {
    std::vector<Index> out;
    for (std::size_t i = 0; i < mask_.size(); ++i)
      if (mask_[i]) out.push_back(static_cast<Index>(i));
    return out;
  }

  /// True when every member of `other` is also a member of *this.
  bool includes(const CoordinateSet& other) const {
    for (std::size_t i = 0; i < other.mask_.size(); ++i)
      if (other.mask_[i] && !mask_[i]) return false;
    return true;
  }

  bool operator==(const CoordinateSet&) const = default;

 private:
  std::vector<bool> mask_;
};

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) throw Error(code, what);
}

inline bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace icr
