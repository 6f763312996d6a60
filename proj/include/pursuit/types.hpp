#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace pursuit {

using Index = Eigen::Index;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Every randomized operation takes one of these by reference; nothing in the
/// library owns hidden random state.
using Rng = std::mt19937_64;

/// Module-level tolerances. The defaults are used everywhere unless a caller
/// passes its own.
struct Tolerances {
  /// Singular values below `rank_relative * sigma_max` count as zero.
  double rank_relative = 1e-10;
  /// Max-abs distance under which two atoms are considered identical.
  double symmetry = 1e-12;
  /// Relative eigenvalue cutoff used by pseudo-inverses.
  double pinv_relative = 1e-10;
  /// x counts as inside lin(A) when its off-span residual is below this
  /// fraction of ||x||.
  double span_membership = 1e-8;
};

inline constexpr Tolerances kDefaultTolerances{};

/// x lies outside lin(A), or an LP has no feasible point.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The requested computation is not available for this input (for example an
/// exact curvature constant of a non-quadratic objective).
class UnsupportedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file; `row()` is 1-based, 0 when not tied to a row.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t row = 0)
      : std::runtime_error(row == 0 ? what : what + " (row " + std::to_string(row) + ")"),
        row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

inline void require(bool condition, const std::string& message) {
  if (!condition) throw std::invalid_argument(message);
}

}  // namespace pursuit
