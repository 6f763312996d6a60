#pragma once

#include "pursuit/types.hpp"

#include <cmath>
#include <vector>

namespace pursuit {

enum class LpStatus { optimal, infeasible, unbounded };

template <typename Scalar>
struct LpResult {
  LpStatus status = LpStatus::infeasible;
  Scalar value = 0;
  /// Primal solution, one entry per column of the constraint matrix.
  Vector<Scalar> primal;
  /// Dual solution y with A^T y <= c and b^T y = value at optimality.
  Vector<Scalar> dual;
  int pivots = 0;
};

/// Two-phase dense tableau simplex for
///
///     minimize c^T x  subject to  A x = b,  x >= 0.
///
/// Entering and leaving variables follow Bland's rule, so the method cannot
/// cycle. Redundant equality rows are tolerated: their artificial variable
/// stays basic at zero and is never allowed to re-enter.
template <typename Scalar>
LpResult<Scalar> solve_standard_lp(const Matrix<Scalar>& A, const Vector<Scalar>& b, const Vector<Scalar>& c) {
  const Index rows = A.rows();
  const Index cols = A.cols();
  require(b.size() == rows && c.size() == cols, "LP shape mismatch");

  const Scalar scale = std::max<Scalar>(Scalar(1), A.cwiseAbs().maxCoeff());
  const Scalar pivot_eps = Scalar(1e-11) * scale;
  const Scalar cost_eps = Scalar(1e-11) * std::max<Scalar>(Scalar(1), c.cwiseAbs().maxCoeff()) * scale;

  // Layout: [original | artificial | rhs], last row holds reduced costs.
  const Index rhs = cols + rows;
  Matrix<Scalar> T = Matrix<Scalar>::Zero(rows + 1, cols + rows + 1);
  Vector<Scalar> sign(rows);
  for (Index i = 0; i < rows; ++i) {
    sign(i) = b(i) < Scalar(0) ? Scalar(-1) : Scalar(1);
    T.row(i).head(cols) = sign(i) * A.row(i);
    T(i, cols + i) = Scalar(1);
    T(i, rhs) = sign(i) * b(i);
  }
  std::vector<Index> basis(static_cast<std::size_t>(rows));
  for (Index i = 0; i < rows; ++i) basis[static_cast<std::size_t>(i)] = cols + i;

  LpResult<Scalar> result;

  auto pivot = [&](Index r, Index e) {
    T.row(r) /= T(r, e);
    for (Index i = 0; i <= rows; ++i) {
      if (i == r) continue;
      const Scalar factor = T(i, e);
      if (factor != Scalar(0)) T.row(i) -= factor * T.row(r);
    }
    basis[static_cast<std::size_t>(r)] = e;
    ++result.pivots;
  };

  const int max_pivots = 50 * static_cast<int>(cols + rows) + 1000;

  // Runs simplex iterations on the current objective row; columns at or past
  // `enter_limit` may not enter. Returns false when unbounded.
  auto iterate = [&](Index enter_limit) {
    for (;;) {
      if (result.pivots > max_pivots) throw std::runtime_error("simplex pivot limit exceeded");
      Index enter = -1;
      for (Index j = 0; j < enter_limit; ++j) {
        if (T(rows, j) < -cost_eps) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return true;
      Index leave = -1;
      Scalar best_ratio = 0;
      for (Index i = 0; i < rows; ++i) {
        if (T(i, enter) <= pivot_eps) continue;
        const Scalar ratio = T(i, rhs) / T(i, enter);
        if (leave < 0 || ratio < best_ratio - Scalar(1e-14) * std::abs(best_ratio) ||
            (std::abs(ratio - best_ratio) <= Scalar(1e-14) * std::abs(best_ratio) &&
             basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)])) {
          leave = i;
          best_ratio = ratio;
        }
      }
      if (leave < 0) return false;
      pivot(leave, enter);
    }
  };

  // Phase I: minimize the sum of artificials.
  T.row(rows).setZero();
  for (Index i = 0; i < rows; ++i) {
    T.row(rows).head(cols) -= T.row(i).head(cols);
    T(rows, rhs) -= T(i, rhs);
  }
  iterate(cols);
  const Scalar b_scale = std::max<Scalar>(Scalar(1), b.cwiseAbs().maxCoeff());
  if (-T(rows, rhs) > Scalar(1e-9) * b_scale) {
    result.status = LpStatus::infeasible;
    return result;
  }

  // Drive zero-level artificials out of the basis where possible.
  for (Index i = 0; i < rows; ++i) {
    if (basis[static_cast<std::size_t>(i)] < cols) continue;
    Index e = -1;
    for (Index j = 0; j < cols; ++j) {
      if (std::abs(T(i, j)) > pivot_eps) {
        e = j;
        break;
      }
    }
    if (e >= 0) pivot(i, e);
  }

  // Phase II reduced costs: d_j = c_j - c_B^T B^{-1} A_j.
  T.row(rows).setZero();
  T.row(rows).head(cols) = c.transpose();
  for (Index i = 0; i < rows; ++i) {
    const Index bi = basis[static_cast<std::size_t>(i)];
    const Scalar cb = bi < cols ? c(bi) : Scalar(0);
    if (cb != Scalar(0)) T.row(rows) -= cb * T.row(i);
  }
  if (!iterate(cols)) {
    result.status = LpStatus::unbounded;
    return result;
  }

  result.status = LpStatus::optimal;
  result.primal = Vector<Scalar>::Zero(cols);
  Vector<Scalar> cb(rows);
  for (Index i = 0; i < rows; ++i) {
    const Index bi = basis[static_cast<std::size_t>(i)];
    if (bi < cols) result.primal(bi) = std::max<Scalar>(T(i, rhs), Scalar(0));
    cb(i) = bi < cols ? c(bi) : Scalar(0);
  }
  result.value = c.dot(result.primal);
  // B^{-1} sits in the artificial block of the final tableau.
  const Vector<Scalar> y_flipped = T.block(0, cols, rows, rows).transpose() * cb;
  result.dual = y_flipped.cwiseProduct(sign);
  return result;
}

}  // namespace pursuit
