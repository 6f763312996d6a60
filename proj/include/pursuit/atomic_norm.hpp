#pragma once

#include "pursuit/atoms.hpp"
#include "pursuit/simplex.hpp"

namespace pursuit {

template <typename Scalar>
struct AtomicNormResult {
  Scalar value = 0;
  /// Nonnegative weights c with sum_i c_i a_i = x.
  Vector<Scalar> coefficients;
  /// Dual certificate y in lin(A): <a_i, y> <= 1 for all atoms and <x, y> = value.
  Vector<Scalar> dual;
};

/// Gauge of conv(A) at x, with primal and dual certificates.
///
/// Solves min sum_i c_i s.t. sum_i c_i a_i = x, c >= 0 over the (symmetric)
/// atom set, written in an orthonormal basis of lin(A) so the equality
/// system has full row rank.
template <typename Scalar>
AtomicNormResult<Scalar> atomic_norm_certificate(const Vector<Scalar>& x, const AtomSet<Scalar>& atoms,
                                                 const Tolerances& tol = kDefaultTolerances) {
  require(x.size() == atoms.dim(), "dimension mismatch");
  require(atoms.symmetric(), "atomic norm requires a symmetric atom set");
  require(x.allFinite(), "x must be finite");
  AtomicNormResult<Scalar> out;
  const Scalar xnorm = x.norm();
  if (xnorm == Scalar(0)) {
    out.coefficients = Vector<Scalar>::Zero(atoms.size());
    out.dual = Vector<Scalar>::Zero(atoms.dim());
    return out;
  }
  if (atoms.is_coordinate_set()) {
    // Cross-polytope: the gauge is ||x||_1 with certificate sign(x).
    out.value = x.template lpNorm<1>();
    out.dual = x.array().sign().matrix();
    out.coefficients = Vector<Scalar>::Zero(atoms.size());
    for (Index j = 0; j < atoms.size(); ++j) {
      Index i = 0;
      while (atoms.matrix()(i, j) == Scalar(0)) ++i;
      out.coefficients(j) = std::max(Scalar(0), atoms.matrix()(i, j) * x(i));
    }
    return out;
  }
  if (atoms.span_residual(x) > Scalar(tol.span_membership) * xnorm)
    throw InfeasibleError("x is not in the linear span of the atoms");

  const Matrix<Scalar>& U = atoms.span_basis();
  const Matrix<Scalar> reduced = U.transpose() * atoms.matrix();
  const Vector<Scalar> rhs = U.transpose() * x;
  const Vector<Scalar> cost = Vector<Scalar>::Ones(atoms.size());
  const LpResult<Scalar> lp = solve_standard_lp<Scalar>(reduced, rhs, cost);
  if (lp.status != LpStatus::optimal) throw InfeasibleError("atomic norm LP has no feasible point");
  out.value = lp.value;
  out.coefficients = lp.primal;
  out.dual = U * lp.dual;
  return out;
}

/// ||x||_A = inf { c > 0 : x in c conv(A) }; 0 for x = 0.
template <typename Scalar>
Scalar atomic_norm(const Vector<Scalar>& x, const AtomSet<Scalar>& atoms,
                   const Tolerances& tol = kDefaultTolerances) {
  return atomic_norm_certificate(x, atoms, tol).value;
}

}  // namespace pursuit
