#pragma once

#include "pursuit/atomic_norm.hpp"
#include "pursuit/objective.hpp"

#include <Eigen/Eigenvalues>

namespace pursuit {

/// D(y, x) = f(y) - f(x) - <grad f(x), y - x>
template <typename Scalar>
Scalar bregman_gap(const Objective<Scalar>& f, const Vector<Scalar>& y, const Vector<Scalar>& x) {
  require(y.size() == f.dim() && x.size() == f.dim(), "dimension mismatch");
  return f.value(y) - f.value(x) - f.gradient(x).dot(y - x);
}

/// Exact L_A for a quadratic: the sup of z^T H z over the unit atomic ball is
/// attained at an extreme point, and every extreme point of conv(A) is an
/// atom, so the maximum over the atoms is exact.
template <typename Scalar>
Scalar compute_L_atomic(const Objective<Scalar>& f, const AtomSet<Scalar>& atoms) {
  require(f.dim() == atoms.dim(), "dimension mismatch");
  if (!f.has_constant_hessian())
    throw UnsupportedError("exact L_A needs a constant Hessian; use estimate_L_atomic_generic");
  const Matrix<Scalar> H = constant_hessian(f);
  const Matrix<Scalar>& A = atoms.matrix();
  return (A.cwiseProduct(H * A)).colwise().sum().maxCoeff();
}

/// Sampling lower estimate of L_A for arbitrary smooth f: the largest
/// 2/gamma^2 D(x + gamma z, x) seen over `n_samples` draws of x in lin(A),
/// unit-atomic-norm z and gamma in (0, 1]. Samples are drawn in a fixed order
/// from `rng`, so more samples never lowers the estimate.
template <typename Scalar>
Scalar estimate_L_atomic_generic(const Objective<Scalar>& f, const AtomSet<Scalar>& atoms, int n_samples,
                                 Rng& rng) {
  require(n_samples >= 1, "n_samples must be positive");
  require(f.dim() == atoms.dim(), "dimension mismatch");
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<Index> pick(0, atoms.size() - 1);
  const Matrix<Scalar>& U = atoms.span_basis();

  Scalar best = 0;
  for (int s = 0; s < n_samples; ++s) {
    Vector<Scalar> coords(U.cols());
    for (Index k = 0; k < coords.size(); ++k) coords(k) = Scalar(normal(rng));
    const Vector<Scalar> x = U * coords;

    Vector<Scalar> z = atoms.atom(pick(rng));
    if (unit(rng) < 0.5) {
      const Scalar theta = Scalar(unit(rng));
      const Scalar sign = unit(rng) < 0.5 ? Scalar(-1) : Scalar(1);
      z = theta * z + (Scalar(1) - theta) * sign * atoms.atom(pick(rng));
    }
    const Scalar zn = atomic_norm(z, atoms);
    if (zn <= Scalar(0)) continue;
    z /= zn;

    const Scalar gamma = Scalar(1.0 - unit(rng));  // (0, 1]
    const Scalar ratio = Scalar(2) / (gamma * gamma) * bregman_gap(f, Vector<Scalar>(x + gamma * z), x);
    best = std::max(best, ratio);
  }
  return best;
}

/// Largest eigenvalue of the Hessian restricted to lin(A) (0 for a zero
/// Hessian).
template <typename Scalar>
Scalar restricted_lambda_max(const Matrix<Scalar>& H, const AtomSet<Scalar>& atoms) {
  const Matrix<Scalar>& U = atoms.span_basis();
  const Matrix<Scalar> reduced = U.transpose() * H * U;
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(reduced, Eigen::EigenvaluesOnly);
  return std::max<Scalar>(es.eigenvalues().maxCoeff(), Scalar(0));
}

/// Smallest eigenvalue of the Hessian restricted to lin(A), clamped to 0 when
/// it is numerically zero.
template <typename Scalar>
Scalar restricted_lambda_min(const Matrix<Scalar>& H, const AtomSet<Scalar>& atoms) {
  const Matrix<Scalar>& U = atoms.span_basis();
  const Matrix<Scalar> reduced = U.transpose() * H * U;
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(reduced, Eigen::EigenvaluesOnly);
  const Scalar lo = es.eigenvalues().minCoeff();
  const Scalar hi = es.eigenvalues().cwiseAbs().maxCoeff();
  if (lo <= Scalar(1e-12) * hi) return Scalar(0);
  return lo;
}

/// Lower bound mdw^2 * mu on the atomic strong-convexity constant, where mu
/// is the restricted smallest Hessian eigenvalue. The minimal directional
/// width is supplied by the caller (see analysis.hpp).
template <typename Scalar>
Scalar compute_mu_atomic_lower(const Objective<Scalar>& f, const AtomSet<Scalar>& atoms, Scalar mdw) {
  require(f.dim() == atoms.dim(), "dimension mismatch");
  require(atoms.span_dim() >= 1, "atom set spans the zero space");
  require(mdw > Scalar(0), "minimal directional width must be positive");
  const Scalar mu = restricted_lambda_min(constant_hessian(f), atoms);
  return mdw * mdw * mu;
}

/// Max over coordinates of |fd_i - g_i| / max(1, |g_i|), with central
/// differences of step h.
template <typename Scalar>
Scalar check_gradient(const Objective<Scalar>& f, const Vector<Scalar>& x, Scalar h = Scalar(1e-6)) {
  require(h > Scalar(0), "finite-difference step must be positive");
  require(x.size() == f.dim(), "dimension mismatch");
  const Vector<Scalar> g = f.gradient(x);
  Scalar worst = 0;
  Vector<Scalar> probe = x;
  for (Index i = 0; i < x.size(); ++i) {
    const Scalar xi = x(i);
    // Divide by the representable step actually taken.
    const Scalar up = xi + h;
    const Scalar down = xi - h;
    probe(i) = up;
    const Scalar f_up = f.value(probe);
    probe(i) = down;
    const Scalar f_down = f.value(probe);
    probe(i) = xi;
    const Scalar fd = (f_up - f_down) / (up - down);
    worst = std::max(worst, std::abs(fd - g(i)) / std::max<Scalar>(Scalar(1), std::abs(g(i))));
  }
  return worst;
}

template <typename Scalar>
struct CurvatureConstants {
  /// lambda_max of the Hessian
  Scalar L2 = 0;
  Scalar L_atomic = 0;
  Scalar mu_atomic_lower = 0;
  /// lambda_min of the Hessian restricted to lin(A)
  Scalar mu2 = 0;
};

template <typename Scalar>
CurvatureConstants<Scalar> compute_curvature(const Objective<Scalar>& f, const AtomSet<Scalar>& atoms,
                                             Scalar mdw) {
  const Matrix<Scalar> H = constant_hessian(f);
  CurvatureConstants<Scalar> out;
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(H, Eigen::EigenvaluesOnly);
  out.L2 = std::max<Scalar>(es.eigenvalues().maxCoeff(), Scalar(0));
  out.L_atomic = compute_L_atomic(f, atoms);
  out.mu2 = restricted_lambda_min(H, atoms);
  out.mu_atomic_lower = mdw * mdw * out.mu2;
  return out;
}

}  // namespace pursuit
