#pragma once

#include "pursuit/curvature.hpp"
#include "pursuit/solvers.hpp"

#include <Eigen/Eigenvalues>

#include <sstream>

namespace pursuit {

/// Second-moment matrix P~ = E[z z^T] of a sampling distribution and its
/// pseudo-inverse P. Construction fails unless lin(A) is inside range(P~).
template <typename Scalar>
struct MetricP {
  Matrix<Scalar> p_tilde;
  Matrix<Scalar> p;
  bool range_ok = false;
  /// "analytic_coordinates" or "eigendecomposition"
  std::string provenance;

  /// ||v||_P^2 = v^T P v
  Scalar squared_norm(const Vector<Scalar>& v) const { return v.dot(p * v); }
};

template <typename Scalar>
MetricP<Scalar> compute_metric(const AtomSet<Scalar>& atoms, const SamplingDistribution<Scalar>& dist,
                               const Tolerances& tol = kDefaultTolerances) {
  dist.validate(atoms);
  const Index n = atoms.dim();
  MetricP<Scalar> out;
  if (dist.is_uniform_over_coordinates(atoms)) {
    out.p_tilde = Matrix<Scalar>::Identity(n, n) / Scalar(n);
    out.p = Matrix<Scalar>::Identity(n, n) * Scalar(n);
    out.range_ok = true;
    out.provenance = "analytic_coordinates";
    return out;
  }

  Vector<Scalar> w(atoms.size());
  for (Index i = 0; i < atoms.size(); ++i) w(i) = dist.weight(i);
  const Matrix<Scalar>& A = atoms.matrix();
  out.p_tilde = A * w.asDiagonal() * A.transpose();
  out.p_tilde = Scalar(0.5) * (out.p_tilde + out.p_tilde.transpose());

  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(out.p_tilde);
  const Vector<Scalar>& lambda = es.eigenvalues();
  const Scalar cutoff = Scalar(tol.pinv_relative) * lambda.cwiseAbs().maxCoeff();
  Vector<Scalar> inv = Vector<Scalar>::Zero(n);
  for (Index i = 0; i < n; ++i)
    if (lambda(i) > cutoff) inv(i) = Scalar(1) / lambda(i);
  out.p = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
  out.provenance = "eigendecomposition";

  const Matrix<Scalar>& U = atoms.span_basis();
  for (Index k = 0; k < U.cols(); ++k) {
    const Vector<Scalar> u = U.col(k);
    const Scalar err = (out.p * (out.p_tilde * u) - u).norm();
    if (err > Scalar(1e-8)) {
      // Name the part of u the distribution cannot reach.
      const Vector<Scalar> missing = u - out.p_tilde * (out.p * u);
      std::ostringstream msg;
      msg << "unsupported distribution: lin(A) direction not in range(P~), uncovered component [";
      for (Index i = 0; i < missing.size(); ++i) msg << (i ? ", " : "") << missing(i);
      msg << "]";
      throw UnsupportedError(msg.str());
    }
  }
  out.range_ok = true;
  return out;
}

/// Positive root of alpha^2 L nu = beta + alpha.
template <typename Scalar>
Scalar solve_alpha(Scalar beta, Scalar L, Scalar nu) {
  require(beta >= Scalar(0), "beta must be nonnegative");
  require(L > Scalar(0) && nu > Scalar(0), "L and nu must be positive");
  const Scalar c = L * nu;
  return (Scalar(1) + std::sqrt(Scalar(1) + Scalar(4) * beta * c)) / (Scalar(2) * c);
}

/// psi_t(x) = 1/2 ||x - x0||_P^2
///          + sum_s alpha_{s+1} (f(y_s) + (z_s^T grad f(y_s)) (z_s^T P (x - y_s)))
/// evaluated by replaying the stored model history.
template <typename Scalar>
Scalar model_psi_value(const std::vector<ModelStep<Scalar>>& history, const MetricP<Scalar>& metric,
                       const Vector<Scalar>& x, const Vector<Scalar>& x0, const Objective<Scalar>& f) {
  const Vector<Scalar> d0 = x - x0;
  Scalar psi = Scalar(0.5) * metric.squared_norm(d0);
  for (const auto& step : history) {
    const Scalar proj_grad = step.sampled_atom.dot(f.gradient(step.y));
    const Scalar proj_gap = step.sampled_atom.dot(metric.p * (x - step.y));
    psi += step.alpha * (f.value(step.y) + proj_grad * proj_gap);
  }
  return psi;
}

enum class AccelVariant {
  /// x moves along the LMO atom, v along an independently sampled atom.
  greedy,
  /// Both x and v move along the same sampled atom.
  random,
};

template <typename Scalar>
SolverTrace<Scalar> run_accelerated(AccelVariant variant, const Objective<Scalar>& f,
                                    const AtomSet<Scalar>& atoms, const SamplingDistribution<Scalar>& dist,
                                    Scalar L, Scalar nu, const SolverConfig<Scalar>& cfg,
                                    const Vector<Scalar>& x0) {
  require(cfg.max_iters >= 1, "max_iters must be at least 1");
  require(L > Scalar(0), "L must be positive");
  require(nu > Scalar(0), "nu must be positive");
  require(f.dim() == atoms.dim(), "objective and atoms have different dimensions");
  detail::require_in_span(x0, atoms);
  if (f.has_constant_hessian()) {
    const Scalar lmax = restricted_lambda_max(constant_hessian(f), atoms);
    require(L >= lmax * (Scalar(1) - Scalar(1e-10)),
            "L is below the largest Hessian eigenvalue on lin(A)");
  }
  const MetricP<Scalar> metric = compute_metric(atoms, dist);
  const bool diagnostics = cfg.psi_diagnostics;
  if (diagnostics && cfg.minimizer) require(cfg.minimizer->size() == atoms.dim(), "minimizer dimension mismatch");

  const auto start = std::chrono::steady_clock::now();
  Rng rng(cfg.seed);
  SolverTrace<Scalar> trace;
  trace.method = variant == AccelVariant::greedy ? "accel_mp" : "accel_rp";
  trace.seed = cfg.seed;
  trace.optimum = cfg.optimum;

  constexpr Scalar nan = std::numeric_limits<Scalar>::quiet_NaN();
  Vector<Scalar> x = x0;
  Vector<Scalar> v = x0;
  Vector<Scalar> linear_sum = Vector<Scalar>::Zero(x0.size());
  Scalar beta = 0;
  Scalar fx = f.value(x);
  Scalar psi_star = nan;
  Scalar psi_min = nan;
  if (diagnostics) {
    psi_min = 0;
    if (cfg.minimizer) psi_star = Scalar(0.5) * metric.squared_norm(*cfg.minimizer - x0);
  }
  trace.records.push_back({0, fx, -1, Scalar(0), nan, 0.0});
  trace.accel.push_back({0, 0, 0, fx, 0, psi_star, psi_min, diagnostics ? Scalar(0) : nan});
  if (cfg.keep_iterates) trace.iterates.push_back(x);

  for (int t = 0; t < cfg.max_iters; ++t) {
    if (cfg.optimum && cfg.gap_tolerance > Scalar(0) && fx - *cfg.optimum <= cfg.gap_tolerance) break;
    const Scalar alpha = solve_alpha(beta, L, nu);
    beta += alpha;
    const Scalar tau = alpha / beta;
    const Vector<Scalar> y = (Scalar(1) - tau) * x + tau * v;
    const Vector<Scalar> g = f.gradient(y);
    const Scalar fy = f.value(y);

    LmoResult<Scalar> step_atom =
        variant == AccelVariant::greedy ? lmo_exact(g, atoms) : sample_atom(dist, atoms, rng);
    step_atom.score = step_atom.atom.dot(g);
    const Scalar zz = step_atom.atom.squaredNorm();
    const Scalar gamma = -step_atom.score / (L * zz);
    const Vector<Scalar> x_next = y + gamma * step_atom.atom;

    Vector<Scalar> model_atom;
    Scalar model_score;
    if (variant == AccelVariant::greedy) {
      const LmoResult<Scalar> sampled = sample_atom(dist, atoms, rng);
      model_atom = sampled.atom;
      model_score = model_atom.dot(g);
    } else {
      model_atom = step_atom.atom;
      model_score = step_atom.score;
    }
    const Vector<Scalar> v_next = v - alpha * model_score * model_atom;

    AccelRecord<Scalar> diag{alpha, beta, tau, fy, -step_atom.score * step_atom.score / (Scalar(2) * L * zz),
                             nan, nan, nan};
    if (diagnostics) {
      if (cfg.minimizer)
        psi_star += alpha * (fy + model_score * model_atom.dot(metric.p * (*cfg.minimizer - y)));
      psi_min += Scalar(0.5) * metric.squared_norm(v_next - v) +
                 alpha * (fy + model_score * model_atom.dot(metric.p * (v_next - y)));
      linear_sum += alpha * model_score * model_atom;
      const Vector<Scalar> grad_psi = metric.p * (v_next - x0 + linear_sum);
      diag.psi_star = psi_star;
      diag.psi_min = psi_min;
      diag.psi_grad_norm = atoms.project_onto_span(grad_psi).norm();
    }
    if (cfg.keep_model_history) trace.model_history.push_back({y, model_atom, alpha});

    const Scalar f_next = f.value(x_next);
    if (!std::isfinite(static_cast<double>(f_next)) || !x_next.allFinite() || !v_next.allFinite()) {
      trace.x_final = x;
      throw NumericalFailure<Scalar>("non-finite iterate at iteration " + std::to_string(t + 1),
                                     std::move(trace));
    }
    x = x_next;
    v = v_next;
    fx = f_next;
    trace.records.push_back({t + 1, fx, step_atom.atom_index, gamma, nan, detail::seconds_since(start)});
    trace.accel.push_back(diag);
    if (cfg.keep_iterates) trace.iterates.push_back(x);
  }
  trace.x_final = x;
  return trace;
}

/// Accelerated matching pursuit: greedy x-step, sampled model step.
template <typename Scalar>
SolverTrace<Scalar> run_accel_mp(const Objective<Scalar>& f, const AtomSet<Scalar>& atoms,
                                 const SamplingDistribution<Scalar>& dist, Scalar L, Scalar nu,
                                 const SolverConfig<Scalar>& cfg, const Vector<Scalar>& x0) {
  return run_accelerated(AccelVariant::greedy, f, atoms, dist, L, nu, cfg, x0);
}

/// Accelerated random pursuit: one sampled atom drives both sequences.
template <typename Scalar>
SolverTrace<Scalar> run_accel_rp(const Objective<Scalar>& f, const AtomSet<Scalar>& atoms,
                                 const SamplingDistribution<Scalar>& dist, Scalar L, Scalar nu_prime,
                                 const SolverConfig<Scalar>& cfg, const Vector<Scalar>& x0) {
  return run_accelerated(AccelVariant::random, f, atoms, dist, L, nu_prime, cfg, x0);
}

enum class NuMethod { analytic_coordinates, sampled_bound, user_supplied };

inline const char* to_string(NuMethod m) {
  switch (m) {
    case NuMethod::analytic_coordinates: return "analytic_coordinates";
    case NuMethod::sampled_bound: return "sampled_bound";
    case NuMethod::user_supplied: return "user_supplied";
  }
  return "unknown";
}

template <typename Scalar>
struct NuEstimate {
  Scalar nu = 1;
  Scalar nu_prime = 1;
  NuMethod method = NuMethod::sampled_bound;
};

/// Largest values of the nu and nu' ratios over the atom directions, the
/// span basis and `n_probe` random directions of lin(A). For coordinates
/// with uniform weights nu' = n is exact and nu is clamped to [1, n].
template <typename Scalar>
NuEstimate<Scalar> estimate_nu(const AtomSet<Scalar>& atoms, const SamplingDistribution<Scalar>& dist,
                               const MetricP<Scalar>& metric, int n_probe, Rng& rng) {
  require(n_probe >= 1, "n_probe must be positive");
  dist.validate(atoms);
  const Matrix<Scalar>& A = atoms.matrix();
  const Index m = atoms.size();
  Vector<Scalar> w(m), p_norm(m), l2(m);
  for (Index i = 0; i < m; ++i) {
    w(i) = dist.weight(i);
    p_norm(i) = metric.squared_norm(atoms.atom(i));
    l2(i) = atoms.atom(i).squaredNorm();
  }

  NuEstimate<Scalar> out{Scalar(0), Scalar(0), NuMethod::sampled_bound};
  auto probe = [&](const Vector<Scalar>& d) {
    const Vector<Scalar> s = A.transpose() * d;
    const Vector<Scalar> s2 = s.cwiseAbs2();
    const Scalar numerator = (w.cwiseProduct(s2).cwiseProduct(p_norm)).sum();
    const Scalar random_den = (w.cwiseProduct(s2).cwiseQuotient(l2)).sum();
    Index best = 0;
    for (Index i = 1; i < m; ++i)
      if (s(i) > s(best)) best = i;
    const Scalar align = s(best);
    if (align * align > Scalar(0)) out.nu = std::max(out.nu, numerator * l2(best) / (align * align));
    if (random_den > Scalar(0)) out.nu_prime = std::max(out.nu_prime, numerator / random_den);
  };

  for (Index i = 0; i < m; ++i) probe(atoms.project_onto_span(Vector<Scalar>(atoms.atom(i))));
  const Matrix<Scalar>& U = atoms.span_basis();
  for (Index k = 0; k < U.cols(); ++k) probe(Vector<Scalar>(U.col(k)));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int p = 0; p < n_probe; ++p) {
    Vector<Scalar> c(U.cols());
    for (Index k = 0; k < c.size(); ++k) c(k) = Scalar(normal(rng));
    probe(Vector<Scalar>(U * c));
  }

  if (dist.is_uniform_over_coordinates(atoms)) {
    const Scalar n = Scalar(atoms.dim());
    out.nu_prime = n;
    out.nu = std::clamp(out.nu, Scalar(1), n);
    out.method = NuMethod::analytic_coordinates;
  }
  return out;
}

}  // namespace pursuit
