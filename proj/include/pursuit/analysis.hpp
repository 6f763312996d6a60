#pragma once

#include "pursuit/accel.hpp"
#include "pursuit/curvature.hpp"
#include "pursuit/solvers.hpp"

#include <cstdio>
#include <map>
#include <optional>
#include <sstream>

namespace pursuit {

namespace detail {

template <typename Scalar>
Vector<Scalar> random_span_direction(const AtomSet<Scalar>& atoms, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const Matrix<Scalar>& U = atoms.span_basis();
  Vector<Scalar> c(U.cols());
  for (Index k = 0; k < c.size(); ++k) c(k) = Scalar(normal(rng));
  return U * c;
}

/// Structured probe directions: every atom projected on lin(A), then every
/// span basis vector.
template <typename Scalar>
std::vector<Vector<Scalar>> structured_directions(const AtomSet<Scalar>& atoms) {
  std::vector<Vector<Scalar>> out;
  for (Index i = 0; i < atoms.size(); ++i) out.push_back(atoms.project_onto_span(Vector<Scalar>(atoms.atom(i))));
  const Matrix<Scalar>& U = atoms.span_basis();
  for (Index k = 0; k < U.cols(); ++k) out.emplace_back(U.col(k));
  return out;
}

inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// E_z <d, z>^2 / ||d||_{A*}^2 for one direction d.
template <typename Scalar>
Scalar delta_hat_ratio(const Vector<Scalar>& d, const AtomSet<Scalar>& atoms,
                       const SamplingDistribution<Scalar>& dist) {
  const Vector<Scalar> s = atoms.matrix().transpose() * d;
  Scalar expectation = 0;
  for (Index i = 0; i < s.size(); ++i) expectation += dist.weight(i) * s(i) * s(i);
  const Scalar dual = s.maxCoeff();
  return expectation / (dual * dual);
}

/// Sampled min over d in lin(A) of E_z <d, z>^2 / ||d||_{A*}^2. Probes the
/// atoms, the span basis and `n_probe` random directions, in that order, so
/// the result never increases with n_probe. For uniform coordinates the
/// exact value 1/n is returned.
template <typename Scalar>
Scalar compute_delta_hat_sq(const AtomSet<Scalar>& atoms, const SamplingDistribution<Scalar>& dist, int n_probe,
                            Rng& rng) {
  require(n_probe >= 0, "n_probe must be nonnegative");
  require(atoms.symmetric(), "delta_hat_sq needs a symmetric atom set");
  dist.validate(atoms);
  if (dist.is_uniform_over_coordinates(atoms)) return Scalar(1) / Scalar(atoms.dim());
  Scalar best = std::numeric_limits<Scalar>::infinity();
  auto probe = [&](const Vector<Scalar>& d) {
    if (d.norm() == Scalar(0)) return;
    best = std::min(best, delta_hat_ratio(d, atoms, dist));
  };
  for (const auto& d : detail::structured_directions(atoms)) probe(d);
  for (int p = 0; p < n_probe; ++p) probe(detail::random_span_direction(atoms, rng));
  return best;
}

/// ||d||_{A*} / ||d||_2
template <typename Scalar>
Scalar directional_width(const Vector<Scalar>& d, const AtomSet<Scalar>& atoms) {
  return dual_atomic_norm(d, atoms) / d.norm();
}

/// Sampled minimal directional width min_{d in lin(A)} ||d||_{A*} / ||d||_2,
/// the inradius of conv(A) within lin(A).
///
/// Every probe that beats the running minimum is pushed towards a facet
/// normal: for unit x with dual certificate y of ||x||_A, the direction
/// y/||y|| has width at most 1/||y|| <= 1/||x||_A <= width(x). Decisions depend
/// only on the probes seen so far, so the result never increases with
/// n_probe. Coordinates return 1/sqrt(n) exactly.
template <typename Scalar>
Scalar compute_mdw(const AtomSet<Scalar>& atoms, int n_probe, Rng& rng, int refine_steps = 8) {
  require(n_probe >= 0, "n_probe must be nonnegative");
  require(atoms.symmetric(), "mdw needs a symmetric atom set");
  if (atoms.is_coordinate_set()) return Scalar(1) / std::sqrt(Scalar(atoms.dim()));
  Scalar best = std::numeric_limits<Scalar>::infinity();
  auto probe = [&](Vector<Scalar> d) {
    const Scalar dn = d.norm();
    if (dn == Scalar(0)) return;
    d /= dn;
    Scalar width = directional_width(d, atoms);
    if (!(width < best)) return;
    best = width;
    for (int k = 0; k < refine_steps; ++k) {
      const Vector<Scalar> y = atomic_norm_certificate(d, atoms).dual;
      const Scalar yn = y.norm();
      if (yn == Scalar(0)) break;
      const Vector<Scalar> next = y / yn;
      const Scalar w = directional_width(next, atoms);
      if (!(w < width * (Scalar(1) - Scalar(1e-14)))) break;
      d = next;
      width = w;
      best = std::min(best, width);
    }
  };
  for (const auto& d : detail::structured_directions(atoms)) probe(d);
  for (int p = 0; p < n_probe; ++p) probe(detail::random_span_direction(atoms, rng));
  return best;
}

/// mdw^2 * mu with mdw from compute_mdw (exact for coordinates).
template <typename Scalar>
Scalar compute_mu_atomic_lower(const Objective<Scalar>& f, const AtomSet<Scalar>& atoms, int n_probe = 2000,
                               std::uint64_t seed = 0) {
  require(atoms.span_dim() >= 1, "atom set spans the zero space");
  Rng rng(seed);
  return compute_mu_atomic_lower(f, atoms, compute_mdw(atoms, n_probe, rng));
}

enum class Provenance { analytic, exact, sampled, user_supplied, default_policy };

inline const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::analytic: return "analytic";
    case Provenance::exact: return "exact";
    case Provenance::sampled: return "sampled";
    case Provenance::user_supplied: return "user_supplied";
    case Provenance::default_policy: return "default_policy";
  }
  return "unknown";
}

/// Constants of a (problem, dictionary, distribution) triple. Unset fields
/// are absent from the serialized block.
template <typename Scalar>
struct ConstantsReport {
  struct Field {
    Scalar value;
    Provenance provenance;
  };
  std::optional<Field> delta_hat_sq, mdw, L, L_atomic, mu_lower, nu, nu_prime, radius_atomic;
  /// Free-form header lines (emitted as "# ..." comments).
  std::vector<std::string> notes;

  static Field make(Scalar v, Provenance p) { return Field{v, p}; }

  std::vector<std::pair<std::string, const std::optional<Field>*>> fields() const {
    return {{"delta_hat_sq", &delta_hat_sq}, {"mdw", &mdw},     {"L", &L},
            {"L_atomic", &L_atomic},         {"mu_lower", &mu_lower}, {"nu", &nu},
            {"nu_prime", &nu_prime},         {"R_atomic", &radius_atomic}};
  }

  /// Flat key=value block; each set field F also gets F.provenance.
  std::string to_text() const {
    std::ostringstream os;
    for (const auto& n : notes) os << "# " << n << "\n";
    for (const auto& [key, field] : fields()) {
      if (!*field) continue;
      os << key << "=" << detail::format_real(static_cast<double>((*field)->value)) << "\n";
      os << key << ".provenance=" << to_string((*field)->provenance) << "\n";
    }
    return os.str();
  }
};

enum class EnvelopeKind {
  /// 2 L_A R^2 / (delta^2 (t + 2)); scale = R_A
  sublinear_greedy,
  /// 2 L_A R^2 / (delta_hat^2 (t + 2)); scale = R_A
  sublinear_random,
  /// (1 - delta^2 mu_lower / L_A)^t eps_0; scale = eps_0
  linear,
  /// 2 L nu / (t (t + 1)) ||x* - x0||_P^2; scale = ||x* - x0||_P^2
  accel,
  /// as accel with nu'
  accel_random,
};

namespace detail {

template <typename Scalar>
Scalar need(const std::optional<typename ConstantsReport<Scalar>::Field>& f, const char* name) {
  if (!f) throw std::invalid_argument(std::string("envelope needs constant '") + name + "'");
  return f->value;
}

}  // namespace detail

/// Rate bound at iteration t. `delta` is the oracle quality for the greedy
/// kinds and ignored otherwise.
template <typename Scalar>
Scalar envelope(EnvelopeKind kind, const ConstantsReport<Scalar>& c, Scalar scale, int t, Scalar delta = 1) {
  require(t >= 0, "iteration must be nonnegative");
  using detail::need;
  switch (kind) {
    case EnvelopeKind::sublinear_greedy: {
      require(delta > Scalar(0), "delta must be positive");
      const Scalar la = need<Scalar>(c.L_atomic, "L_atomic");
      return Scalar(2) * la * scale * scale / (delta * delta * Scalar(t + 2));
    }
    case EnvelopeKind::sublinear_random: {
      const Scalar la = need<Scalar>(c.L_atomic, "L_atomic");
      const Scalar dh = need<Scalar>(c.delta_hat_sq, "delta_hat_sq");
      return Scalar(2) * la * scale * scale / (dh * Scalar(t + 2));
    }
    case EnvelopeKind::linear: {
      const Scalar la = need<Scalar>(c.L_atomic, "L_atomic");
      const Scalar mu = need<Scalar>(c.mu_lower, "mu_lower");
      return std::pow(Scalar(1) - delta * delta * mu / la, Scalar(t)) * scale;
    }
    case EnvelopeKind::accel:
    case EnvelopeKind::accel_random: {
      const Scalar L = need<Scalar>(c.L, "L");
      const Scalar nu = kind == EnvelopeKind::accel ? need<Scalar>(c.nu, "nu") : need<Scalar>(c.nu_prime, "nu_prime");
      if (t == 0) return std::numeric_limits<Scalar>::infinity();
      return Scalar(2) * L * nu / (Scalar(t) * Scalar(t + 1)) * scale;
    }
  }
  return std::numeric_limits<Scalar>::quiet_NaN();
}

/// a posteriori radius: max_t ||x_t - x*||_A over the stored iterates.
template <typename Scalar>
Scalar trace_radius(const SolverTrace<Scalar>& trace, const Vector<Scalar>& x_star, const AtomSet<Scalar>& atoms) {
  require(!trace.iterates.empty(), "trace has no stored iterates");
  Scalar r = 0;
  for (const auto& x : trace.iterates) r = std::max(r, atomic_norm(Vector<Scalar>(x - x_star), atoms));
  return r;
}

/// Atomic-norm radius of the level set {x in lin(A) : f(x) <= f(x0)} around
/// the span minimizer, for a quadratic that is strongly convex on lin(A).
///
/// Samples `n_samples` boundary points of the level ellipsoid; each new best
/// point is improved by ascent along its dual certificate y (the ellipsoid
/// point maximizing <y, u> has atomic norm at least that value). The
/// returned value is the best found times `safety`.
template <typename Scalar>
Scalar level_set_radius(const Objective<Scalar>& f, const AtomSet<Scalar>& atoms, const Vector<Scalar>& x0,
                        int n_samples, Rng& rng, Scalar safety = Scalar(1.05)) {
  require(n_samples >= 1, "n_samples must be positive");
  detail::require_in_span(x0, atoms);
  const SpanMinimum<Scalar> opt = minimize_on_span(f, atoms);
  const Scalar eps0 = f.value(x0) - opt.value;
  if (!(eps0 > Scalar(0))) return Scalar(0);

  const Matrix<Scalar>& U = atoms.span_basis();
  const Matrix<Scalar> reduced = U.transpose() * constant_hessian(f) * U;
  Eigen::LLT<Matrix<Scalar>> llt(reduced);
  if (llt.info() != Eigen::Success || restricted_lambda_min(constant_hessian(f), atoms) <= Scalar(0))
    throw UnsupportedError("level set is unbounded: the Hessian is singular on lin(A)");
  const Scalar scale = std::sqrt(Scalar(2) * eps0);
  const auto Lt = llt.matrixU();  // reduced = Lt^T Lt

  auto improve = [&](Vector<Scalar> c, Scalar value) {
    for (int k = 0; k < 20; ++k) {
      const Vector<Scalar> yr = U.transpose() * atomic_norm_certificate(Vector<Scalar>(U * c), atoms).dual;
      const Vector<Scalar> h = llt.solve(yr);
      const Scalar q = yr.dot(h);
      if (!(q > Scalar(0))) break;
      const Vector<Scalar> next = scale * h / std::sqrt(q);
      const Scalar v = atomic_norm(Vector<Scalar>(U * next), atoms);
      if (!(v > value * (Scalar(1) + Scalar(1e-14)))) break;
      c = next;
      value = v;
    }
    return value;
  };

  std::normal_distribution<double> normal(0.0, 1.0);
  Scalar best = 0;
  for (int s = 0; s < n_samples; ++s) {
    Vector<Scalar> w(U.cols());
    for (Index k = 0; k < w.size(); ++k) w(k) = Scalar(normal(rng));
    w.normalize();
    const Vector<Scalar> c = scale * Lt.solve(w);  // c^T reduced c = 2 eps0
    const Scalar v = atomic_norm(Vector<Scalar>(U * c), atoms);
    if (v > best) best = improve(c, v);
  }
  return best * safety;
}

enum class AffineAlgorithm { l2_step, affine_step };

/// Runs the chosen exact-oracle algorithm on (f, A, x0) and on the
/// reparameterized problem (f(M .), M^-1 A, M^-1 x0) and returns
/// max_t ||M xhat_t - x_t||_2.
template <typename Scalar>
Scalar affine_invariance_check(std::shared_ptr<const Objective<Scalar>> f, const AtomSet<Scalar>& atoms,
                               const Matrix<Scalar>& M, int iters, AffineAlgorithm algorithm,
                               std::optional<Vector<Scalar>> x0 = std::nullopt) {
  require(f != nullptr, "null objective");
  require(M.rows() == M.cols() && M.rows() == atoms.dim(), "M must be square with the atom dimension");
  require(iters >= 1, "iters must be positive");
  Eigen::JacobiSVD<Matrix<Scalar>> svd(M);
  const auto& sv = svd.singularValues();
  require(sv(sv.size() - 1) > Scalar(0) && sv(0) / sv(sv.size() - 1) < Scalar(1e6),
          "M is singular or badly conditioned (condition number must be below 1e6)");

  const Vector<Scalar> start = x0 ? *x0 : Vector<Scalar>::Zero(atoms.dim());
  const Eigen::PartialPivLU<Matrix<Scalar>> lu(M);
  const AtomSet<Scalar> moved(lu.solve(atoms.matrix()), atoms.symmetric(),
                              Tolerances{kDefaultTolerances.rank_relative, 1e-9,
                                         kDefaultTolerances.pinv_relative, kDefaultTolerances.span_membership});
  const ReparameterizedObjective<Scalar> fhat(f, M);

  SolverConfig<Scalar> cfg, cfg_hat;
  cfg.max_iters = cfg_hat.max_iters = iters;
  cfg.keep_iterates = cfg_hat.keep_iterates = true;
  if (algorithm == AffineAlgorithm::affine_step) {
    const Scalar la = compute_L_atomic(*f, atoms);
    const Scalar la_hat = compute_L_atomic<Scalar>(fhat, moved);
    if (std::abs(la - la_hat) > Scalar(1e-8) * std::max<Scalar>(Scalar(1), la))
      throw std::logic_error("L_A changed under reparameterization");
    cfg.smoothness = Smoothness<Scalar>::atomic(la);
    cfg_hat.smoothness = Smoothness<Scalar>::atomic(la_hat);
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(constant_hessian(*f), Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es_hat(constant_hessian<Scalar>(fhat), Eigen::EigenvaluesOnly);
    cfg.smoothness = Smoothness<Scalar>::l2(es.eigenvalues().maxCoeff());
    cfg_hat.smoothness = Smoothness<Scalar>::l2(es_hat.eigenvalues().maxCoeff());
  }
  const SolverTrace<Scalar> a = run_pursuit(*f, atoms, cfg, start);
  const SolverTrace<Scalar> b = run_pursuit<Scalar>(fhat, moved, cfg_hat, Vector<Scalar>(lu.solve(start)));
  Scalar worst = 0;
  for (std::size_t t = 0; t < a.iterates.size() && t < b.iterates.size(); ++t)
    worst = std::max(worst, (M * b.iterates[t] - a.iterates[t]).norm());
  return worst;
}

}  // namespace pursuit
