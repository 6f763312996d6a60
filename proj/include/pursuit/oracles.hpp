#pragma once

#include "pursuit/atoms.hpp"

#include <span>

namespace pursuit {

template <typename Scalar>
struct LmoResult {
  Index atom_index = -1;
  Vector<Scalar> atom;
  /// <query, atom>
  Scalar score = 0;
};

template <typename Scalar>
struct ApproxLmoResult {
  LmoResult<Scalar> result;
  /// <query, z_approx> / <query, z_exact>; 1 when the exact score is 0.
  Scalar achieved_delta = 1;
};

namespace detail {

template <typename Scalar>
void check_query(const Vector<Scalar>& query, const AtomSet<Scalar>& atoms) {
  require(atoms.size() > 0, "empty atom set");
  require(query.size() == atoms.dim(), "query dimension " + std::to_string(query.size()) +
                                           " does not match atom dimension " +
                                           std::to_string(atoms.dim()));
}

}  // namespace detail

/// argmin_{z in A} <query, z>, ties to the lowest index.
template <typename Scalar>
LmoResult<Scalar> lmo_exact(const Vector<Scalar>& query, const AtomSet<Scalar>& atoms) {
  detail::check_query(query, atoms);
  const Vector<Scalar> scores = atoms.matrix().transpose() * query;
  Index best = 0;
  for (Index i = 1; i < scores.size(); ++i)
    if (scores(i) < scores(best)) best = i;
  return {best, atoms.atom(best), scores(best)};
}

/// Best atom among `candidates` (ties to the lowest atom index).
template <typename Scalar>
LmoResult<Scalar> lmo_over(const Vector<Scalar>& query, const AtomSet<Scalar>& atoms,
                           std::span<const Index> candidates) {
  detail::check_query(query, atoms);
  require(!candidates.empty(), "empty candidate list");
  Index best = -1;
  Scalar best_score = 0;
  for (Index i : candidates) {
    require(i >= 0 && i < atoms.size(), "candidate index out of range");
    const Scalar s = atoms.atom(i).dot(query);
    if (best < 0 || s < best_score || (s == best_score && i < best)) {
      best = i;
      best_score = s;
    }
  }
  return {best, atoms.atom(best), best_score};
}

/// Quality ratio of an approximate answer relative to the exact one.
template <typename Scalar>
Scalar lmo_quality(Scalar approx_score, Scalar exact_score) {
  if (exact_score == Scalar(0)) return Scalar(1);
  return approx_score / exact_score;
}

/// Approximate LMO by subsampling whole +/- pairs: ceil(fraction * pairs)
/// pairs are drawn without replacement, so the scanned subset always
/// contains an atom with nonpositive score.
template <typename Scalar>
ApproxLmoResult<Scalar> lmo_approx(const Vector<Scalar>& query, const AtomSet<Scalar>& atoms,
                                   double subsample_fraction, Rng& rng) {
  detail::check_query(query, atoms);
  require(subsample_fraction > 0.0 && subsample_fraction <= 1.0,
          "subsample fraction must lie in (0, 1]");
  require(atoms.symmetric(), "approximate LMO requires a symmetric atom set");
  const LmoResult<Scalar> exact = lmo_exact(query, atoms);
  if (subsample_fraction == 1.0) return {exact, Scalar(1)};

  std::vector<Index> pairs = atoms.half_space_indices();
  const auto keep = static_cast<std::size_t>(
      std::ceil(subsample_fraction * static_cast<double>(pairs.size())));
  std::shuffle(pairs.begin(), pairs.end(), rng);
  // Scores come from the same product as the exact oracle so the ratio
  // never exceeds 1 through rounding.
  const Vector<Scalar> scores = atoms.matrix().transpose() * query;
  Index best = -1;
  for (std::size_t k = 0; k < keep; ++k) {
    for (Index i : {pairs[k], atoms.negation(pairs[k])}) {
      if (best < 0 || scores(i) < scores(best) || (scores(i) == scores(best) && i < best)) best = i;
    }
  }
  LmoResult<Scalar> approx{best, atoms.atom(best), scores(best)};
  return {approx, lmo_quality(approx.score, exact.score)};
}

/// Draws an atom index from `dist`. The score is left at 0; callers fill it
/// with the inner product they need.
template <typename Scalar>
LmoResult<Scalar> sample_atom(const SamplingDistribution<Scalar>& dist, const AtomSet<Scalar>& atoms,
                              Rng& rng) {
  require(dist.size() == atoms.size(), "distribution size does not match the atom set");
  const Index i = dist.draw(rng);
  return {i, atoms.atom(i), Scalar(0)};
}

/// ||d||_{A*} = max_{z in A} <z, d>
template <typename Scalar>
Scalar dual_atomic_norm(const Vector<Scalar>& d, const AtomSet<Scalar>& atoms) {
  detail::check_query(d, atoms);
  return (atoms.matrix().transpose() * d).maxCoeff();
}

}  // namespace pursuit
