#pragma once

#include "pursuit/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

namespace pursuit {

/// Finite dictionary of atoms stored as the columns of a dense matrix.
///
/// When `symmetric()` is true every atom's negation is present and
/// `negation(i)` gives its index. The rank of the atom matrix and an
/// orthonormal basis of lin(A) are computed once at construction; the object
/// is immutable afterwards.
template <typename Scalar>
class AtomSet {
 public:
  using VectorType = Vector<Scalar>;
  using MatrixType = Matrix<Scalar>;

  AtomSet(MatrixType atoms, bool symmetric, const Tolerances& tol = kDefaultTolerances)
      : atoms_(std::move(atoms)), symmetric_(symmetric) {
    require(atoms_.cols() >= 1, "atom set must contain at least one atom");
    require(atoms_.rows() >= 1, "atoms must have positive dimension");
    require(atoms_.allFinite(), "atoms must be finite");
    for (Index i = 0; i < atoms_.cols(); ++i)
      require(atoms_.col(i).template lpNorm<Eigen::Infinity>() > Scalar(0),
              "atom " + std::to_string(i) + " is zero");

    negation_.assign(static_cast<std::size_t>(atoms_.cols()), -1);
    if (symmetric_) {
      for (Index i = 0; i < atoms_.cols(); ++i) {
        if (negation_[i] >= 0) continue;
        for (Index j = 0; j < atoms_.cols(); ++j) {
          if (j == i || negation_[j] >= 0) continue;
          if ((atoms_.col(i) + atoms_.col(j)).template lpNorm<Eigen::Infinity>() <=
              Scalar(tol.symmetry)) {
            negation_[i] = j;
            negation_[j] = i;
            break;
          }
        }
        require(negation_[i] >= 0,
                "atom set flagged symmetric but atom " + std::to_string(i) + " has no negation");
      }
    }
    compute_span(tol);
  }

  /// Appends the negation of every atom and drops duplicates (within the
  /// symmetry tolerance). Order is a_0, -a_0, a_1, -a_1, ...
  static AtomSet symmetrize(const MatrixType& atoms, const Tolerances& tol = kDefaultTolerances) {
    std::vector<VectorType> kept;
    auto present = [&](const VectorType& v) {
      return std::any_of(kept.begin(), kept.end(), [&](const VectorType& k) {
        return (k - v).template lpNorm<Eigen::Infinity>() <= Scalar(tol.symmetry);
      });
    };
    for (Index i = 0; i < atoms.cols(); ++i) {
      VectorType a = atoms.col(i);
      VectorType neg = -a;
      if (!present(a)) kept.push_back(a);
      if (!present(neg)) kept.push_back(neg);
    }
    require(!kept.empty(), "atom set must contain at least one atom");
    MatrixType m(atoms.rows(), static_cast<Index>(kept.size()));
    for (std::size_t i = 0; i < kept.size(); ++i) m.col(static_cast<Index>(i)) = kept[i];
    return AtomSet(std::move(m), true, tol);
  }

  Index dim() const { return atoms_.rows(); }
  Index size() const { return atoms_.cols(); }
  bool symmetric() const { return symmetric_; }
  Index span_dim() const { return span_basis_.cols(); }

  const MatrixType& matrix() const { return atoms_; }
  auto atom(Index i) const { return atoms_.col(i); }

  /// Orthonormal basis of lin(A), dim() x span_dim().
  const MatrixType& span_basis() const { return span_basis_; }

  /// Index of -a_i, or -1 when the set is not symmetric.
  Index negation(Index i) const { return negation_[static_cast<std::size_t>(i)]; }

  /// One representative per +/- pair: the atom whose first nonzero entry is
  /// positive. For a non-symmetric set every atom is returned.
  std::vector<Index> half_space_indices() const {
    std::vector<Index> out;
    for (Index i = 0; i < size(); ++i) {
      if (!symmetric_ || first_nonzero_positive(i)) out.push_back(i);
    }
    return out;
  }

  VectorType project_onto_span(const VectorType& x) const {
    return span_basis_ * (span_basis_.transpose() * x);
  }

  Scalar span_residual(const VectorType& x) const { return (x - project_onto_span(x)).norm(); }

  bool in_span(const VectorType& x, const Tolerances& tol = kDefaultTolerances) const {
    require(x.size() == dim(), "dimension mismatch");
    return span_residual(x) <= Scalar(tol.span_membership) * std::max<Scalar>(x.norm(), Scalar(1e-300));
  }

  /// max ||a||_2
  Scalar radius() const { return atoms_.colwise().norm().maxCoeff(); }

  /// max ||a_i - a_j||_2
  Scalar diameter() const {
    Scalar d = 0;
    for (Index i = 0; i < size(); ++i)
      for (Index j = i + 1; j < size(); ++j) d = std::max(d, (atoms_.col(i) - atoms_.col(j)).norm());
    return d;
  }

  /// True when the atoms are exactly {+-e_i : i < dim()}.
  bool is_coordinate_set() const {
    if (!symmetric_ || size() != 2 * dim()) return false;
    std::vector<int> seen(static_cast<std::size_t>(2 * dim()), 0);
    for (Index j = 0; j < size(); ++j) {
      Index nonzero = -1;
      for (Index i = 0; i < dim(); ++i) {
        if (atoms_(i, j) == Scalar(0)) continue;
        if (nonzero >= 0) return false;
        nonzero = i;
      }
      const Scalar v = atoms_(nonzero, j);
      if (v != Scalar(1) && v != Scalar(-1)) return false;
      seen[static_cast<std::size_t>(2 * nonzero + (v > 0 ? 0 : 1))]++;
    }
    return std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; });
  }

  /// The L1-ball corners {+e_0, -e_0, +e_1, -e_1, ...} of R^n.
  static AtomSet coordinates(Index n) {
    require(n >= 1, "dimension must be positive");
    MatrixType m = MatrixType::Zero(n, 2 * n);
    for (Index i = 0; i < n; ++i) {
      m(i, 2 * i) = Scalar(1);
      m(i, 2 * i + 1) = Scalar(-1);
    }
    return AtomSet(std::move(m), true);
  }

 private:
  bool first_nonzero_positive(Index j) const {
    for (Index i = 0; i < dim(); ++i) {
      if (atoms_(i, j) != Scalar(0)) return atoms_(i, j) > Scalar(0);
    }
    return false;
  }

  void compute_span(const Tolerances& tol) {
    Eigen::BDCSVD<MatrixType> svd(atoms_, Eigen::ComputeThinU);
    const auto& sv = svd.singularValues();
    const Scalar cutoff = Scalar(tol.rank_relative) * sv(0);
    Index rank = 0;
    while (rank < sv.size() && sv(rank) > cutoff) ++rank;
    span_basis_ = svd.matrixU().leftCols(rank);
  }

  MatrixType atoms_;
  bool symmetric_;
  std::vector<Index> negation_;
  MatrixType span_basis_;
};

/// Probability weights over the indices of an AtomSet.
///
/// With `half_space_dedup` only one member of each +/- pair carries weight;
/// the factories use the canonical representative from
/// AtomSet::half_space_indices().
template <typename Scalar>
class SamplingDistribution {
 public:
  SamplingDistribution(std::vector<Scalar> weights, bool half_space_dedup)
      : weights_(std::move(weights)), dedup_(half_space_dedup) {
    require(!weights_.empty(), "distribution has no weights");
    Scalar total = 0;
    for (Scalar w : weights_) {
      require(std::isfinite(static_cast<double>(w)) && w >= Scalar(0), "weights must be finite and nonnegative");
      total += w;
    }
    require(total > Scalar(0), "degenerate distribution: all weights are zero");
    require(std::abs(static_cast<double>(total) - 1.0) <= 1e-12, "weights must sum to 1");
    cumulative_.resize(weights_.size());
    std::partial_sum(weights_.begin(), weights_.end(), cumulative_.begin());
  }

  /// Uniform over the half-space representatives (or over all atoms when
  /// `dedup` is false).
  static SamplingDistribution uniform(const AtomSet<Scalar>& atoms, bool dedup = true) {
    std::vector<Scalar> w(static_cast<std::size_t>(atoms.size()), Scalar(0));
    if (dedup && atoms.symmetric()) {
      const auto reps = atoms.half_space_indices();
      for (Index i : reps) w[static_cast<std::size_t>(i)] = Scalar(1) / Scalar(reps.size());
    } else {
      std::fill(w.begin(), w.end(), Scalar(1) / Scalar(atoms.size()));
      dedup = false;
    }
    return SamplingDistribution(std::move(w), dedup);
  }

  static SamplingDistribution point_mass(const AtomSet<Scalar>& atoms, Index i) {
    require(i >= 0 && i < atoms.size(), "point mass index out of range");
    std::vector<Scalar> w(static_cast<std::size_t>(atoms.size()), Scalar(0));
    w[static_cast<std::size_t>(i)] = Scalar(1);
    return SamplingDistribution(std::move(w), atoms.symmetric());
  }

  const std::vector<Scalar>& weights() const { return weights_; }
  Scalar weight(Index i) const { return weights_[static_cast<std::size_t>(i)]; }
  Index size() const { return static_cast<Index>(weights_.size()); }
  bool half_space_dedup() const { return dedup_; }

  /// Checks the distribution against a dictionary; throws on mismatch.
  void validate(const AtomSet<Scalar>& atoms) const {
    require(size() == atoms.size(), "distribution size does not match the atom set");
    if (dedup_ && atoms.symmetric()) {
      for (Index i = 0; i < size(); ++i) {
        const Index j = atoms.negation(i);
        require(!(weight(i) > Scalar(0) && weight(j) > Scalar(0)),
                "half-space distribution puts weight on both atoms of pair " + std::to_string(i));
      }
    }
  }

  /// True when the weights are uniform over exactly one atom of each pair of
  /// a coordinate dictionary.
  bool is_uniform_over_coordinates(const AtomSet<Scalar>& atoms) const {
    if (!atoms.is_coordinate_set() || size() != atoms.size()) return false;
    const Scalar expected = Scalar(1) / Scalar(atoms.dim());
    Index positive = 0;
    for (Index i = 0; i < size(); ++i) {
      const Scalar w = weight(i);
      if (w == Scalar(0)) continue;
      if (std::abs(static_cast<double>(w - expected)) > 1e-15) return false;
      if (weight(atoms.negation(i)) != Scalar(0)) return false;
      ++positive;
    }
    return positive == atoms.dim();
  }

  Index draw(Rng& rng) const {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double r = u(rng) * static_cast<double>(cumulative_.back());
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), static_cast<Scalar>(r));
    if (it == cumulative_.end()) --it;
    Index idx = static_cast<Index>(it - cumulative_.begin());
    while (weights_[static_cast<std::size_t>(idx)] == Scalar(0) && idx > 0) --idx;
    return idx;
  }

 private:
  std::vector<Scalar> weights_;
  bool dedup_;
  std::vector<Scalar> cumulative_;
};

}  // namespace pursuit
