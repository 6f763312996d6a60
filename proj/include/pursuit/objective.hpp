#pragma once

#include "pursuit/atoms.hpp"

#include <memory>
#include <optional>

namespace pursuit {

/// Smooth convex function on R^n.
template <typename Scalar>
class Objective {
 public:
  using VectorType = Vector<Scalar>;
  using MatrixType = Matrix<Scalar>;

  virtual ~Objective() = default;

  virtual Index dim() const = 0;
  virtual Scalar value(const VectorType& x) const = 0;
  virtual VectorType gradient(const VectorType& x) const = 0;

  virtual std::optional<MatrixType> hessian(const VectorType& /*x*/) const { return std::nullopt; }
  virtual bool has_constant_hessian() const { return false; }

  /// Unconstrained minimum (over R^n) when known in closed form.
  virtual std::optional<Scalar> optimum_value() const { return std::nullopt; }
};

/// f(x) = 1/2 ||M x - b||^2
template <typename Scalar>
class LeastSquares final : public Objective<Scalar> {
 public:
  using typename Objective<Scalar>::VectorType;
  using typename Objective<Scalar>::MatrixType;

  LeastSquares(MatrixType design, VectorType target) : design_(std::move(design)), target_(std::move(target)) {
    require(design_.rows() == target_.size(), "design rows must match target length");
    require(design_.cols() >= 1, "design needs at least one column");
    require(design_.allFinite() && target_.allFinite(), "least-squares data must be finite");
    gram_ = design_.transpose() * design_;
  }

  /// The classical pursuit objective 1/2 ||x - b||^2.
  static LeastSquares distance_to(VectorType b) {
    const Index n = b.size();
    return LeastSquares(MatrixType::Identity(n, n), std::move(b));
  }

  Index dim() const override { return design_.cols(); }

  Scalar value(const VectorType& x) const override {
    require(x.size() == dim(), "dimension mismatch");
    return Scalar(0.5) * (design_ * x - target_).squaredNorm();
  }

  VectorType gradient(const VectorType& x) const override {
    require(x.size() == dim(), "dimension mismatch");
    return design_.transpose() * (design_ * x - target_);
  }

  std::optional<MatrixType> hessian(const VectorType&) const override { return gram_; }
  bool has_constant_hessian() const override { return true; }

  std::optional<Scalar> optimum_value() const override {
    const VectorType x = design_.completeOrthogonalDecomposition().solve(target_);
    return value(x);
  }

  const MatrixType& design() const { return design_; }
  const VectorType& target() const { return target_; }
  const MatrixType& gram() const { return gram_; }

 private:
  MatrixType design_;
  VectorType target_;
  MatrixType gram_;
};

/// f(x) = <c, x> + offset
template <typename Scalar>
class LinearObjective final : public Objective<Scalar> {
 public:
  using typename Objective<Scalar>::VectorType;
  using typename Objective<Scalar>::MatrixType;

  explicit LinearObjective(VectorType c, Scalar offset = 0) : c_(std::move(c)), offset_(offset) {}

  Index dim() const override { return c_.size(); }
  Scalar value(const VectorType& x) const override { return c_.dot(x) + offset_; }
  VectorType gradient(const VectorType&) const override { return c_; }
  std::optional<MatrixType> hessian(const VectorType&) const override {
    return MatrixType::Zero(dim(), dim());
  }
  bool has_constant_hessian() const override { return true; }

 private:
  VectorType c_;
  Scalar offset_;
};

/// g(x_hat) = f(T x_hat), with grad g = T^T grad f(T x_hat).
template <typename Scalar>
class ReparameterizedObjective final : public Objective<Scalar> {
 public:
  using typename Objective<Scalar>::VectorType;
  using typename Objective<Scalar>::MatrixType;

  ReparameterizedObjective(std::shared_ptr<const Objective<Scalar>> base, MatrixType map)
      : base_(std::move(base)), map_(std::move(map)) {
    require(base_ != nullptr, "null base objective");
    require(map_.rows() == base_->dim(), "map rows must match the base objective dimension");
  }

  Index dim() const override { return map_.cols(); }
  Scalar value(const VectorType& x) const override { return base_->value(map_ * x); }
  VectorType gradient(const VectorType& x) const override {
    return map_.transpose() * base_->gradient(map_ * x);
  }
  std::optional<MatrixType> hessian(const VectorType& x) const override {
    auto h = base_->hessian(map_ * x);
    if (!h) return std::nullopt;
    return MatrixType(map_.transpose() * (*h) * map_);
  }
  bool has_constant_hessian() const override { return base_->has_constant_hessian(); }

 private:
  std::shared_ptr<const Objective<Scalar>> base_;
  MatrixType map_;
};

template <typename Scalar>
struct SpanMinimum {
  Vector<Scalar> x;
  Scalar value;
};

/// Minimizer of a quadratic objective restricted to lin(A).
template <typename Scalar>
SpanMinimum<Scalar> minimize_on_span(const Objective<Scalar>& f, const AtomSet<Scalar>& atoms) {
  require(f.dim() == atoms.dim(), "dimension mismatch");
  if (!f.has_constant_hessian()) throw UnsupportedError("closed-form span minimum needs a quadratic objective");
  const Vector<Scalar> zero = Vector<Scalar>::Zero(f.dim());
  const Matrix<Scalar> H = *f.hessian(zero);
  const Matrix<Scalar>& U = atoms.span_basis();
  const Matrix<Scalar> reduced = U.transpose() * H * U;
  const Vector<Scalar> lin = U.transpose() * f.gradient(zero);
  const Vector<Scalar> z = -reduced.completeOrthogonalDecomposition().solve(lin);
  Vector<Scalar> x = U * z;
  const Scalar v = f.value(x);
  return {std::move(x), v};
}

/// The constant Hessian of a quadratic, or an UnsupportedError.
template <typename Scalar>
Matrix<Scalar> constant_hessian(const Objective<Scalar>& f) {
  if (!f.has_constant_hessian()) throw UnsupportedError("objective does not have a constant Hessian");
  return *f.hessian(Vector<Scalar>::Zero(f.dim()));
}

}  // namespace pursuit
