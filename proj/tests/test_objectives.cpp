#include "oracles.hpp"

#include <doctest.h>

using namespace pursuit;
using oracle::Mat;
using oracle::Vec;

namespace {

LeastSquares<double> diagonal_quadratic(const Vec& h) {
  // 1/2 ||diag(sqrt h) x||^2 has Hessian diag(h).
  return LeastSquares<double>(Mat(h.cwiseSqrt().asDiagonal()), Vec(Vec::Zero(h.size())));
}

}  // namespace

TEST_SUITE("bregman gap") {
  TEST_CASE("vanishes at y = x") {
    Rng rng(1);
    const auto f = oracle::least_squares(4, rng);
    const Vec x = oracle::gaussian(4, rng);
    CHECK(bregman_gap<double>(f, x, x) == doctest::Approx(0.0));
  }

  TEST_CASE("half squared norm from 0 to e1") {
    const auto f = LeastSquares<double>::distance_to(Vec(Vec::Zero(3)));
    Vec e1 = Vec::Zero(3);
    e1(0) = 1;
    CHECK(bregman_gap<double>(f, e1, Vec(Vec::Zero(3))) == doctest::Approx(0.5).epsilon(1e-15));
  }

  TEST_CASE("quadratic closed form") {
    Rng rng(2);
    for (int k = 0; k < 20; ++k) {
      const auto f = oracle::least_squares(5, rng);
      const Vec x = oracle::gaussian(5, rng), y = oracle::gaussian(5, rng);
      const double closed = 0.5 * (y - x).dot(f.gram() * (y - x));
      CHECK(bregman_gap<double>(f, y, x) == doctest::Approx(closed).epsilon(1e-10));
      CHECK(bregman_gap<double>(f, y, x) >= -1e-10);
    }
  }
}

TEST_SUITE("objective interface") {
  TEST_CASE("least squares gradient and Hessian") {
    Rng rng(3);
    const auto f = oracle::least_squares(6, rng);
    const Vec x = oracle::gaussian(6, rng);
    CHECK((f.gradient(x) - f.design().transpose() * (f.design() * x - f.target())).norm() <= 1e-12);
    CHECK(*f.hessian(x) == f.design().transpose() * f.design());
    CHECK(f.has_constant_hessian());
  }

  TEST_CASE("convexity spot check") {
    Rng rng(4);
    const auto f = oracle::least_squares(6, rng);
    for (int k = 0; k < 50; ++k) {
      const Vec x = oracle::gaussian(6, rng), y = oracle::gaussian(6, rng);
      CHECK(f.value(Vec(0.5 * x + 0.5 * y)) <= 0.5 * f.value(x) + 0.5 * f.value(y) + 1e-10);
    }
  }

  TEST_CASE("reparameterized objective chains the map") {
    Rng rng(5);
    auto f = std::make_shared<const LeastSquares<double>>(oracle::least_squares(4, rng));
    const Mat M = oracle::gaussian(4, 4, rng);
    const ReparameterizedObjective<double> g(f, M);
    const Vec x = oracle::gaussian(4, rng);
    CHECK(g.value(x) == doctest::Approx(f->value(Vec(M * x))));
    CHECK((g.gradient(x) - M.transpose() * f->gradient(Vec(M * x))).norm() <= 1e-10);
    CHECK((*g.hessian(x) - M.transpose() * f->gram() * M).norm() <= 1e-10);
    CHECK(check_gradient<double>(g, x) <= 1e-5);
  }

  TEST_CASE("span minimum is the projection for the distance objective") {
    Rng rng(6);
    const Mat basis = oracle::gaussian(6, 2, rng);
    const auto atoms = AtomSet<double>::symmetrize(basis);
    const Vec b = oracle::gaussian(6, rng);
    const auto m = minimize_on_span<double>(LeastSquares<double>::distance_to(b), atoms);
    CHECK((m.x - atoms.project_onto_span(b)).norm() <= 1e-12);
    CHECK(m.value == doctest::Approx(0.5 * atoms.span_residual(b) * atoms.span_residual(b)));
  }
}

TEST_SUITE("L_atomic") {
  TEST_CASE("identity Hessian over coordinates") {
    const auto f = LeastSquares<double>::distance_to(Vec(Vec::Ones(4)));
    CHECK(compute_L_atomic<double>(f, AtomSet<double>::coordinates(4)) == 1.0);
  }

  TEST_CASE("diag(1, 4) over coordinates") {
    Vec h(2);
    h << 1, 4;
    CHECK(compute_L_atomic<double>(diagonal_quadratic(h), AtomSet<double>::coordinates(2)) ==
          doctest::Approx(4.0).epsilon(1e-14));
  }

  TEST_CASE("separable quadratics give the largest diagonal entry") {
    Rng rng(7);
    std::uniform_real_distribution<double> u(0.1, 5);
    for (int k = 0; k < 10; ++k) {
      Vec h(6);
      for (Index i = 0; i < 6; ++i) h(i) = u(rng);
      CHECK(compute_L_atomic<double>(diagonal_quadratic(h), AtomSet<double>::coordinates(6)) ==
            doctest::Approx(h.maxCoeff()).epsilon(1e-14));
    }
  }

  TEST_CASE("upper-bounds sampled curvature on the unit atomic sphere") {
    Rng rng(8);
    const auto f = oracle::least_squares(8, rng);
    const auto atoms = AtomSet<double>::symmetrize(oracle::gaussian(8, 10, rng));
    const double la = compute_L_atomic<double>(f, atoms);
    double sampled = 0;
    for (int k = 0; k < 10000; ++k) {
      const Vec z = oracle::random_unit_atomic(atoms, rng);
      sampled = std::max(sampled, z.dot(f.gram() * z));
    }
    CHECK(la >= sampled * (1 - 1e-10));
  }

  TEST_CASE("L_A <= L radius^2") {
    Rng rng(9);
    for (int k = 0; k < 20; ++k) {
      const auto f = oracle::least_squares(5, rng);
      const auto atoms = AtomSet<double>::symmetrize(oracle::gaussian(5, 8, rng));
      const auto c = compute_curvature<double>(f, atoms, 0.1);
      CHECK(c.L_atomic <= c.L2 * atoms.radius() * atoms.radius() + 1e-8);
      CHECK(c.mu_atomic_lower >= 0);
      CHECK(c.mu_atomic_lower <= c.L_atomic);
    }
  }

  TEST_CASE("smoothness upper bound along atoms") {
    Rng rng(10);
    const auto f = oracle::least_squares(6, rng);
    const auto atoms = AtomSet<double>::symmetrize(oracle::gaussian(6, 9, rng));
    const double la = compute_L_atomic<double>(f, atoms);
    std::uniform_real_distribution<double> u(-1, 1);
    std::uniform_int_distribution<Index> pick(0, atoms.size() - 1);
    for (int k = 0; k < 1000; ++k) {
      const Vec x = oracle::gaussian(6, rng);
      const Vec z = atoms.atom(pick(rng));
      const double g = u(rng);
      CHECK(f.value(Vec(x + g * z)) <= f.value(x) + g * f.gradient(x).dot(z) + 0.5 * g * g * la + 1e-8);
    }
  }

  TEST_CASE("non-quadratic objectives are unsupported") {
    struct Quartic final : Objective<double> {
      Index dim() const override { return 2; }
      double value(const Vec& x) const override { return x.array().pow(4).sum(); }
      Vec gradient(const Vec& x) const override { return 4 * x.array().pow(3).matrix(); }
    } q;
    CHECK_THROWS_AS(compute_L_atomic<double>(q, AtomSet<double>::coordinates(2)), UnsupportedError);
  }

  TEST_CASE("generic estimate approaches the exact value and is monotone") {
    Rng rng(11);
    const auto f = oracle::least_squares(4, rng);
    const auto atoms = AtomSet<double>::symmetrize(oracle::gaussian(4, 6, rng));
    const double exact = compute_L_atomic<double>(f, atoms);
    Rng a(3), b(3);
    const double small = estimate_L_atomic_generic<double>(f, atoms, 1000, a);
    const double large = estimate_L_atomic_generic<double>(f, atoms, 10000, b);
    CHECK(small <= large);
    CHECK(large <= exact * (1 + 1e-9));
    CHECK(large >= 0.95 * exact);
  }

  TEST_CASE("generic estimate of a linear function is zero up to rounding") {
    Rng rng(12);
    const LinearObjective<double> f(oracle::gaussian(3, rng), 2.0);
    // 2/gamma^2 amplifies the cancellation error of D for small gamma.
    CHECK(std::abs(estimate_L_atomic_generic<double>(f, AtomSet<double>::coordinates(3), 200, rng)) <= 1e-8);
  }

  TEST_CASE("zero samples is an invalid argument") {
    Rng rng(13);
    const auto f = LeastSquares<double>::distance_to(Vec(Vec::Zero(2)));
    CHECK_THROWS_AS(estimate_L_atomic_generic<double>(f, AtomSet<double>::coordinates(2), 0, rng),
                    std::invalid_argument);
  }
}

TEST_SUITE("mu_atomic_lower") {
  TEST_CASE("identity over coordinates is 1/n") {
    const int n = 5;
    const auto f = LeastSquares<double>::distance_to(Vec(Vec::Zero(n)));
    CHECK(compute_mu_atomic_lower<double>(f, AtomSet<double>::coordinates(n)) == doctest::Approx(1.0 / n).epsilon(1e-14));
  }

  TEST_CASE("rank-deficient Hessian gives zero") {
    Mat M = Mat::Zero(1, 3);
    M(0, 0) = 1;
    const LeastSquares<double> f(M, Vec(Vec::Ones(1)));
    CHECK(compute_mu_atomic_lower<double>(f, AtomSet<double>::coordinates(3)) == 0.0);
  }

  TEST_CASE("diag(2, 2) over two coordinates is 1") {
    Vec h(2);
    h << 2, 2;
    CHECK(compute_mu_atomic_lower<double>(diagonal_quadratic(h), AtomSet<double>::coordinates(2)) ==
          doctest::Approx(1.0).epsilon(1e-14));
  }

  TEST_CASE("strong convexity lower bound holds pointwise") {
    Rng rng(14);
    const auto f = oracle::least_squares(5, rng);
    const auto atoms = AtomSet<double>::symmetrize(oracle::gaussian(5, 8, rng));
    const double mu = compute_mu_atomic_lower<double>(f, atoms);
    REQUIRE(mu > 0);
    for (int k = 0; k < 200; ++k) {
      const Vec x = oracle::gaussian(5, rng), y = oracle::gaussian(5, rng);
      const double n = atomic_norm(Vec(y - x), atoms);
      CHECK(bregman_gap<double>(f, y, x) >= 0.5 * mu * n * n - 1e-8);
    }
  }
}

TEST_SUITE("gradient check") {
  TEST_CASE("random least squares") {
    Rng rng(15);
    for (int k = 0; k < 10; ++k) {
      const auto f = oracle::least_squares(7, rng);
      CHECK(check_gradient<double>(f, oracle::gaussian(7, rng)) <= 1e-5);
    }
  }

  TEST_CASE("linear objective") {
    Rng rng(16);
    const LinearObjective<double> f(oracle::gaussian(4, rng));
    // Central differences are exact for linear f; a wide step keeps the
    // cancellation error in f small.
    CHECK(check_gradient<double>(f, oracle::gaussian(4, rng), 1e-2) <= 1e-10);
    CHECK(check_gradient<double>(f, Vec(Vec::Zero(4))) <= 1e-10);
  }

  TEST_CASE("half squared norm at e1") {
    const auto f = LeastSquares<double>::distance_to(Vec(Vec::Zero(3)));
    Vec e1 = Vec::Zero(3);
    e1(0) = 1;
    CHECK(check_gradient<double>(f, e1) <= 1e-10);
  }

  TEST_CASE("nonpositive step is rejected") {
    const auto f = LeastSquares<double>::distance_to(Vec(Vec::Zero(2)));
    CHECK_THROWS_AS(check_gradient<double>(f, Vec(Vec::Zero(2)), 0.0), std::invalid_argument);
  }
}
