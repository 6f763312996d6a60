#include "oracles.hpp"

#include <doctest.h>

using namespace pursuit;
using oracle::Mat;
using oracle::Vec;

namespace {

std::vector<double> weights_of(const SamplingDistribution<double>& dist) {
  std::vector<double> w(std::size_t(dist.size()));
  for (Index i = 0; i < dist.size(); ++i) w[std::size_t(i)] = dist.weight(i);
  return w;
}

Mat well_conditioned(Index n, Rng& rng) {
  // I + 0.3 G keeps the condition number moderate and M non-orthogonal.
  return Mat(Mat::Identity(n, n) + 0.3 * oracle::gaussian(n, n, rng) / std::sqrt(double(n)));
}

}  // namespace

TEST_SUITE("delta hat") {
  TEST_CASE("uniform coordinates give 1/n") {
    for (int n : {1, 2, 3, 7}) {
      const auto atoms = AtomSet<double>::coordinates(n);
      Rng rng(1);
      CHECK(compute_delta_hat_sq(atoms, SamplingDistribution<double>::uniform(atoms), 10, rng) == 1.0 / n);
    }
  }

  TEST_CASE("point mass on a one-dimensional span gives 1") {
    const auto atoms = AtomSet<double>::coordinates(1);
    Rng rng(2);
    CHECK(compute_delta_hat_sq(atoms, SamplingDistribution<double>::point_mass(atoms, 0), 10, rng) ==
          doctest::Approx(1.0).epsilon(1e-15));
  }

  TEST_CASE("sampled estimate matches the sphere grid in three dimensions") {
    Rng gen(3);
    for (int k = 0; k < 3; ++k) {
      const auto atoms = AtomSet<double>::symmetrize(oracle::gaussian(3, 6, gen));
      const auto dist = SamplingDistribution<double>::uniform(atoms);
      const double grid = oracle::grid_delta_hat_sq(atoms.matrix(), weights_of(dist));
      Rng rng(4);
      const double sampled = compute_delta_hat_sq(atoms, dist, 20000, rng);
      CHECK(sampled >= 0.95 * grid);
      CHECK(sampled <= 1.05 * grid);
    }
  }

  TEST_CASE("lies in (0, 1] and never increases with more probes") {
    Rng gen(5);
    const auto atoms = AtomSet<double>::symmetrize(oracle::gaussian(6, 10, gen));
    const auto dist = SamplingDistribution<double>::uniform(atoms);
    double prev = std::numeric_limits<double>::infinity();
    for (int probes : {0, 10, 100, 1000}) {
      Rng rng(6);
      const double v = compute_delta_hat_sq(atoms, dist, probes, rng);
      CHECK(v > 0);
      CHECK(v <= 1.0 + 1e-12);
      CHECK(v <= prev);
      prev = v;
    }
  }

  TEST_CASE("negative probe count is rejected") {
    const auto atoms = AtomSet<double>::coordinates(2);
    Rng rng(7);
    CHECK_THROWS_AS(compute_delta_hat_sq(atoms, SamplingDistribution<double>::uniform(atoms), -1, rng),
                    std::invalid_argument);
  }
}

TEST_SUITE("minimal directional width") {
  TEST_CASE("coordinates give 1/sqrt(n)") {
    Rng rng(8);
    CHECK(compute_mdw(AtomSet<double>::coordinates(4), 10, rng) == 0.5);
    CHECK(compute_mdw(AtomSet<double>::coordinates(9), 10, rng) == doctest::Approx(1.0 / 3).epsilon(1e-15));
  }

  TEST_CASE("single pair gives the atom length on its span") {
    Mat a(3, 1);
    a << 1, 2, 2;
    Rng rng(9);
    CHECK(compute_mdw(AtomSet<double>::symmetrize(a), 50, rng) == doctest::Approx(3.0).epsilon(1e-12));
  }

  TEST_CASE("matches the sphere grid in three dimensions") {
    Rng gen(10);
    for (int k = 0; k < 3; ++k) {
      const Mat raw = oracle::gaussian(3, 5, gen);
      const auto atoms = AtomSet<double>::symmetrize(raw);
      const double grid = oracle::grid_mdw(atoms.matrix());
      Rng rng(11);
      const double sampled = compute_mdw(atoms, 2000, rng);
      CHECK(sampled >= 0.95 * grid);
      CHECK(sampled <= 1.05 * grid);
    }
  }

  TEST_CASE("never increases with more probes") {
    Rng gen(12);
    const auto atoms = AtomSet<double>::symmetrize(oracle::gaussian(8, 12, gen));
    double prev = std::numeric_limits<double>::infinity();
    for (int probes : {0, 10, 100, 1000}) {
      Rng rng(13);
      const double v = compute_mdw(atoms, probes, rng);
      CHECK(v > 0);
      CHECK(v <= prev);
      prev = v;
    }
  }

  TEST_CASE("uniform coordinates: delta hat squared equals mdw squared") {
    for (int n : {2, 5, 50}) {
      const auto atoms = AtomSet<double>::coordinates(n);
      Rng rng(14);
      const double mdw = compute_mdw(atoms, 0, rng);
      CHECK(compute_delta_hat_sq(atoms, SamplingDistribution<double>::uniform(atoms), 0, rng) ==
            doctest::Approx(mdw * mdw).epsilon(1e-15));
    }
  }

  TEST_CASE("strong convexity bound from mdw holds on random pairs") {
    Rng rng(15);
    const auto f = oracle::least_squares(5, rng);
    const auto atoms = AtomSet<double>::symmetrize(oracle::gaussian(5, 8, rng));
    const double mu = compute_mu_atomic_lower<double>(f, atoms, 2000, 1);
    REQUIRE(mu > 0);
    for (int k = 0; k < 500; ++k) {
      const Vec x = oracle::gaussian(5, rng), y = oracle::gaussian(5, rng);
      const double n = atomic_norm(Vec(y - x), atoms);
      CHECK(2 * bregman_gap<double>(f, y, x) / (n * n) >= mu - 1e-8);
    }
  }
}

TEST_SUITE("envelopes") {
  ConstantsReport<double> report_with(double la, double mu, double dh) {
    ConstantsReport<double> c;
    c.L_atomic = ConstantsReport<double>::make(la, Provenance::exact);
    c.mu_lower = ConstantsReport<double>::make(mu, Provenance::exact);
    c.delta_hat_sq = ConstantsReport<double>::make(dh, Provenance::analytic);
    c.L = ConstantsReport<double>::make(1.0, Provenance::exact);
    c.nu = ConstantsReport<double>::make(1.0, Provenance::user_supplied);
    c.nu_prime = ConstantsReport<double>::make(3.0, Provenance::analytic);
    return c;
  }

  TEST_CASE("documented values") {
    const auto c = report_with(1.0, 0.1, 0.5);
    CHECK(envelope(EnvelopeKind::sublinear_greedy, c, 1.0, 0) == 1.0);
    CHECK(envelope(EnvelopeKind::linear, c, 1.0, 10) == doctest::Approx(0.3486784401).epsilon(1e-10));
    CHECK(envelope(EnvelopeKind::accel, c, 1.0, 1) == 1.0);
    CHECK(envelope(EnvelopeKind::accel_random, c, 1.0, 1) == 3.0);
    CHECK(envelope(EnvelopeKind::sublinear_random, c, 1.0, 0) == 2.0);
    CHECK(std::isinf(envelope(EnvelopeKind::accel, c, 1.0, 0)));
  }

  TEST_CASE("approximate oracle quality widens the greedy bound") {
    const auto c = report_with(2.0, 0.1, 0.5);
    CHECK(envelope(EnvelopeKind::sublinear_greedy, c, 1.5, 8, 0.5) ==
          doctest::Approx(4 * envelope(EnvelopeKind::sublinear_greedy, c, 1.5, 8)).epsilon(1e-15));
  }

  TEST_CASE("linear closed form agrees with the recursion") {
    const auto c = report_with(3.0, 0.4, 0.5);
    double e = 2.5;
    for (int t = 0; t <= 200; ++t) {
      CHECK(envelope(EnvelopeKind::linear, c, 2.5, t, 0.8) == doctest::Approx(e).epsilon(1e-12));
      e *= 1 - 0.64 * 0.4 / 3.0;
    }
  }

  TEST_CASE("missing constants are named") {
    ConstantsReport<double> c;
    CHECK_THROWS_WITH_AS(envelope(EnvelopeKind::sublinear_greedy, c, 1.0, 1), doctest::Contains("L_atomic"),
                         std::invalid_argument);
    c.L_atomic = ConstantsReport<double>::make(1.0, Provenance::exact);
    CHECK_THROWS_WITH_AS(envelope(EnvelopeKind::linear, c, 1.0, 1), doctest::Contains("mu_lower"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(envelope(EnvelopeKind::sublinear_random, c, 1.0, 1), doctest::Contains("delta_hat_sq"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(envelope(EnvelopeKind::accel, c, 1.0, 1), doctest::Contains("'L'"), std::invalid_argument);
    c.L = ConstantsReport<double>::make(1.0, Provenance::exact);
    CHECK_THROWS_WITH_AS(envelope(EnvelopeKind::accel_random, c, 1.0, 1), doctest::Contains("nu_prime"),
                         std::invalid_argument);
  }

  TEST_CASE("negative iteration is rejected") {
    CHECK_THROWS_AS(envelope(EnvelopeKind::linear, report_with(1, 0.1, 1), 1.0, -1), std::invalid_argument);
  }
}

TEST_SUITE("level set radius") {
  TEST_CASE("bounds the atomic distance of monotone runs") {
    Rng rng(16);
    for (int k = 0; k < 5; ++k) {
      const auto f = oracle::least_squares(6, rng);
      const auto atoms = AtomSet<double>::symmetrize(oracle::gaussian(6, 12, rng));
      const Vec x0 = Vec::Zero(6);
      const double r = level_set_radius<double>(f, atoms, x0, 300, rng);
      SolverConfig<double> cfg;
      cfg.max_iters = 200;
      cfg.keep_iterates = true;
      cfg.smoothness = Smoothness<double>::atomic(compute_L_atomic<double>(f, atoms));
      const auto tr = run_pursuit<double>(f, atoms, cfg, x0);
      CHECK(trace_radius(tr, minimize_on_span<double>(f, atoms).x, atoms) <= r);
    }
  }

  TEST_CASE("bounds random points on the level set boundary") {
    Rng rng(17);
    const auto f = oracle::least_squares(4, rng);
    const auto atoms = AtomSet<double>::symmetrize(oracle::gaussian(4, 6, rng));
    const Vec x0 = oracle::gaussian(4, rng);
    const double r = level_set_radius<double>(f, atoms, x0, 2000, rng, 1.0);
    const auto opt = minimize_on_span<double>(f, atoms);
    const double eps0 = f.value(x0) - opt.value;
    Eigen::LLT<Mat> llt(f.gram());
    for (int k = 0; k < 2000; ++k) {
      const Vec w = oracle::gaussian(4, rng).normalized();
      const Vec c = std::sqrt(2 * eps0) * Vec(llt.matrixU().solve(w));
      CHECK(atomic_norm(c, atoms) <= r * (1 + 1e-9));
    }
  }

  TEST_CASE("radius is zero at the minimizer") {
    Rng rng(18);
    const auto f = oracle::least_squares(3, rng);
    const auto atoms = AtomSet<double>::coordinates(3);
    CHECK(level_set_radius<double>(f, atoms, minimize_on_span<double>(f, atoms).x, 10, rng) ==
          doctest::Approx(0.0).epsilon(1e-12));
  }

  TEST_CASE("singular Hessian on the span is unsupported") {
    Mat M = Mat::Zero(1, 2);
    M(0, 0) = 1;
    const LeastSquares<double> f(M, Vec(Vec::Ones(1)));
    Rng rng(19);
    CHECK_THROWS_AS(level_set_radius<double>(f, AtomSet<double>::coordinates(2), Vec(Vec::Zero(2)), 10, rng),
                    UnsupportedError);
  }
}

TEST_SUITE("affine invariance") {
  TEST_CASE("identity map gives zero discrepancy") {
    Rng rng(20);
    auto f = std::make_shared<const LeastSquares<double>>(oracle::least_squares(5, rng));
    const auto atoms = AtomSet<double>::symmetrize(oracle::gaussian(5, 8, rng));
    for (auto alg : {AffineAlgorithm::l2_step, AffineAlgorithm::affine_step})
      CHECK(affine_invariance_check<double>(f, atoms, Mat(Mat::Identity(5, 5)), 50, alg) == 0.0);
  }

  TEST_CASE("affine-invariant algorithm tracks the reparameterized run") {
    Rng rng(21);
    for (int k = 0; k < 10; ++k) {
      auto f = std::make_shared<const LeastSquares<double>>(oracle::least_squares(6, rng));
      const auto atoms = AtomSet<double>::symmetrize(oracle::gaussian(6, 10, rng));
      const Mat M = well_conditioned(6, rng);
      CHECK(affine_invariance_check<double>(f, atoms, M, 50, AffineAlgorithm::affine_step) <= 1e-9);
    }
  }

  TEST_CASE("Euclidean step rule is not affine invariant") {
    Rng rng(22);
    int separated = 0;
    for (int k = 0; k < 10; ++k) {
      auto f = std::make_shared<const LeastSquares<double>>(oracle::least_squares(6, rng));
      const auto atoms = AtomSet<double>::symmetrize(oracle::gaussian(6, 10, rng));
      const Mat M = well_conditioned(6, rng);
      if (affine_invariance_check<double>(f, atoms, M, 50, AffineAlgorithm::l2_step) > 1e-6) ++separated;
    }
    CHECK(separated >= 8);
  }

  TEST_CASE("singular map is an invalid argument") {
    Rng rng(23);
    auto f = std::make_shared<const LeastSquares<double>>(oracle::least_squares(3, rng));
    Mat M = Mat::Identity(3, 3);
    M(2, 2) = 0;
    CHECK_THROWS_AS(affine_invariance_check<double>(f, AtomSet<double>::coordinates(3), M, 5, AffineAlgorithm::affine_step),
                    std::invalid_argument);
  }
}

TEST_SUITE("constants report") {
  TEST_CASE("serializes set fields with provenance in a fixed order") {
    ConstantsReport<double> c;
    c.notes.push_back("atoms normalized");
    c.nu = ConstantsReport<double>::make(1.0, Provenance::default_policy);
    c.delta_hat_sq = ConstantsReport<double>::make(0.2, Provenance::analytic);
    c.radius_atomic = ConstantsReport<double>::make(3.5, Provenance::sampled);
    CHECK(c.to_text() ==
          "# atoms normalized\n"
          "delta_hat_sq=0.20000000000000001\n"
          "delta_hat_sq.provenance=analytic\n"
          "nu=1\n"
          "nu.provenance=default_policy\n"
          "R_atomic=3.5\n"
          "R_atomic.provenance=sampled\n");
  }

  TEST_CASE("empty report serializes to nothing") { CHECK(ConstantsReport<double>{}.to_text().empty()); }
}
