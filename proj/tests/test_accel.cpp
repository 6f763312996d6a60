#include "oracles.hpp"
#include "pursuit/experiment.hpp"

#include <doctest.h>

using namespace pursuit;
using oracle::Mat;
using oracle::Vec;

namespace {

double lambda_max(const Mat& H) {
  Eigen::SelfAdjointEigenSolver<Mat> es(H, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

SolverConfig<double> diag_config(int iters, std::uint64_t seed = 0) {
  SolverConfig<double> cfg;
  cfg.max_iters = iters;
  cfg.seed = seed;
  cfg.psi_diagnostics = true;
  cfg.keep_model_history = true;
  cfg.keep_iterates = true;
  return cfg;
}

}  // namespace

TEST_SUITE("metric") {
  TEST_CASE("uniform coordinates give P = n I") {
    const int n = 6;
    const auto atoms = AtomSet<double>::coordinates(n);
    const auto m = compute_metric(atoms, SamplingDistribution<double>::uniform(atoms));
    CHECK(m.p_tilde == Mat(Mat::Identity(n, n) / double(n)));
    CHECK(m.p == Mat(Mat::Identity(n, n) * double(n)));
    CHECK(m.range_ok);
  }

  TEST_CASE("eigendecomposition path agrees with the analytic coordinates") {
    const int n = 4;
    const auto atoms = AtomSet<double>::coordinates(n);
    // Weight on both signs gives the same P~ but bypasses the analytic shortcut.
    const auto m = compute_metric(atoms, SamplingDistribution<double>::uniform(atoms, false));
    CHECK(m.provenance == "eigendecomposition");
    CHECK((m.p - Mat(Mat::Identity(n, n) * double(n))).norm() <= 1e-12);
  }

  TEST_CASE("point mass on e1 in R^2 fails the range check") {
    const auto atoms = AtomSet<double>::coordinates(2);
    CHECK_THROWS_AS(compute_metric(atoms, SamplingDistribution<double>::point_mass(atoms, 0)), UnsupportedError);
  }

  TEST_CASE("pseudo-inverse is the identity on lin(A)") {
    Rng rng(1);
    const auto atoms = AtomSet<double>::symmetrize(oracle::gaussian(10, 15, rng));
    const auto m = compute_metric(atoms, SamplingDistribution<double>::uniform(atoms));
    Eigen::SelfAdjointEigenSolver<Mat> es(m.p_tilde, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10);
    const Mat& U = atoms.span_basis();
    CHECK((m.p * m.p_tilde * U - U).norm() <= 1e-8);
  }

  TEST_CASE("rank-deficient dictionary: identity on the span only") {
    Rng rng(2);
    const Mat basis = oracle::gaussian(7, 3, rng);
    const auto atoms = AtomSet<double>::symmetrize(basis * oracle::gaussian(3, 5, rng));
    const auto m = compute_metric(atoms, SamplingDistribution<double>::uniform(atoms));
    const Mat& U = atoms.span_basis();
    CHECK((m.p * m.p_tilde * U - U).norm() <= 1e-8);
    CHECK((m.p * Vec(Vec::Ones(7) - atoms.project_onto_span(Vec(Vec::Ones(7))))).norm() <= 1e-6);
  }
}

TEST_SUITE("solve_alpha") {
  TEST_CASE("closed-form roots") {
    CHECK(solve_alpha(0.0, 2.0, 1.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(solve_alpha(0.0, 1.0, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
  }

  TEST_CASE("residual of the defining equation") {
    Rng rng(3);
    std::uniform_real_distribution<double> u(0.0, 100.0);
    for (int k = 0; k < 1000; ++k) {
      const double beta = u(rng), L = 0.01 + u(rng), nu = 0.01 + u(rng);
      const double a = solve_alpha(beta, L, nu);
      CHECK(a > 0);
      CHECK(a * a * L * nu == doctest::Approx(beta + a).epsilon(1e-12));
    }
  }

  TEST_CASE("invalid inputs") {
    CHECK_THROWS_AS(solve_alpha(-1.0, 1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(solve_alpha(0.0, 0.0, 1.0), std::invalid_argument);
  }
}

TEST_SUITE("model function") {
  TEST_CASE("base case") {
    Rng rng(4);
    const auto f = oracle::least_squares(5, rng);
    const auto atoms = AtomSet<double>::coordinates(5);
    const auto m = compute_metric(atoms, SamplingDistribution<double>::uniform(atoms));
    const Vec x0 = oracle::gaussian(5, rng), x = oracle::gaussian(5, rng);
    CHECK(model_psi_value<double>({}, m, x, x0, f) == doctest::Approx(0.5 * (x - x0).dot(m.p * (x - x0))));
    CHECK(model_psi_value<double>({}, m, x0, x0, f) == 0.0);
  }

  TEST_CASE("v_t minimizes the replayed model and matches the running scalars") {
    Rng rng(5);
    const auto f = oracle::least_squares(6, rng);
    const auto atoms = AtomSet<double>::symmetrize(oracle::gaussian(6, 9, rng));
    const auto dist = SamplingDistribution<double>::uniform(atoms);
    const auto m = compute_metric(atoms, dist);
    const double L = lambda_max(f.gram());
    const Vec x0 = Vec::Zero(6);
    for (int variant = 0; variant < 2; ++variant) {
      auto cfg = diag_config(30, 9);
      cfg.minimizer = minimize_on_span<double>(f, atoms).x;
      const auto tr = variant == 0 ? run_accel_mp<double>(f, atoms, dist, L, 1.0, cfg, x0)
                                   : run_accel_rp<double>(f, atoms, dist, L, 6.0, cfg, x0);
      // Rebuild v_T from the model: v_T = x0 - sum alpha (z^T g) z.
      Vec v = x0;
      for (const auto& s : tr.model_history) v -= s.alpha * s.sampled_atom.dot(f.gradient(s.y)) * s.sampled_atom;
      const double at_v = model_psi_value(tr.model_history, m, v, x0, f);
      CHECK(at_v == doctest::Approx(tr.accel.back().psi_min).epsilon(1e-9));
      CHECK(model_psi_value(tr.model_history, m, *cfg.minimizer, x0, f) ==
            doctest::Approx(tr.accel.back().psi_star).epsilon(1e-9));
      for (int k = 0; k < 100; ++k) {
        const Vec x = atoms.project_onto_span(oracle::gaussian(6, rng));
        CHECK(at_v <= model_psi_value(tr.model_history, m, x, x0, f) + 1e-9 * std::max(1.0, std::abs(at_v)));
      }
    }
  }
}

TEST_SUITE("accelerated runs") {
  TEST_CASE("one-dimensional problem meets the envelope") {
    const auto f = LeastSquares<double>::distance_to(Vec(Vec::Zero(1)));
    const auto atoms = AtomSet<double>::coordinates(1);
    const auto dist = SamplingDistribution<double>::uniform(atoms);
    const auto m = compute_metric(atoms, dist);
    const Vec x0 = Vec::Constant(1, 3.0);
    auto cfg = diag_config(20);
    const auto tr = run_accel_mp<double>(f, atoms, dist, 1.0, 1.0, cfg, x0);
    CHECK(tr.records.back().fval <= 1e-20);
    for (std::size_t t = 1; t < tr.records.size(); ++t) {
      CHECK(tr.records[t].fval <= f.value(x0));
      CHECK(tr.records[t].fval <= 2.0 / (double(t) * double(t + 1)) * m.squared_norm(x0) + 1e-15);
    }
  }

  TEST_CASE("point-mass random variant on a one-atom problem matches the greedy variant") {
    Mat a(1, 1);
    a << 1.0;
    const auto atoms = AtomSet<double>::symmetrize(a);
    const auto dist = SamplingDistribution<double>::point_mass(atoms, 0);
    const LeastSquares<double> f(Mat::Constant(1, 1, 2.0), Vec::Constant(1, 3.0));
    auto cfg = diag_config(25);
    const auto g = run_accel_mp<double>(f, atoms, dist, 4.0, 1.0, cfg, Vec(Vec::Zero(1)));
    const auto r = run_accel_rp<double>(f, atoms, dist, 4.0, 1.0, cfg, Vec(Vec::Zero(1)));
    REQUIRE(g.iterates.size() == r.iterates.size());
    for (std::size_t t = 0; t < g.iterates.size(); ++t) {
      CHECK(g.iterates[t](0) == r.iterates[t](0));
      CHECK(g.accel[t].psi_min == r.accel[t].psi_min);
    }
    // Deterministic sampling: the lower bound holds per run.
    for (std::size_t t = 1; t < g.records.size(); ++t)
      CHECK(g.accel[t].psi_min >= g.accel[t].beta * g.records[t].fval - 1e-8);
  }

  TEST_CASE("per-run invariants on random quadratics") {
    Rng rng(6);
    const auto f = oracle::least_squares(8, rng);
    const auto atoms = AtomSet<double>::symmetrize(oracle::gaussian(8, 14, rng));
    const auto dist = SamplingDistribution<double>::uniform(atoms);
    const double L = lambda_max(f.gram());
    for (int variant = 0; variant < 2; ++variant) {
      for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto cfg = diag_config(80, seed);
        const double nu = 2.0;
        const auto tr = variant == 0 ? run_accel_mp<double>(f, atoms, dist, L, nu, cfg, Vec(Vec::Zero(8)))
                                     : run_accel_rp<double>(f, atoms, dist, L, nu, cfg, Vec(Vec::Zero(8)));
        CHECK(tr.method == (variant == 0 ? "accel_mp" : "accel_rp"));
        double beta = 0;
        for (std::size_t t = 1; t < tr.records.size(); ++t) {
          const auto& a = tr.accel[t];
          beta += a.alpha;
          CHECK(a.beta == beta);
          CHECK(a.tau == a.alpha / a.beta);
          CHECK(a.alpha >= double(t) / (2 * L * nu));
          CHECK(tr.records[t].fval - a.f_y <= a.predicted_decrease + 1e-10);
          CHECK(a.psi_grad_norm <= 1e-8);
        }
      }
    }
  }

  TEST_CASE("y is the tau-combination of x and v") {
    Rng rng(7);
    const auto f = oracle::least_squares(5, rng);
    const auto atoms = AtomSet<double>::coordinates(5);
    const auto dist = SamplingDistribution<double>::uniform(atoms);
    auto cfg = diag_config(15, 3);
    const auto tr = run_accel_rp<double>(f, atoms, dist, lambda_max(f.gram()), 5.0, cfg, Vec(Vec::Zero(5)));
    Vec v = Vec::Zero(5);
    for (std::size_t t = 0; t < tr.model_history.size(); ++t) {
      const auto& s = tr.model_history[t];
      const double tau = tr.accel[t + 1].tau;
      CHECK((s.y - ((1 - tau) * tr.iterates[t] + tau * v)).norm() <= 1e-12 * std::max(1.0, s.y.norm()));
      v -= s.alpha * s.sampled_atom.dot(f.gradient(s.y)) * s.sampled_atom;
    }
  }

  TEST_CASE("L below the restricted curvature is rejected") {
    Rng rng(8);
    const auto f = oracle::least_squares(4, rng);
    const auto atoms = AtomSet<double>::coordinates(4);
    const auto dist = SamplingDistribution<double>::uniform(atoms);
    SolverConfig<double> cfg;
    CHECK_THROWS_AS(run_accel_mp<double>(f, atoms, dist, 0.5 * lambda_max(f.gram()), 1.0, cfg, Vec(Vec::Zero(4))),
                    std::invalid_argument);
    CHECK_THROWS_AS(run_accel_mp<double>(f, atoms, dist, lambda_max(f.gram()), 0.0, cfg, Vec(Vec::Zero(4))),
                    std::invalid_argument);
  }

  TEST_CASE("coordinates with uniform sampling give accelerated coordinate methods") {
    const int n = 20;
    Rng rng(9);
    const auto f = oracle::least_squares(n, rng, 30);
    const auto atoms = AtomSet<double>::coordinates(n);
    const auto dist = SamplingDistribution<double>::uniform(atoms);
    const auto m = compute_metric(atoms, dist);
    const double L = lambda_max(f.gram());
    const auto opt = minimize_on_span<double>(f, atoms);
    const Vec x0 = Vec::Zero(n);
    const double dist_sq = m.squared_norm(opt.x - x0);
    std::vector<double> mean(101, 0.0);
    const int seeds = 200;
    for (int s = 0; s < seeds; ++s) {
      SolverConfig<double> cfg;
      cfg.max_iters = 100;
      cfg.seed = std::uint64_t(s);
      const auto tr = run_accel_rp<double>(f, atoms, dist, L, double(n), cfg, x0);
      for (std::size_t t = 0; t < tr.records.size(); ++t) mean[t] += (tr.records[t].fval - opt.value) / seeds;
    }
    CHECK(mean[100] <= 1.1 * 2 * L * n / (100.0 * 101.0) * dist_sq);
  }
}

TEST_SUITE("nu estimate") {
  TEST_CASE("coordinates with uniform weights are analytic") {
    const auto atoms = AtomSet<double>::coordinates(5);
    const auto dist = SamplingDistribution<double>::uniform(atoms);
    Rng rng(10);
    const auto e = estimate_nu(atoms, dist, compute_metric(atoms, dist), 50, rng);
    CHECK(e.nu_prime == 5.0);
    CHECK(e.nu >= 1.0);
    CHECK(e.nu <= 5.0);
    CHECK(e.method == NuMethod::analytic_coordinates);
  }

  TEST_CASE("single unit atom with a point mass gives one") {
    Mat a(1, 1);
    a << 1.0;
    const auto atoms = AtomSet<double>::symmetrize(a);
    const auto dist = SamplingDistribution<double>::point_mass(atoms, 0);
    Rng rng(11);
    const auto e = estimate_nu(atoms, dist, compute_metric(atoms, dist), 10, rng);
    CHECK(e.nu == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(e.nu_prime == doctest::Approx(1.0).epsilon(1e-14));
  }

  TEST_CASE("estimate is nondecreasing in the probe count") {
    Rng gen(12);
    const auto atoms = AtomSet<double>::symmetrize(oracle::gaussian(6, 10, gen));
    const auto dist = SamplingDistribution<double>::uniform(atoms);
    const auto m = compute_metric(atoms, dist);
    double prev_nu = 0, prev_nu_prime = 0;
    for (int probes : {1, 10, 100, 1000}) {
      Rng rng(13);
      const auto e = estimate_nu(atoms, dist, m, probes, rng);
      CHECK(e.nu >= prev_nu);
      CHECK(e.nu_prime >= prev_nu_prime);
      prev_nu = e.nu;
      prev_nu_prime = e.nu_prime;
    }
  }
}
