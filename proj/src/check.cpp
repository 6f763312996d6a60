#include "pursuit/experiment.hpp"

#include <functional>

namespace pursuit::experiment {

namespace {

Matrix<double> random_matrix(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix<double> m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  return m;
}

LeastSquares<double> random_least_squares(Index n, Rng& rng) {
  Matrix<double> M = random_matrix(n + 5, n, rng);
  Vector<double> b = random_matrix(n + 5, 1, rng).col(0);
  return LeastSquares<double>(std::move(M), std::move(b));
}

bool check_gradients() {
  Rng rng(1);
  for (int k = 0; k < 20; ++k) {
    const auto f = random_least_squares(6, rng);
    const Vector<double> x = random_matrix(6, 1, rng).col(0);
    if (check_gradient<double>(f, x) > 1e-5) return false;
  }
  return true;
}

bool check_lmo() {
  Rng rng(2);
  for (int k = 0; k < 200; ++k) {
    const auto atoms = AtomSet<double>::symmetrize(random_matrix(5, 8, rng));
    const Vector<double> q = random_matrix(5, 1, rng).col(0);
    const auto r = lmo_exact(q, atoms);
    for (Index i = 0; i < atoms.size(); ++i)
      if (atoms.atom(i).dot(q) < r.score) return false;
    if (std::abs(r.score + dual_atomic_norm(q, atoms)) > 1e-12) return false;
  }
  return true;
}

bool check_atomic_norm() {
  Rng rng(3);
  const auto atoms = AtomSet<double>::coordinates(6);
  for (int k = 0; k < 50; ++k) {
    const Vector<double> x = random_matrix(6, 1, rng).col(0);
    if (std::abs(atomic_norm(x, atoms) - x.lpNorm<1>()) > 1e-10 * x.lpNorm<1>()) return false;
  }
  return true;
}

bool check_monotone() {
  Rng rng(4);
  const auto f = random_least_squares(8, rng);
  const auto atoms = AtomSet<double>::symmetrize(random_matrix(8, 12, rng));
  SolverConfig<double> cfg;
  cfg.max_iters = 200;
  cfg.smoothness = Smoothness<double>::atomic(compute_L_atomic<double>(f, atoms));
  const auto tr = run_pursuit<double>(f, atoms, cfg, Vector<double>::Zero(8));
  for (std::size_t t = 1; t < tr.records.size(); ++t)
    if (tr.records[t].fval > tr.records[t - 1].fval + 1e-12) return false;
  return true;
}

bool check_coordinate_constants() {
  for (int n : {2, 5, 50}) {
    const auto atoms = AtomSet<double>::coordinates(n);
    const auto dist = SamplingDistribution<double>::uniform(atoms);
    Rng rng(5);
    const auto metric = compute_metric(atoms, dist);
    if (compute_delta_hat_sq(atoms, dist, 10, rng) != 1.0 / n) return false;
    if (compute_mdw(atoms, 10, rng) != 1.0 / std::sqrt(double(n))) return false;
    if (metric.p != double(n) * Matrix<double>::Identity(n, n)) return false;
    if (estimate_nu(atoms, dist, metric, 10, rng).nu_prime != double(n)) return false;
  }
  return true;
}

bool check_affine_invariance() {
  Rng rng(6);
  auto f = std::make_shared<const LeastSquares<double>>(random_least_squares(6, rng));
  const auto atoms = AtomSet<double>::symmetrize(random_matrix(6, 10, rng));
  const Matrix<double> M = Matrix<double>::Identity(6, 6) + 0.3 * random_matrix(6, 6, rng);
  return affine_invariance_check<double>(f, atoms, M, 50, AffineAlgorithm::affine_step) <= 1e-9 &&
         affine_invariance_check<double>(f, atoms, M, 50, AffineAlgorithm::l2_step) > 1e-6;
}

bool check_acceleration() {
  Rng rng(7);
  const int n = 6;
  const auto f = random_least_squares(n, rng);
  const auto atoms = AtomSet<double>::coordinates(n);
  const auto dist = SamplingDistribution<double>::uniform(atoms);
  Eigen::SelfAdjointEigenSolver<Matrix<double>> es(f.gram(), Eigen::EigenvaluesOnly);
  const double L = es.eigenvalues().maxCoeff();
  SolverConfig<double> cfg;
  cfg.max_iters = 100;
  cfg.psi_diagnostics = true;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    cfg.seed = seed;
    for (int variant = 0; variant < 2; ++variant) {
      const auto tr = variant == 0 ? run_accel_mp<double>(f, atoms, dist, L, n, cfg, Vector<double>::Zero(n))
                                   : run_accel_rp<double>(f, atoms, dist, L, n, cfg, Vector<double>::Zero(n));
      for (std::size_t t = 1; t < tr.records.size(); ++t) {
        const auto& a = tr.accel[t];
        if (tr.records[t].fval - a.f_y > a.predicted_decrease + 1e-10) return false;
        if (a.psi_grad_norm > 1e-8) return false;
        if (a.alpha < double(t) / (2 * L * n)) return false;
      }
    }
  }
  return true;
}

bool check_determinism() {
  ExperimentConfig cfg;
  cfg.dim = 10;
  cfg.n_atoms = 20;
  cfg.methods = {"mp", "rp", "accel_mp", "accel_rp"};
  cfg.seeds = {0, 1};
  cfg.iters = 50;
  cfg.constant_probes = 20;
  const auto a = run_experiment(cfg);
  const auto b = run_experiment(cfg);
  std::ostringstream sa, sb;
  write_aggregate_csv(sa, a.rows, false);
  write_aggregate_csv(sb, b.rows, false);
  return a.ok() && sa.str() == sb.str();
}

}  // namespace

int run_checks(std::ostream& out) {
  const std::vector<std::pair<const char*, std::function<bool()>>> checks{
      {"gradient matches central differences", check_gradients},
      {"exact LMO equals exhaustive scan", check_lmo},
      {"atomic norm over coordinates equals l1 norm", check_atomic_norm},
      {"affine-invariant MP is monotone", check_monotone},
      {"coordinate constants are analytic", check_coordinate_constants},
      {"affine invariance (affine-invariant step yes, L2 step no)", check_affine_invariance},
      {"acceleration invariants", check_acceleration},
      {"repeated experiments are identical", check_determinism},
  };
  int failures = 0;
  for (const auto& [name, fn] : checks) {
    bool ok = false;
    std::string detail;
    try {
      ok = fn();
    } catch (const std::exception& e) {
      detail = std::string(" (") + e.what() + ")";
    }
    out << (ok ? "PASS " : "FAIL ") << name << detail << "\n";
    if (!ok) ++failures;
  }
  return failures;
}

}  // namespace pursuit::experiment
