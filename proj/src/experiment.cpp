#include "pursuit/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

namespace pursuit::experiment {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Solver seed for objective `index` of the problem generated from `seed`.
std::uint64_t solver_seed(std::uint64_t seed, std::size_t index) {
  return splitmix64(splitmix64(seed) ^ (0x632be59bd9b4e019ULL * (index + 1)));
}

bool is_coordinate_method(const std::string& m) { return m == "steepest_cd" || m == "random_cd"; }

struct ObjectiveData {
  std::shared_ptr<const LeastSquares<double>> f;
  Vector<double> x_star;
  double f_star = 0;
  // Envelope scales (NaN when not computed).
  double radius_atomic = std::numeric_limits<double>::quiet_NaN();
  double radius_coordinates = std::numeric_limits<double>::quiet_NaN();
  double p_distance_sq = std::numeric_limits<double>::quiet_NaN();
};

/// Everything a run needs that does not depend on the method or the solver
/// seed.
struct Instance {
  AtomSet<double> atoms;
  AtomSet<double> coordinates;
  Vector<double> x0;
  std::vector<ObjectiveData> objectives;
  SamplingDistribution<double> dist;
  SamplingDistribution<double> coordinate_dist;
  MetricP<double> metric;
  /// lambda_max of the (shared) Hessian; the objectives differ only in b.
  double L = 1;
  double L_atomic = 1;
  double L_coordinates = 1;
  double radius_sq = 1;
  double nu = 1;
  double nu_prime = 1;
  NuMethod nu_method = NuMethod::user_supplied;
  double delta_hat_sq = std::numeric_limits<double>::quiet_NaN();
};

double lambda_max(const Matrix<double>& H) {
  Eigen::SelfAdjointEigenSolver<Matrix<double>> es(H, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

Instance build_instance(std::vector<std::shared_ptr<const LeastSquares<double>>> fs, AtomSet<double> atoms,
                        Vector<double> x0, const ExperimentConfig& cfg, std::uint64_t seed) {
  const Index n = atoms.dim();
  const bool want_cd = std::any_of(cfg.methods.begin(), cfg.methods.end(), is_coordinate_method);
  if (want_cd && atoms.span_dim() != n)
    throw std::invalid_argument("coordinate methods need atoms spanning the whole space (span_dim " +
                                std::to_string(atoms.span_dim()) + " < dim " + std::to_string(n) + ")");
  auto coords = AtomSet<double>::coordinates(n);
  auto dist = SamplingDistribution<double>::uniform(atoms);
  auto cdist = SamplingDistribution<double>::uniform(coords);
  auto metric = compute_metric(atoms, dist);
  Instance inst{std::move(atoms), std::move(coords), std::move(x0), {}, std::move(dist), std::move(cdist),
                std::move(metric)};

  const Matrix<double>& H = fs.front()->gram();
  for (const auto& f : fs)
    require(f->dim() == n && f->gram() == H, "all objectives must share the dictionary dimension and Hessian");
  inst.L = lambda_max(H);
  inst.L_atomic = compute_L_atomic<double>(*fs.front(), inst.atoms);
  inst.L_coordinates = H.diagonal().maxCoeff();
  inst.radius_sq = std::pow(inst.atoms.radius(), 2);

  switch (cfg.nu_policy) {
    case NuPolicy::default_policy:
      inst.nu = 1;
      inst.nu_prime = double(inst.atoms.span_dim());
      inst.nu_method = NuMethod::user_supplied;
      break;
    case NuPolicy::explicit_value:
      inst.nu = cfg.nu;
      inst.nu_prime = cfg.nu_prime;
      inst.nu_method = NuMethod::user_supplied;
      break;
    case NuPolicy::estimated: {
      Rng rng(splitmix64(seed ^ 0x5eedULL));
      const auto est = estimate_nu(inst.atoms, inst.dist, inst.metric, cfg.constant_probes, rng);
      inst.nu = est.nu;
      inst.nu_prime = est.nu_prime;
      inst.nu_method = est.method;
      break;
    }
  }

  Rng rng(splitmix64(seed ^ 0xe11e10beULL));
  if (cfg.envelopes && std::find(cfg.methods.begin(), cfg.methods.end(), "rp") != cfg.methods.end())
    inst.delta_hat_sq = compute_delta_hat_sq(inst.atoms, inst.dist, cfg.constant_probes, rng);

  for (const auto& f : fs) {
    ObjectiveData d;
    d.f = f;
    const auto opt = minimize_on_span<double>(*f, inst.atoms);
    d.x_star = opt.x;
    d.f_star = opt.value;
    if (cfg.envelopes) {
      d.radius_atomic = level_set_radius<double>(*f, inst.atoms, inst.x0, cfg.envelope_samples, rng);
      if (want_cd) d.radius_coordinates = level_set_radius<double>(*f, inst.coordinates, inst.x0, cfg.envelope_samples, rng);
      d.p_distance_sq = inst.metric.squared_norm(d.x_star - inst.x0);
    }
    inst.objectives.push_back(std::move(d));
  }
  return inst;
}

SolverTrace<double> run_method(const std::string& method, const Instance& inst, const ObjectiveData& obj,
                               const ExperimentConfig& cfg, std::uint64_t seed) {
  SolverConfig<double> sc;
  sc.max_iters = cfg.iters;
  sc.seed = seed;
  sc.optimum = obj.f_star;
  const LeastSquares<double>& f = *obj.f;
  if (method == "mp") {
    sc.smoothness = Smoothness<double>::l2(inst.L);
    return run_pursuit<double>(f, inst.atoms, sc, inst.x0);
  }
  if (method == "affine_mp") {
    sc.smoothness = Smoothness<double>::atomic(inst.L_atomic);
    return run_pursuit<double>(f, inst.atoms, sc, inst.x0);
  }
  if (method == "rp") {
    sc.smoothness = Smoothness<double>::l2(inst.L);
    sc.oracle = RandomOracle<double>{inst.dist};
    return run_pursuit<double>(f, inst.atoms, sc, inst.x0);
  }
  if (method == "steepest_cd" || method == "random_cd") {
    sc.smoothness = Smoothness<double>::atomic(inst.L_coordinates);
    if (method == "random_cd") sc.oracle = RandomOracle<double>{inst.coordinate_dist};
    return run_steepest_cd<double>(f, sc, inst.x0);
  }
  sc.psi_diagnostics = cfg.psi_diagnostics;
  if (cfg.psi_diagnostics) sc.minimizer = obj.x_star;
  if (method == "accel_mp") return run_accel_mp<double>(f, inst.atoms, inst.dist, inst.L, inst.nu, sc, inst.x0);
  if (method == "accel_rp") return run_accel_rp<double>(f, inst.atoms, inst.dist, inst.L, inst.nu_prime, sc, inst.x0);
  throw std::invalid_argument("unknown method '" + method + "'");
}

/// Rate envelope for `method` on one objective at iteration t.
double method_envelope(const std::string& method, const Instance& inst, const ObjectiveData& obj, int t) {
  ConstantsReport<double> c;
  const auto exact = Provenance::exact;
  if (method == "mp" || method == "rp") {
    // The L2 step decreases at least as much as the affine-invariant step with L_A := L * radius^2.
    c.L_atomic = c.make(inst.L * inst.radius_sq, exact);
    if (method == "mp") return envelope(EnvelopeKind::sublinear_greedy, c, obj.radius_atomic, t);
    c.delta_hat_sq = c.make(inst.delta_hat_sq, Provenance::sampled);
    return envelope(EnvelopeKind::sublinear_random, c, obj.radius_atomic, t);
  }
  if (method == "affine_mp") {
    c.L_atomic = c.make(inst.L_atomic, exact);
    return envelope(EnvelopeKind::sublinear_greedy, c, obj.radius_atomic, t);
  }
  if (method == "steepest_cd" || method == "random_cd") {
    c.L_atomic = c.make(inst.L_coordinates, exact);
    if (method == "steepest_cd") return envelope(EnvelopeKind::sublinear_greedy, c, obj.radius_coordinates, t);
    c.delta_hat_sq = c.make(1.0 / double(inst.atoms.dim()), Provenance::analytic);
    return envelope(EnvelopeKind::sublinear_random, c, obj.radius_coordinates, t);
  }
  c.L = c.make(inst.L, exact);
  c.nu = c.make(inst.nu, Provenance::user_supplied);
  c.nu_prime = c.make(inst.nu_prime, Provenance::user_supplied);
  return envelope(method == "accel_mp" ? EnvelopeKind::accel : EnvelopeKind::accel_random, c, obj.p_distance_sq, t);
}

RunResult run_task(const std::string& method, std::uint64_t seed, const Instance& inst, const ExperimentConfig& cfg) {
  RunResult out;
  out.method = method;
  out.seed = seed;
  const std::size_t len = std::size_t(cfg.iters) + 1;
  out.fval.assign(len, 0.0);
  out.gap.assign(len, 0.0);
  if (cfg.envelopes) out.envelope.assign(len, 0.0);
  const double count = double(inst.objectives.size());
  for (std::size_t i = 0; i < inst.objectives.size(); ++i) {
    const ObjectiveData& obj = inst.objectives[i];
    SolverTrace<double> trace;
    try {
      trace = run_method(method, inst, obj, cfg, solver_seed(seed, i));
    } catch (const NumericalFailure<double>& e) {
      out.failed = true;
      out.error = e.what();
      trace = e.trace();
    } catch (const std::exception& e) {
      out.failed = true;
      out.error = e.what();
    }
    for (std::size_t t = 0; t < trace.records.size() && t < len; ++t) {
      out.fval[t] += trace.records[t].fval / count;
      out.gap[t] += (trace.records[t].fval - obj.f_star) / count;
    }
    if (cfg.envelopes)
      for (std::size_t t = 0; t < len; ++t) out.envelope[t] += method_envelope(method, inst, obj, int(t)) / count;
    if (out.failed) {
      out.fval.resize(trace.records.size());
      out.gap.resize(trace.records.size());
      if (inst.objectives.size() == 1) out.trace = std::move(trace);
      return out;
    }
    if (inst.objectives.size() == 1) out.trace = std::move(trace);
  }
  return out;
}

template <typename Task>
void parallel_for(std::size_t count, unsigned threads, Task&& task) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = unsigned(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
  std::atomic<std::size_t> next{0};
  // The exception of the lowest failing index is rethrown after the join so
  // the reported error does not depend on scheduling.
  std::mutex error_mutex;
  std::size_t error_index = count;
  std::exception_ptr error;
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        task(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (i < error_index) {
          error_index = i;
          error = std::current_exception();
        }
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned k = 0; k < threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);
}

void write_run_csv(const std::filesystem::path& path, const RunResult& run, bool with_psi) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  if (run.trace) {
    io::write_trace_csv(out, *run.trace, with_psi);
    return;
  }
  // Across-objective averages carry no single atom or step.
  out << io::kTraceHeader << "\n";
  for (std::size_t t = 0; t < run.fval.size(); ++t)
    out << t << "," << run.method << "," << run.seed << "," << io::format_real(run.fval[t]) << ","
        << io::format_real(run.gap[t]) << ",-1,nan,nan\n";
}

const char* nu_policy_note(NuPolicy p) {
  switch (p) {
    case NuPolicy::default_policy: return "nu policy: default (nu = 1, nu' = span_dim)";
    case NuPolicy::estimated: return "nu policy: estimated (sampled lower estimates replace the default nu = 1, nu' = span_dim)";
    case NuPolicy::explicit_value: return "nu policy: explicit values from the command line";
  }
  return "";
}

ConstantsReport<double> build_report(const Instance& inst, const ExperimentConfig& cfg, std::uint64_t seed) {
  ConstantsReport<double> r;
  using P = Provenance;
  Rng rng(splitmix64(seed ^ 0xc0457a475ULL));
  const bool coords = inst.atoms.is_coordinate_set();
  r.delta_hat_sq = r.make(compute_delta_hat_sq(inst.atoms, inst.dist, cfg.constant_probes, rng),
                          coords ? P::analytic : P::sampled);
  const double mdw = compute_mdw(inst.atoms, cfg.constant_probes, rng);
  r.mdw = r.make(mdw, coords ? P::analytic : P::sampled);
  r.L = r.make(inst.L, P::exact);
  r.L_atomic = r.make(inst.L_atomic, P::exact);
  const double mu = restricted_lambda_min(inst.objectives.front().f->gram(), inst.atoms);
  r.mu_lower = r.make(mdw * mdw * mu, coords ? P::analytic : P::sampled);
  const P nu_prov = cfg.nu_policy == NuPolicy::default_policy   ? P::default_policy
                    : cfg.nu_policy == NuPolicy::explicit_value ? P::user_supplied
                    : inst.nu_method == NuMethod::analytic_coordinates ? P::analytic
                                                                       : P::sampled;
  r.nu = r.make(inst.nu, nu_prov);
  r.nu_prime = r.make(inst.nu_prime, nu_prov);
  if (cfg.envelopes && inst.objectives.size() == 1) r.radius_atomic = r.make(inst.objectives.front().radius_atomic, P::sampled);

  if (cfg.kind == ExperimentKind::synthetic) {
    r.notes.push_back("experiment=synthetic dim=" + std::to_string(cfg.dim) + " atoms=" + std::to_string(cfg.n_atoms) +
                      " symmetric_atoms=" + std::to_string(inst.atoms.size()) +
                      " span_dim=" + std::to_string(inst.atoms.span_dim()));
    r.notes.push_back("synthetic atoms: i.i.d. Gaussian columns scaled to unit l2 norm, then symmetrized; b ~ N(0, I); x0 = 0");
    r.notes.push_back("constants below are for the problem of seed " + std::to_string(seed));
  } else {
    r.notes.push_back("experiment=regression pixels=" + std::to_string(inst.objectives.size()) +
                      " features=" + std::to_string(inst.atoms.dim()) + " symmetric_atoms=" +
                      std::to_string(inst.atoms.size()) + " span_dim=" + std::to_string(inst.atoms.span_dim()));
    r.notes.push_back("loss: mean over pixels of 1/2 ||x - b_i||^2");
  }
  r.notes.push_back("iterations=" + std::to_string(cfg.iters) + " (default 500)");
  r.notes.push_back(nu_policy_note(cfg.nu_policy));
  r.notes.push_back("L for accelerated methods: lambda_max of the Hessian (1 for 1/2 ||x - b||^2)");
  r.notes.push_back("sampled delta_hat_sq, mdw and mu_lower over-estimate the true minima");
  return r;
}

}  // namespace

void ExperimentConfig::validate() const {
  require(!methods.empty(), "at least one method is required");
  require(!seeds.empty(), "at least one seed is required");
  require(iters >= 1, "iters must be positive");
  require(constant_probes >= 1, "constant_probes must be positive");
  require(envelope_samples >= 1, "envelope_samples must be positive");
  std::set<std::string> seen;
  for (const auto& m : methods) {
    require(std::find(known_methods().begin(), known_methods().end(), m) != known_methods().end(),
            "unknown method '" + m + "'");
    require(seen.insert(m).second, "method '" + m + "' listed twice");
  }
  require(std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() == seeds.size(), "duplicate seed");
  if (kind == ExperimentKind::synthetic) {
    require(dim >= 1 && n_atoms >= 1, "dim and atoms must be positive");
  } else {
    require(!pixels_path.empty() && !dict_path.empty(), "regression needs --pixels and --dict");
  }
  if (nu_policy == NuPolicy::explicit_value) require(nu > 0 && nu_prime > 0, "nu and nu' must be positive");
}

SyntheticProblem gen_synthetic(int dim, int n_atoms, std::uint64_t seed, std::ostream* warn) {
  require(dim >= 1 && n_atoms >= 1, "dim and n_atoms must be positive");
  if (n_atoms < dim && warn)
    *warn << "warning: " << n_atoms << " atoms cannot span R^" << dim << "; lin(A) has dimension at most "
          << n_atoms << "\n";
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector<double> b(dim);
  for (Index i = 0; i < dim; ++i) b(i) = normal(rng);
  Matrix<double> A(dim, n_atoms);
  for (Index j = 0; j < n_atoms; ++j) {
    for (Index i = 0; i < dim; ++i) A(i, j) = normal(rng);
    A.col(j).normalize();
  }
  return {std::make_shared<const LeastSquares<double>>(LeastSquares<double>::distance_to(std::move(b))),
          AtomSet<double>::symmetrize(A), Vector<double>::Zero(dim)};
}

RegressionProblem load_regression(const std::string& pixels_path, const std::string& dict_path) {
  const Matrix<double> pixels = io::read_matrix_csv<double>(pixels_path);
  AtomSet<double> atoms = io::load_atom_set<double>(dict_path);
  if (pixels.cols() != atoms.dim())
    throw ParseError("pixel rows have " + std::to_string(pixels.cols()) + " features but the atoms have dim " +
                         std::to_string(atoms.dim()),
                     1);
  RegressionProblem out{{}, std::move(atoms)};
  const Index n = pixels.cols();
  const Matrix<double> I = Matrix<double>::Identity(n, n);
  for (Index r = 0; r < pixels.rows(); ++r)
    out.objectives.push_back(std::make_shared<const LeastSquares<double>>(I, Vector<double>(pixels.row(r).transpose())));
  return out;
}

RegressionStandIn make_regression_standin(int n_pixels, int n_features, int n_atoms, double noise,
                                          std::uint64_t seed) {
  require(n_pixels >= 1 && n_features >= 2 && n_atoms >= 1, "sizes must be positive");
  require(noise >= 0, "noise must be nonnegative");
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::gamma_distribution<double> gamma(0.5, 1.0);
  RegressionStandIn out;
  out.atoms.setZero(n_features, n_atoms);
  for (Index j = 0; j < n_atoms; ++j) {
    const double baseline = 0.05 + 0.1 * unit(rng);
    const int bumps = 2 + int(unit(rng) * 3);
    for (Index i = 0; i < n_features; ++i) out.atoms(i, j) = baseline;
    for (int k = 0; k < bumps; ++k) {
      const double center = unit(rng) * (n_features - 1);
      const double width = (0.03 + 0.12 * unit(rng)) * n_features;
      const double height = 0.2 + unit(rng);
      for (Index i = 0; i < n_features; ++i) {
        const double u = (double(i) - center) / width;
        out.atoms(i, j) += height * std::exp(-0.5 * u * u);
      }
    }
  }
  out.pixels.resize(n_pixels, n_features);
  for (Index p = 0; p < n_pixels; ++p) {
    Vector<double> w(n_atoms);
    for (Index j = 0; j < n_atoms; ++j) w(j) = gamma(rng);
    if (w.sum() <= 0) w.setOnes();
    w /= w.sum();
    const Vector<double> clean = out.atoms * w;
    for (Index i = 0; i < n_features; ++i) out.pixels(p, i) = std::max(0.0, clean(i) + noise * normal(rng));
  }
  return out;
}

double percentile(std::vector<double> values, double q) {
  require(!values.empty(), "percentile of an empty sample");
  require(q >= 0 && q <= 1, "percentile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * double(values.size() - 1);
  const auto lo = std::size_t(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - double(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<AggregateRow> aggregate(const std::vector<RunResult>& runs, const std::vector<std::string>& methods) {
  std::vector<AggregateRow> rows;
  for (const auto& m : methods) {
    std::vector<const RunResult*> ok;
    for (const auto& r : runs)
      if (r.method == m && !r.failed) ok.push_back(&r);
    if (ok.empty()) continue;
    std::size_t len = ok.front()->fval.size();
    for (const auto* r : ok) len = std::min(len, r->fval.size());
    for (std::size_t t = 0; t < len; ++t) {
      std::vector<double> fv, gv;
      double env = 0;
      for (const auto* r : ok) {
        fv.push_back(r->fval[t]);
        gv.push_back(r->gap[t]);
        if (!r->envelope.empty()) env += r->envelope[t];
      }
      AggregateRow row;
      row.iter = int(t);
      row.method = m;
      double mf = 0, mg = 0;
      for (std::size_t k = 0; k < fv.size(); ++k) {
        mf += fv[k];
        mg += gv[k];
      }
      row.mean_fval = mf / double(fv.size());
      row.mean_gap = mg / double(gv.size());
      row.p10 = percentile(fv, 0.1);
      row.p90 = percentile(fv, 0.9);
      row.gap_p10 = percentile(gv, 0.1);
      row.gap_p90 = percentile(gv, 0.9);
      if (!ok.front()->envelope.empty()) row.envelope = env / double(ok.size());
      rows.push_back(row);
    }
  }
  return rows;
}

void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows, bool with_envelope) {
  out << "iter,method,mean_fval,p10,p90,mean_gap,gap_p10,gap_p90" << (with_envelope ? ",envelope" : "") << "\n";
  for (const auto& r : rows) {
    out << r.iter << "," << r.method << "," << io::format_real(r.mean_fval) << "," << io::format_real(r.p10) << ","
        << io::format_real(r.p90) << "," << io::format_real(r.mean_gap) << "," << io::format_real(r.gap_p10) << ","
        << io::format_real(r.gap_p90);
    if (with_envelope) out << "," << io::format_real(r.envelope);
    out << "\n";
  }
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, std::ostream* log) {
  cfg.validate();
  ExperimentResult result;

  // One instance per synthetic seed; regression shares one instance.
  std::vector<std::optional<Instance>> instances;
  if (cfg.kind == ExperimentKind::synthetic) {
    instances.resize(cfg.seeds.size());
    std::vector<std::string> warnings(cfg.seeds.size());
    parallel_for(cfg.seeds.size(), cfg.threads, [&](std::size_t k) {
      std::ostringstream warn;
      auto p = gen_synthetic(cfg.dim, cfg.n_atoms, cfg.seeds[k], &warn);
      warnings[k] = warn.str();
      instances[k].emplace(build_instance({p.objective}, std::move(p.atoms), std::move(p.x0), cfg, cfg.seeds[k]));
    });
    if (log && !warnings.empty()) *log << warnings.front();
  } else {
    auto p = load_regression(cfg.pixels_path, cfg.dict_path);
    Vector<double> x0 = Vector<double>::Zero(p.atoms.dim());
    instances.resize(1);
    instances[0].emplace(build_instance(std::move(p.objectives), std::move(p.atoms), std::move(x0), cfg, 0));
  }
  auto instance_for = [&](std::size_t seed_index) -> const Instance& {
    return *instances[cfg.kind == ExperimentKind::synthetic ? seed_index : 0];
  };

  const std::size_t n_seeds = cfg.seeds.size();
  const std::size_t n_tasks = cfg.methods.size() * n_seeds;
  result.runs.resize(n_tasks);
  parallel_for(n_tasks, cfg.threads, [&](std::size_t k) {
    const std::size_t mi = k / n_seeds, si = k % n_seeds;
    result.runs[k] = run_task(cfg.methods[mi], cfg.seeds[si], instance_for(si), cfg);
  });
  for (const auto& r : result.runs)
    if (r.failed) result.failures.push_back(r.method + " seed " + std::to_string(r.seed) + ": " + r.error);

  result.rows = aggregate(result.runs, cfg.methods);
  result.constants = build_report(instance_for(0), cfg, cfg.seeds.front());

  if (!cfg.out_dir.empty()) {
    namespace fs = std::filesystem;
    const fs::path dir(cfg.out_dir);
    fs::create_directories(dir);
    for (const auto& r : result.runs)
      write_run_csv(dir / ("trace_" + r.method + "_seed" + std::to_string(r.seed) + ".csv"), r, cfg.psi_diagnostics);
    {
      std::ofstream out(dir / "aggregate.csv");
      write_aggregate_csv(out, result.rows, cfg.envelopes);
    }
    {
      std::ofstream out(dir / "constants.txt");
      out << result.constants.to_text();
    }
    const fs::path flag = dir / "FAILED";
    if (!result.ok()) {
      std::ofstream out(flag);
      for (const auto& f : result.failures) out << f << "\n";
    } else {
      fs::remove(flag);
    }
  }
  if (log)
    for (const auto& f : result.failures) *log << "run failed: " << f << "\n";
  return result;
}

}  // namespace pursuit::experiment
