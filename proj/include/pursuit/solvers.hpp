#pragma once

#include "pursuit/objective.hpp"
#include "pursuit/oracles.hpp"

#include <chrono>
#include <limits>
#include <optional>
#include <string>
#include <variant>

namespace pursuit {

struct ExactOracle {};

struct ApproxOracle {
  double fraction = 1.0;
};

template <typename Scalar>
struct RandomOracle {
  SamplingDistribution<Scalar> dist;
};

template <typename Scalar>
using OracleChoice = std::variant<ExactOracle, ApproxOracle, RandomOracle<Scalar>>;

enum class SmoothnessKind {
  /// Step -<g, z> / (L ||z||^2): generalized MP.
  l2_norm,
  /// Step -<g, z> / L_A: affine-invariant MP.
  atomic,
};

template <typename Scalar>
struct Smoothness {
  SmoothnessKind kind = SmoothnessKind::l2_norm;
  Scalar value = 1;

  static Smoothness l2(Scalar L) { return {SmoothnessKind::l2_norm, L}; }
  static Smoothness atomic(Scalar L_A) { return {SmoothnessKind::atomic, L_A}; }
};

template <typename Scalar>
struct SolverConfig {
  int max_iters = 100;
  /// Stop once f(x_t) - optimum <= gap_tolerance (only when `optimum` is set
  /// and the tolerance is positive).
  Scalar gap_tolerance = 0;
  OracleChoice<Scalar> oracle = ExactOracle{};
  Smoothness<Scalar> smoothness{};
  std::uint64_t seed = 0;
  /// min of f over lin(A), when known.
  std::optional<Scalar> optimum;
  /// Store every iterate x_0 .. x_T in the trace.
  bool keep_iterates = false;

  // Accelerated solvers only.
  bool psi_diagnostics = false;
  /// Reference minimizer used for the psi_t(x*) diagnostic.
  std::optional<Vector<Scalar>> minimizer;
  /// Keep (y_t, sampled atom, alpha_{t+1}) so the model can be replayed.
  bool keep_model_history = false;
};

template <typename Scalar>
struct IterationRecord {
  int iter = 0;
  Scalar fval = 0;
  /// -1 for record 0.
  Index atom = -1;
  Scalar gamma = 0;
  /// Achieved approximate-LMO quality; NaN when no oracle quality applies.
  Scalar delta = std::numeric_limits<Scalar>::quiet_NaN();
  double wall_time = 0;
};

template <typename Scalar>
struct AccelRecord {
  Scalar alpha = 0;
  Scalar beta = 0;
  Scalar tau = 0;
  /// f(y_t) of the step that produced this record.
  Scalar f_y = 0;
  /// -(<grad f(y_t), z_t>)^2 / (2 L ||z_t||^2)
  Scalar predicted_decrease = 0;
  /// psi_t(x*) and min psi_t = psi_t(v_t); NaN unless diagnostics are on.
  Scalar psi_star = std::numeric_limits<Scalar>::quiet_NaN();
  Scalar psi_min = std::numeric_limits<Scalar>::quiet_NaN();
  /// Norm of grad psi_t(v_t) projected on range(P~).
  Scalar psi_grad_norm = std::numeric_limits<Scalar>::quiet_NaN();
};

template <typename Scalar>
struct ModelStep {
  Vector<Scalar> y;
  Vector<Scalar> sampled_atom;
  Scalar alpha;
};

template <typename Scalar>
struct SolverTrace {
  std::string method;
  std::uint64_t seed = 0;
  std::vector<IterationRecord<Scalar>> records;
  /// Parallel to `records` for accelerated methods, empty otherwise.
  std::vector<AccelRecord<Scalar>> accel;
  std::vector<Vector<Scalar>> iterates;
  std::vector<ModelStep<Scalar>> model_history;
  Vector<Scalar> x_final;
  std::optional<Scalar> optimum;

  Scalar gap(std::size_t t) const {
    return optimum ? records[t].fval - *optimum : std::numeric_limits<Scalar>::quiet_NaN();
  }
};

/// Thrown when an iterate or objective value stops being finite; carries the
/// trace up to (excluding) the failing step.
template <typename Scalar>
class NumericalFailure : public std::runtime_error {
 public:
  NumericalFailure(const std::string& what, SolverTrace<Scalar> trace)
      : std::runtime_error(what), trace_(std::move(trace)) {}
  const SolverTrace<Scalar>& trace() const { return trace_; }

 private:
  SolverTrace<Scalar> trace_;
};

template <typename Scalar>
struct StepResult {
  Vector<Scalar> x_next;
  Scalar gamma;
};

/// x + gamma z with gamma = -<grad f(x), z> / (L ||z||^2): the minimizer of
/// the L-smooth quadratic upper bound along z.
template <typename Scalar>
StepResult<Scalar> mp_step(const Objective<Scalar>& f, const Vector<Scalar>& x, const Vector<Scalar>& z,
                           Scalar L) {
  require(L > Scalar(0), "smoothness constant must be positive");
  const Scalar zz = z.squaredNorm();
  require(zz > Scalar(0), "step direction is zero");
  const Scalar gamma = -f.gradient(x).dot(z) / (L * zz);
  return {x + gamma * z, gamma};
}

/// x + gamma z with gamma = -<grad f(x), z> / L_A.
template <typename Scalar>
StepResult<Scalar> affine_mp_step(const Objective<Scalar>& f, const Vector<Scalar>& x,
                                  const Vector<Scalar>& z, Scalar L_A) {
  require(L_A > Scalar(0), "atomic smoothness constant must be positive");
  const Scalar gamma = -f.gradient(x).dot(z) / L_A;
  return {x + gamma * z, gamma};
}

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

template <typename Scalar>
void require_in_span(const Vector<Scalar>& x0, const AtomSet<Scalar>& atoms) {
  require(x0.size() == atoms.dim(), "x0 dimension does not match the atoms");
  require(atoms.in_span(x0), "x0 is not in the linear span of the atoms");
}

template <typename Scalar>
std::string pursuit_label(const SolverConfig<Scalar>& cfg) {
  const bool affine = cfg.smoothness.kind == SmoothnessKind::atomic;
  if (std::holds_alternative<RandomOracle<Scalar>>(cfg.oracle)) return affine ? "affine_rp" : "rp";
  if (std::holds_alternative<ApproxOracle>(cfg.oracle)) return affine ? "affine_mp_approx" : "mp_approx";
  return affine ? "affine_mp" : "mp";
}

}  // namespace detail

/// Generalized MP (l2 smoothness) or affine-invariant MP (atomic
/// smoothness) with an exact, subsampled or random oracle.
template <typename Scalar>
SolverTrace<Scalar> run_pursuit(const Objective<Scalar>& f, const AtomSet<Scalar>& atoms,
                                const SolverConfig<Scalar>& cfg, const Vector<Scalar>& x0) {
  require(cfg.max_iters >= 1, "max_iters must be at least 1");
  require(cfg.smoothness.value > Scalar(0), "smoothness constant must be positive");
  require(f.dim() == atoms.dim(), "objective and atoms have different dimensions");
  detail::require_in_span(x0, atoms);
  if (const auto* r = std::get_if<RandomOracle<Scalar>>(&cfg.oracle)) r->dist.validate(atoms);

  const auto start = std::chrono::steady_clock::now();
  Rng rng(cfg.seed);
  SolverTrace<Scalar> trace;
  trace.method = detail::pursuit_label(cfg);
  trace.seed = cfg.seed;
  trace.optimum = cfg.optimum;

  Vector<Scalar> x = x0;
  Scalar fx = f.value(x);
  trace.records.push_back({0, fx, -1, Scalar(0), std::numeric_limits<Scalar>::quiet_NaN(), 0.0});
  if (cfg.keep_iterates) trace.iterates.push_back(x);

  for (int t = 0; t < cfg.max_iters; ++t) {
    if (cfg.optimum && cfg.gap_tolerance > Scalar(0) && fx - *cfg.optimum <= cfg.gap_tolerance) break;
    const Vector<Scalar> g = f.gradient(x);

    LmoResult<Scalar> pick;
    Scalar delta = std::numeric_limits<Scalar>::quiet_NaN();
    if (std::holds_alternative<ExactOracle>(cfg.oracle)) {
      pick = lmo_exact(g, atoms);
      delta = Scalar(1);
    } else if (const auto* a = std::get_if<ApproxOracle>(&cfg.oracle)) {
      auto approx = lmo_approx(g, atoms, a->fraction, rng);
      pick = std::move(approx.result);
      delta = approx.achieved_delta;
    } else {
      pick = sample_atom(std::get<RandomOracle<Scalar>>(cfg.oracle).dist, atoms, rng);
      pick.score = pick.atom.dot(g);
    }

    const Scalar denom = cfg.smoothness.kind == SmoothnessKind::atomic
                             ? cfg.smoothness.value
                             : cfg.smoothness.value * pick.atom.squaredNorm();
    const Scalar gamma = -pick.score / denom;
    x += gamma * pick.atom;
    fx = f.value(x);
    if (!std::isfinite(static_cast<double>(fx)) || !x.allFinite()) {
      trace.x_final = x - gamma * pick.atom;
      throw NumericalFailure<Scalar>("non-finite objective value at iteration " + std::to_string(t + 1),
                                     std::move(trace));
    }
    trace.records.push_back({t + 1, fx, pick.atom_index, gamma, delta, detail::seconds_since(start)});
    if (cfg.keep_iterates) trace.iterates.push_back(x);
  }
  trace.x_final = x;
  return trace;
}

/// Steepest coordinate descent: affine-invariant MP over {+-e_i}.
template <typename Scalar>
SolverTrace<Scalar> run_steepest_cd(const Objective<Scalar>& f, const SolverConfig<Scalar>& cfg,
                                    const Vector<Scalar>& x0) {
  require(cfg.smoothness.kind == SmoothnessKind::atomic,
          "steepest coordinate descent uses the coordinate-wise (atomic) smoothness constant");
  const auto coords = AtomSet<Scalar>::coordinates(f.dim());
  SolverTrace<Scalar> trace = run_pursuit(f, coords, cfg, x0);
  trace.method = std::holds_alternative<RandomOracle<Scalar>>(cfg.oracle) ? "random_cd" : "steepest_cd";
  return trace;
}

}  // namespace pursuit
