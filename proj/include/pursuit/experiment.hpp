#pragma once

#include "pursuit/analysis.hpp"
#include "pursuit/io.hpp"

#include <ostream>
#include <string>
#include <vector>

namespace pursuit::experiment {

enum class ExperimentKind { synthetic, regression };

enum class NuPolicy {
  /// nu = 1 and nu' = span_dim
  default_policy,
  /// sampled estimate_nu
  estimated,
  /// values from ExperimentConfig::nu / nu_prime
  explicit_value,
};

inline const std::vector<std::string>& known_methods() {
  static const std::vector<std::string> m{"mp",       "affine_mp",   "rp",       "accel_mp",
                                          "accel_rp", "steepest_cd", "random_cd"};
  return m;
}

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::synthetic;
  int dim = 100;
  int n_atoms = 200;
  std::vector<std::string> methods{"mp", "rp", "accel_mp", "accel_rp"};
  std::vector<std::uint64_t> seeds{0};
  int iters = 500;
  NuPolicy nu_policy = NuPolicy::default_policy;
  double nu = 1;
  double nu_prime = 1;
  std::string pixels_path;
  std::string dict_path;
  /// Empty: nothing is written.
  std::string out_dir;
  bool envelopes = false;
  /// Level-set boundary samples per objective for the envelope R_A.
  int envelope_samples = 200;
  bool psi_diagnostics = false;
  /// Probe count for the sampled constants in the report.
  int constant_probes = 200;
  /// 0: hardware concurrency.
  unsigned threads = 0;

  /// Throws std::invalid_argument describing the first problem found.
  void validate() const;
};

struct SyntheticProblem {
  std::shared_ptr<const LeastSquares<double>> objective;
  AtomSet<double> atoms;
  Vector<double> x0;
};

/// b ~ N(0, I_dim); n_atoms i.i.d. normal columns scaled to unit l2 norm and
/// symmetrized; f(x) = 1/2 ||x - b||^2; x0 = 0. Warns on `warn` when
/// n_atoms < dim.
SyntheticProblem gen_synthetic(int dim, int n_atoms, std::uint64_t seed, std::ostream* warn = nullptr);

struct RegressionProblem {
  /// f_i(x) = 1/2 ||x - b_i||^2, one per pixel row.
  std::vector<std::shared_ptr<const LeastSquares<double>>> objectives;
  AtomSet<double> atoms;
};

/// Pixels CSV (one pixel per row) and a dictionary file; the dictionary is
/// symmetrized when its header says symmetric=0.
RegressionProblem load_regression(const std::string& pixels_path, const std::string& dict_path);

struct RegressionStandIn {
  /// pixels x features
  Matrix<double> pixels;
  /// features x atoms, nonnegative smooth spectra
  Matrix<double> atoms;
};

/// Smooth nonnegative spectra (sums of Gaussian bumps) mixed with
/// nonnegative abundances plus Gaussian noise.
RegressionStandIn make_regression_standin(int n_pixels, int n_features, int n_atoms, double noise,
                                          std::uint64_t seed);

struct RunResult {
  std::string method;
  std::uint64_t seed = 0;
  /// Across-objective mean value per iteration.
  std::vector<double> fval;
  std::vector<double> gap;
  /// Per-iteration envelope (empty unless requested).
  std::vector<double> envelope;
  /// Single-objective runs keep the full solver trace for the CSV.
  std::optional<SolverTrace<double>> trace;
  bool failed = false;
  std::string error;
};

struct AggregateRow {
  int iter = 0;
  std::string method;
  double mean_fval = 0, p10 = 0, p90 = 0;
  double mean_gap = 0, gap_p10 = 0, gap_p90 = 0;
  double envelope = std::numeric_limits<double>::quiet_NaN();
};

/// Linear-interpolation percentile (q in [0, 1]) of unsorted values.
double percentile(std::vector<double> values, double q);

/// Per method (in config order) and iteration, statistics over the seeds
/// whose run completed.
std::vector<AggregateRow> aggregate(const std::vector<RunResult>& runs, const std::vector<std::string>& methods);

struct ExperimentResult {
  std::vector<RunResult> runs;
  std::vector<AggregateRow> rows;
  ConstantsReport<double> constants;
  std::vector<std::string> failures;
  bool ok() const { return failures.empty(); }
};

/// Runs every (method, seed) pair, in parallel across pairs, and writes
/// trace_<method>_seed<s>.csv, aggregate.csv, constants.txt and (on failure)
/// FAILED into out_dir. Output bytes depend only on the config.
ExperimentResult run_experiment(const ExperimentConfig& cfg, std::ostream* log = nullptr);

void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows, bool with_envelope);

/// The invariant suite behind `check`; prints one PASS/FAIL line per check
/// and returns the number of failures.
int run_checks(std::ostream& out);

}  // namespace pursuit::experiment
