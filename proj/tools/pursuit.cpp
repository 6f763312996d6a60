#include "pursuit/experiment.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

using namespace pursuit;
using namespace pursuit::experiment;

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  for (;;) {
    const std::size_t next = s.find(sep, pos);
    out.push_back(s.substr(pos, next == std::string::npos ? std::string::npos : next - pos));
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  return out;
}

/// "0,3,7" or ranges "0-19" (inclusive), or a mix.
std::vector<std::uint64_t> parse_seeds(const std::string& spec) {
  std::vector<std::uint64_t> seeds;
  for (const auto& part : split(spec, ',')) {
    if (part.empty()) throw CLI::ValidationError("--seeds", "empty seed");
    const std::size_t dash = part.find('-');
    try {
      if (dash == std::string::npos) {
        seeds.push_back(std::stoull(part));
      } else {
        const auto lo = std::stoull(part.substr(0, dash));
        const auto hi = std::stoull(part.substr(dash + 1));
        if (hi < lo) throw CLI::ValidationError("--seeds", "descending range '" + part + "'");
        for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
      }
    } catch (const std::logic_error&) {
      throw CLI::ValidationError("--seeds", "cannot parse '" + part + "'");
    }
  }
  return seeds;
}

struct CommonOptions {
  std::string methods = "mp,rp,accel_mp,accel_rp";
  std::string seeds = "0";
  std::string nu_policy = "default";
  double nu = 1, nu_prime = 1;
};

void add_common(CLI::App* cmd, ExperimentConfig& cfg, CommonOptions& opts) {
  cmd->add_option("--methods", opts.methods, "comma-separated subset of mp,affine_mp,rp,accel_mp,accel_rp,steepest_cd,random_cd")
      ->capture_default_str();
  cmd->add_option("--seeds", opts.seeds, "seed list, e.g. 0,1,2 or 0-19")->capture_default_str();
  cmd->add_option("--iters", cfg.iters, "iteration budget per run")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--out", cfg.out_dir, "output directory")->required();
  cmd->add_option("--nu-policy", opts.nu_policy, "default (nu = 1, nu' = span_dim), estimated or explicit")
      ->check(CLI::IsMember({"default", "estimated", "explicit"}))
      ->capture_default_str();
  cmd->add_option("--nu", opts.nu, "nu for accel_mp with --nu-policy explicit");
  cmd->add_option("--nu-prime", opts.nu_prime, "nu' for accel_rp with --nu-policy explicit");
  cmd->add_flag("--envelopes", cfg.envelopes, "add rate-envelope columns to aggregate.csv");
  cmd->add_option("--envelope-samples", cfg.envelope_samples, "level-set samples for R_A")->capture_default_str();
  cmd->add_flag("--psi", cfg.psi_diagnostics, "write psi diagnostics for accelerated runs");
  cmd->add_option("--probes", cfg.constant_probes, "probe directions for sampled constants")->capture_default_str();
  cmd->add_option("--threads", cfg.threads, "worker threads (0 = all cores)")->capture_default_str();
}

void finish_common(ExperimentConfig& cfg, const CommonOptions& opts) {
  cfg.methods = split(opts.methods, ',');
  cfg.seeds = parse_seeds(opts.seeds);
  cfg.nu_policy = opts.nu_policy == "estimated"  ? NuPolicy::estimated
                  : opts.nu_policy == "explicit" ? NuPolicy::explicit_value
                                                 : NuPolicy::default_policy;
  cfg.nu = opts.nu;
  cfg.nu_prime = opts.nu_prime;
}

int run(const ExperimentConfig& cfg) {
  const auto result = run_experiment(cfg, &std::cerr);
  std::cout << "wrote " << result.runs.size() << " traces, aggregate.csv and constants.txt to " << cfg.out_dir << "\n";
  if (!result.ok()) {
    std::cerr << result.failures.size() << " run(s) failed; see " << cfg.out_dir << "/FAILED\n";
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Matching pursuit, random pursuit and their accelerated variants over atomic dictionaries"};
  app.require_subcommand(1);

  ExperimentConfig syn_cfg;
  CommonOptions syn_opts;
  auto* syn = app.add_subcommand("synthetic", "random signal and random symmetric Gaussian dictionary");
  syn->add_option("--dim", syn_cfg.dim, "signal dimension")->capture_default_str()->check(CLI::PositiveNumber);
  syn->add_option("--atoms", syn_cfg.n_atoms, "atoms before symmetrization")->capture_default_str()->check(CLI::PositiveNumber);
  add_common(syn, syn_cfg, syn_opts);

  ExperimentConfig reg_cfg;
  reg_cfg.kind = ExperimentKind::regression;
  CommonOptions reg_opts;
  reg_opts.methods = "mp,rp,accel_mp,accel_rp";
  auto* reg = app.add_subcommand("regression", "per-pixel least squares over a dictionary, loss averaged over pixels");
  reg->add_option("--pixels", reg_cfg.pixels_path, "CSV, one pixel per row")->required()->check(CLI::ExistingFile);
  reg->add_option("--dict", reg_cfg.dict_path, "dictionary file")->required()->check(CLI::ExistingFile);
  add_common(reg, reg_cfg, reg_opts);

  int mk_pixels = 200, mk_features = 162, mk_atoms = 6;
  double mk_noise = 0.01;
  std::uint64_t mk_seed = 0;
  std::string mk_pixels_out, mk_dict_out;
  auto* mk = app.add_subcommand("make-regression", "write a generated stand-in for a hyperspectral unmixing data set");
  mk->add_option("--pixels", mk_pixels, "number of pixels")->capture_default_str()->check(CLI::PositiveNumber);
  mk->add_option("--features", mk_features, "features per pixel")->capture_default_str()->check(CLI::PositiveNumber);
  mk->add_option("--atoms", mk_atoms, "ground-truth spectra")->capture_default_str()->check(CLI::PositiveNumber);
  mk->add_option("--noise", mk_noise, "Gaussian noise level")->capture_default_str();
  mk->add_option("--seed", mk_seed, "generator seed")->capture_default_str();
  mk->add_option("--pixels-out", mk_pixels_out, "pixel CSV to write")->required();
  mk->add_option("--dict-out", mk_dict_out, "dictionary file to write")->required();

  std::string c_dict, c_dist = "uniform";
  int c_probes = 1000;
  std::uint64_t c_seed = 0;
  auto* cst = app.add_subcommand("constants", "print the geometric constants of a dictionary");
  cst->add_option("--dict", c_dict, "dictionary file")->required()->check(CLI::ExistingFile);
  cst->add_option("--dist", c_dist, "sampling distribution")->check(CLI::IsMember({"uniform"}))->capture_default_str();
  cst->add_option("--probes", c_probes, "random probe directions")->capture_default_str()->check(CLI::PositiveNumber);
  cst->add_option("--seed", c_seed, "probe seed")->capture_default_str();

  auto* chk = app.add_subcommand("check", "run the invariant suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help and --version exit 0; every usage error exits 1.
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*syn) {
      finish_common(syn_cfg, syn_opts);
      return run(syn_cfg);
    }
    if (*reg) {
      finish_common(reg_cfg, reg_opts);
      return run(reg_cfg);
    }
    if (*mk) {
      const auto data = make_regression_standin(mk_pixels, mk_features, mk_atoms, mk_noise, mk_seed);
      std::ofstream px(mk_pixels_out), dc(mk_dict_out);
      if (!px || !dc) throw std::runtime_error("cannot open output files");
      io::write_matrix_csv(px, data.pixels);
      io::write_dictionary(dc, data.atoms, false);
      std::cout << "wrote " << mk_pixels << " pixels x " << mk_features << " features and " << mk_atoms
                << " atoms\n";
      return 0;
    }
    if (*cst) {
      const auto atoms = io::load_atom_set<double>(c_dict);
      const auto dist = SamplingDistribution<double>::uniform(atoms);
      Rng rng(c_seed);
      ConstantsReport<double> r;
      const bool coords = atoms.is_coordinate_set();
      const auto kind = coords ? Provenance::analytic : Provenance::sampled;
      r.notes.push_back("atoms=" + std::to_string(atoms.size()) + " dim=" + std::to_string(atoms.dim()) +
                        " span_dim=" + std::to_string(atoms.span_dim()) + " dist=uniform");
      r.notes.push_back("L and L_atomic refer to f(x) = 1/2 ||x - b||^2");
      r.delta_hat_sq = r.make(compute_delta_hat_sq(atoms, dist, c_probes, rng), kind);
      const double mdw = compute_mdw(atoms, c_probes, rng);
      r.mdw = r.make(mdw, kind);
      r.L = r.make(1.0, Provenance::exact);
      r.L_atomic = r.make(std::pow(atoms.radius(), 2), Provenance::exact);
      r.mu_lower = r.make(mdw * mdw, kind);
      try {
        const auto metric = compute_metric(atoms, dist);
        const auto nu = estimate_nu(atoms, dist, metric, c_probes, rng);
        const auto p = nu.method == NuMethod::analytic_coordinates ? Provenance::analytic : Provenance::sampled;
        r.nu = r.make(nu.nu, p);
        r.nu_prime = r.make(nu.nu_prime, p);
      } catch (const UnsupportedError& e) {
        r.notes.push_back(std::string("nu unavailable: ") + e.what());
      }
      std::cout << r.to_text();
      return 0;
    }
    if (*chk) return run_checks(std::cout) == 0 ? 0 : 1;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
