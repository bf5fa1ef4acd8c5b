// Command-line front end: generate synthetic instances, recover tensors from
// ODT1 files and run the parameter sweeps.

#include "odtrec/odtrec.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace odtrec;

namespace {

enum Exit : int {
  kOk = 0,
  kFailure = 1,
  kInfeasible = 2,
  kNotConverged = 3,
  kUsage = 64,
  kBadInput = 65,
};

json matrix_json(const Matrix& m) {
  // column-major list of columns
  json cols = json::array();
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    std::vector<double> col(m.col(c).data(), m.col(c).data() + m.rows());
    cols.push_back(col);
  }
  return cols;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

fs::path sidecar(const fs::path& p, const std::string& suffix) { return fs::path(p.string() + suffix); }

struct GenOptions {
  int n = 0, r = 0, b = 0, m = 0;
  std::uint64_t seed = 0;
  double corruption_scale = 1.0;
  double noise_ratio = 0.0;
  std::string out;
};

int run_gen(const GenOptions& o) {
  const ProblemInstance inst = generate_problem(o.n, o.r, o.b, o.corruption_scale, o.seed);
  const DenseTensor3 observed =
      add_entrywise_noise(inst.observed, {o.noise_ratio, derive_seed(o.seed, 1)}, frobenius_norm(inst.clean));
  const fs::path out = o.out;
  odt::write_file(out, observed);
  odt::write_file(sidecar(out, ".clean.odt"), inst.clean);

  json meta = {{"version", kVersion},
               {"n", o.n},
               {"r", o.r},
               {"b", o.b},
               {"seed", o.seed},
               {"corruption_scale", o.corruption_scale},
               {"noise_ratio", o.noise_ratio},
               {"clean", sidecar(out, ".clean.odt").filename().string()},
               {"A", matrix_json(inst.truth.A)},
               {"B", matrix_json(inst.truth.B)},
               {"C", matrix_json(inst.truth.C)}};
  int m = o.m;
  if (m == 0) {
    try {
      m = default_slice_count(o.n, o.b);
    } catch (const FeasibilityError&) {
      m = std::min(7, (o.n - 1) / (2 * o.b + 1) + 1);
    }
  }
  meta["m"] = m;
  meta["feasibility"] = evaluate_feasibility(o.n, o.r, o.b, m);
  write_json(sidecar(out, ".json"), meta);
  std::cout << "wrote " << out.string() << " (n=" << o.n << ", r=" << o.r << ", b=" << o.b << ")\n";
  return kOk;
}

struct RecoverOptions {
  std::string in, out, truth, stage1 = "joint";
  int r = 0, b = 0, m = 0, max_iters = 5000;
  double tol = 1e-8;
  std::uint64_t seed = 0;
};

int run_recover(const RecoverOptions& o) {
  const DenseTensor3 observed = odt::read_file(o.in);
  PipelineConfig cfg;
  cfg.m = o.m;
  cfg.seed = o.seed;
  cfg.stage1_equations = parse_stage1_equations(o.stage1);
  cfg.stage1.eps_tol = cfg.stage2.eps_tol = o.tol;
  cfg.stage1.max_iters = cfg.stage2.max_iters = o.max_iters;

  RecoveryOutput rec = recover(observed, o.b, o.r, cfg);
  if (!o.truth.empty()) {
    const DenseTensor3 clean = odt::read_file(o.truth);
    if (clean.n() != observed.n()) throw FormatError(o.truth + ": dimension differs from the input tensor");
    rec.report.relative_error = relative_error(rec.tensor, clean);
  }
  const fs::path out = o.out;
  odt::write_file(out, rec.tensor);
  write_json(sidecar(out, ".json"), rec.report);

  std::cout << "stage 1: " << rec.report.stage1.iterations << " sweeps, stage 2: " << rec.report.stage2.iterations
            << " sweeps, consistency " << rec.report.consistency_error;
  if (rec.report.relative_error) std::cout << ", relative error " << *rec.report.relative_error;
  std::cout << '\n';
  for (const auto& w : rec.report.warnings) std::cerr << "warning: " << w << '\n';
  if (!rec.report.converged()) {
    std::cerr << "error: alternating least squares did not converge within " << o.max_iters << " sweeps\n";
    return kNotConverged;
  }
  return kOk;
}

struct ExperimentOptions {
  int n = 0;
  std::vector<int> r, b, m;
  std::vector<double> rho;
  int trials = 0, max_iters = 5000;
  std::optional<double> tol;
  std::uint64_t seed = 0;
  double corruption_scale = 1.0;
  std::string out, stage1 = "joint";
  bool pgm = false;
};

int run_experiment(const std::string& kind, const ExperimentOptions& o) {
  const fs::path base = o.out;
  if (base.has_parent_path()) fs::create_directories(base.parent_path());
  const fs::path trials_csv = sidecar(base, ".csv");
  const fs::path summary_csv = sidecar(base, "_summary.csv");
  const Stage1Equations eqs = parse_stage1_equations(o.stage1);

  if (kind == "region") {
    RegionConfig c;
    c.n = o.n ? o.n : 100;
    c.r = o.r.empty() ? c.n : o.r.front();
    c.b_values = o.b.empty() ? std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8} : o.b;
    c.m_values = o.m.empty() ? std::vector<int>{5, 6, 7} : o.m;
    c.trials = o.trials ? o.trials : 3;
    c.seed = o.seed;
    c.corruption_scale = o.corruption_scale;
    c.solve = {o.tol.value_or(1e-6), o.max_iters, true};
    c.stage1_equations = eqs;
    write_region(experiment_region(c), trials_csv, summary_csv, o.pgm ? sidecar(base, ".pgm") : fs::path{});
  } else if (kind == "iters") {
    IterationsConfig c;
    c.n = o.n ? o.n : 100;
    c.b_values = o.b.empty() ? std::vector<int>{1, 2, 3, 4, 5, 6, 7} : o.b;
    c.r_values = o.r.empty() ? std::vector<int>{40, 60, 80, 100} : o.r;
    c.trials = o.trials ? o.trials : 3;
    c.seed = o.seed;
    c.corruption_scale = o.corruption_scale;
    c.solve = {o.tol.value_or(1e-7), o.max_iters, true};
    c.stage1_equations = eqs;
    write_iterations(experiment_iterations(c), trials_csv, summary_csv);
  } else {
    NoiseConfig c;
    c.n = o.n ? o.n : 65;
    c.b = o.b.empty() ? 5 : o.b.front();
    c.r_values = o.r.empty() ? std::vector<int>{30, 45, 65} : o.r;
    c.rho_values = o.rho.empty() ? std::vector<double>{0.0, 1e-4, 1e-3, 1e-2} : o.rho;
    c.trials = o.trials ? o.trials : 10;
    c.seed = o.seed;
    c.corruption_scale = o.corruption_scale;
    c.solve = {o.tol.value_or(1e-12), o.max_iters, true};
    c.stage1_equations = eqs;
    write_noise(experiment_noise(c), trials_csv, summary_csv);
  }
  std::cout << "wrote " << trials_csv.string() << " and " << summary_csv.string() << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Recovery of orthogonally decomposable tensors with band-structured corruption"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "Write a synthetic corrupted tensor (ODT1) with JSON metadata");
  gen_cmd->add_option("--n", gen.n, "Dimension")->required()->check(CLI::Range(1, 4096));
  gen_cmd->add_option("--r", gen.r, "Rank")->required()->check(CLI::PositiveNumber);
  gen_cmd->add_option("--b", gen.b, "Corruption bandwidth")->required()->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--m", gen.m, "Slice count recorded in the metadata (0 = auto)");
  gen_cmd->add_option("--seed", gen.seed, "Random seed");
  gen_cmd->add_option("--corruption-scale", gen.corruption_scale, "Standard deviation of the corruption")
      ->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--noise-ratio", gen.noise_ratio, "Dense noise norm relative to the clean tensor")
      ->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--out", gen.out, "Output ODT1 path")->required();

  RecoverOptions rec;
  auto* rec_cmd = app.add_subcommand("recover", "Recover a tensor from a corrupted ODT1 file");
  rec_cmd->add_option("--in", rec.in, "Input ODT1 path")->required();
  rec_cmd->add_option("--r", rec.r, "Rank")->required()->check(CLI::PositiveNumber);
  rec_cmd->add_option("--b", rec.b, "Corruption bandwidth")->required()->check(CLI::NonNegativeNumber);
  rec_cmd->add_option("--m", rec.m, "Number of distinguished slices (0 = auto)");
  rec_cmd->add_option("--seed", rec.seed, "Seed for the random slice combinations");
  rec_cmd->add_option("--tol", rec.tol, "Relative improvement that stops a sweep loop")->check(CLI::PositiveNumber);
  rec_cmd->add_option("--max-iters", rec.max_iters, "Sweep limit per stage")->check(CLI::PositiveNumber);
  rec_cmd->add_option("--stage1", rec.stage1, "Stage-1 equations")->check(CLI::IsMember({"rows", "joint"}));
  rec_cmd->add_option("--truth", rec.truth, "Clean ODT1 tensor; adds the relative error to the report");
  rec_cmd->add_option("--out", rec.out, "Output ODT1 path (report goes to <out>.json)")->required();

  ExperimentOptions exp;
  std::string kind;
  auto* exp_cmd = app.add_subcommand("experiment", "Run a parameter sweep and write CSV");
  exp_cmd->add_option("kind", kind, "region | iters | noise")->required()->check(CLI::IsMember({"region", "iters", "noise"}));
  exp_cmd->add_option("--n", exp.n, "Dimension")->check(CLI::PositiveNumber);
  exp_cmd->add_option("--r", exp.r, "Rank value(s)")->delimiter(',');
  exp_cmd->add_option("--b", exp.b, "Bandwidth value(s)")->delimiter(',');
  exp_cmd->add_option("--m", exp.m, "Slice count value(s) (region)")->delimiter(',');
  exp_cmd->add_option("--noise-ratio", exp.rho, "Noise ratio value(s) (noise)")->delimiter(',');
  exp_cmd->add_option("--trials", exp.trials, "Trials per cell")->check(CLI::PositiveNumber);
  exp_cmd->add_option("--seed", exp.seed, "Experiment seed");
  exp_cmd->add_option("--tol", exp.tol, "Stopping tolerance")->check(CLI::PositiveNumber);
  exp_cmd->add_option("--max-iters", exp.max_iters, "Sweep limit per stage")->check(CLI::PositiveNumber);
  exp_cmd->add_option("--corruption-scale", exp.corruption_scale, "Standard deviation of the corruption");
  exp_cmd->add_option("--stage1", exp.stage1, "Stage-1 equations")->check(CLI::IsMember({"rows", "joint"}));
  exp_cmd->add_flag("--pgm", exp.pgm, "Also write a success-rate heatmap (region)");
  exp_cmd->add_option("--out", exp.out, "Output prefix; writes <out>.csv and <out>_summary.csv")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*gen_cmd) {
      if (gen.r > gen.n) throw ArgumentError("rank r must not exceed n");
      return run_gen(gen);
    }
    if (*rec_cmd) return run_recover(rec);
    return run_experiment(kind, exp);
  } catch (const FeasibilityError& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return kInfeasible;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadInput;
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
}
