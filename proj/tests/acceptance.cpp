// Acceptance run: one PASS/FAIL line per criterion. Pass criterion numbers on
// the command line to run a subset, e.g. `odtrec_acceptance 2 5`.

#include "odtrec/odtrec.hpp"
#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <set>
#include <string>
#include <vector>

using namespace odtrec;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* title;
  double budget_seconds;  // 0: no runtime requirement
  std::function<Outcome()> run;
};

// largest rise of the relative residual over any single block update, across criteria 2-4
double g_max_increase = 0.0;
int g_monotone_runs = 0;

void track(const StageSummary& s) {
  g_max_increase = std::max(g_max_increase, s.max_update_increase);
  ++g_monotone_runs;
}

void track(const StageResult& s) {
  g_max_increase = std::max(g_max_increase, s.max_update_increase);
  ++g_monotone_runs;
}

template <typename... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  if constexpr (sizeof...(Args) == 0)
    std::snprintf(buf, sizeof buf, "%s", f);
  else
    std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// 1 ----------------------------------------------------------------------------

Outcome densities() {
  struct Row {
    int b, n;
    double percent;
  };
  const Row rows[] = {{1, 19, 40.5}, {3, 43, 41.4}, {5, 68, 41.1}, {7, 94, 40.7}, {10, 134, 40.0}};
  Outcome o{true, ""};
  for (const Row& r : rows) {
    const double got = 100.0 * pattern_density(BandPattern(r.n, r.b));
    o.pass = o.pass && std::abs(got - r.percent) <= 0.1;
    o.detail += fmt("b=%d:%.2f%% ", r.b, got);
  }
  return o;
}

// 2 ----------------------------------------------------------------------------

Outcome minimal_geometry() {
  int ok = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const ProblemInstance inst = generate_problem(19, 7, 1, 1e3, seed);
    try {
      PipelineConfig cfg;
      cfg.seed = seed;
      RecoveryOutput out = recover(inst.observed, 1, 7, cfg);
      score(out, inst.truth, inst.clean);
      track(out.report.stage1);
      track(out.report.stage2);
      worst = std::max(worst, *out.report.relative_error);
      ok += *out.report.relative_error < 1e-6;
    } catch (const DegenerateError&) {
      worst = INFINITY;
    }
  }
  return {ok >= 19, fmt("%d/20 trials below 1e-6, worst error %.2e", ok, worst)};
}

// 3 ----------------------------------------------------------------------------

Outcome region_boundary() {
  bool pass = true;
  std::string detail;
  for (int b = 1; b <= 8; ++b) {
    int ok = 0, infeasible = 0;
    double worst = 0.0;
    for (int t = 1; t <= 3; ++t) {
      const std::uint64_t seed = trial_seed(2024, {b, t});
      const ProblemInstance inst = generate_problem(100, 100, b, 1.0, seed);
      PipelineConfig cfg;
      cfg.m = 7;
      cfg.seed = seed;
      cfg.stage1.eps_tol = cfg.stage2.eps_tol = 1e-6;
      try {
        RecoveryOutput out = recover(inst.observed, b, 100, cfg);
        score(out, inst.truth, inst.clean);
        track(out.report.stage1);
        track(out.report.stage2);
        worst = std::max(worst, *out.report.relative_error);
        ok += *out.report.relative_error < kSuccessThreshold;
      } catch (const FeasibilityError&) {
        ++infeasible;
      } catch (const DegenerateError&) {
        worst = INFINITY;
      }
    }
    if (b <= 7) {
      pass = pass && ok == 3;
      detail += fmt("b=%d:%d/3(%.0e) ", b, ok, worst);
    } else {
      pass = pass && ok == 0;
      detail += infeasible == 3 ? fmt("b=8:infeasible") : fmt("b=8:%d/3 recovered", ok);
    }
  }
  return {pass, detail};
}

// 4 ----------------------------------------------------------------------------

Outcome oracle_equivalence() {
  std::mt19937_64 rng(4);
  double worst1 = 0.0, worst_rows = 0.0, worst2 = 0.0;
  int rows_checked = 0, instances = 0;
  while (instances < 20) {
    const int b = std::uniform_int_distribution<int>(1, 2)(rng);
    const int n = std::uniform_int_distribution<int>(minimal_admissible_n(b), 40)(rng);
    const int r = std::uniform_int_distribution<int>(std::min(n, 8 * b + 4), n)(rng);
    const int m = default_slice_count(n, b);
    if (!evaluate_feasibility(n, r, b, m).counts_admissible) continue;
    ++instances;
    const ProblemInstance inst = generate_problem(n, r, b, 1e3, rng());
    const SliceSystem sys = make_slice_system(inst.observed, choose_slices(n, b, m));

    const LeastSquaresSystem joint = assemble_full_system(sys, Stage1Equations::kRowsAndColumns);
    const StageResult als1 = als_stage1(sys, {}, Stage1Equations::kRowsAndColumns);
    track(als1);
    worst1 = std::max(worst1, oracle::rel_diff(als1.X, joint.unpack(oracle::dense_solve(joint))));

    // the row-only system is compared wherever its solution is unique
    const LeastSquaresSystem rows = assemble_full_system(sys, Stage1Equations::kRows);
    if (rows.design.rows() >= rows.design.cols()) {
      const oracle::DenseLs dense(rows);
      const Vector sv = dense.singular_values();
      if (sv.minCoeff() > 1e-8 * sv.maxCoeff()) {
        const StageResult als_rows = als_stage1(sys, {}, Stage1Equations::kRows);
        track(als_rows);
        worst_rows = std::max(worst_rows, oracle::rel_diff(als_rows.X, rows.unpack(dense.solve())));
        ++rows_checked;
      }
    }

    const Stage2System s2 = make_stage2_system(sys, als1.X, default_subset(m));
    const LeastSquaresSystem ls2 = assemble_stage2_system(s2);
    const StageResult als2 = als_stage2(s2, {});
    track(als2);
    worst2 = std::max(worst2, oracle::rel_diff(als2.X, ls2.unpack(oracle::dense_solve(ls2))));
  }
  const bool pass = worst1 < 1e-6 && worst_rows < 1e-6 && worst2 < 1e-6;
  return {pass, fmt("stage 1 joint %.1e, stage 1 rows %.1e (%d/20 full rank), stage 2 %.1e", worst1, worst_rows,
                    rows_checked, worst2)};
}

// 5 ----------------------------------------------------------------------------

Outcome monotonicity() {
  if (g_monotone_runs == 0) return {false, "criteria 2-4 were not run"};
  return {g_max_increase <= 1e-12,
          fmt("largest residual rise over %d solves: %.1e", g_monotone_runs, g_max_increase)};
}

// 6 ----------------------------------------------------------------------------

// Independent predicates, written out again from the definitions.
bool in_slice_region(int p, int q, int k, int b) {
  return std::abs(p - q) <= b || std::abs(p - k) <= b || std::abs(q - k) <= b;
}

Outcome counting() {
  long checks = 0, mismatches = 0;
  std::string first;
  for (int b = 1; b <= 3; ++b) {
    const int lo = (2 * b + 1) * 6 + 1;
    const int hi = minimal_admissible_n(b, 7) + 15;
    for (int n = lo; n <= hi; ++n) {
      std::vector<int> k;
      for (int i = 1; i <= 7; ++i) k.push_back((2 * b + 1) * (i - 1) + 1);
      for (int i = 1; i <= 7; ++i) {
        long oracle_u = 0;
        for (int p = 1; p <= n; ++p)
          for (int q = 1; q <= n; ++q)
            if (std::abs(p - k[i - 1]) > 2 * b && in_slice_region(p, q, k[i - 1], b)) ++oracle_u;
        ++checks;
        if (count_unknowns(n, b, 7, i) != oracle_u && first.empty() && ++mismatches)
          first = fmt("unknowns n=%d b=%d i=%d", n, b, i);
        for (int j = i + 1; j <= 7; ++j) {
          long oracle_e = 0;
          for (int p = 1; p <= n; ++p)
            for (int q = 1; q < p; ++q) {
              const bool dropped = p - q <= 2 * b || std::abs(p - k[i - 1]) <= 2 * b || std::abs(q - k[i - 1]) <= 2 * b ||
                                   std::abs(p - k[j - 1]) <= 2 * b || std::abs(q - k[j - 1]) <= 2 * b;
              oracle_e += !dropped;
            }
          ++checks;
          if (count_equations(n, b, 7, i, j) != oracle_e) {
            ++mismatches;
            if (first.empty()) first = fmt("equations n=%d b=%d (%d,%d)", n, b, i, j);
          }
        }
      }
    }
  }
  return {mismatches == 0, fmt("%ld counts checked, %ld mismatches%s%s", checks, mismatches, first.empty() ? "" : ", first: ",
                               first.c_str())};
}

// 7 ----------------------------------------------------------------------------

Outcome kernel_dichotomy() {
  double full_min = INFINITY, kernel_max = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed)
    for (int r : {18, 5}) {
      const ProblemInstance inst = generate_problem(48, r, 1, 1.0, seed);
      const SliceSystem sys = make_slice_system(inst.observed, choose_slices(48, 1, 7));
      const Vector sv = oracle::dense_singular_values(assemble_full_system(sys, Stage1Equations::kRows));
      const double ratio = sv.minCoeff() / sv.maxCoeff();
      if (r == 18)
        full_min = std::min(full_min, ratio);
      else
        kernel_max = std::max(kernel_max, ratio);
    }
  return {full_min > 1e-8 && kernel_max < 1e-8,
          fmt("r=18 smallest sigma_min/sigma_max %.1e, r=5 largest %.1e", full_min, kernel_max)};
}

// 8 ----------------------------------------------------------------------------

Outcome jennrich_recovery() {
  double clean_worst = 0.0, corrected_worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const ProblemInstance inst = generate_problem(20, 10, 1, 1e3, seed);
    const SliceSelection sel = choose_slices(20, 1, 7);
    const SubsetSelection subset = minimal_subset(7);

    StackedSlices clean;
    for (int i : subset.positions) clean.slices.push_back(slice_as_matrix(inst.clean, sel.slice(i)));
    const JennrichResult jc = jennrich(clean, 10, seed);
    clean_worst = std::max(clean_worst, factor_errors({jc.A, jc.B, Matrix()}, {inst.truth.A, inst.truth.B, Matrix()}).ab);

    const SliceSystem sys = make_slice_system(inst.observed, sel);
    const StageResult st1 = als_stage1(sys, {}, Stage1Equations::kRowsAndColumns);
    const Stage2System s2 = make_stage2_system(sys, st1.X, subset);
    const StageResult st2 = als_stage2(s2, {});
    StackedSlices corrected;
    for (std::size_t a = 0; a < s2.corrected.size(); ++a) corrected.slices.push_back(s2.corrected[a] - st2.X[a]);
    const JennrichResult jp = jennrich(corrected, 10, seed);
    corrected_worst =
        std::max(corrected_worst, factor_errors({jp.A, jp.B, Matrix()}, {inst.truth.A, inst.truth.B, Matrix()}).ab);
  }
  return {clean_worst < 1e-8 && corrected_worst < 1e-6,
          fmt("clean %.1e, pipeline-corrected %.1e (5 seeds)", clean_worst, corrected_worst)};
}

// 9 ----------------------------------------------------------------------------

Outcome c_rows() {
  double worst = 0.0;
  for (int r : {5, 15, 30})
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const ProblemInstance inst = generate_problem(30, r, 1, 1e3, seed);
      const Matrix c = solve_c(inst.observed, inst.truth.A, inst.truth.B, 1);
      for (int l = 0; l < 30; ++l) worst = std::max(worst, (c.row(l) - inst.truth.C.row(l)).norm());
    }
  return {worst < 1e-8, fmt("largest row error %.1e over r in {5,15,30}, 3 seeds", worst)};
}

// 10 ---------------------------------------------------------------------------

struct NoiseSummary {
  double max_clean = 0.0;
  double min_spearman = 1.0;
  std::string detail;
};

NoiseSummary noise_sweep(int n, int b, const std::vector<int>& ranks, int trials) {
  NoiseConfig cfg;
  cfg.n = n;
  cfg.b = b;
  cfg.r_values = ranks;
  cfg.rho_values = {0.0, 1e-4, 1e-3, 1e-2};
  cfg.trials = trials;
  cfg.seed = 65;
  const auto recs = experiment_noise(cfg);
  const auto means = mean_errors(recs);
  NoiseSummary s;
  for (int r : ranks) {
    std::vector<double> rho, err;
    for (const auto& rec : recs)
      if (rec.r == r && std::isfinite(rec.result.relative_error)) {
        rho.push_back(rec.rho);
        err.push_back(rec.result.relative_error);
      }
    const double rs = rho.size() >= 2 ? spearman(rho, err) : 0.0;
    const auto it = means.find({r, 0.0});
    const double clean = it == means.end() ? INFINITY : it->second;
    s.max_clean = std::max(s.max_clean, clean);
    s.min_spearman = std::min(s.min_spearman, rs);
    s.detail += fmt("r=%d: err(0)=%.1e spearman=%.2f; ", r, clean, rs);
  }
  return s;
}

Outcome noise_sensitivity() {
  const NoiseSummary main = noise_sweep(65, 5, {30, 45, 65}, 10);
  // n=65 sits below the smallest admissible n for b=5; report the nearest admissible size for context
  const NoiseSummary near = noise_sweep(68, 5, {30, 68}, 2);
  std::printf("       note: n=68 (smallest admissible at b=5), 2 trials: %s\n", near.detail.c_str());
  return {main.max_clean < 1e-6 && main.min_spearman > 0.9, "n=65 " + main.detail};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int a = 1; a < argc; ++a) only.insert(std::atoi(argv[a]));

  const std::vector<Criterion> all = {
      {1, "pattern densities match the table within 0.1 pp", 30, densities},
      {2, "exact recovery at (n=19, r=7, b=1), >= 19/20 trials", 60, minimal_geometry},
      {3, "recovery region at n=r=100, m=7: b<=7 recovered, b=8 not", 900, region_boundary},
      {4, "alternating solves match dense least squares to 1e-6", 300, oracle_equivalence},
      {5, "residual never rises across a block update (slack 1e-12)", 0, monotonicity},
      {6, "unknown and equation counts match enumeration", 120, counting},
      {7, "row system: full rank at r=18, kernel at r=5 (n=48, b=1)", 0, kernel_dichotomy},
      {8, "Jennrich factors: clean < 1e-8, corrected < 1e-6", 0, jennrich_recovery},
      {9, "C rows from true A, B at (n=30, b=1) to 1e-8", 0, c_rows},
      {10, "noise sweep n=65, b=5: err(0) < 1e-6, Spearman > 0.9", 1200, noise_sensitivity},
  };

  int failed = 0;
  for (const Criterion& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_seconds > 0 && secs > c.budget_seconds) {
      o.pass = false;
      o.detail += fmt(" [over the %.0f s budget]", c.budget_seconds);
    }
    failed += !o.pass;
    std::printf("[%s] %2d %s | %s | %.1f s\n", o.pass ? "PASS" : "FAIL", c.id, c.title, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
