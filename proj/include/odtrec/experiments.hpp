#pragma once

#include "odtrec/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <vector>

namespace odtrec {

inline constexpr double kSuccessThreshold = 1e-6;

/// Outcome of one synthetic recovery.
struct Trial {
  std::uint64_t seed = 0;
  std::string status;  // success | failure | infeasible | degenerate
  double relative_error = std::numeric_limits<double>::quiet_NaN();
  int stage1_iterations = 0;
  int stage2_iterations = 0;
  bool converged = false;
  double seconds = 0.0;
};

struct TrialSetup {
  int n = 0, r = 0, b = 0, m = 0;
  double corruption_scale = 1.0;
  double noise_ratio = 0.0;
  std::uint64_t instance_seed = 0;
  std::uint64_t noise_seed = 0;
  SolveConfig solve{};
  Stage1Equations stage1_equations = Stage1Equations::kRowsAndColumns;
  double threshold = kSuccessThreshold;
};

/// Generate, corrupt, optionally add dense noise, recover and score.
inline Trial run_trial(const TrialSetup& s) {
  Trial t;
  t.seed = s.instance_seed;
  const auto t0 = std::chrono::steady_clock::now();
  if (s.m < 5 || disjoint_span(s.b, s.m) > s.n) {
    t.status = "infeasible";
    return t;
  }
  const ProblemInstance inst = generate_problem(s.n, s.r, s.b, s.corruption_scale, s.instance_seed);
  const DenseTensor3 observed =
      add_entrywise_noise(inst.observed, {s.noise_ratio, s.noise_seed}, frobenius_norm(inst.clean));
  PipelineConfig cfg;
  cfg.m = s.m;
  cfg.stage1 = s.solve;
  cfg.stage2 = s.solve;
  cfg.stage1_equations = s.stage1_equations;
  cfg.seed = s.instance_seed;
  try {
    RecoveryOutput out = recover(observed, s.b, s.r, cfg);
    score(out, inst.truth, inst.clean);
    t.relative_error = *out.report.relative_error;
    t.stage1_iterations = out.report.stage1.iterations;
    t.stage2_iterations = out.report.stage2.iterations;
    t.converged = out.report.converged();
    t.status = t.relative_error < s.threshold ? "success" : "failure";
  } catch (const FeasibilityError&) {
    t.status = "infeasible";
  } catch (const DegenerateError&) {
    t.status = "degenerate";
  }
  t.seconds = detail::seconds_since(t0);
  return t;
}

/// Per-trial seeds: split the experiment seed by cell coordinates and trial.
inline std::uint64_t trial_seed(std::uint64_t seed, std::initializer_list<int> coords) {
  std::uint64_t s = seed;
  for (int c : coords) s = derive_seed(s, static_cast<std::uint64_t>(static_cast<std::int64_t>(c)));
  return s;
}

// CSV ---------------------------------------------------------------------------

class CsvWriter {
public:
  explicit CsvWriter(const std::filesystem::path& path) : out_(path, std::ios::binary) {
    if (!out_) throw Error("cannot open " + path.string() + " for writing");
  }

  template <class... Ts>
  void row(const Ts&... cells) {
    bool first = true;
    ((out_ << (first ? "" : ",") << format(cells), first = false), ...);
    out_ << '\n';
  }

private:
  static std::string format(const std::string& s) { return s; }
  static std::string format(const char* s) { return s; }
  static std::string format(bool v) { return v ? "1" : "0"; }
  static std::string format(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9e", v);
    return buf;
  }
  template <class T>
  static std::string format(const T& v) {
    return std::to_string(v);
  }

  std::ofstream out_;
};

/// Binary PGM, one pixel per cell, value 0..1 mapped to black..white.
inline void write_pgm(const std::filesystem::path& path, const std::vector<std::vector<double>>& grid, int cell = 16) {
  const int rows = static_cast<int>(grid.size());
  const int cols = rows ? static_cast<int>(grid.front().size()) : 0;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << "P5\n" << cols * cell << ' ' << rows * cell << "\n255\n";
  for (int i = 0; i < rows; ++i)
    for (int y = 0; y < cell; ++y)
      for (int j = 0; j < cols; ++j) {
        const double v = std::clamp(grid[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)], 0.0, 1.0);
        const auto px = static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * v)));
        for (int x = 0; x < cell; ++x) out.put(px);
      }
}

/// Spearman rank correlation (average ranks for ties).
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  detail::require(x.size() == y.size() && x.size() >= 2, "spearman needs two equal-length samples");
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * static_cast<double>(i + j) + 1.0;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / static_cast<double>(rx.size());
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / static_cast<double>(ry.size());
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return (sxx > 0.0 && syy > 0.0) ? sxy / std::sqrt(sxx * syy) : 0.0;
}

inline double mean(const std::vector<double>& v) {
  return v.empty() ? std::numeric_limits<double>::quiet_NaN() : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// recovery region ------------------------------------------------------------

struct RegionConfig {
  int n = 100;
  int r = 100;
  std::vector<int> b_values;
  std::vector<int> m_values;
  int trials = 3;
  std::uint64_t seed = 0;
  double corruption_scale = 1.0;
  SolveConfig solve{1e-6, 5000, true};
  Stage1Equations stage1_equations = Stage1Equations::kRowsAndColumns;
};

struct RegionRecord {
  int b = 0, m = 0, trial = 0;
  Trial result;
};

/// Success or failure of recovery over a (b, m) grid at fixed n, r.
inline std::vector<RegionRecord> experiment_region(const RegionConfig& cfg) {
  std::vector<RegionRecord> out;
  for (int b : cfg.b_values)
    for (int m : cfg.m_values)
      for (int t = 1; t <= cfg.trials; ++t) {
        TrialSetup s;
        s.n = cfg.n;
        s.r = cfg.r;
        s.b = b;
        s.m = m;
        s.corruption_scale = cfg.corruption_scale;
        s.instance_seed = trial_seed(cfg.seed, {b, m, t});
        s.solve = cfg.solve;
        s.stage1_equations = cfg.stage1_equations;
        out.push_back({b, m, t, run_trial(s)});
      }
  return out;
}

inline void write_region(const std::vector<RegionRecord>& recs, const std::filesystem::path& trials_csv,
                         const std::filesystem::path& summary_csv, const std::filesystem::path& pgm = {}) {
  CsvWriter w(trials_csv);
  w.row("b", "m", "trial", "seed", "status", "relative_error", "stage1_iterations", "stage2_iterations", "converged",
        "seconds");
  for (const auto& r : recs)
    w.row(r.b, r.m, r.trial, r.result.seed, r.result.status, r.result.relative_error, r.result.stage1_iterations,
          r.result.stage2_iterations, r.result.converged, r.result.seconds);

  std::map<std::pair<int, int>, std::vector<const Trial*>> cells;
  for (const auto& r : recs) cells[{r.b, r.m}].push_back(&r.result);
  CsvWriter s(summary_csv);
  s.row("b", "m", "trials", "successes", "infeasible", "success_rate");
  std::vector<int> bs, ms;
  for (const auto& [key, v] : cells) {
    int ok = 0, inf = 0;
    for (const Trial* t : v) {
      ok += t->status == "success";
      inf += t->status == "infeasible";
    }
    s.row(key.first, key.second, static_cast<int>(v.size()), ok, inf, static_cast<double>(ok) / static_cast<double>(v.size()));
    bs.push_back(key.first);
    ms.push_back(key.second);
  }
  if (!pgm.empty() && !cells.empty()) {
    std::sort(bs.begin(), bs.end());
    bs.erase(std::unique(bs.begin(), bs.end()), bs.end());
    std::sort(ms.begin(), ms.end());
    ms.erase(std::unique(ms.begin(), ms.end()), ms.end());
    // rows: b from top, columns: m
    std::vector<std::vector<double>> grid(bs.size(), std::vector<double>(ms.size(), 0.0));
    for (std::size_t i = 0; i < bs.size(); ++i)
      for (std::size_t j = 0; j < ms.size(); ++j) {
        auto it = cells.find({bs[i], ms[j]});
        if (it == cells.end()) continue;
        int ok = 0;
        for (const Trial* t : it->second) ok += t->status == "success";
        grid[i][j] = static_cast<double>(ok) / static_cast<double>(it->second.size());
      }
    write_pgm(pgm, grid);
  }
}

// iteration counts -----------------------------------------------------------

struct IterationsConfig {
  int n = 100;
  std::vector<int> b_values;
  std::vector<int> r_values;
  int trials = 3;
  std::uint64_t seed = 0;
  double corruption_scale = 1.0;
  SolveConfig solve{1e-7, 5000, true};
  Stage1Equations stage1_equations = Stage1Equations::kRowsAndColumns;
};

struct IterationsRecord {
  int b = 0, r = 0, trial = 0;
  Trial result;
};

inline std::vector<IterationsRecord> experiment_iterations(const IterationsConfig& cfg) {
  std::vector<IterationsRecord> out;
  for (int b : cfg.b_values)
    for (int r : cfg.r_values)
      for (int t = 1; t <= cfg.trials; ++t) {
        TrialSetup s;
        s.n = cfg.n;
        s.r = r;
        s.b = b;
        s.m = std::min(7, (cfg.n - 1) / (2 * b + 1) + 1);
        s.corruption_scale = cfg.corruption_scale;
        s.instance_seed = trial_seed(cfg.seed, {b, r, t});
        s.solve = cfg.solve;
        s.stage1_equations = cfg.stage1_equations;
        out.push_back({b, r, t, run_trial(s)});
      }
  return out;
}

/// Mean stage-1 iterations per (b, r) over trials that ran.
inline std::map<std::pair<int, int>, double> mean_iterations(const std::vector<IterationsRecord>& recs) {
  std::map<std::pair<int, int>, std::vector<double>> cells;
  for (const auto& r : recs)
    if (r.result.status == "success" || r.result.status == "failure")
      cells[{r.b, r.r}].push_back(static_cast<double>(r.result.stage1_iterations));
  std::map<std::pair<int, int>, double> out;
  for (const auto& [key, v] : cells) out[key] = mean(v);
  return out;
}

inline void write_iterations(const std::vector<IterationsRecord>& recs, const std::filesystem::path& trials_csv,
                             const std::filesystem::path& summary_csv) {
  CsvWriter w(trials_csv);
  w.row("b", "r", "trial", "seed", "status", "stage1_iterations", "stage2_iterations", "converged", "relative_error",
        "seconds");
  for (const auto& r : recs)
    w.row(r.b, r.r, r.trial, r.result.seed, r.result.status, r.result.stage1_iterations, r.result.stage2_iterations,
          r.result.converged, r.result.relative_error, r.result.seconds);
  CsvWriter s(summary_csv);
  s.row("b", "r", "mean_stage1_iterations");
  for (const auto& [key, v] : mean_iterations(recs)) s.row(key.first, key.second, v);
}

// noise sensitivity ----------------------------------------------------------

struct NoiseConfig {
  int n = 65;
  int b = 5;
  std::vector<int> r_values;
  std::vector<double> rho_values;
  int trials = 10;
  std::uint64_t seed = 0;
  double corruption_scale = 1.0;
  SolveConfig solve{1e-12, 5000, true};
  Stage1Equations stage1_equations = Stage1Equations::kRowsAndColumns;
};

struct NoiseRecord {
  int r = 0;
  double rho = 0.0;
  int trial = 0;
  Trial result;
};

/// Recovery error under additional dense noise of relative size rho. Within a
/// trial every rho shares the instance and the noise direction, so the
/// sweep over rho isolates the effect of the noise level.
inline std::vector<NoiseRecord> experiment_noise(const NoiseConfig& cfg) {
  std::vector<NoiseRecord> out;
  const int m = std::min(7, (cfg.n - 1) / (2 * cfg.b + 1) + 1);
  for (int r : cfg.r_values)
    for (int t = 1; t <= cfg.trials; ++t)
      for (double rho : cfg.rho_values) {
        TrialSetup s;
        s.n = cfg.n;
        s.r = r;
        s.b = cfg.b;
        s.m = m;
        s.corruption_scale = cfg.corruption_scale;
        s.noise_ratio = rho;
        s.instance_seed = trial_seed(cfg.seed, {r, t});
        s.noise_seed = derive_seed(s.instance_seed, 1);
        s.solve = cfg.solve;
        s.stage1_equations = cfg.stage1_equations;
        // noise cannot make a recovery "successful" in any useful sense
        s.threshold = std::numeric_limits<double>::infinity();
        Trial tr = run_trial(s);
        if (tr.status == "success") tr.status = "completed";
        out.push_back({r, rho, t, std::move(tr)});
      }
  return out;
}

/// Mean relative error per (r, rho) over trials that completed.
inline std::map<std::pair<int, double>, double> mean_errors(const std::vector<NoiseRecord>& recs) {
  std::map<std::pair<int, double>, std::vector<double>> cells;
  for (const auto& r : recs)
    if (std::isfinite(r.result.relative_error)) cells[{r.r, r.rho}].push_back(r.result.relative_error);
  std::map<std::pair<int, double>, double> out;
  for (const auto& [key, v] : cells) out[key] = mean(v);
  return out;
}

inline void write_noise(const std::vector<NoiseRecord>& recs, const std::filesystem::path& trials_csv,
                        const std::filesystem::path& summary_csv) {
  CsvWriter w(trials_csv);
  w.row("r", "rho", "trial", "seed", "status", "relative_error", "stage1_iterations", "stage2_iterations", "converged",
        "seconds");
  for (const auto& r : recs)
    w.row(r.r, r.rho, r.trial, r.result.seed, r.result.status, r.result.relative_error, r.result.stage1_iterations,
          r.result.stage2_iterations, r.result.converged, r.result.seconds);
  CsvWriter s(summary_csv);
  s.row("r", "rho", "mean_relative_error");
  for (const auto& [key, v] : mean_errors(recs)) s.row(key.first, key.second, v);
}

}  // namespace odtrec
