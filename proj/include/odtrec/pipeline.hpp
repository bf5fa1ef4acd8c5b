#pragma once

#include "odtrec/feasibility.hpp"
#include "odtrec/spectral.hpp"
#include "odtrec/stage2.hpp"
#include "odtrec/synth.hpp"

#include "json.hpp"

#include <chrono>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace odtrec {

inline constexpr const char* kVersion = "1.0.0";

inline std::string to_string(Stage1Equations e) { return e == Stage1Equations::kRows ? "rows" : "joint"; }

inline Stage1Equations parse_stage1_equations(const std::string& s) {
  if (s == "rows") return Stage1Equations::kRows;
  if (s == "joint") return Stage1Equations::kRowsAndColumns;
  throw ArgumentError("stage-1 equations must be 'rows' or 'joint', got '" + s + "'");
}

struct PipelineConfig {
  int m = 0;                  // 0: as many slices as fit, capped at 7
  std::vector<int> subset;    // empty: odd positions 1, 3, 5, ...
  Stage1Equations stage1_equations = Stage1Equations::kRowsAndColumns;
  SolveConfig stage1{};
  SolveConfig stage2{};
  std::uint64_t seed = 0;     // Jennrich combination weights

  void validate() const {
    detail::require(m == 0 || m >= 5, "m must be 0 (auto) or at least 5");
    stage1.validate();
    stage2.validate();
  }
};

struct StageSummary {
  int iterations = 0;
  bool converged = false;
  std::size_t unknowns = 0;
  double seconds = 0.0;
  double max_update_increase = 0.0;
  std::vector<double> residual_history;

  static StageSummary from(const StageResult& r) {
    return {r.iterations, r.converged, r.unknowns, r.seconds, r.max_update_increase, r.residual_history};
  }
};

struct RecoveryReport {
  int n = 0, r = 0, b = 0, m = 0;
  std::uint64_t seed = 0;
  std::vector<int> slices;  // distinguished slice indices k_i
  std::vector<int> subset;  // positions used in stage 2 and Jennrich
  std::string stage1_equations;
  FeasibilityFlags feasibility;
  std::vector<std::string> warnings;
  StageSummary stage1;
  StageSummary stage2;
  int jennrich_attempts = 0;
  double symmetry_defect = 0.0;
  std::vector<double> spectrum;
  double jennrich_seconds = 0.0;
  double c_seconds = 0.0;
  /// ||T_hat - S|| / ||S|| over cells outside the corruption pattern.
  double consistency_error = 0.0;
  /// Filled by score() when the ground truth is known.
  std::optional<double> relative_error;
  std::optional<double> factor_error_ab;
  std::optional<double> factor_error_c;

  bool converged() const { return stage1.converged && stage2.converged; }
};

struct RecoveryOutput {
  FactorEstimate estimate;
  DenseTensor3 tensor;
  RecoveryReport report;
};

namespace detail {

/// Run fn, prefixing the message of any library error with the stage name
/// while keeping its type.
template <class Fn>
auto tag_stage(const std::string& stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const FeasibilityError& e) {
    throw FeasibilityError(stage + ": " + e.what());
  } catch (const DegenerateError& e) {
    throw DegenerateError(stage + ": " + e.what());
  } catch (const ArgumentError& e) {
    throw ArgumentError(stage + ": " + e.what());
  }
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

inline double consistency_error(const DenseTensor3& estimate, const DenseTensor3& observed, int b) {
  const int n = observed.n();
  const BandPattern pattern(n, b);
  double num = 0.0, den = 0.0;
  for (int l = 1; l <= n; ++l)
    for (int j = 1; j <= n; ++j)
      for (int i = 1; i <= n; ++i) {
        if (pattern.contains(i, j, l)) continue;
        const double d = estimate(i, j, l) - observed(i, j, l);
        num += d * d;
        den += observed(i, j, l) * observed(i, j, l);
      }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

/// Full recovery from the corrupted observation S. Throws FeasibilityError
/// before any solve when the slice geometry does not exist; numerical
/// failures surface as DegenerateError tagged with the stage.
inline RecoveryOutput recover(const DenseTensor3& observed, int b, int r, const PipelineConfig& cfg) {
  cfg.validate();
  const int n = observed.n();
  detail::require(n >= 1, "empty tensor");
  detail::require(b >= 0, "bandwidth b must be non-negative");
  detail::require(1 <= r && r <= n, "rank r must satisfy 1 <= r <= n");

  RecoveryOutput out;
  RecoveryReport& rep = out.report;
  rep.n = n;
  rep.r = r;
  rep.b = b;
  rep.seed = cfg.seed;
  rep.stage1_equations = to_string(cfg.stage1_equations);

  const SliceSelection sel = detail::tag_stage("select", [&] {
    const int m = cfg.m == 0 ? default_slice_count(n, b) : cfg.m;
    return choose_slices(n, b, m);
  });
  rep.m = sel.m;
  rep.slices = sel.k;
  rep.feasibility = evaluate_feasibility(n, r, b, sel.m);
  rep.warnings = rep.feasibility.warnings();

  const SubsetSelection subset = cfg.subset.empty() ? default_subset(sel.m) : SubsetSelection{cfg.subset};
  detail::tag_stage("select", [&] { validate_subset(subset, sel); });
  rep.subset = subset.positions;

  const SliceSystem sys = make_slice_system(observed, sel);
  const StageResult st1 = detail::tag_stage("stage 1", [&] { return als_stage1(sys, cfg.stage1, cfg.stage1_equations); });
  rep.stage1 = StageSummary::from(st1);

  const Stage2System s2 = make_stage2_system(sys, st1.X, subset);
  const StageResult st2 = detail::tag_stage("stage 2", [&] { return als_stage2(s2, cfg.stage2); });
  rep.stage2 = StageSummary::from(st2);

  StackedSlices stack;
  for (std::size_t a = 0; a < s2.corrected.size(); ++a) {
    stack.slices.push_back(s2.corrected[a] - st2.X[a]);
    stack.source.push_back(sel.slice(subset.positions[a]));
  }

  auto t0 = std::chrono::steady_clock::now();
  const JennrichResult jr = detail::tag_stage("jennrich", [&] { return jennrich(stack, r, cfg.seed); });
  rep.jennrich_seconds = detail::seconds_since(t0);
  rep.jennrich_attempts = jr.attempts;
  rep.symmetry_defect = jr.symmetry_defect;
  rep.spectrum.assign(jr.spectrum.data(), jr.spectrum.data() + jr.spectrum.size());

  t0 = std::chrono::steady_clock::now();
  out.estimate.A = jr.A;
  out.estimate.B = jr.B;
  out.estimate.C = detail::tag_stage("c rows", [&] { return solve_c(observed, jr.A, jr.B, b); });
  rep.c_seconds = detail::seconds_since(t0);

  out.tensor = assemble_estimate(out.estimate);
  rep.consistency_error = consistency_error(out.tensor, observed, b);
  return out;
}

/// Compare a recovery with the generating factors and clean tensor.
inline void score(RecoveryOutput& out, const FactorSet& truth, const DenseTensor3& clean) {
  out.report.relative_error = relative_error(out.tensor, clean);
  if (truth.rank() == out.estimate.A.cols()) {
    const FactorErrors fe = factor_errors(out.estimate, {truth.A, truth.B, truth.C});
    out.report.factor_error_ab = fe.ab;
    out.report.factor_error_c = fe.c;
  }
}

// JSON ------------------------------------------------------------------------

inline void to_json(nlohmann::json& j, const FeasibilityFlags& f) {
  j = {{"n", f.n},
       {"r", f.r},
       {"b", f.b},
       {"m", f.m},
       {"slices_fit", f.slices_fit},
       {"n_lower_bound", f.n_lower},
       {"main_bound", f.main_bound},
       {"main_rank", f.main_rank},
       {"cond_lemma", f.cond_lemma},
       {"cond_lemma_converse", f.cond_lemma_converse},
       {"rank2nd", f.rank2nd},
       {"c_rows", f.c_rows},
       {"counts_admissible", f.counts_admissible},
       {"table_min_n", f.table_min_n}};
}

inline void from_json(const nlohmann::json& j, FeasibilityFlags& f) {
  j.at("n").get_to(f.n);
  j.at("r").get_to(f.r);
  j.at("b").get_to(f.b);
  j.at("m").get_to(f.m);
  j.at("slices_fit").get_to(f.slices_fit);
  j.at("n_lower_bound").get_to(f.n_lower);
  j.at("main_bound").get_to(f.main_bound);
  j.at("main_rank").get_to(f.main_rank);
  j.at("cond_lemma").get_to(f.cond_lemma);
  j.at("cond_lemma_converse").get_to(f.cond_lemma_converse);
  j.at("rank2nd").get_to(f.rank2nd);
  j.at("c_rows").get_to(f.c_rows);
  j.at("counts_admissible").get_to(f.counts_admissible);
  j.at("table_min_n").get_to(f.table_min_n);
}

inline void to_json(nlohmann::json& j, const StageSummary& s) {
  j = {{"iterations", s.iterations},
       {"converged", s.converged},
       {"unknowns", s.unknowns},
       {"seconds", s.seconds},
       {"max_update_increase", s.max_update_increase},
       {"residual_history", s.residual_history}};
}

inline void from_json(const nlohmann::json& j, StageSummary& s) {
  j.at("iterations").get_to(s.iterations);
  j.at("converged").get_to(s.converged);
  j.at("unknowns").get_to(s.unknowns);
  j.at("seconds").get_to(s.seconds);
  j.at("max_update_increase").get_to(s.max_update_increase);
  j.at("residual_history").get_to(s.residual_history);
}

namespace detail {

inline nlohmann::json optional_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

inline std::optional<double> optional_from(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

}  // namespace detail

inline void to_json(nlohmann::json& j, const RecoveryReport& r) {
  j = {{"version", kVersion},
       {"n", r.n},
       {"r", r.r},
       {"b", r.b},
       {"m", r.m},
       {"seed", r.seed},
       {"slices", r.slices},
       {"subset", r.subset},
       {"stage1_equations", r.stage1_equations},
       {"feasibility", r.feasibility},
       {"warnings", r.warnings},
       {"stage1", r.stage1},
       {"stage2", r.stage2},
       {"jennrich_attempts", r.jennrich_attempts},
       {"symmetry_defect", r.symmetry_defect},
       {"spectrum", r.spectrum},
       {"jennrich_seconds", r.jennrich_seconds},
       {"c_seconds", r.c_seconds},
       {"consistency_error", r.consistency_error},
       {"relative_error", detail::optional_json(r.relative_error)},
       {"factor_error_ab", detail::optional_json(r.factor_error_ab)},
       {"factor_error_c", detail::optional_json(r.factor_error_c)}};
}

inline void from_json(const nlohmann::json& j, RecoveryReport& r) {
  try {
    j.at("n").get_to(r.n);
    j.at("r").get_to(r.r);
    j.at("b").get_to(r.b);
    j.at("m").get_to(r.m);
    j.at("seed").get_to(r.seed);
    j.at("slices").get_to(r.slices);
    j.at("subset").get_to(r.subset);
    j.at("stage1_equations").get_to(r.stage1_equations);
    j.at("feasibility").get_to(r.feasibility);
    j.at("warnings").get_to(r.warnings);
    j.at("stage1").get_to(r.stage1);
    j.at("stage2").get_to(r.stage2);
    j.at("jennrich_attempts").get_to(r.jennrich_attempts);
    j.at("symmetry_defect").get_to(r.symmetry_defect);
    j.at("spectrum").get_to(r.spectrum);
    j.at("jennrich_seconds").get_to(r.jennrich_seconds);
    j.at("c_seconds").get_to(r.c_seconds);
    j.at("consistency_error").get_to(r.consistency_error);
    r.relative_error = detail::optional_from(j, "relative_error");
    r.factor_error_ab = detail::optional_from(j, "factor_error_ab");
    r.factor_error_c = detail::optional_from(j, "factor_error_c");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed recovery report: ") + e.what());
  }
}

}  // namespace odtrec
