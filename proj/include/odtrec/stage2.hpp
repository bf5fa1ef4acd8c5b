#pragma once

#include "odtrec/stage1.hpp"

namespace odtrec {

/// Slices of the subset after stage 1: N_i = M_i - X_i, wrong only in the
/// rows of the 2b-window of k_i.
struct Stage2System {
  SliceSelection selection;
  SubsetSelection subset;
  std::vector<Matrix> corrected;
};

inline Stage2System make_stage2_system(const SliceSystem& sys, const std::vector<Matrix>& stage1_x,
                                       const SubsetSelection& subset) {
  validate_subset(subset, sys.selection);
  detail::require(stage1_x.size() == sys.M.size(), "stage-1 solution count does not match the slices");
  Stage2System s2{sys.selection, subset, {}};
  for (int i : subset.positions) {
    const auto idx = static_cast<std::size_t>(i - 1);
    s2.corrected.push_back(sys.M[idx] - stage1_x[idx]);
  }
  return s2;
}

/// Remaining unknowns of subset slice i, one block per column s of X_i: the
/// rows p of the 2b-window with (p, s) in U(k_i).
inline std::vector<VariableBlock> stage2_blocks(const SliceSelection& sel, int i, int position) {
  const int n = sel.n;
  const Interval rows = sel.window(i, 2 * sel.b);
  const SliceMask mask{n, sel.slice(i), sel.b};
  std::vector<VariableBlock> blocks;
  for (int s = 1; s <= n; ++s) {
    VariableBlock blk{position, s, true, {}};
    for (int p = rows.lo; p <= rows.hi; ++p)
      if (mask.contains(p, s)) blk.cells.push_back(p);
    if (!blk.cells.empty()) blocks.push_back(std::move(blk));
  }
  return blocks;
}

/// With Z_i = N_i - X_i the equations Z_i^T Z_j = Z_j^T Z_i are the column
/// system in X with coefficients N. The quadratic terms X_i^T X_j vanish
/// because the row supports are disjoint, so every off-diagonal cell is kept.
inline CoupledProblem stage2_problem(const Stage2System& sys) {
  CoupledProblem prob;
  prob.n = sys.selection.n;
  prob.slices = static_cast<int>(sys.corrected.size());
  for (std::size_t a = 0; a < sys.corrected.size(); ++a)
    for (auto& blk : stage2_blocks(sys.selection, sys.subset.positions[a], static_cast<int>(a)))
      prob.blocks.push_back(std::move(blk));
  prob.groups.push_back({sys.corrected, true, [](int, int, int p, int q) { return p == q; }});
  prob.scale = known_scale(sys.corrected, sys.selection, sys.subset.positions);
  return prob;
}

/// Full stage-2 expression (N_i - X_i)^T (N_j - X_j) - (N_j - X_j)^T (N_i - X_i).
inline Matrix stage2_residual(const Matrix& ni, const Matrix& nj, const Matrix& xi, const Matrix& xj) {
  const Matrix zi = ni - xi;
  const Matrix zj = nj - xj;
  return zi.transpose() * zj - zj.transpose() * zi;
}

/// Step 3: remaining window rows of the subset slices. Returned X holds, per
/// subset slice, the correction supported on its 2b-window rows.
inline StageResult als_stage2(const Stage2System& sys, const SolveConfig& cfg) {
  return solve_coupled(stage2_problem(sys), cfg, "stage 2");
}

/// Explicit stage-2 least-squares problem.
inline LeastSquaresSystem assemble_stage2_system(const Stage2System& sys) { return assemble_coupled(stage2_problem(sys)); }

}  // namespace odtrec
