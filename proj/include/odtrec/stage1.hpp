#pragma once

#include "odtrec/coupled.hpp"
#include "odtrec/selection.hpp"
#include "odtrec/tensor.hpp"

#include <vector>

namespace odtrec {

/// Observed distinguished slices M_i = A D_{k_i} B^T + X_i with X_i in U(k_i).
struct SliceSystem {
  SliceSelection selection;
  std::vector<Matrix> M;
  std::vector<Matrix> X;
};

inline SliceSystem make_slice_system(const DenseTensor3& observed, const SliceSelection& sel) {
  detail::require(observed.n() == sel.n, "tensor dimension does not match the slice selection");
  SliceSystem sys{sel, {}, {}};
  for (int i = 1; i <= sel.m; ++i) {
    sys.M.push_back(slice_as_matrix(observed, sel.slice(i)));
    sys.X.push_back(Matrix::Zero(sel.n, sel.n));
  }
  return sys;
}

/// Which product identities stage 1 uses. kRows is the row system of
/// N_i N_j^T = N_j N_i^T alone; kRowsAndColumns adds the column system of
/// N_i^T N_j = N_j^T N_i, which shares the band entries and removes the
/// kernel the row system has when r is close to 4b+2.
enum class Stage1Equations { kRows, kRowsAndColumns };

/// Stage-1 row blocks of slice i: rows outside the 2b-window, and in each
/// such row the b-band around the row index plus the b-window columns.
inline std::vector<VariableBlock> stage1_row_blocks(const SliceSelection& sel, int i) {
  const int n = sel.n;
  const int b = sel.b;
  const Interval rows_out = sel.window(i, 2 * b);
  const Interval cols = sel.window(i, b);
  std::vector<VariableBlock> blocks;
  for (int l = 1; l <= n; ++l) {
    if (rows_out.contains(l)) continue;
    VariableBlock blk{i - 1, l, false, {}};
    const Interval band{std::max(1, l - b), std::min(n, l + b)};
    // the two ranges are disjoint outside the 2b-window
    for (int s = cols.lo; s <= cols.hi; ++s)
      if (s < band.lo) blk.cells.push_back(s);
    for (int s = band.lo; s <= band.hi; ++s) blk.cells.push_back(s);
    for (int s = cols.lo; s <= cols.hi; ++s)
      if (s > band.hi) blk.cells.push_back(s);
    blocks.push_back(std::move(blk));
  }
  return blocks;
}

/// Column blocks that the column system adds: for each column outside the
/// 2b-window, its entries of U(k_i) lying in rows inside the 2b-window.
inline std::vector<VariableBlock> stage1_column_blocks(const SliceSelection& sel, int i) {
  const int n = sel.n;
  const Interval w2 = sel.window(i, 2 * sel.b);
  const SliceMask mask{n, sel.slice(i), sel.b};
  std::vector<VariableBlock> blocks;
  for (int c = 1; c <= n; ++c) {
    if (w2.contains(c)) continue;
    VariableBlock blk{i - 1, c, true, {}};
    for (int t = w2.lo; t <= w2.hi; ++t)
      if (mask.contains(t, c)) blk.cells.push_back(t);
    if (!blk.cells.empty()) blocks.push_back(std::move(blk));
  }
  return blocks;
}

/// Sum over slices of ||M_i||^2 on the cells outside U(k_i): the size of the
/// uncorrupted data, used to normalise residuals.
inline double known_scale(const std::vector<Matrix>& slices, const SliceSelection& sel, const std::vector<int>& positions) {
  double s = 0.0;
  for (std::size_t a = 0; a < slices.size(); ++a) {
    const SliceMask mask{sel.n, sel.slice(positions[a]), sel.b};
    for (int j = 1; j <= sel.n; ++j)
      for (int i = 1; i <= sel.n; ++i)
        if (!mask.contains(i, j)) s += slices[a](i - 1, j - 1) * slices[a](i - 1, j - 1);
  }
  return s;
}

inline CoupledProblem stage1_problem(const SliceSystem& sys, Stage1Equations eqs = Stage1Equations::kRows) {
  const SliceSelection& sel = sys.selection;
  const int m = sel.m;
  CoupledProblem prob;
  prob.n = sel.n;
  prob.slices = m;
  for (int i = 1; i <= m; ++i)
    for (auto& blk : stage1_row_blocks(sel, i)) prob.blocks.push_back(std::move(blk));
  if (eqs == Stage1Equations::kRowsAndColumns)
    for (int i = 1; i <= m; ++i)
      for (auto& blk : stage1_column_blocks(sel, i)) prob.blocks.push_back(std::move(blk));

  std::vector<PairMask> masks(static_cast<std::size_t>(m * m));
  for (int i = 1; i <= m; ++i)
    for (int j = i + 1; j <= m; ++j) masks[static_cast<std::size_t>((i - 1) * m + (j - 1))] = pair_mask(i, j, sel);
  auto masked = [masks = std::move(masks), m](int a, int b, int p, int q) {
    return masks[static_cast<std::size_t>(a * m + b)].contains(p, q);
  };
  prob.groups.push_back({sys.M, false, masked});
  // the mask is symmetric, so the column system keeps the same cells
  if (eqs == Stage1Equations::kRowsAndColumns) prob.groups.push_back({sys.M, true, masked});

  std::vector<int> positions;
  for (int i = 1; i <= m; ++i) positions.push_back(i);
  prob.scale = known_scale(sys.M, sel, positions);
  return prob;
}

/// Residual of the pair (i, j) equations on the cells outside `mask`, row-major:
/// (X_i M_j^T - M_j X_i^T + M_i X_j^T - X_j M_i^T) - (M_i M_j^T - M_j M_i^T).
template <class Mask>
Vector pair_residual(const Matrix& mi, const Matrix& mj, const Matrix& xi, const Matrix& xj, const Mask& mask) {
  const Matrix lhs = xi * mj.transpose() - mj * xi.transpose() + mi * xj.transpose() - xj * mi.transpose();
  const Matrix rhs = mi * mj.transpose() - mj * mi.transpose();
  return restrict_to_complement(Matrix(lhs - rhs), mask);
}

/// Steps 1-2: rows of every X_i outside the 2b-window of k_i (and with
/// kRowsAndColumns the columns outside it too), by alternating block least
/// squares starting from X = 0.
inline StageResult als_stage1(const SliceSystem& sys, const SolveConfig& cfg,
                              Stage1Equations eqs = Stage1Equations::kRows) {
  const CoupledProblem prob = stage1_problem(sys, eqs);
  return solve_coupled(prob, cfg, "stage 1");
}

/// Explicit stage-1 least-squares problem (oracle solver and rank diagnostics).
inline LeastSquaresSystem assemble_full_system(const SliceSystem& sys, Stage1Equations eqs = Stage1Equations::kRows) {
  return assemble_coupled(stage1_problem(sys, eqs));
}

}  // namespace odtrec
