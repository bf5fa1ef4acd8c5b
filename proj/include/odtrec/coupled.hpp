#pragma once

#include "odtrec/core.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseQR>
#include <Eigen/OrderingMethods>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace odtrec {

/// Stopping rule shared by both alternating solvers. A solve stops once the
/// relative improvement of the global residual between full sweeps drops
/// below eps_tol, or the residual reaches round-off level.
struct SolveConfig {
  double eps_tol = 1e-8;
  int max_iters = 5000;
  /// After each sweep, minimise exactly over the span of the sweep's step and
  /// the previous step. Never raises the residual; plain Gauss-Seidel when off.
  bool accelerate = true;

  void validate() const {
    detail::require(eps_tol > 0.0, "eps_tol must be positive");
    detail::require(max_iters >= 1, "max_iters must be at least 1");
  }
};

/// One family of antisymmetric product equations over all pairs a < b,
///
///   W_a C_b^T - C_b W_a^T + C_a W_b^T - W_b C_a^T = C_a C_b^T - C_b C_a^T,
///
/// kept on the strictly lower cells the mask does not cover. Untransposed,
/// W_a = X_a and C_a = coef[a]; transposed, W_a = X_a^T and C_a = coef[a]^T.
struct EquationGroup {
  std::vector<Matrix> coef;
  bool transposed = false;
  /// masked(a, b, p, q): 0-based slice positions a < b, 1-based cell (p, q)
  /// in the group's own frame. Must cover the diagonal.
  std::function<bool(int, int, int, int)> masked;
};

/// Unknown entries of X_slice updated together: (line, c) for c in cells, or
/// (c, line) when along_column is set. All indices 1-based.
struct VariableBlock {
  int slice = 0;  // 0-based position
  int line = 0;
  bool along_column = false;
  std::vector<int> cells;

  std::pair<int, int> entry(std::size_t c) const {
    return along_column ? std::pair{cells[c], line} : std::pair{line, cells[c]};
  }
};

/// A coupled linear system in the entries of X_1..X_m; every entry not
/// listed in a block is fixed at zero.
struct CoupledProblem {
  int n = 0;
  int slices = 0;
  std::vector<EquationGroup> groups;
  std::vector<VariableBlock> blocks;
  /// Residuals are reported as ||r|| / scale. Should be the size of the
  /// uncorrupted products; 0 falls back to sum_a ||coef_a||^2 of group 0.
  double scale = 0.0;

  std::size_t unknowns() const {
    std::size_t t = 0;
    for (const auto& blk : blocks) t += blk.cells.size();
    return t;
  }
};

struct StageResult {
  std::vector<Matrix> X;
  int iterations = 0;
  /// Relative residual ||r|| / scale; entry 0 is the starting point X = 0,
  /// entry t the value after sweep t.
  std::vector<double> residual_history;
  bool converged = false;
  /// Largest rise of the relative residual over a single block update.
  double max_update_increase = 0.0;
  std::size_t unknowns = 0;
  double seconds = 0.0;

  double final_residual() const { return residual_history.empty() ? 0.0 : residual_history.back(); }
};

/// Explicit sparse least-squares form of a coupled system: one row per
/// retained strictly-lower cell of every pair and group, one column per
/// unknown. Columns are ordered block by block.
struct LeastSquaresSystem {
  struct Unknown {
    int slice;  // 0-based position
    int row;    // 1-based
    int col;    // 1-based
  };

  Eigen::SparseMatrix<double> design;
  Vector rhs;
  std::vector<Unknown> unknowns;
  std::vector<Eigen::Index> block_start;  // block t owns columns [block_start[t], block_start[t+1])
  int n = 0;
  int slices = 0;

  std::vector<Matrix> unpack(const Vector& x) const {
    std::vector<Matrix> out(static_cast<std::size_t>(slices), Matrix::Zero(n, n));
    for (std::size_t c = 0; c < unknowns.size(); ++c) {
      const Unknown& u = unknowns[c];
      out[static_cast<std::size_t>(u.slice)](u.row - 1, u.col - 1) = x(static_cast<Eigen::Index>(c));
    }
    return out;
  }
};

inline LeastSquaresSystem assemble_coupled(const CoupledProblem& prob) {
  const int m = prob.slices;
  const int n = prob.n;
  LeastSquaresSystem sys;
  sys.n = n;
  sys.slices = m;

  // column of unknown X_a(p, s), or -1
  std::vector<std::vector<int>> index(static_cast<std::size_t>(m), std::vector<int>(static_cast<std::size_t>(n) * n, -1));
  auto slot = [n](int p, int s) { return static_cast<std::size_t>(p - 1) * n + (s - 1); };
  for (const VariableBlock& blk : prob.blocks) {
    sys.block_start.push_back(static_cast<Eigen::Index>(sys.unknowns.size()));
    for (std::size_t c = 0; c < blk.cells.size(); ++c) {
      const auto [p, s] = blk.entry(c);
      int& idx = index[static_cast<std::size_t>(blk.slice)][slot(p, s)];
      detail::require(idx < 0, "an unknown appears in two blocks");
      idx = static_cast<int>(sys.unknowns.size());
      sys.unknowns.push_back({blk.slice, p, s});
    }
  }
  sys.block_start.push_back(static_cast<Eigen::Index>(sys.unknowns.size()));

  std::vector<Eigen::Triplet<double>> trips;
  std::vector<double> rhs;
  int row = 0;
  for (const EquationGroup& grp : prob.groups) {
    std::vector<Matrix> c;
    for (const Matrix& x : grp.coef) c.push_back(grp.transposed ? Matrix(x.transpose()) : x);
    // column of W_a(p, s)
    auto col = [&](int a, int p, int s) {
      const auto& ia = index[static_cast<std::size_t>(a)];
      return grp.transposed ? ia[slot(s, p)] : ia[slot(p, s)];
    };
    for (int a = 0; a < m; ++a)
      for (int b = a + 1; b < m; ++b) {
        const Matrix& ca = c[static_cast<std::size_t>(a)];
        const Matrix& cb = c[static_cast<std::size_t>(b)];
        for (int p = 1; p <= n; ++p)
          for (int q = 1; q < p; ++q) {
            if (grp.masked(a, b, p, q)) continue;
            for (int s = 1; s <= n; ++s) {
              // W_a C_b^T (p,q), -C_b W_a^T (p,q), C_a W_b^T (p,q), -W_b C_a^T (p,q)
              if (int k = col(a, p, s); k >= 0) trips.emplace_back(row, k, cb(q - 1, s - 1));
              if (int k = col(a, q, s); k >= 0) trips.emplace_back(row, k, -cb(p - 1, s - 1));
              if (int k = col(b, q, s); k >= 0) trips.emplace_back(row, k, ca(p - 1, s - 1));
              if (int k = col(b, p, s); k >= 0) trips.emplace_back(row, k, -ca(q - 1, s - 1));
            }
            rhs.push_back(ca.row(p - 1).dot(cb.row(q - 1)) - cb.row(p - 1).dot(ca.row(q - 1)));
            ++row;
          }
      }
  }
  sys.design.resize(row, static_cast<Eigen::Index>(sys.unknowns.size()));
  sys.design.setFromTriplets(trips.begin(), trips.end());
  sys.design.makeCompressed();
  sys.rhs = Eigen::Map<const Vector>(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
  return sys;
}

namespace detail {

/// Gauss-Seidel over variable blocks with exact least-squares block updates.
/// Each block keeps the dense restriction of the design matrix to the
/// equations it touches together with a pivoted R factor; the full residual
/// vector is updated in place and rebuilt from scratch once per sweep.
class BlockGaussSeidel {
public:
  BlockGaussSeidel(const CoupledProblem& prob, const std::string& stage_name) : stage_(stage_name) {
    const LeastSquaresSystem sys = assemble_coupled(prob);
    unknowns_ = sys.unknowns;
    n_ = sys.n;
    slices_ = sys.slices;
    rhs_ = sys.rhs;
    scale_ = prob.scale;
    if (scale_ <= 0.0 && !prob.groups.empty())
      for (const Matrix& c : prob.groups.front().coef) scale_ += c.squaredNorm();
    if (scale_ <= 0.0) scale_ = 1.0;
    build_blocks(sys, prob);
  }

  StageResult run(const SolveConfig& cfg) {
    cfg.validate();
    const auto start = std::chrono::steady_clock::now();
    StageResult res;
    res.unknowns = unknowns_.size();
    x_ = Vector::Zero(static_cast<Eigen::Index>(unknowns_.size()));
    rebuild_residual();
    double objective = e_.squaredNorm();
    res.residual_history.push_back(relative(objective));
    constexpr double kFloor = 1e-15;

    if (res.residual_history.back() > kFloor && !blocks_.empty()) {
      Vector prev_dx, prev_de;
      for (int t = 1; t <= cfg.max_iters; ++t) {
        const Vector x0 = x_;
        const Vector e0 = e_;
        for (const Block& blk : blocks_) {
          const double delta = update_block(blk);
          const double before = relative(objective);
          objective = std::max(0.0, objective + delta);
          res.max_update_increase = std::max(res.max_update_increase, relative(objective) - before);
        }
        if (cfg.accelerate) extrapolate(x0, e0, prev_dx, prev_de);
        rebuild_residual();
        objective = e_.squaredNorm();
        const double prev = res.residual_history.back();
        const double cur = relative(objective);
        res.residual_history.push_back(cur);
        res.iterations = t;
        if (cur <= kFloor || (prev - cur) / prev < cfg.eps_tol) {
          res.converged = true;
          break;
        }
      }
    } else {
      res.converged = true;
    }
    LeastSquaresSystem shape;
    shape.unknowns = unknowns_;
    shape.n = n_;
    shape.slices = slices_;
    res.X = shape.unpack(x_);
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
  }

private:
  struct Block {
    Eigen::Index c0 = 0;
    Eigen::Index cols = 0;
    std::size_t row0 = 0;               // rows_[row0, row0 + nrows)
    std::size_t nrows = 0;
    std::size_t g0 = 0;                 // g_[g0, g0 + nrows * cols), column-major
    Matrix r;                           // G P = Q R
    Eigen::VectorXi perm;               // column j of G P is column perm(j) of G
  };

  double relative(double objective) const { return std::sqrt(objective) / scale_; }

  void build_blocks(const LeastSquaresSystem& sys, const CoupledProblem& prob) {
    if (sys.design.rows() > std::numeric_limits<std::int32_t>::max()) throw Error(stage_ + ": system too large");
    std::vector<Eigen::Index> local(static_cast<std::size_t>(sys.design.rows()), -1);
    std::vector<Eigen::Index> rows;
    for (std::size_t t = 0; t + 1 < sys.block_start.size(); ++t) {
      Block blk;
      blk.c0 = sys.block_start[t];
      blk.cols = sys.block_start[t + 1] - blk.c0;
      if (blk.cols == 0) continue;
      rows.clear();
      for (Eigen::Index c = blk.c0; c < blk.c0 + blk.cols; ++c)
        for (Eigen::SparseMatrix<double>::InnerIterator it(sys.design, c); it; ++it)
          if (local[static_cast<std::size_t>(it.row())] < 0) {
            local[static_cast<std::size_t>(it.row())] = 0;
            rows.push_back(it.row());
          }
      std::sort(rows.begin(), rows.end());
      for (std::size_t i = 0; i < rows.size(); ++i) local[static_cast<std::size_t>(rows[i])] = static_cast<Eigen::Index>(i);
      const auto nrows = static_cast<Eigen::Index>(rows.size());
      const VariableBlock& vb = prob.blocks[t];
      const std::string where = "slice " + std::to_string(vb.slice + 1) + (vb.along_column ? " column " : " row ") +
                                std::to_string(vb.line);
      if (nrows < blk.cols)
        throw DegenerateError(stage_ + ": " + where + " has " + std::to_string(nrows) + " equations for " +
                              std::to_string(blk.cols) + " unknowns; reduce the bandwidth b");
      Matrix g = Matrix::Zero(nrows, blk.cols);
      for (Eigen::Index c = 0; c < blk.cols; ++c)
        for (Eigen::SparseMatrix<double>::InnerIterator it(sys.design, blk.c0 + c); it; ++it)
          g(local[static_cast<std::size_t>(it.row())], c) = it.value();
      for (Eigen::Index row : rows) local[static_cast<std::size_t>(row)] = -1;

      Eigen::ColPivHouseholderQR<Matrix> qr;
      qr.setThreshold(1e-10);
      qr.compute(g);
      if (qr.rank() < blk.cols)
        throw DegenerateError(stage_ + ": block least-squares problem for " + where + " is rank deficient (rank " +
                              std::to_string(qr.rank()) + " < " + std::to_string(blk.cols) +
                              "); the rank r is too small for this bandwidth, or try a smaller b / another seed");
      blk.r = qr.matrixR().topLeftCorner(blk.cols, blk.cols).triangularView<Eigen::Upper>();
      blk.perm = qr.colsPermutation().indices();

      // one contiguous arena keeps a sweep a single forward stream
      blk.row0 = rows_.size();
      blk.nrows = rows.size();
      for (Eigen::Index row : rows) rows_.push_back(static_cast<std::int32_t>(row));
      blk.g0 = g_.size();
      g_.insert(g_.end(), g.data(), g.data() + g.size());
      max_cols_ = std::max(max_cols_, blk.cols);
      max_rows_ = std::max(max_rows_, nrows);
      blocks_.push_back(std::move(blk));
    }
    grad_.resize(max_cols_);
    dir_.resize(max_cols_);
    work_.resize(max_rows_);
    gd_.resize(max_rows_);
  }

  Eigen::Map<const Matrix> block_matrix(const Block& blk) const {
    return {g_.data() + blk.g0, static_cast<Eigen::Index>(blk.nrows), blk.cols};
  }

  /// Minimise the residual over one block; returns the objective change.
  double update_block(const Block& blk) {
    const auto nrows = static_cast<Eigen::Index>(blk.nrows);
    const Eigen::Index cols = blk.cols;
    const std::int32_t* rows = rows_.data() + blk.row0;
    auto w = work_.head(nrows);
    for (Eigen::Index i = 0; i < nrows; ++i) w(i) = e_(rows[i]);
    const auto g = block_matrix(blk);
    auto grad = grad_.head(cols);
    grad.noalias() = g.transpose() * w;
    // G^T G = P R^T R P^T
    auto z = dir_.head(cols);
    for (Eigen::Index j = 0; j < cols; ++j) z(j) = grad(blk.perm(j));
    blk.r.triangularView<Eigen::Upper>().transpose().solveInPlace(z);
    blk.r.triangularView<Eigen::Upper>().solveInPlace(z);
    auto d = grad;  // reuse the storage: d(perm(j)) = -z(j)
    for (Eigen::Index j = 0; j < cols; ++j) d(blk.perm(j)) = -z(j);
    x_.segment(blk.c0, cols) += d;
    auto gd = gd_.head(nrows);
    gd.noalias() = g * d;
    for (Eigen::Index i = 0; i < nrows; ++i) e_(rows[i]) += gd(i);
    // ||o + G d||^2 - ||o||^2, measured rather than predicted
    return 2.0 * w.dot(gd) + gd.squaredNorm();
  }

  /// Replace the sweep's step dx by the least-squares best combination
  /// alpha dx + beta prev_dx. Since e = G x - y is affine, the residual of any
  /// combination follows from the residual changes alone.
  void extrapolate(const Vector& x0, const Vector& e0, Vector& prev_dx, Vector& prev_de) {
    Vector dx = x_ - x0;
    Vector de = e_ - e0;
    const bool two = prev_dx.size() == dx.size();
    Matrix basis(de.size(), two ? 2 : 1);
    basis.col(0) = de;
    if (two) basis.col(1) = prev_de;
    const Vector coef = basis.colPivHouseholderQr().solve(-e0);
    if (!coef.allFinite()) return;
    Vector step_x = coef(0) * dx;
    Vector step_e = coef(0) * de;
    if (two) {
      step_x += coef(1) * prev_dx;
      step_e += coef(1) * prev_de;
    }
    // keep the plain sweep unless the combination is strictly better
    if ((e0 + step_e).squaredNorm() >= e_.squaredNorm()) {
      prev_dx = std::move(dx);
      prev_de = std::move(de);
      return;
    }
    x_ = x0 + step_x;
    e_ = e0 + step_e;
    prev_dx = std::move(step_x);
    prev_de = std::move(step_e);
  }

  void rebuild_residual() {
    e_ = -rhs_;
    for (const Block& blk : blocks_) {
      const auto nrows = static_cast<Eigen::Index>(blk.nrows);
      const std::int32_t* rows = rows_.data() + blk.row0;
      auto v = gd_.head(nrows);
      v.noalias() = block_matrix(blk) * x_.segment(blk.c0, blk.cols);
      for (Eigen::Index i = 0; i < nrows; ++i) e_(rows[i]) += v(i);
    }
  }

  std::string stage_;
  std::vector<LeastSquaresSystem::Unknown> unknowns_;
  int n_ = 0;
  int slices_ = 0;
  double scale_ = 1.0;
  Vector rhs_;
  Vector x_;
  Vector e_;
  Vector grad_;
  Vector dir_;
  Vector work_;
  Vector gd_;
  Eigen::Index max_cols_ = 0;
  Eigen::Index max_rows_ = 0;
  std::vector<Block> blocks_;
  std::vector<std::int32_t> rows_;
  std::vector<double> g_;
};

}  // namespace detail

/// Alternating (Gauss-Seidel) least-squares solve of a coupled system from X = 0.
inline StageResult solve_coupled(const CoupledProblem& prob, const SolveConfig& cfg, const std::string& stage_name) {
  detail::BlockGaussSeidel solver(prob, stage_name);
  return solver.run(cfg);
}

namespace detail {

using SparseQRSolver = Eigen::SparseQR<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>>;

inline void factorize(SparseQRSolver& qr, const LeastSquaresSystem& sys) {
  // keep every column in the factorisation; rank is judged from R's spectrum
  qr.setPivotThreshold(std::numeric_limits<double>::min());
  qr.compute(sys.design);
  if (qr.info() != Eigen::Success) throw DegenerateError("sparse QR factorisation failed");
}

}  // namespace detail

/// Direct least-squares solution by sparse QR.
inline Vector solve_direct(const LeastSquaresSystem& sys) {
  if (sys.design.rows() < sys.design.cols())
    throw DegenerateError("assembled system has fewer equations than unknowns");
  detail::SparseQRSolver qr;
  detail::factorize(qr, sys);
  Vector x = qr.solve(sys.rhs);
  if (qr.info() != Eigen::Success) throw DegenerateError("sparse QR solve failed");
  return x;
}

/// Singular values of the design matrix (descending), via the R factor.
inline Vector design_singular_values(const LeastSquaresSystem& sys) {
  if (sys.design.rows() < sys.design.cols())
    throw DegenerateError("assembled system has fewer equations than unknowns");
  detail::SparseQRSolver qr;
  detail::factorize(qr, sys);
  const Eigen::Index cols = sys.design.cols();
  const Matrix r = Matrix(qr.matrixR()).topLeftCorner(cols, cols).triangularView<Eigen::Upper>();
  Eigen::BDCSVD<Matrix> svd(r);
  return svd.singularValues();
}

}  // namespace odtrec
