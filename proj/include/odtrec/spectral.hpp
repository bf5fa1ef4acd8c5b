#pragma once

#include "odtrec/index_sets.hpp"
#include "odtrec/random.hpp"
#include "odtrec/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

namespace odtrec {

/// Fully corrected slices T(:, :, k_s) = A diag(C(k_s, :)) B^T.
struct StackedSlices {
  std::vector<Matrix> slices;
  std::vector<int> source;  // 1-based slice index of each entry
};

struct FactorEstimate {
  Matrix A;
  Matrix B;
  Matrix C;
};

struct JennrichResult {
  Matrix A;
  Matrix B;
  Vector spectrum;  // eigenvalues of the symmetrised M_alpha M_beta^T, by decreasing magnitude
  int attempts = 0;
  double symmetry_defect = 0.0;  // ||K - K^T|| / ||K|| for K = M_alpha M_beta^T
};

namespace detail {

/// Flip v so that its largest-magnitude entry is positive.
inline void canonical_sign(Eigen::Ref<Vector> v) {
  Eigen::Index at = 0;
  v.cwiseAbs().maxCoeff(&at);
  if (v(at) < 0.0) v = -v;
}

}  // namespace detail

/// Jennrich's algorithm for orthonormal A, B. Random combinations
/// M_alpha = A D_alpha B^T and M_beta = A D_beta B^T give the symmetric
/// M_alpha M_beta^T = A D_alpha D_beta A^T, whose leading r eigenvectors are
/// the a_k. Each b_k is the dominant right singular vector of the rows
/// a_k^T T_s.
inline JennrichResult jennrich(const StackedSlices& stack, int r, std::uint64_t seed) {
  detail::require(stack.slices.size() >= 2, "Jennrich needs at least two slices");
  const auto n = stack.slices.front().rows();
  detail::require(1 <= r && r <= n, "rank r must satisfy 1 <= r <= n");
  const auto count = static_cast<Eigen::Index>(stack.slices.size());

  constexpr int kAttempts = 5;
  constexpr double kGap = 1e-8;
  auto rng = make_engine(seed, Stream::kJennrich);
  std::normal_distribution<double> normal(0.0, 1.0);

  for (int attempt = 1; attempt <= kAttempts; ++attempt) {
    Matrix ma = Matrix::Zero(n, n);
    Matrix mb = Matrix::Zero(n, n);
    for (const Matrix& s : stack.slices) {
      ma += normal(rng) * s;
      mb += normal(rng) * s;
    }
    const Matrix k = ma * mb.transpose();
    const double knorm = k.norm();
    JennrichResult out;
    out.attempts = attempt;
    out.symmetry_defect = knorm > 0.0 ? (k - k.transpose()).norm() / knorm : 0.0;
    const Matrix sym = 0.5 * (k + k.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
    if (eig.info() != Eigen::Success) continue;

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    const Vector& lam = eig.eigenvalues();
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index x, Eigen::Index y) { return std::abs(lam(x)) > std::abs(lam(y)); });

    std::vector<double> kept;
    for (int c = 0; c < r; ++c) kept.push_back(lam(order[static_cast<std::size_t>(c)]));
    if (r < n) kept.push_back(0.0);  // the discarded eigenvalues sit at zero
    std::sort(kept.begin(), kept.end());
    const double spread = std::abs(lam(order.front()));
    double min_gap = spread;
    for (std::size_t c = 1; c < kept.size(); ++c) min_gap = std::min(min_gap, kept[c] - kept[c - 1]);
    if (spread == 0.0 || min_gap < kGap * spread) continue;

    out.A.resize(n, r);
    out.B.resize(n, r);
    out.spectrum.resize(r);
    for (int c = 0; c < r; ++c) {
      const Eigen::Index src = order[static_cast<std::size_t>(c)];
      out.spectrum(c) = lam(src);
      out.A.col(c) = eig.eigenvectors().col(src);
      detail::canonical_sign(out.A.col(c));

      Matrix w(count, n);
      for (Eigen::Index s = 0; s < count; ++s)
        w.row(s) = out.A.col(c).transpose() * stack.slices[static_cast<std::size_t>(s)];
      Eigen::SelfAdjointEigenSolver<Matrix> small(w * w.transpose());
      Vector bk = w.transpose() * small.eigenvectors().col(count - 1);
      const double norm = bk.norm();
      if (norm == 0.0) throw DegenerateError("Jennrich: column " + std::to_string(c + 1) + " has a zero mode-2 factor");
      bk /= norm;
      detail::canonical_sign(bk);
      out.B.col(c) = bk;
    }
    return out;
  }
  throw DegenerateError("Jennrich: eigenvalues of the combined slices stayed within 1e-8 of each other after " +
                        std::to_string(kAttempts) + " random combinations");
}

inline bool c_row_bound_satisfied(int n, int b) { return n >= 8 * b + 4; }

/// Row l of C by least squares over every cell of slice l outside U(l):
/// M_l(i, j) = sum_k A(i, k) B(j, k) c_k(l).
inline Vector solve_c_row(const Matrix& slice, const Matrix& a, const Matrix& b_factor, int l, int b,
                          std::vector<std::string>* warnings = nullptr) {
  const int n = static_cast<int>(slice.rows());
  const auto r = a.cols();
  detail::require(1 <= l && l <= n, "slice index outside [1, n]");
  if (warnings && !c_row_bound_satisfied(n, b))
    warnings->push_back("n=" + std::to_string(n) + " is below 8b+4=" + std::to_string(8 * b + 4) +
                        "; rows of C may not be determined");
  const SliceMask mask{n, l, b};
  std::vector<std::pair<int, int>> cells;
  for (int j = 1; j <= n; ++j)
    for (int i = 1; i <= n; ++i)
      if (!mask.contains(i, j)) cells.emplace_back(i, j);
  const auto rows = static_cast<Eigen::Index>(cells.size());
  if (rows < r)
    throw DegenerateError("slice " + std::to_string(l) + ": " + std::to_string(rows) + " known cells for " +
                          std::to_string(r) + " unknowns");
  Matrix g(rows, r);
  Vector y(rows);
  for (Eigen::Index e = 0; e < rows; ++e) {
    const auto [i, j] = cells[static_cast<std::size_t>(e)];
    g.row(e) = a.row(i - 1).cwiseProduct(b_factor.row(j - 1));
    y(e) = slice(i - 1, j - 1);
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  const Vector diag = qr.matrixQR().diagonal().cwiseAbs();
  if (diag.minCoeff() <= 1e-10 * diag.maxCoeff())
    throw DegenerateError("slice " + std::to_string(l) + ": restricted system for the C row is rank deficient");
  return qr.solve(y);
}

/// All rows of C from the observed tensor.
inline Matrix solve_c(const DenseTensor3& observed, const Matrix& a, const Matrix& b_factor, int b,
                      std::vector<std::string>* warnings = nullptr) {
  const int n = observed.n();
  Matrix c(n, a.cols());
  if (warnings && !c_row_bound_satisfied(n, b))
    warnings->push_back("n=" + std::to_string(n) + " is below 8b+4=" + std::to_string(8 * b + 4) +
                        "; rows of C may not be determined");
  for (int l = 1; l <= n; ++l) c.row(l - 1) = solve_c_row(observed.slice_view(l), a, b_factor, l, b).transpose();
  return c;
}

inline DenseTensor3 assemble_estimate(const FactorEstimate& est) { return rank1_sum({est.A, est.B, est.C}); }

/// est column k corresponds to reference column perm[k], with signs
/// sign_a[k], sign_b[k] on a_k and b_k (c_k takes their product).
struct Alignment {
  std::vector<int> perm;
  std::vector<double> sign_a;
  std::vector<double> sign_b;
};

/// Greedy matching on |<a_k, a'_l>| |<b_k, b'_l>|.
inline Alignment align_columns(const FactorEstimate& est, const FactorEstimate& ref) {
  const auto r = est.A.cols();
  detail::require(ref.A.cols() == r && ref.A.rows() == est.A.rows(), "estimate and reference shapes differ");
  const Matrix ga = est.A.transpose() * ref.A;
  const Matrix gb = est.B.transpose() * ref.B;
  const Matrix score = ga.cwiseAbs().cwiseProduct(gb.cwiseAbs());
  Alignment al;
  al.perm.assign(static_cast<std::size_t>(r), -1);
  al.sign_a.assign(static_cast<std::size_t>(r), 1.0);
  al.sign_b.assign(static_cast<std::size_t>(r), 1.0);
  std::vector<bool> used_est(static_cast<std::size_t>(r), false), used_ref(static_cast<std::size_t>(r), false);
  for (Eigen::Index step = 0; step < r; ++step) {
    double best = -1.0;
    Eigen::Index bk = 0, bl = 0;
    for (Eigen::Index k = 0; k < r; ++k) {
      if (used_est[static_cast<std::size_t>(k)]) continue;
      for (Eigen::Index l = 0; l < r; ++l) {
        if (used_ref[static_cast<std::size_t>(l)]) continue;
        if (score(k, l) > best) {
          best = score(k, l);
          bk = k;
          bl = l;
        }
      }
    }
    used_est[static_cast<std::size_t>(bk)] = used_ref[static_cast<std::size_t>(bl)] = true;
    al.perm[static_cast<std::size_t>(bk)] = static_cast<int>(bl);
    al.sign_a[static_cast<std::size_t>(bk)] = ga(bk, bl) < 0.0 ? -1.0 : 1.0;
    al.sign_b[static_cast<std::size_t>(bk)] = gb(bk, bl) < 0.0 ? -1.0 : 1.0;
  }
  return al;
}

struct FactorErrors {
  double ab = 0.0;  // max over columns of ||a_k - a'_k||, ||b_k - b'_k|| after alignment
  double c = 0.0;   // max over columns of ||c_k - c'_k|| / ||c'_k||
};

inline FactorErrors factor_errors(const FactorEstimate& est, const FactorEstimate& ref) {
  const Alignment al = align_columns(est, ref);
  FactorErrors err;
  for (std::size_t k = 0; k < al.perm.size(); ++k) {
    const auto ke = static_cast<Eigen::Index>(k);
    const Eigen::Index l = al.perm[k];
    err.ab = std::max(err.ab, (al.sign_a[k] * est.A.col(ke) - ref.A.col(l)).norm());
    err.ab = std::max(err.ab, (al.sign_b[k] * est.B.col(ke) - ref.B.col(l)).norm());
    if (est.C.size() > 0 && ref.C.size() > 0) {
      const double cn = ref.C.col(l).norm();
      const double d = (al.sign_a[k] * al.sign_b[k] * est.C.col(ke) - ref.C.col(l)).norm();
      err.c = std::max(err.c, cn > 0.0 ? d / cn : d);
    }
  }
  return err;
}

}  // namespace odtrec
