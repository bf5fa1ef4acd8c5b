#include "odtrec/spectral.hpp"
#include "odtrec/synth.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <numeric>
#include <random>

using namespace odtrec;

namespace {

StackedSlices clean_stack(const ProblemInstance& inst, std::vector<int> which) {
  StackedSlices s;
  for (int l : which) {
    s.slices.push_back(slice_as_matrix(inst.clean, l));
    s.source.push_back(l);
  }
  return s;
}

// Generic route: eigenvectors of M_alpha pinv(M_beta) for arbitrary (non-orthogonal) A.
Matrix generic_jennrich_a(const StackedSlices& stack, int r, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  const auto n = stack.slices.front().rows();
  Matrix ma = Matrix::Zero(n, n), mb = Matrix::Zero(n, n);
  for (const Matrix& s : stack.slices) {
    ma += g(rng) * s;
    mb += g(rng) * s;
  }
  const Matrix op = ma * mb.completeOrthogonalDecomposition().pseudoInverse();
  Eigen::EigenSolver<Matrix> eig(op);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index x, Eigen::Index y) { return std::abs(eig.eigenvalues()(x)) > std::abs(eig.eigenvalues()(y)); });
  Matrix a(n, r);
  for (int c = 0; c < r; ++c) {
    Vector v = eig.eigenvectors().col(order[static_cast<std::size_t>(c)]).real();
    a.col(c) = v.normalized();
  }
  return a;
}

double max_aligned_error(const Matrix& est, const Matrix& ref) {
  // greedy |cos| match, column by column
  double worst = 0.0;
  std::vector<bool> used(static_cast<std::size_t>(ref.cols()), false);
  for (Eigen::Index k = 0; k < est.cols(); ++k) {
    Eigen::Index best = 0;
    double bv = -1.0;
    for (Eigen::Index l = 0; l < ref.cols(); ++l)
      if (!used[static_cast<std::size_t>(l)] && std::abs(est.col(k).dot(ref.col(l))) > bv) {
        bv = std::abs(est.col(k).dot(ref.col(l)));
        best = l;
      }
    used[static_cast<std::size_t>(best)] = true;
    const double s = est.col(k).dot(ref.col(best)) < 0.0 ? -1.0 : 1.0;
    worst = std::max(worst, (s * est.col(k) - ref.col(best)).norm());
  }
  return worst;
}

}  // namespace

TEST(Jennrich, SingleRankOneTerm) {
  StackedSlices stack;
  const Vector a = Vector::Unit(2, 0), b = Vector::Unit(2, 1);
  for (double c : {2.0, 3.0, 5.0}) stack.slices.push_back(c * a * b.transpose());
  const JennrichResult jr = jennrich(stack, 1, 1);
  EXPECT_NEAR(std::abs(jr.A(0, 0)), 1.0, 1e-12);
  EXPECT_NEAR(std::abs(jr.B(1, 0)), 1.0, 1e-12);
  EXPECT_GT(jr.A(0, 0), 0.0);  // canonical sign
}

TEST(Jennrich, CleanStackRecoversFactors) {
  for (int r : {10, 20}) {
    const ProblemInstance inst = generate_problem(20, r, 1, 0.0, 31 + static_cast<std::uint64_t>(r));
    const JennrichResult jr = jennrich(clean_stack(inst, {1, 7, 13}), r, 4);
    const FactorErrors fe = factor_errors({jr.A, jr.B, Matrix()}, {inst.truth.A, inst.truth.B, Matrix()});
    EXPECT_LT(fe.ab, 1e-8) << "r=" << r;
    EXPECT_LT(jr.symmetry_defect, 1e-12);
    EXPECT_EQ(jr.spectrum.size(), r);
  }
}

TEST(Jennrich, AgreesWithGenericRoute) {
  const ProblemInstance inst = generate_problem(20, 10, 1, 0.0, 41);
  const StackedSlices stack = clean_stack(inst, {1, 7, 13});
  const JennrichResult jr = jennrich(stack, 10, 2);
  const Matrix generic = generic_jennrich_a(stack, 10, 9);
  EXPECT_LT(max_aligned_error(jr.A, generic), 1e-6);
  EXPECT_LT(max_aligned_error(generic, inst.truth.A), 1e-6);
}

TEST(Jennrich, DegenerateStackThrows) {
  StackedSlices stack;
  const Matrix s = Matrix::Identity(4, 4);
  for (int t = 0; t < 3; ++t) stack.slices.push_back(s);  // every weight collapses to one eigenvalue
  EXPECT_THROW(jennrich(stack, 2, 0), DegenerateError);
}

TEST(SolveCRow, ExactOnCleanAndCorrupted) {
  const ProblemInstance clean = generate_problem(30, 15, 1, 0.0, 12);
  for (int l : {1, 15, 30})
    EXPECT_LT((solve_c_row(clean.observed.slice_view(l), clean.truth.A, clean.truth.B, l, 1) -
               clean.truth.C.row(l - 1).transpose())
                  .norm(),
              1e-10);
  const ProblemInstance dirty = generate_problem(30, 15, 1, 1e3, 12);
  for (int l = 1; l <= 30; ++l)
    EXPECT_LT((solve_c_row(dirty.observed.slice_view(l), dirty.truth.A, dirty.truth.B, l, 1) -
               dirty.truth.C.row(l - 1).transpose())
                  .norm(),
              1e-8);
}

TEST(SolveCRow, WarnsBelowBound) {
  const ProblemInstance inst = generate_problem(11, 3, 1, 1.0, 1);
  std::vector<std::string> warn;
  try {
    solve_c_row(inst.observed.slice_view(5), inst.truth.A, inst.truth.B, 5, 1, &warn);
  } catch (const DegenerateError&) {
  }
  ASSERT_EQ(warn.size(), 1u);
  EXPECT_NE(warn.front().find("8b+4"), std::string::npos);
}

TEST(SolveCRow, RankDeficientThrows) {
  // a_1 and b_1 both supported on the first two indices: every cell carrying
  // c_1 lies in the masked band at b=1
  const int n = 12;
  Matrix a = Matrix::Zero(n, 2), b = Matrix::Zero(n, 2);
  a(0, 0) = b(1, 0) = 1.0;
  a(5, 1) = b(9, 1) = 1.0;
  EXPECT_THROW(solve_c_row(Matrix::Zero(n, n), a, b, 6, 1), DegenerateError);
}

TEST(SolveC, OrderOfSlicesIsIrrelevant) {
  const ProblemInstance inst = generate_problem(24, 10, 1, 1e3, 19);
  const Matrix c = solve_c(inst.observed, inst.truth.A, inst.truth.B, 1);
  std::vector<int> order(24);
  std::iota(order.begin(), order.end(), 1);
  std::shuffle(order.begin(), order.end(), std::mt19937_64(3));
  for (int l : order)
    EXPECT_LE((solve_c_row(inst.observed.slice_view(l), inst.truth.A, inst.truth.B, l, 1).transpose() - c.row(l - 1))
                  .cwiseAbs()
                  .maxCoeff(),
              1e-12);
}

TEST(AssembleEstimate, TruthAndAlignmentInvariance) {
  const ProblemInstance inst = generate_problem(10, 5, 1, 0.0, 23);
  EXPECT_LT(relative_error(assemble_estimate({inst.truth.A, inst.truth.B, inst.truth.C}), inst.clean), 1e-12);

  // permute columns and flip signs of a and b; c absorbs the product
  FactorEstimate est{inst.truth.A, inst.truth.B, inst.truth.C};
  const std::vector<int> perm{3, 0, 4, 1, 2};
  const std::vector<double> sa{1, -1, -1, 1, 1}, sb{-1, -1, 1, 1, -1};
  for (int k = 0; k < 5; ++k) {
    est.A.col(k) = sa[k] * inst.truth.A.col(perm[k]);
    est.B.col(k) = sb[k] * inst.truth.B.col(perm[k]);
    est.C.col(k) = sa[k] * sb[k] * inst.truth.C.col(perm[k]);
  }
  EXPECT_LT(relative_error(assemble_estimate(est), inst.clean), 1e-12);
  const Alignment al = align_columns(est, {inst.truth.A, inst.truth.B, inst.truth.C});
  EXPECT_EQ(al.perm, perm);
  EXPECT_EQ(al.sign_a, sa);
  EXPECT_EQ(al.sign_b, sb);
  const FactorErrors fe = factor_errors(est, {inst.truth.A, inst.truth.B, inst.truth.C});
  EXPECT_LT(fe.ab, 1e-14);
  EXPECT_LT(fe.c, 1e-14);
}
