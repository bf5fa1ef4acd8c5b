#pragma once

#include "odtrec/index_sets.hpp"
#include "odtrec/random.hpp"
#include "odtrec/tensor.hpp"

#include <cstdint>
#include <utility>

namespace odtrec {

struct ProblemParams {
  int n = 0;
  int r = 0;
  int b = 0;
  double corruption_scale = 1.0;
  std::uint64_t seed = 0;
};

/// Ground truth plus its corrupted observation S = T + E.
struct ProblemInstance {
  FactorSet truth;
  DenseTensor3 clean;
  DenseTensor3 corruption;
  DenseTensor3 observed;
  ProblemParams params;
};

struct NoiseSpec {
  double relative_magnitude = 0.0;
  std::uint64_t seed = 0;
};

namespace detail {

inline Matrix gaussian_matrix(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = normal(rng);
  return m;
}

/// Haar-distributed n x r matrix with orthonormal columns: Q factor of a
/// Gaussian matrix with R's diagonal made positive.
inline Matrix haar_columns(int n, int r, std::mt19937_64& rng) {
  const Matrix g = gaussian_matrix(n, r, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(n, r);
  const Matrix& packed = qr.matrixQR();
  for (int k = 0; k < r; ++k)
    if (packed(k, k) < 0.0) q.col(k) = -q.col(k);
  return q;
}

}  // namespace detail

inline std::pair<Matrix, Matrix> random_orthonormal_pair(int n, int r, std::uint64_t seed) {
  detail::require(n >= 1, "dimension n must be positive");
  detail::require(1 <= r && r <= n, "rank r must satisfy 1 <= r <= n");
  auto rng_a = make_engine(seed, Stream::kFactorA);
  auto rng_b = make_engine(seed, Stream::kFactorB);
  Matrix a = detail::haar_columns(n, r, rng_a);
  Matrix b = detail::haar_columns(n, r, rng_b);
  return {std::move(a), std::move(b)};
}

/// Random orthonormal A, B; standard normal C; normal corruption of the given
/// scale on every pattern cell, zero elsewhere.
inline ProblemInstance generate_problem(int n, int r, int b, double corruption_scale, std::uint64_t seed) {
  detail::require(b >= 0, "bandwidth b must be non-negative");
  detail::require(corruption_scale >= 0.0, "corruption scale must be non-negative");
  auto [a, bm] = random_orthonormal_pair(n, r, seed);
  auto rng_c = make_engine(seed, Stream::kFactorC);
  Matrix c = detail::gaussian_matrix(n, r, rng_c);

  ProblemInstance inst;
  inst.params = {n, r, b, corruption_scale, seed};
  inst.truth = {std::move(a), std::move(bm), std::move(c)};
  inst.clean = rank1_sum(inst.truth);
  inst.corruption = DenseTensor3(n);

  const BandPattern pattern(n, b);
  auto rng_e = make_engine(seed, Stream::kCorruption);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int l = 1; l <= n; ++l)
    for (int j = 1; j <= n; ++j)
      for (int i = 1; i <= n; ++i)
        if (pattern.contains(i, j, l)) inst.corruption(i, j, l) = corruption_scale * normal(rng_e);

  inst.observed = inst.clean + inst.corruption;
  return inst;
}

/// t + E_noise with E_noise Gaussian, rescaled so ||E_noise|| = rho * reference_norm.
inline DenseTensor3 add_entrywise_noise(const DenseTensor3& t, const NoiseSpec& spec, double reference_norm) {
  detail::require(spec.relative_magnitude >= 0.0, "noise ratio must be non-negative");
  if (spec.relative_magnitude == 0.0) return t;
  auto rng = make_engine(spec.seed, Stream::kNoise);
  std::normal_distribution<double> normal(0.0, 1.0);
  DenseTensor3 noise(t.n());
  for (double& x : noise.data()) x = normal(rng);
  const double scale = spec.relative_magnitude * reference_norm / frobenius_norm(noise);
  for (double& x : noise.data()) x *= scale;
  return t + noise;
}

}  // namespace odtrec
