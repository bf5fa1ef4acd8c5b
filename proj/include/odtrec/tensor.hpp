#pragma once

#include "odtrec/core.hpp"

#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace odtrec {

/// Cubic n x n x n array of doubles. Entry (i, j, l) lives at
/// (i-1) + n (j-1) + n^2 (l-1), so every mode-3 slice is a contiguous
/// column-major n x n block.
class DenseTensor3 {
public:
  DenseTensor3() = default;

  explicit DenseTensor3(int n) : n_(n), data_(checked_volume(n), 0.0) {}

  DenseTensor3(int n, std::vector<double> data) : n_(n), data_(std::move(data)) {
    if (data_.size() != checked_volume(n))
      throw ArgumentError("tensor data length " + std::to_string(data_.size()) + " does not equal n^3 for n=" +
                          std::to_string(n));
  }

  int n() const { return n_; }
  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  double operator()(int i, int j, int l) const { return data_[offset(i, j, l)]; }
  double& operator()(int i, int j, int l) { return data_[offset(i, j, l)]; }

  /// Slice l as a read-only view; entry (i-1, j-1) holds tensor entry (i, j, l).
  Eigen::Map<const Matrix> slice_view(int l) const {
    check_index(l);
    return Eigen::Map<const Matrix>(data_.data() + slice_stride() * (l - 1), n_, n_);
  }

  Eigen::Map<Matrix> slice_view(int l) {
    check_index(l);
    return Eigen::Map<Matrix>(data_.data() + slice_stride() * (l - 1), n_, n_);
  }

  void set_slice(int l, const Matrix& m) {
    if (m.rows() != n_ || m.cols() != n_) throw ArgumentError("slice shape mismatch");
    slice_view(l) = m;
  }

  DenseTensor3& operator+=(const DenseTensor3& other) {
    check_same_shape(other);
    for (std::size_t t = 0; t < data_.size(); ++t) data_[t] += other.data_[t];
    return *this;
  }

  DenseTensor3& operator-=(const DenseTensor3& other) {
    check_same_shape(other);
    for (std::size_t t = 0; t < data_.size(); ++t) data_[t] -= other.data_[t];
    return *this;
  }

  friend DenseTensor3 operator+(DenseTensor3 a, const DenseTensor3& b) { return a += b; }
  friend DenseTensor3 operator-(DenseTensor3 a, const DenseTensor3& b) { return a -= b; }

  friend bool operator==(const DenseTensor3&, const DenseTensor3&) = default;

private:
  static std::size_t checked_volume(int n) {
    if (n < 1) throw ArgumentError("tensor dimension must be positive");
    const auto s = static_cast<std::size_t>(n);
    return s * s * s;
  }

  std::size_t slice_stride() const { return static_cast<std::size_t>(n_) * n_; }

  void check_index(int l) const {
    if (l < 1 || l > n_) throw ArgumentError("index " + std::to_string(l) + " outside [1, " + std::to_string(n_) + "]");
  }

  std::size_t offset(int i, int j, int l) const {
    check_index(i);
    check_index(j);
    check_index(l);
    return static_cast<std::size_t>(i - 1) + static_cast<std::size_t>(n_) * (j - 1) + slice_stride() * (l - 1);
  }

  void check_same_shape(const DenseTensor3& other) const {
    if (other.n_ != n_) throw ArgumentError("tensor dimension mismatch");
  }

  int n_ = 0;
  std::vector<double> data_;
};

/// Three n x r factor matrices; T = sum_k a_k (x) b_k (x) c_k.
struct FactorSet {
  Matrix A;
  Matrix B;
  Matrix C;

  int n() const { return static_cast<int>(A.rows()); }
  int rank() const { return static_cast<int>(A.cols()); }

  void validate() const {
    if (A.rows() != B.rows() || A.rows() != C.rows() || A.cols() != B.cols() || A.cols() != C.cols())
      throw ArgumentError("factor matrices must all be n x r");
    if (A.cols() > A.rows()) throw ArgumentError("rank r must not exceed n");
  }
};

/// max |M^T M - I| over all entries.
inline double orthonormality_defect(const Matrix& m) {
  const Matrix gram = m.transpose() * m;
  return (gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
}

/// Dense tensor of a factor set, built slice by slice as A diag(C(l,:)) B^T.
inline DenseTensor3 rank1_sum(const FactorSet& f) {
  f.validate();
  const int n = f.n();
  DenseTensor3 t(n);
  for (int l = 1; l <= n; ++l)
    t.slice_view(l).noalias() = f.A * f.C.row(l - 1).asDiagonal() * f.B.transpose();
  return t;
}

/// Copy of slice l.
inline Matrix slice_as_matrix(const DenseTensor3& t, int l) { return t.slice_view(l); }

inline double inner_product(const DenseTensor3& a, const DenseTensor3& b) {
  if (a.n() != b.n()) throw ArgumentError("tensor dimension mismatch");
  const auto x = a.data();
  const auto y = b.data();
  double acc = 0.0;
  for (std::size_t t = 0; t < x.size(); ++t) acc += x[t] * y[t];
  return acc;
}

inline double frobenius_norm(const DenseTensor3& t) {
  return Eigen::Map<const Vector>(t.data().data(), static_cast<Eigen::Index>(t.data().size())).norm();
}

/// ||estimate - reference|| / ||reference||.
inline double relative_error(const DenseTensor3& estimate, const DenseTensor3& reference) {
  const double ref = frobenius_norm(reference);
  const double diff = frobenius_norm(estimate - reference);
  return ref > 0.0 ? diff / ref : diff;
}

/// Entries of m at cells (i, j) the mask does not contain, row-major.
template <class Mask>
Vector restrict_to_complement(const Matrix& m, const Mask& mask) {
  std::vector<double> kept;
  for (int i = 1; i <= m.rows(); ++i)
    for (int j = 1; j <= m.cols(); ++j)
      if (!mask.contains(i, j)) kept.push_back(m(i - 1, j - 1));
  return Eigen::Map<const Vector>(kept.data(), static_cast<Eigen::Index>(kept.size()));
}

}  // namespace odtrec
