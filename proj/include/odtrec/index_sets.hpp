#pragma once

#include "odtrec/core.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <vector>

namespace odtrec {

/// Closed integer range [lo, hi]; empty when lo > hi.
struct Interval {
  int lo = 1;
  int hi = 0;

  bool contains(int i) const { return lo <= i && i <= hi; }
  int size() const { return hi >= lo ? hi - lo + 1 : 0; }
  bool empty() const { return hi < lo; }

  /// Number of members of this range that are <= x.
  int count_le(int x) const {
    if (empty() || x < lo) return 0;
    return std::min(x, hi) - lo + 1;
  }

  friend bool operator==(const Interval&, const Interval&) = default;
};

inline Interval intersect(const Interval& a, const Interval& b) {
  return {std::max(a.lo, b.lo), std::min(a.hi, b.hi)};
}

/// Sorted set of distinct 1-based indices.
class IndexSet {
public:
  IndexSet() = default;

  explicit IndexSet(std::vector<int> values) : values_(std::move(values)) {
    std::sort(values_.begin(), values_.end());
    values_.erase(std::unique(values_.begin(), values_.end()), values_.end());
  }

  explicit IndexSet(const Interval& range) {
    for (int i = range.lo; i <= range.hi; ++i) values_.push_back(i);
  }

  bool contains(int i) const { return std::binary_search(values_.begin(), values_.end(), i); }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  const std::vector<int>& values() const { return values_; }
  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }

  friend bool operator==(const IndexSet&, const IndexSet&) = default;

private:
  std::vector<int> values_;
};

/// The clamped window [max(1, k - b), min(n, k + b)] as a range.
inline Interval band_interval(int k, int b, int n) {
  detail::require(n >= 1, "dimension n must be positive");
  detail::require(1 <= k && k <= n, "band centre k=" + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
  detail::require(b >= 0, "bandwidth b must be non-negative");
  return {std::max(1, k - b), std::min(n, k + b)};
}

/// Indices within distance b of k, clamped to [1, n].
inline IndexSet index_band(int k, int b, int n) { return IndexSet(band_interval(k, b, n)); }

/// Cells of an n x n matrix within distance b of the diagonal.
struct DiagBand {
  int n = 0;
  int b = 0;

  bool contains(int i, int j) const { return std::abs(i - j) <= b; }
};

inline DiagBand diag_band(int b, int n) {
  detail::require(b >= 0, "bandwidth b must be non-negative");
  detail::require(n >= 1, "dimension n must be positive");
  return {n, b};
}

/// Unknown region of slice k: the diagonal band plus rows and columns
/// within b of k.
struct SliceMask {
  int n = 0;
  int k = 1;
  int b = 0;

  Interval window() const { return {std::max(1, k - b), std::min(n, k + b)}; }

  bool contains(int i, int j) const {
    return std::abs(i - j) <= b || std::abs(i - k) <= b || std::abs(j - k) <= b;
  }
};

/// Support of the corruption tensor: every (i1, i2, i3) with two coordinates
/// within b of each other.
class BandPattern {
public:
  BandPattern(int n, int b) : n_(n), b_(b) {
    detail::require(n >= 1, "dimension n must be positive");
    detail::require(b >= 0, "bandwidth b must be non-negative");
  }

  int n() const { return n_; }
  int b() const { return b_; }

  bool contains(int i1, int i2, int i3) const {
    return std::abs(i1 - i2) <= b_ || std::abs(i1 - i3) <= b_ || std::abs(i2 - i3) <= b_;
  }

  SliceMask slice_mask(int l) const {
    detail::require(1 <= l && l <= n_, "slice index outside [1, n]");
    return {n_, l, b_};
  }

private:
  int n_;
  int b_;
};

/// Fraction of the n^3 entries covered by the pattern, by exhaustive count.
inline double pattern_density(const BandPattern& p) {
  const int n = p.n();
  std::int64_t hits = 0;
  for (int l = 1; l <= n; ++l)
    for (int j = 1; j <= n; ++j)
      for (int i = 1; i <= n; ++i)
        if (p.contains(i, j, l)) ++hits;
  const double total = static_cast<double>(n) * n * n;
  return static_cast<double>(hits) / total;
}

}  // namespace odtrec
