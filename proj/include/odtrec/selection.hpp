#pragma once

#include "odtrec/index_sets.hpp"

#include <string>
#include <vector>

namespace odtrec {

/// The m distinguished slices k_i = (2b+1)(i-1) + 1, whose b-windows are
/// pairwise disjoint.
struct SliceSelection {
  int n = 0;
  int b = 0;
  int m = 0;
  std::vector<int> k;  // 1-based slice indices, k[i-1] = k_i

  int slice(int i) const { return k.at(static_cast<std::size_t>(i - 1)); }

  /// Window I_{k_i}(width) of the i-th distinguished slice.
  Interval window(int i, int width) const { return band_interval(slice(i), width, n); }
};

/// Smallest n for which m disjoint b-windows fit.
inline int disjoint_span(int b, int m) { return (2 * b + 1) * (m - 1) + 1; }

inline SliceSelection choose_slices(int n, int b, int m) {
  detail::require(n >= 1, "dimension n must be positive");
  detail::require(b >= 0, "bandwidth b must be non-negative");
  if (m < 5) throw FeasibilityError("at least m >= 5 distinguished slices are required (got m=" + std::to_string(m) + ")");
  if (disjoint_span(b, m) > n)
    throw FeasibilityError("disjoint slice windows need (2b+1)(m-1)+1 <= n, but " + std::to_string(disjoint_span(b, m)) +
                           " > " + std::to_string(n) + " for b=" + std::to_string(b) + ", m=" + std::to_string(m));
  SliceSelection sel{n, b, m, {}};
  for (int i = 1; i <= m; ++i) sel.k.push_back((2 * b + 1) * (i - 1) + 1);
  return sel;
}

/// min(7, largest feasible m); seven slices is the best trade-off between
/// extra equations and the disjointness constraint.
inline int default_slice_count(int n, int b) {
  detail::require(n >= 1, "dimension n must be positive");
  detail::require(b >= 0, "bandwidth b must be non-negative");
  const int largest = (n - 1) / (2 * b + 1) + 1;
  const int m = std::min(7, largest);
  if (m < 5)
    throw FeasibilityError("n=" + std::to_string(n) + " admits only " + std::to_string(largest) +
                           " disjoint slices at b=" + std::to_string(b) + "; need (2b+1)*4+1 = " +
                           std::to_string(disjoint_span(b, 5)) + " <= n");
  return m;
}

/// Cells of the pair (i, j) residual that carry quadratic terms and are
/// therefore discarded: the 2b diagonal band plus rows and columns of both
/// 2b-windows.
struct PairMask {
  int n = 0;
  int width = 0;  // 2b
  Interval first;
  Interval second;

  bool contains(int p, int q) const {
    return std::abs(p - q) <= width || first.contains(p) || first.contains(q) || second.contains(p) ||
           second.contains(q);
  }
};

inline PairMask pair_mask(int i, int j, const SliceSelection& sel) {
  detail::require(i != j, "pair mask needs two distinct slices");
  detail::require(1 <= i && i <= sel.m && 1 <= j && j <= sel.m, "slice position outside [1, m]");
  return {sel.n, 2 * sel.b, sel.window(i, 2 * sel.b), sel.window(j, 2 * sel.b)};
}

/// Positions (into the distinguished slices) whose 2b-windows are pairwise
/// disjoint; these slices get fully corrected.
struct SubsetSelection {
  std::vector<int> positions;  // 1-based into [1, m]
};

inline void validate_subset(const SubsetSelection& subset, const SliceSelection& sel) {
  if (subset.positions.size() < 3) throw FeasibilityError("the corrected subset needs at least 3 slices");
  for (int i : subset.positions) detail::require(1 <= i && i <= sel.m, "subset position outside [1, m]");
  for (std::size_t a = 0; a < subset.positions.size(); ++a) {
    const int i = subset.positions[a];
    for (std::size_t c = a + 1; c < subset.positions.size(); ++c) {
      const Interval overlap = intersect(sel.window(i, 2 * sel.b), sel.window(subset.positions[c], 2 * sel.b));
      if (!overlap.empty())
        throw FeasibilityError("subset slices " + std::to_string(i) + " and " + std::to_string(subset.positions[c]) +
                               " have overlapping 2b-windows");
    }
  }
}

/// Every other slice {1, 3, 5, ...}. Consecutive members are 2(2b+1) apart,
/// more than the 4b needed for disjoint 2b-windows.
inline SubsetSelection default_subset(int m) {
  if (m < 5) throw FeasibilityError("default subset needs m >= 5 (got m=" + std::to_string(m) + ")");
  SubsetSelection s;
  for (int i = 1; i <= m; i += 2) s.positions.push_back(i);
  return s;
}

/// The minimal {1, 3, 5}.
inline SubsetSelection minimal_subset(int m) {
  if (m < 5) throw FeasibilityError("minimal subset needs m >= 5 (got m=" + std::to_string(m) + ")");
  return {{1, 3, 5}};
}

}  // namespace odtrec
