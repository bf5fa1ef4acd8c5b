#pragma once

#include "odtrec/selection.hpp"

#include <cstdint>

namespace odtrec {

/// Number of stage-1 unknowns of slice i: entries of U(k_i) in rows outside
/// the 2b-window of k_i. Each such row holds the b-band around the row index
/// and the b-window columns, which never overlap there.
inline std::int64_t count_unknowns(int n, int b, int m, int i) {
  const SliceSelection sel = choose_slices(n, b, m);
  detail::require(1 <= i && i <= m, "slice position outside [1, m]");
  const Interval rows_out = sel.window(i, 2 * b);
  const Interval cols = sel.window(i, b);
  std::int64_t total = 0;
  for (int p = 1; p <= n; ++p) {
    if (rows_out.contains(p)) continue;
    const Interval band{std::max(1, p - b), std::min(n, p + b)};
    total += band.size() + cols.size() - intersect(band, cols).size();
  }
  return total;
}

/// Independent equations kept for pair (i, j): strictly lower cells (p > q)
/// with p - q > 2b and neither index in either 2b-window. The residual is
/// antisymmetric so the upper triangle repeats them.
inline std::int64_t count_equations(int n, int b, int m, int i, int j) {
  const SliceSelection sel = choose_slices(n, b, m);
  detail::require(1 <= i && i <= m && 1 <= j && j <= m && i != j, "need two distinct slice positions in [1, m]");
  const Interval wi = sel.window(i, 2 * b);
  const Interval wj = sel.window(j, 2 * b);
  const Interval both = intersect(wi, wj);
  // survivors in [1, x]
  auto survivors_le = [&](int x) {
    if (x <= 0) return 0;
    return x - wi.count_le(x) - wj.count_le(x) + both.count_le(x);
  };
  std::int64_t total = 0;
  for (int p = 1; p <= n; ++p) {
    if (wi.contains(p) || wj.contains(p)) continue;
    total += survivors_le(p - 2 * b - 1);
  }
  return total;
}

inline std::int64_t total_unknowns(int n, int b, int m) {
  std::int64_t t = 0;
  for (int i = 1; i <= m; ++i) t += count_unknowns(n, b, m, i);
  return t;
}

inline std::int64_t total_equations(int n, int b, int m) {
  std::int64_t t = 0;
  for (int i = 1; i <= m; ++i)
    for (int j = i + 1; j <= m; ++j) t += count_equations(n, b, m, i, j);
  return t;
}

/// Smallest n at which m slices fit and the stage-1 system has at least as
/// many equations as unknowns.
inline int minimal_admissible_n(int b, int m = 7) {
  detail::require(b >= 0, "bandwidth b must be non-negative");
  detail::require(m >= 5, "need m >= 5");
  for (int n = disjoint_span(b, m);; ++n)
    if (total_equations(n, b, m) >= total_unknowns(n, b, m)) return n;
}

}  // namespace odtrec
