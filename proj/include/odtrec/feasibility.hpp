#pragma once

#include "odtrec/counting.hpp"
#include "odtrec/selection.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace odtrec {

/// Lower bound on n below which the stage-1 system is known to have a
/// kernel: max(12b + 7, (93b - 69 + sqrt(1419b^2 - 2704b + 921)) / 10).
/// The square-root branch is dropped where its discriminant is negative.
inline double n_lower_bound(int b) {
  const double bb = b;
  double bound = 12.0 * bb + 7.0;
  const double disc = 1419.0 * bb * bb - 2704.0 * bb + 921.0;
  if (disc >= 0.0) bound = std::max(bound, (93.0 * bb - 69.0 + std::sqrt(disc)) / 10.0);
  return bound;
}

inline int n_upper_constant(int b) { return 8 * (4 * b + 2); }
inline int r_upper_constant(int b) { return 3 * (4 * b + 2); }

/// Every bound the recovery theory attaches to (n, r, b, m).
struct FeasibilityFlags {
  int n = 0, r = 0, b = 0, m = 0;
  bool slices_fit = false;           // m >= 5 and (2b+1)(m-1)+1 <= n
  double n_lower = 0.0;              // n_lower_bound(b)
  bool main_bound = false;           // n >= n_lower
  bool main_rank = false;            // r >= 4b + 2
  bool cond_lemma = false;           // n >= 8(4b+2) and r >= 3(4b+2)
  bool cond_lemma_converse = false;  // n <= n_lower or r <= 4b+1: kernel predicted
  bool rank2nd = false;              // n >= 16b+4 and r >= 8b+4
  bool c_rows = false;               // n >= 8b+4
  bool counts_admissible = false;    // exact equation count >= unknown count
  int table_min_n = 0;               // smallest n with counts_admissible at this b, m

  /// Hard stop: the slice geometry does not exist.
  bool infeasible() const { return !slices_fit; }

  std::vector<std::string> warnings() const {
    std::vector<std::string> w;
    if (!slices_fit) {
      w.push_back("slice geometry infeasible: need m >= 5 and (2b+1)(m-1)+1 <= n");
      return w;
    }
    if (cond_lemma_converse) w.push_back("stage-1 system predicted to have a kernel (n <= lower bound or r <= 4b+1)");
    if (!counts_admissible) w.push_back("stage-1 system has fewer equations than unknowns");
    if (!cond_lemma) w.push_back("below the sufficient bounds n >= 8(4b+2), r >= 3(4b+2)");
    if (!rank2nd) w.push_back("below the stage-2 bounds n >= 16b+4, r >= 8b+4");
    if (!c_rows) w.push_back("n < 8b+4: rows of C may not be determined");
    return w;
  }
};

inline FeasibilityFlags evaluate_feasibility(int n, int r, int b, int m) {
  detail::require(n >= 1 && r >= 1 && b >= 0, "need n >= 1, r >= 1, b >= 0");
  FeasibilityFlags f;
  f.n = n;
  f.r = r;
  f.b = b;
  f.m = m;
  f.slices_fit = m >= 5 && disjoint_span(b, m) <= n;
  f.n_lower = n_lower_bound(b);
  f.main_bound = n >= f.n_lower;
  f.main_rank = r >= 4 * b + 2;
  f.cond_lemma = n >= n_upper_constant(b) && r >= r_upper_constant(b);
  f.cond_lemma_converse = n <= f.n_lower || r <= 4 * b + 1;
  f.rank2nd = n >= 16 * b + 4 && r >= 8 * b + 4;
  f.c_rows = n >= 8 * b + 4;
  if (m >= 5) {
    f.table_min_n = minimal_admissible_n(b, m);
    if (f.slices_fit) f.counts_admissible = total_equations(n, b, m) >= total_unknowns(n, b, m);
  }
  return f;
}

}  // namespace odtrec
