#pragma once

// Independent reference computations shared by the unit and acceptance tests.

#include "odtrec/coupled.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace oracle {

/// Dense Householder QR of an assembled system. The blocked (unpivoted)
/// factorization is an order of magnitude faster than the pivoted one at these
/// sizes; callers check full column rank through the singular values first.
struct DenseLs {
  explicit DenseLs(const odtrec::LeastSquaresSystem& sys) : qr(odtrec::Matrix(sys.design)), rhs(sys.rhs) {}

  odtrec::Vector solve() const { return qr.solve(rhs); }

  /// Singular values of the design, descending (those of R, for tall systems).
  odtrec::Vector singular_values() const {
    const auto k = std::min(qr.matrixQR().rows(), qr.matrixQR().cols());
    const odtrec::Matrix r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    return Eigen::BDCSVD<odtrec::Matrix>(r).singularValues();
  }

  Eigen::HouseholderQR<odtrec::Matrix> qr;
  odtrec::Vector rhs;
};

inline odtrec::Vector dense_solve(const odtrec::LeastSquaresSystem& sys) { return DenseLs(sys).solve(); }

inline odtrec::Vector dense_singular_values(const odtrec::LeastSquaresSystem& sys) {
  return DenseLs(sys).singular_values();
}

inline double rel_diff(const std::vector<odtrec::Matrix>& a, const std::vector<odtrec::Matrix>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    num += (a[t] - b[t]).squaredNorm();
    den += b[t].squaredNorm();
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

}  // namespace oracle
