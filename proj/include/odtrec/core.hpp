#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

/// Recovery of orthogonally decomposable third-order tensors from
/// observations corrupted on a band-structured index pattern.
///
/// All index arguments in the public API are 1-based: slice `l`, row `i`,
/// band centre `k` run over `[1, n]`. Eigen matrices keep Eigen's own
/// 0-based accessors.
namespace odtrec {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Base of all library errors.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (index out of range, r > n, ...).
class ArgumentError : public Error {
public:
  using Error::Error;
};

/// The requested geometry cannot be realised (slices overlap, too few slices).
class FeasibilityError : public Error {
public:
  using Error::Error;
};

/// A numerical subproblem is rank deficient for this particular instance.
/// Usually cured by a smaller bandwidth or a different draw.
class DegenerateError : public Error {
public:
  using Error::Error;
};

/// Malformed tensor file or report.
class FormatError : public Error {
public:
  using Error::Error;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ArgumentError(what);
}

}  // namespace detail
}  // namespace odtrec
