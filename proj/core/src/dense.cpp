#include "probitgp/dense.hpp"

#include <cmath>
#include <sstream>

#include "probitgp/errors.hpp"

namespace probitgp {

DenseSpd::DenseSpd(Matrix entries) : entries_(std::move(entries)) {
  if (entries_.rows() != entries_.cols()) {
    std::ostringstream msg;
    msg << "covariance must be square, got " << entries_.rows() << "x" << entries_.cols();
    throw ValidationError(msg.str());
  }
  if (entries_.rows() == 0) throw ValidationError("covariance must be non-empty");
  if (!entries_.allFinite()) throw ValidationError("covariance has non-finite entries");
  const double scale = entries_.cwiseAbs().maxCoeff();
  const double asym = (entries_ - entries_.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * scale) {
    std::ostringstream msg;
    msg << "covariance is not symmetric (max asymmetry " << asym << ")";
    throw ValidationError(msg.str());
  }
}

namespace detail {

bool try_cholesky(const Matrix& s, Matrix& lower) {
  Eigen::LLT<Matrix> llt(s);
  if (llt.info() != Eigen::Success) return false;
  lower = llt.matrixL();
  return lower.diagonal().minCoeff() > 0.0 && lower.allFinite();
}

}  // namespace detail

CholeskyFactor dense_cholesky(const DenseSpd& s) {
  const double base = s.mean_diagonal();
  CholeskyFactor out;
  for (const double level : kJitterLadder) {
    const double jitter = level * base;
    bool ok;
    if (jitter == 0.0) {
      ok = detail::try_cholesky(s.matrix(), out.lower);
    } else {
      Matrix shifted = s.matrix();
      shifted.diagonal().array() += jitter;
      ok = detail::try_cholesky(shifted, out.lower);
    }
    if (ok) {
      out.jitter = jitter;
      return out;
    }
  }
  throw NumericalError("Cholesky factorization failed: matrix is not positive definite after jitter " +
                       std::to_string(kJitterLadder.back()) + " * mean(diag)");
}

}  // namespace probitgp
