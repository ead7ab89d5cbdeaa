#pragma once

#include <array>
#include <cstddef>

#include "probitgp/types.hpp"

namespace probitgp {

/// Symmetric matrix intended for Cholesky factorization. Construction checks squareness,
/// finiteness and symmetry to 1e-12 relative to the largest entry.
class DenseSpd {
 public:
  explicit DenseSpd(Matrix entries);

  std::size_t size() const { return static_cast<std::size_t>(entries_.rows()); }
  const Matrix& matrix() const { return entries_; }
  double operator()(std::size_t i, std::size_t j) const {
    return entries_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  double mean_diagonal() const { return entries_.diagonal().mean(); }

 private:
  Matrix entries_;
};

/// Diagonal shifts tried in order, as multiples of mean(diag). The first is always zero.
inline constexpr std::array<double, 6> kJitterLadder = {0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6};

struct CholeskyFactor {
  Matrix lower;          // L with L * L^T = S + jitter * I
  double jitter = 0.0;   // absolute diagonal shift that was needed
};

/// Lower Cholesky factor with jitter escalation along kJitterLadder.
/// Throws NumericalError when the matrix is not positive definite even at the largest shift.
CholeskyFactor dense_cholesky(const DenseSpd& s);

namespace detail {
/// Plain Cholesky attempt without jitter; false on a non-positive pivot.
bool try_cholesky(const Matrix& s, Matrix& lower);
}  // namespace detail

}  // namespace probitgp
