#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "probitgp/dense.hpp"
#include "probitgp/types.hpp"

namespace probitgp {

enum class KernelFamily { kSquaredExponential };

/// Covariance kernel with unit marginal variance: K(x, x') = exp(-alpha * |x - x'|^2).
struct KernelSpec {
  KernelFamily family = KernelFamily::kSquaredExponential;
  double alpha = 1.0;  // inverse squared length-scale, > 0

  void validate() const;
};

/// Ordered set of distinct q-dimensional points, stored one point per row.
class Locations {
 public:
  using Storage = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  /// Throws ValidationError on empty input, non-finite coordinates or two identical points
  /// (exact coordinate equality); the message names the offending index pair.
  Locations(const std::vector<std::vector<double>>& points);
  static Locations from_rows(Storage points);

  std::size_t size() const { return static_cast<std::size_t>(points_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(points_.cols()); }
  std::span<const double> point(std::size_t i) const {
    return {points_.data() + i * dim(), dim()};
  }
  const Storage& storage() const { return points_; }

  /// Index of a point equal to x, or size() when none matches.
  std::size_t find(std::span<const double> x) const;

 private:
  struct RowsTag {};
  Locations(RowsTag, Storage points);

  Storage points_;
};

/// exp(-alpha * |x - x'|^2). Throws ValidationError on a dimension mismatch.
double kernel_eval(const KernelSpec& spec, std::span<const double> x, std::span<const double> x_prime);

/// Prior covariance with entries K(x_i, x_j); unit diagonal.
DenseSpd build_covariance(const KernelSpec& spec, const Locations& locs);

/// Vector of K(x, x_i) over all locations.
Vector cross_covariance(const KernelSpec& spec, const Locations& locs, std::span<const double> x);

}  // namespace probitgp
