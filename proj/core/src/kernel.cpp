#include "probitgp/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "probitgp/errors.hpp"

namespace probitgp {

void KernelSpec::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    std::ostringstream msg;
    msg << "kernel alpha must be positive and finite, got " << alpha;
    throw ValidationError(msg.str());
  }
}

namespace {

Locations::Storage to_storage(const std::vector<std::vector<double>>& points) {
  if (points.empty()) throw ValidationError("locations must be non-empty");
  const std::size_t q = points.front().size();
  Locations::Storage out(static_cast<Eigen::Index>(points.size()), static_cast<Eigen::Index>(q));
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].size() != q) {
      std::ostringstream msg;
      msg << "location " << i << " has dimension " << points[i].size() << ", expected " << q;
      throw ValidationError(msg.str());
    }
    for (std::size_t k = 0; k < q; ++k) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = points[i][k];
    }
  }
  return out;
}

}  // namespace

Locations::Locations(const std::vector<std::vector<double>>& points)
    : Locations(RowsTag{}, to_storage(points)) {}

Locations Locations::from_rows(Storage points) { return Locations(RowsTag{}, std::move(points)); }

Locations::Locations(RowsTag, Storage points) : points_(std::move(points)) {
  if (points_.rows() == 0 || points_.cols() == 0) {
    throw ValidationError("locations must be non-empty with positive dimension");
  }
  if (!points_.allFinite()) throw ValidationError("locations contain non-finite coordinates");

  // Lexicographic sort exposes exact duplicates as neighbours.
  std::vector<std::size_t> order(size());
  std::iota(order.begin(), order.end(), 0);
  auto less = [this](std::size_t i, std::size_t j) {
    const auto pi = point(i);
    const auto pj = point(j);
    return std::lexicographical_compare(pi.begin(), pi.end(), pj.begin(), pj.end());
  };
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return less(i, j) || (!less(j, i) && i < j);
  });
  for (std::size_t k = 1; k < order.size(); ++k) {
    const auto pa = point(order[k - 1]);
    const auto pb = point(order[k]);
    if (std::equal(pa.begin(), pa.end(), pb.begin())) {
      std::ostringstream msg;
      msg << "duplicate locations at indices " << std::min(order[k - 1], order[k]) << " and "
          << std::max(order[k - 1], order[k]);
      throw ValidationError(msg.str());
    }
  }
}

std::size_t Locations::find(std::span<const double> x) const {
  if (x.size() != dim()) return size();
  for (std::size_t i = 0; i < size(); ++i) {
    const auto p = point(i);
    if (std::equal(p.begin(), p.end(), x.begin())) return i;
  }
  return size();
}

double kernel_eval(const KernelSpec& spec, std::span<const double> x, std::span<const double> x_prime) {
  if (x.size() != x_prime.size()) {
    std::ostringstream msg;
    msg << "kernel arguments differ in dimension: " << x.size() << " vs " << x_prime.size();
    throw ValidationError(msg.str());
  }
  double dist2 = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double d = x[k] - x_prime[k];
    dist2 += d * d;
  }
  return std::exp(-spec.alpha * dist2);
}

DenseSpd build_covariance(const KernelSpec& spec, const Locations& locs) {
  spec.validate();
  const auto n = static_cast<Eigen::Index>(locs.size());
  Matrix omega(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    omega(i, i) = 1.0;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double k = kernel_eval(spec, locs.point(static_cast<std::size_t>(i)),
                                   locs.point(static_cast<std::size_t>(j)));
      omega(i, j) = k;
      omega(j, i) = k;
    }
  }
  return DenseSpd(std::move(omega));
}

Vector cross_covariance(const KernelSpec& spec, const Locations& locs, std::span<const double> x) {
  Vector out(static_cast<Eigen::Index>(locs.size()));
  for (std::size_t i = 0; i < locs.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = kernel_eval(spec, x, locs.point(i));
  }
  return out;
}

}  // namespace probitgp
