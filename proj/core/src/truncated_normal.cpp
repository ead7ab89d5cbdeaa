#include "probitgp/truncated_normal.hpp"

#include <cmath>
#include <limits>

#include "probitgp/normal.hpp"

namespace probitgp {

namespace {

constexpr double kRejectionThreshold = 5.0;

// Mean of N(loc, scale^2) restricted to z > 0.
double mean_positive(double loc, double scale) { return scale * hazard_excess(-loc / scale); }

// Standard normal draw restricted to x > a.
double sample_std_tail(double a, TnSubstream& stream) {
  if (a <= kRejectionThreshold) {
    const double tail = norm_sf(a);
    return -norm_quantile(stream.next() * tail);
  }
  // Robert (1995): translated exponential proposal with the optimal rate.
  const double rate = 0.5 * (a + std::sqrt(a * a + 4.0));
  for (;;) {
    const double x = a - std::log(stream.next()) / rate;
    const double d = x - rate;
    if (stream.next() <= std::exp(-0.5 * d * d)) return x;
  }
}

double sample_positive(double loc, double scale, TnSubstream& stream) {
  const double z = loc + scale * sample_std_tail(-loc / scale, stream);
  return z > 0.0 ? z : std::numeric_limits<double>::min();
}

}  // namespace

double tn_mean(double loc, double scale, TnSide side) {
  return side == TnSide::kPositive ? mean_positive(loc, scale) : -mean_positive(-loc, scale);
}

double tn_sample(double loc, double scale, TnSide side, TnSubstream& stream) {
  return side == TnSide::kPositive ? sample_positive(loc, scale, stream) : -sample_positive(-loc, scale, stream);
}

}  // namespace probitgp
