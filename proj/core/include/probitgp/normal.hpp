#pragma once

#include <cmath>
#include <numbers>

namespace probitgp {

/// Standard normal density.
inline double norm_pdf(double x) {
  return std::exp(-0.5 * x * x) * (0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
}

/// Standard normal CDF, accurate to full relative precision in the lower tail.
inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Upper-tail probability 1 - norm_cdf(x), without cancellation for large x.
inline double norm_sf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

/// Standard normal quantile (Wichura, AS 241 / PPND16), about 1e-16 relative accuracy.
/// Returns -inf / +inf at p = 0 / 1 and NaN outside [0, 1].
double norm_quantile(double p);

/// Mass of the standard normal on [lo, hi], computed on the tail side that avoids cancellation.
double norm_interval_mass(double lo, double hi);

/// Mean of the standard normal truncated to [lo, hi]. Falls back to the nearer finite limit
/// when the interval mass underflows.
double truncated_std_normal_mean(double lo, double hi);

/// phi(a) / (1 - Phi(a)) - a: the mean of a standard normal truncated to (a, inf), minus a.
/// Above a = 6 it switches to the Laplace continued fraction of the Mills ratio, which avoids
/// both the underflow of the direct ratio and the cancellation in the subtraction.
double hazard_excess(double a);

}  // namespace probitgp
