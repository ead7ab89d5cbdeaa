#pragma once

#include <cstdint>

#include "probitgp/philox.hpp"

namespace probitgp {

enum class TnSide { kPositive, kNegative };

/// N(loc, scale^2) restricted to z > 0 (positive side) or z < 0 (negative side).
struct TnFactor {
  double loc = 0.0;
  double scale = 1.0;
  TnSide side = TnSide::kPositive;
};

/// Mean of the truncated normal. Stable in both tails.
double tn_mean(double loc, double scale, TnSide side);

/// Uniforms for one draw, keyed by (stream, sample r, coordinate j). A draw that needs several
/// uniforms (rejection) takes them in order from the same key, so the result depends only on
/// the key.
class TnSubstream {
 public:
  TnSubstream(const UniformStream& stream, std::uint64_t r, std::uint64_t j) : stream_(stream), r_(r), j_(j) {}

  double next() { return stream_(r_, (j_ << 8) | (count_++ & 0xFFU)); }

 private:
  const UniformStream& stream_;
  std::uint64_t r_;
  std::uint64_t j_;
  std::uint64_t count_ = 0;
};

/// Exact draw from the truncated normal: inverse CDF for moderate truncation points and
/// exponential rejection beyond five standard deviations into the tail. Always strictly on the
/// requested side of zero.
double tn_sample(double loc, double scale, TnSide side, TnSubstream& stream);

}  // namespace probitgp
