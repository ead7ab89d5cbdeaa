#include <cmath>
#include <limits>
#include <set>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include "probitgp/normal.hpp"
#include "probitgp/parallel.hpp"
#include "probitgp/philox.hpp"

namespace {

using namespace probitgp;

TEST(Philox, KnownAnswerZero) {
  const auto out = Philox4x32::generate({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(out[0], 0x6627e8d5U);
  EXPECT_EQ(out[1], 0xe169c58dU);
  EXPECT_EQ(out[2], 0xbc57ac4cU);
  EXPECT_EQ(out[3], 0x9b00dbd8U);
}

TEST(Philox, KnownAnswerAllOnes) {
  const std::uint32_t f = 0xffffffffU;
  const auto out = Philox4x32::generate({f, f, f, f}, {f, f});
  EXPECT_EQ(out[0], 0x408f276dU);
  EXPECT_EQ(out[1], 0x41c83b0eU);
  EXPECT_EQ(out[2], 0xa20bc7c6U);
  EXPECT_EQ(out[3], 0x6d5451fdU);
}

TEST(Philox, KnownAnswerPiDigits) {
  const auto out = Philox4x32::generate({0x243f6a88U, 0x85a308d3U, 0x13198a2eU, 0x03707344U},
                                        {0xa4093822U, 0x299f31d0U});
  EXPECT_EQ(out[0], 0xd16cfe09U);
  EXPECT_EQ(out[1], 0x94fdccebU);
  EXPECT_EQ(out[2], 0x5001e420U);
  EXPECT_EQ(out[3], 0x24126ea1U);
}

TEST(UniformStream, OpenIntervalAndExactReflection) {
  EXPECT_GT(to_open_unit(0, 0), 0.0);
  EXPECT_LT(to_open_unit(0xffffffffU, 0xffffffffU), 1.0);
  const UniformStream s(7, StreamTag::kSov);
  for (std::uint64_t r = 0; r < 1000; ++r) {
    const double u = s(r, r % 17);
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    ASSERT_EQ(1.0 - (1.0 - u), u);
  }
}

TEST(UniformStream, KeyedAndPairConsistent) {
  const UniformStream a(42, StreamTag::kSov);
  const UniformStream b(42, StreamTag::kSov);
  const UniformStream other_tag(42, StreamTag::kVariational);
  const UniformStream other_seed(43, StreamTag::kSov);
  for (std::uint64_t r = 0; r < 50; ++r) {
    for (std::uint64_t k = 0; k < 10; ++k) {
      const auto p = a.pair(r, k);
      EXPECT_EQ(p[0], b(r, 2 * k));
      EXPECT_EQ(p[1], b(r, 2 * k + 1));
      EXPECT_NE(p[0], other_tag(r, 2 * k));
      EXPECT_NE(p[0], other_seed(r, 2 * k));
    }
  }
}

TEST(UniformStream, MomentsLookUniform) {
  const UniformStream s(1, StreamTag::kSimulation);
  const int count = 200000;
  double sum = 0.0;
  double sum2 = 0.0;
  for (int r = 0; r < count; ++r) {
    const double u = s(static_cast<std::uint64_t>(r), 3);
    sum += u;
    sum2 += u * u;
  }
  const double mean = sum / count;
  const double var = sum2 / count - mean * mean;
  EXPECT_NEAR(mean, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / count));
  EXPECT_NEAR(var, 1.0 / 12.0, 1e-3);
}

TEST(DeriveSeed, DistinctPerIndex) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(derive_seed(5, i));
  EXPECT_EQ(seen.size(), 1000U);
  EXPECT_EQ(derive_seed(5, 3), derive_seed(5, 3));
}

TEST(NormalQuantile, MatchesBoostAcrossRange) {
  const boost::math::normal_distribution<double> nd;
  std::vector<double> ps = {1e-300, 1e-200, 1e-100, 1e-50, 1e-20, 1e-16, 1e-10, 1e-5, 1e-3, 0.01, 0.02425,
                            0.075, 0.2, 0.3, 0.425, 0.5, 0.575, 0.7, 0.9, 0.975, 0.999, 1 - 1e-10, 1 - 1e-16};
  for (int k = 1; k < 1000; ++k) ps.push_back(k / 1000.0);
  for (const double p : ps) {
    const double ref = boost::math::quantile(nd, p);
    EXPECT_NEAR(norm_quantile(p), ref, 1e-14 * std::max(1.0, std::abs(ref))) << "p=" << p;
  }
}

TEST(NormalQuantile, EdgeValues) {
  EXPECT_EQ(norm_quantile(0.0), -std::numeric_limits<double>::infinity());
  EXPECT_EQ(norm_quantile(1.0), std::numeric_limits<double>::infinity());
  EXPECT_TRUE(std::isnan(norm_quantile(-0.1)));
  EXPECT_TRUE(std::isnan(norm_quantile(std::numeric_limits<double>::quiet_NaN())));
  EXPECT_EQ(norm_quantile(0.5), 0.0);
}

TEST(NormalCdf, TailsAndSymmetry) {
  const boost::math::normal_distribution<double> nd;
  for (const double x : {-30.0, -8.0, -1.0, 0.0, 1.5, 8.0}) {
    EXPECT_NEAR(norm_cdf(x) / boost::math::cdf(nd, x), 1.0, 1e-13) << x;
    EXPECT_NEAR(norm_sf(x) / boost::math::cdf(boost::math::complement(nd, x)), 1.0, 1e-13) << x;
  }
  EXPECT_DOUBLE_EQ(norm_cdf(1.96), 1.0 - norm_sf(1.96));
  EXPECT_NEAR(norm_pdf(0.0), 0.3989422804014327, 1e-16);
}

TEST(NormalIntervalMass, UpperTailKeepsPrecision) {
  EXPECT_NEAR(norm_interval_mass(-1.0, 1.0), 0.6826894921370859, 1e-15);
  const double m = norm_interval_mass(10.0, 11.0);
  EXPECT_NEAR(m / (norm_sf(10.0) - norm_sf(11.0)), 1.0, 1e-14);
  EXPECT_GT(m, 0.0);
  EXPECT_EQ(norm_interval_mass(-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()), 1.0);
}

// Reference: mean of N(0,1) on (a, inf) minus a, by quadrature of the tail integral.
double hazard_reference(double a) {
  // Density ratio phi(a + t) / phi(a), which stays representable for large a.
  auto tail = [a](double t) { return std::exp(-a * t - 0.5 * t * t); };
  auto first = [a](double t) { return t * std::exp(-a * t - 0.5 * t * t); };
  const double span = 60.0 / std::max(1.0, a);
  const double q = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(tail, 0.0, span, 15, 1e-14);
  const double m = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(first, 0.0, span, 15, 1e-14);
  return m / q;
}

TEST(HazardExcess, MatchesQuadratureIncludingDeepTail) {
  for (const double a : {-5.0, -1.0, 0.0, 1.0, 3.0, 5.9, 6.1, 8.0, 15.0, 40.0}) {
    const double ref = hazard_reference(a);
    EXPECT_NEAR(hazard_excess(a), ref, 1e-10 * std::max(1.0, ref)) << "a=" << a;
  }
  // Continuity at the switch point between the direct formula and the continued fraction.
  EXPECT_NEAR(hazard_excess(6.0 - 1e-12), hazard_excess(6.0 + 1e-12), 1e-10);
}

TEST(TruncatedStdNormalMean, KnownValues) {
  EXPECT_NEAR(truncated_std_normal_mean(0.0, std::numeric_limits<double>::infinity()), std::sqrt(2.0 / M_PI), 1e-15);
  EXPECT_NEAR(truncated_std_normal_mean(-std::numeric_limits<double>::infinity(), 0.0), -std::sqrt(2.0 / M_PI), 1e-15);
  EXPECT_NEAR(truncated_std_normal_mean(-1.0, 1.0), 0.0, 1e-16);
  const double m = truncated_std_normal_mean(50.0, std::numeric_limits<double>::infinity());
  EXPECT_GT(m, 50.0);
  EXPECT_LT(m, 50.1);
  const double neg = truncated_std_normal_mean(-std::numeric_limits<double>::infinity(), -50.0);
  EXPECT_LT(neg, -50.0);
  EXPECT_GT(neg, -50.1);
}

TEST(Parallel, CoversEveryIndexOnce) {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; });
  for (const int h : hits) EXPECT_EQ(h, 1);
  EXPECT_GE(worker_count(), 1U);
}

TEST(Parallel, PropagatesExceptions) {
  EXPECT_THROW(parallel_for(10, [](std::size_t i) {
                 if (i == 7) throw std::runtime_error("boom");
               }),
               std::runtime_error);
}

}  // namespace
