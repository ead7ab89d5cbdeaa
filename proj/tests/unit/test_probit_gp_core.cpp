#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "orthant.hpp"
#include "probit_quadrature.hpp"
#include "probitgp/errors.hpp"
#include "probitgp/mvn.hpp"
#include "probitgp/normal.hpp"
#include "probitgp/probit_model.hpp"

namespace {

using namespace probitgp;
using Eigen::Index;

Index ix(std::size_t v) { return static_cast<Index>(v); }

McConfig config(std::size_t samples, std::uint64_t seed = 1) {
  McConfig c;
  c.samples = samples;
  c.seed = seed;
  return c;
}

Locations single(double x) { return Locations(std::vector<std::vector<double>>{{x}}); }

KernelSpec se(double alpha) { return KernelSpec{KernelFamily::kSquaredExponential, alpha}; }

double combined_se(const ProbEstimate& x, const ProbEstimate& y) {
  return std::sqrt(x.std_error * x.std_error + y.std_error * y.std_error);
}

// Two 1-D points whose kernel value is exactly rho under alpha = 1.
std::vector<std::vector<double>> pair_with_correlation(double rho) {
  return {{0.0}, {std::sqrt(-std::log(rho))}};
}

struct RandomModel {
  oracle::SmallProbitModel spec;
  std::vector<double> x_new;

  ProbitGpModel build() const {
    Vector xi(ix(spec.xi.size()));
    for (std::size_t i = 0; i < spec.xi.size(); ++i) xi(ix(i)) = spec.xi[i];
    return ProbitGpModel(Locations(spec.x), spec.y, se(spec.alpha), xi, spec.new_mean);
  }
};

RandomModel random_model(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RandomModel m;
  m.spec.alpha = 1.0 + 9.0 * u(rng);
  for (std::size_t i = 0; i < n; ++i) {
    m.spec.x.push_back({u(rng), u(rng)});
    m.spec.y.push_back(u(rng) < 0.5 ? 0 : 1);
    m.spec.xi.push_back(u(rng) - 0.5);
  }
  m.spec.new_mean = 0.6 * (u(rng) - 0.5);
  m.x_new = {u(rng), u(rng)};
  return m;
}

TEST(ProbitGpModel, ValidatesInputs) {
  EXPECT_THROW(ProbitGpModel(Locations({{0.0}, {1.0}}), {1}, se(1.0)), ValidationError);
  EXPECT_THROW(ProbitGpModel(Locations({{0.0}, {1.0}}), {1, 2}, se(1.0)), ValidationError);
  EXPECT_THROW(ProbitGpModel(single(0.0), {1}, se(-1.0)), ValidationError);
  EXPECT_THROW(ProbitGpModel(single(0.0), {1}, se(1.0), Vector::Zero(2)), ValidationError);
  const ProbitGpModel m(Locations({{0.0}, {1.0}}), {1, 0}, se(1.0));
  EXPECT_EQ(m.signs()(0), 1.0);
  EXPECT_EQ(m.signs()(1), -1.0);
  EXPECT_EQ(m.xi(), Vector::Zero(2));
}

TEST(MarginalLikelihood, SinglePointZeroMeanIsHalf) {
  const ProbitGpModel m(single(0.3), {1}, se(1.0));
  for (const auto method : {EvidenceMethod::kDense, EvidenceMethod::kTlr}) {
    const ProbEstimate e = marginal_likelihood(m, config(100), method);
    EXPECT_EQ(e.value, 0.5);
    EXPECT_EQ(e.std_error, 0.0);
  }
}

TEST(MarginalLikelihood, SinglePointShiftedMean) {
  const ProbitGpModel m(single(0.3), {1}, se(1.0), Vector::Constant(1, 1.0));
  const ProbEstimate e = marginal_likelihood(m, config(100), EvidenceMethod::kDense);
  EXPECT_NEAR(e.value, 0.7602499389065233, 1e-6);
  EXPECT_NEAR(e.value, oracle::cdf(1.0 / std::sqrt(2.0)), 1e-12);
}

TEST(MarginalLikelihood, BivariateOrthant) {
  const ProbitGpModel m(Locations(pair_with_correlation(0.5)), {1, 0}, se(1.0));
  EXPECT_NEAR(m.omega()(0, 1), 0.5, 1e-15);
  const double ref = oracle::orthant(-0.25);
  EXPECT_NEAR(ref, 0.20979, 1e-5);
  for (const auto method : {EvidenceMethod::kDense, EvidenceMethod::kTlr}) {
    const ProbEstimate e = marginal_likelihood(m, config(20000, 3), method);
    EXPECT_NEAR(e.value, ref, 3.0 * e.std_error);
  }
}

TEST(MarginalLikelihood, MatchesQuadratureOracle) {
  std::mt19937_64 rng(17);
  for (const std::size_t n : {1U, 2U, 3U}) {
    for (int rep = 0; rep < 3; ++rep) {
      const RandomModel rm = random_model(n, rng);
      const ProbitGpModel m = rm.build();
      const double ref = oracle::marginal_likelihood(rm.spec);
      for (const auto method : {EvidenceMethod::kDense, EvidenceMethod::kTlr}) {
        const ProbEstimate e = marginal_likelihood(m, config(20000, 4), method);
        EXPECT_NEAR(e.value, ref, std::max(3.0 * e.std_error, 1e-12)) << n << " " << rep;
        EXPECT_GT(e.value, 0.0);
        EXPECT_LT(e.value, 1.0);
      }
    }
  }
}

TEST(MarginalLikelihood, DecreasesOnNestedData) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::vector<double>> pts;
  std::vector<int> y;
  for (int i = 0; i < 24; ++i) {
    pts.push_back({u(rng), u(rng)});
    y.push_back(u(rng) < 0.5 ? 0 : 1);
  }
  ProbEstimate prev;
  prev.value = 1.0;
  for (const std::size_t n : {6U, 12U, 24U}) {
    const ProbitGpModel m(Locations(std::vector<std::vector<double>>(pts.begin(), pts.begin() + long(n))),
                          std::vector<int>(y.begin(), y.begin() + long(n)), se(5.0));
    const ProbEstimate e = marginal_likelihood(m, config(20000, n), EvidenceMethod::kDense);
    EXPECT_LT(e.value - prev.value, 3.0 * combined_se(e, prev)) << n;
    prev = e;
  }
}

TEST(EvidenceProblem, Structure) {
  const ProbitGpModel m(Locations(pair_with_correlation(0.5)), {1, 0}, se(1.0), Vector::Constant(2, 0.7));
  const MvnProblem p = evidence_problem(m);
  EXPECT_TRUE(std::isinf(p.a(0)) && p.a(0) < 0.0);
  EXPECT_EQ(p.b(0), 0.7);
  EXPECT_EQ(p.b(1), -0.7);
  EXPECT_NEAR(p.sigma(0, 0), 2.0, 1e-15);
  EXPECT_NEAR(p.sigma(0, 1), -0.5, 1e-15);
}

TEST(ExtendProblem, StructureAndFarPoint) {
  std::mt19937_64 rng(3);
  const RandomModel rm = random_model(4, rng);
  const ProbitGpModel m = rm.build();
  const ExtendedProblem e = extend_problem(m, rm.x_new);
  EXPECT_EQ(e.d_star.size(), 5);
  EXPECT_EQ(e.xi_star.size(), 5);
  EXPECT_EQ(e.omega_star.size(), 5U);
  EXPECT_EQ(e.d_star(4), 1.0);
  EXPECT_EQ(e.xi_star(4), rm.spec.new_mean);
  for (Index i = 0; i < 4; ++i) {
    EXPECT_EQ(e.d_star(i), m.signs()(i));
    EXPECT_EQ(e.xi_star(i), m.xi()(i));
    EXPECT_EQ(e.omega_star(4, std::size_t(i)), e.omega_star(std::size_t(i), 4));
    EXPECT_NEAR(e.omega_star(4, std::size_t(i)), oracle::se_kernel(rm.spec.alpha, rm.x_new, rm.spec.x[std::size_t(i)]),
                1e-15);
  }
  EXPECT_EQ(e.omega_star(4, 4), 1.0);

  const std::vector<double> far = {5.0, 5.0};  // alpha * dist^2 > 50
  const ExtendedProblem f = extend_problem(m, far);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(f.omega_star(4, i), 0.0, 1e-10);
}

TEST(ExtendProblem, RejectsTrainingLocationAndWrongDimension) {
  const ProbitGpModel m(Locations({{0.1, 0.2}, {0.4, 0.5}}), {1, 0}, se(1.0));
  EXPECT_THROW(extend_problem(m, std::vector<double>{0.4, 0.5}), ValidationError);
  EXPECT_THROW(extend_problem(m, std::vector<double>{0.4}), ValidationError);
  EXPECT_THROW(predict_ratio(m, std::vector<double>{0.1, 0.2}, config(100)), ValidationError);
}

TEST(PredictRatio, SinglePointOrthantRatio) {
  // K(x_new, x_1) = 0.8; the ratio is P(Z1 < 0, Z2 < 0) / P(Z1 < 0) with corr 0.8 / 2.
  const ProbitGpModel m(single(0.0), {1}, se(1.0));
  const std::vector<double> x_new = {std::sqrt(-std::log(0.8))};
  const ProbEstimate e = predict_ratio(m, x_new, config(20000, 9));
  const double ref = oracle::orthant(0.4) / 0.5;
  EXPECT_NEAR(ref, 0.63098, 1e-5);
  EXPECT_NEAR(e.value, ref, 3.0 * e.std_error);
}

TEST(PredictRatio, IndependentPointGivesPriorPredictive) {
  std::mt19937_64 rng(8);
  const RandomModel rm = random_model(5, rng);
  Vector xi(5);
  for (Index i = 0; i < 5; ++i) xi(i) = rm.spec.xi[std::size_t(i)];
  const std::vector<double> far = {40.0, 40.0};
  for (const double mu0 : {0.0, 0.8, -1.3}) {
    const ProbitGpModel m(Locations(rm.spec.x), rm.spec.y, se(rm.spec.alpha), xi, mu0);
    const ProbEstimate e = predict_ratio(m, far, config(2000, 1));
    EXPECT_NEAR(e.value, oracle::cdf(mu0 / std::sqrt(2.0)), std::max(3.0 * e.std_error, 1e-12)) << mu0;
  }
}

TEST(PredictRatio, ComplementIdentity) {
  std::mt19937_64 rng(12);
  const RandomModel rm = random_model(6, rng);
  const ProbitGpModel m = rm.build();
  std::vector<int> flipped_y;
  for (const int v : rm.spec.y) flipped_y.push_back(1 - v);
  const ProbitGpModel flipped(Locations(rm.spec.x), flipped_y, se(rm.spec.alpha), -m.xi(), 0.0);
  const ProbitGpModel zero_mean(Locations(rm.spec.x), rm.spec.y, se(rm.spec.alpha), m.xi(), 0.0);
  const ProbEstimate p = predict_ratio(zero_mean, rm.x_new, config(20000, 2));
  const ProbEstimate q = predict_ratio(flipped, rm.x_new, config(20000, 3));
  EXPECT_NEAR(p.value + q.value, 1.0, 3.0 * combined_se(p, q));
}

TEST(PredictRatio, MatchesBruteForceQuadrature) {
  std::mt19937_64 rng(2024);
  for (const std::size_t n : {1U, 2U, 3U}) {
    for (int rep = 0; rep < 3; ++rep) {
      const RandomModel rm = random_model(n, rng);
      const ProbitGpModel m = rm.build();
      const double ref = oracle::predictive_probability(rm.spec, rm.x_new);
      const ProbEstimate e = predict_ratio(m, rm.x_new, config(20000, 6));
      EXPECT_NEAR(e.value, ref, std::max(1e-3, 3.0 * e.std_error)) << n << " " << rep;
    }
  }
}

TEST(PredictRatio, StrictlyInsideUnitInterval) {
  const ProbitGpModel m(Locations({{0.0}, {0.05}}), {1, 1}, se(1.0), Vector::Constant(2, 6.0), 40.0);
  const ProbEstimate hi = predict_ratio(m, std::vector<double>{0.02}, config(500));
  EXPECT_LT(hi.value, 1.0);
  EXPECT_GT(hi.value, 0.0);
  const ProbitGpModel low(Locations({{0.0}, {0.05}}), {0, 0}, se(1.0), Vector::Constant(2, -6.0), -40.0);
  const ProbEstimate lo = predict_ratio(low, std::vector<double>{0.02}, config(500));
  EXPECT_GT(lo.value, 0.0);
  EXPECT_LT(lo.value, 1.0);
}

TEST(PredictRatio, DenominatorSharesSamplesWithEvidence) {
  std::mt19937_64 rng(31);
  const RandomModel rm = random_model(30, rng);
  const ProbitGpModel m = rm.build();
  const McConfig cfg = config(3000, 77);
  const TlrSettings tlr{6, 1e-4};
  const RatioPredictor pred(m, cfg, tlr);
  const RatioEstimates both = pred.predict_with_evidence(rm.x_new);
  const ProbEstimate ml = marginal_likelihood(m, cfg, EvidenceMethod::kTlr, tlr);
  EXPECT_EQ(both.denominator.value, ml.value);
  EXPECT_EQ(both.denominator.std_error, ml.std_error);
  EXPECT_EQ(both.denominator.log_value, estimate_reordered(pred.reorder(), cfg).log_value);
  EXPECT_EQ(both.ratios.at(0).value, pred.predict(rm.x_new).value);
}

TEST(PredictRatio, DeterministicPerSeed) {
  std::mt19937_64 rng(41);
  const RandomModel rm = random_model(10, rng);
  const ProbitGpModel m = rm.build();
  const ProbEstimate a = predict_ratio(m, rm.x_new, config(1000, 5));
  const ProbEstimate b = predict_ratio(m, rm.x_new, config(1000, 5));
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.std_error, b.std_error);
}

TEST(ConditionalGp, ZeroCrossCovariance) {
  const ProbitGpModel m(Locations({{0.0}, {0.3}}), {1, 0}, se(1.0), Vector::Constant(2, 0.4), 0.25);
  const ConditionalGp c = conditional_gp_params(m, std::vector<double>{100.0});
  EXPECT_EQ(c.h, Vector::Zero(2));
  EXPECT_EQ(c.mu, 0.25);
  EXPECT_EQ(c.sigma2, 1.0);
}

TEST(ConditionalGp, ScalarConditioning) {
  const double rho = 0.6;
  const double xi1 = -0.7;
  const ProbitGpModel m(single(0.0), {1}, se(1.0), Vector::Constant(1, xi1));
  const ConditionalGp c = conditional_gp_params(m, std::vector<double>{std::sqrt(-std::log(rho))});
  EXPECT_NEAR(c.h(0), rho, 1e-14);
  EXPECT_NEAR(c.mu, -rho * xi1, 1e-14);
  EXPECT_NEAR(c.sigma2, 1.0 - rho * rho, 1e-14);
}

TEST(ConditionalGp, VarianceNonNegative) {
  std::mt19937_64 rng(51);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 100; ++rep) {
    const RandomModel rm = random_model(2 + std::size_t(rep % 12), rng);
    const ProbitGpModel m = rm.build();
    // Points very close to a training location push the Schur complement toward round-off.
    std::vector<double> x = rm.x_new;
    if (rep % 3 == 0) x = {rm.spec.x[0][0] + 1e-7 * u(rng), rm.spec.x[0][1]};
    const ConditionalGp c = conditional_gp_params(m, x);
    EXPECT_GE(c.sigma2, 0.0);
    EXPECT_LE(c.sigma2, 1.0 + 1e-12);
  }
}

TEST(LatentParams, IdentityPrior) {
  const ProbitGpModel m(Locations({{0.0}, {50.0}, {100.0}}), {1, 0, 1}, se(1.0), Vector::LinSpaced(3, -1.0, 1.0));
  const LatentParams p = latent_params(m);
  EXPECT_LT((p.sigma_x.matrix() - 0.5 * Matrix::Identity(3, 3)).norm(), 1e-14);
  EXPECT_LT((p.mu_x - 0.5 * m.xi()).norm(), 1e-14);
  EXPECT_EQ(p.sigma_z.matrix(), Matrix(2.0 * Matrix::Identity(3, 3)));
}

TEST(LatentParams, ScalarCase) {
  // A single location always has omega = 1.
  const ProbitGpModel m(single(0.0), {0}, se(3.0), Vector::Constant(1, 0.9));
  const LatentParams p = latent_params(m);
  EXPECT_NEAR(p.sigma_x(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(p.mu_x(0), 0.45, 1e-15);
  EXPECT_EQ(p.sigma_z(0, 0), 2.0);
}

TEST(LatentParams, DefiningIdentity) {
  std::mt19937_64 rng(61);
  const RandomModel rm = random_model(8, rng);
  const ProbitGpModel m = rm.build();
  const LatentParams p = latent_params(m);
  const Matrix& om = m.omega().matrix();
  const Matrix om_inv = om.ldlt().solve(Matrix::Identity(8, 8));
  EXPECT_LT((p.sigma_x.matrix() * (om_inv + Matrix::Identity(8, 8)) - Matrix::Identity(8, 8)).cwiseAbs().maxCoeff(),
            1e-8);
  EXPECT_LT((p.mu_x - p.sigma_x.matrix() * om_inv * m.xi()).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_EQ(p.sigma_z.matrix(), Matrix(om + Matrix::Identity(8, 8)));
  EXPECT_GT(Eigen::SelfAdjointEigenSolver<Matrix>(p.sigma_x.matrix()).eigenvalues().minCoeff(), 0.0);
}

TEST(PredictiveFunctional, EqualsConditionalGpComposition) {
  std::mt19937_64 rng(71);
  std::normal_distribution<double> z;
  const RandomModel rm = random_model(7, rng);
  const ProbitGpModel m = rm.build();
  const PredictiveFunctional f = predictive_functional(m, rm.x_new);
  const ConditionalGp c = conditional_gp_params(m, rm.x_new);
  const LatentParams lp = latent_params(m);
  const Matrix& sx = lp.sigma_x.matrix();
  for (int rep = 0; rep < 20; ++rep) {
    Vector zz(7);
    for (Index i = 0; i < 7; ++i) zz(i) = m.signs()(i) * std::abs(z(rng)) + m.xi()(i);
    // f(X) | z ~ N(mu_x + sigma_x z, sigma_x); then f_new | f(X) ~ N(mu + H f(X), sigma2).
    const Vector mean_f = lp.mu_x + sx * zz;
    const double mean = c.mu + c.h.dot(mean_f);
    const double var = c.sigma2 + c.h.dot(sx * c.h);
    EXPECT_NEAR(f(zz), norm_cdf(mean / std::sqrt(1.0 + var)), 1e-10);
  }
}

TEST(SunParams, IdentityPrior) {
  const ProbitGpModel m(Locations({{0.0}, {50.0}, {100.0}}), {1, 0, 0}, se(1.0));
  const SunParams p = sun_params(m);
  for (Index i = 0; i < 3; ++i) {
    EXPECT_NEAR(p.s(i), std::sqrt(2.0), 1e-15);
    EXPECT_EQ(p.w(i), 1.0);
    EXPECT_EQ(p.gamma(i), 0.0);
  }
  EXPECT_LT((p.big_gamma.matrix() - Matrix::Identity(3, 3)).norm(), 1e-15);
  Matrix expect_delta = Matrix::Zero(3, 3);
  for (Index i = 0; i < 3; ++i) expect_delta(i, i) = m.signs()(i) / std::sqrt(2.0);
  EXPECT_LT((p.delta - expect_delta).norm(), 1e-15);
}

TEST(SunParams, UnitDiagonalGamma) {
  std::mt19937_64 rng(81);
  for (int rep = 0; rep < 100; ++rep) {
    const RandomModel rm = random_model(1 + std::size_t(rep % 9), rng);
    const SunParams p = sun_params(rm.build());
    for (Index i = 0; i < p.big_gamma.matrix().rows(); ++i) EXPECT_NEAR(p.big_gamma(std::size_t(i), std::size_t(i)), 1.0, 1e-15);
  }
}

TEST(SunParams, NormalizingConstantIsEvidence) {
  std::mt19937_64 rng(91);
  const RandomModel rm = random_model(12, rng);
  const ProbitGpModel m = rm.build();
  const SunParams p = sun_params(m);
  const MvnProblem sun(Vector::Constant(12, -std::numeric_limits<double>::infinity()), p.gamma, p.big_gamma);
  const ProbEstimate x = estimate_reordered(univariate_reorder(sun), config(20000, 1));
  const ProbEstimate y = marginal_likelihood(m, config(20000, 2), EvidenceMethod::kDense);
  EXPECT_NEAR(x.value, y.value, 3.0 * combined_se(x, y));
}

}  // namespace
