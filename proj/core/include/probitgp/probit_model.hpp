#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Cholesky>

#include "probitgp/dense.hpp"
#include "probitgp/kernel.hpp"
#include "probitgp/mvn.hpp"
#include "probitgp/types.hpp"

namespace probitgp {

/// Probit regression with a Gaussian-process prior: y_i ~ Bernoulli(Phi(f(x_i))),
/// f ~ GP(m, K). Training means xi are per location; predictions use a constant mean m(x_new).
class ProbitGpModel {
 public:
  /// Zero prior mean everywhere.
  ProbitGpModel(Locations locs, std::vector<int> y, KernelSpec kernel);
  /// Per-location training mean xi and a constant prior mean for new locations.
  ProbitGpModel(Locations locs, std::vector<int> y, KernelSpec kernel, Vector xi, double new_mean = 0.0);

  std::size_t size() const { return locs_.size(); }
  const Locations& locs() const { return locs_; }
  const std::vector<int>& y() const { return y_; }
  const KernelSpec& kernel() const { return kernel_; }
  const Vector& xi() const { return xi_; }
  const DenseSpd& omega() const { return omega_; }
  /// Diagonal of D: 2 y_i - 1.
  const Vector& signs() const { return signs_; }
  double new_mean() const { return new_mean_; }

  /// Cached factorizations, computed on first use. Thread-safe.
  const CholeskyFactor& omega_factor() const;
  /// Cholesky of I + Omega (always well conditioned: eigenvalues >= 1).
  const Eigen::LLT<Matrix>& latent_factor() const;

  /// Throws ValidationError when x has the wrong dimension or equals a training location.
  void check_new_location(std::span<const double> x) const;

 private:
  struct Cache;

  Locations locs_;
  std::vector<int> y_;
  KernelSpec kernel_;
  Vector xi_;
  DenseSpd omega_;
  Vector signs_;
  double new_mean_ = 0.0;
  std::shared_ptr<Cache> cache_;
};

/// The model with one extra location appended, used to express the predictive probability as a
/// ratio of orthant probabilities.
struct ExtendedProblem {
  Vector d_star;   // signs, last entry +1
  Vector xi_star;  // training means followed by m(x_new)
  DenseSpd omega_star;
};

ExtendedProblem extend_problem(const ProbitGpModel& model, std::span<const double> x_new);

/// Conditional law of f(x_new) given f(X): N(mu + H f(X), sigma2).
struct ConditionalGp {
  double mu = 0.0;
  Vector h;
  double sigma2 = 0.0;
};

ConditionalGp conditional_gp_params(const ProbitGpModel& model, std::span<const double> x_new);

/// Gaussian-times-truncated-normal factorization of the posterior:
/// f(X) | z ~ N(mu_x + sigma_x z, sigma_x), z ~ N(xi, sigma_z) restricted to sign(z_i) = 2 y_i - 1.
struct LatentParams {
  DenseSpd sigma_x;
  Vector mu_x;
  DenseSpd sigma_z;
};

/// Evaluated through the Cholesky of I + Omega as sigma_x = I - (I + Omega)^{-1} and
/// mu_x = (I + Omega)^{-1} xi, which never inverts Omega.
LatentParams latent_params(const ProbitGpModel& model);

/// Unified skew-normal posterior parameters.
struct SunParams {
  Vector xi;
  DenseSpd omega;
  Matrix delta;   // omega_bar * w * D^T * s^{-1}
  Vector gamma;   // s^{-1} D xi
  DenseSpd big_gamma;  // s^{-1} (D Omega D^T + I) s^{-1}, unit diagonal
  Vector s;       // diagonal of s
  Vector w;       // diagonal of w = sqrt(diag(Omega))
};

SunParams sun_params(const ProbitGpModel& model);

/// The evidence p(y) = Phi_n(D xi; I + D Omega D^T) as an orthant problem (a = -inf, b = D xi).
MvnProblem evidence_problem(const ProbitGpModel& model);

enum class EvidenceMethod { kDense, kTlr };

struct TlrSettings {
  std::size_t block_size = 0;  // 0 selects ceil(sqrt(n))
  double tol = 1e-4;

  std::size_t resolved_block_size(std::size_t n) const;
};

/// Monte Carlo estimate of p(y). The dense path reorders univariately; the tile-low-rank path
/// uses block reordering.
ProbEstimate marginal_likelihood(const ProbitGpModel& model, const McConfig& cfg, EvidenceMethod method,
                                 const TlrSettings& tlr = {});

/// Shared-sample ratio predictor. The block reorder and tile-low-rank factor of the evidence
/// problem are computed once at construction; each prediction extends the factor by one row and
/// reruns the sample loop with the configured seed.
class RatioPredictor {
 public:
  RatioPredictor(const ProbitGpModel& model, const McConfig& cfg, const TlrSettings& tlr = {});

  ProbEstimate predict(std::span<const double> x_new) const;
  /// Denominator estimate and the ratio for x_new from one pass over the samples.
  RatioEstimates predict_with_evidence(std::span<const double> x_new) const;

  const ReorderResult& reorder() const { return reorder_; }
  /// Factor row and limits appended for x_new, in reordered variable order.
  ExtensionRow extension_row(std::span<const double> x_new) const;

 private:
  const ProbitGpModel& model_;
  McConfig cfg_;
  ReorderResult reorder_;
};

ProbEstimate predict_ratio(const ProbitGpModel& model, std::span<const double> x_new, const McConfig& cfg,
                           const TlrSettings& tlr = {});

/// The integrand of the latent-variable predictive formula for one location:
/// Phi((m(x_new) + g^T (z - xi)) / sqrt(1 + K(x_new, x_new) - k^T g)) with g = (I + Omega)^{-1} k.
/// Algebraically equal to the conditional-GP form built from ConditionalGp and LatentParams.
struct PredictiveFunctional {
  Vector g;
  double offset = 0.0;  // m(x_new) - g^T xi
  double scale = 1.0;   // sqrt(1 + K(x_new, x_new) - k^T g)

  double operator()(const Vector& z) const;
};

PredictiveFunctional predictive_functional(const ProbitGpModel& model, std::span<const double> x_new);

}  // namespace probitgp
