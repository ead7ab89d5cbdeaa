#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "probitgp/mvn.hpp"
#include "probitgp/probit_model.hpp"
#include "probitgp/truncated_normal.hpp"

namespace probitgp {

/// Mean-field approximation of the latent truncated normal p(z | y): one independent
/// univariate truncated normal per coordinate.
struct TnFactorSet {
  std::vector<TnFactor> factors;
  std::size_t iterations = 0;  // sweeps needed to reach the reported state
  bool converged = false;
  double final_delta = 0.0;    // max change in factor means over the last sweep
};

struct CaviOptions {
  double tol = 1e-6;
  std::size_t max_iter = 1000;

  void validate() const;
};

/// Coordinate ascent over the factors in ascending order, starting from zero means. Stops once a
/// full sweep changes no factor mean by tol or more; that confirming sweep is not counted in
/// iterations, so a problem that is exact after one update reports one iteration.
TnFactorSet cavi_fit(const ProbitGpModel& model, const CaviOptions& opts = {});

/// Monte Carlo estimate of the predictive probability under the mean-field factors. The factor
/// draws are keyed by (seed, sample, coordinate) and shared by every location passed to one
/// call, so predicting a batch costs one pass over the samples.
class VbPredictor {
 public:
  VbPredictor(const ProbitGpModel& model, TnFactorSet factors, const McConfig& cfg);

  ProbEstimate predict(std::span<const double> x_new) const;
  std::vector<ProbEstimate> predict_many(const std::vector<std::vector<double>>& points) const;

  const TnFactorSet& factors() const { return factors_; }

 private:
  const ProbitGpModel& model_;
  TnFactorSet factors_;
  McConfig cfg_;
};

ProbEstimate predict_vb(const ProbitGpModel& model, const TnFactorSet& factors, std::span<const double> x_new,
                        const McConfig& cfg);

struct ExactTnEstimate {
  ProbEstimate estimate;
  double acceptance_rate = 0.0;
  std::size_t proposals = 0;
};

/// Minimum acceptance rate of the exact sampler; checked after every kRejectionCheckInterval
/// proposals.
inline constexpr double kMinAcceptanceRate = 1e-6;
inline constexpr std::size_t kRejectionCheckInterval = 1'000'000;

/// Reference estimate of the same predictive functional with exact joint draws of z | y,
/// obtained by rejection from the unconstrained N(xi, I + Omega). Intended for small n.
ExactTnEstimate exact_tn_predict(const ProbitGpModel& model, std::span<const double> x_new, const McConfig& cfg);

}  // namespace probitgp
