#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <variant>
#include <vector>

#include "probitgp/dense.hpp"
#include "probitgp/tlr.hpp"
#include "probitgp/types.hpp"

namespace probitgp {

/// P(a <= X <= b) for X ~ N(0, sigma). Limits may be infinite; a_i < b_i is required.
struct MvnProblem {
  Vector a;
  Vector b;
  DenseSpd sigma;

  MvnProblem(Vector lower, Vector upper, DenseSpd cov);
  std::size_t size() const { return static_cast<std::size_t>(a.size()); }
};

struct McConfig {
  std::size_t samples = 20000;  // R >= 2 (even when antithetic)
  std::uint64_t seed = 0;
  bool antithetic = false;

  void validate() const;
};

/// Monte Carlo probability estimate. For products that underflow double precision, value is 0
/// but log_value still carries log(value) exactly as estimated.
struct ProbEstimate {
  double value = 0.0;
  double std_error = 0.0;
  double log_value = 0.0;
  std::size_t samples = 0;
};

/// A variable order together with the Cholesky factor of the reordered covariance.
/// permutation[p] is the original index of the variable placed at position p.
struct ReorderResult {
  std::vector<std::size_t> permutation;
  std::variant<Matrix, TlrMatrix> factor;
  Vector a;  // limits in the new order
  Vector b;

  bool is_tlr() const { return std::holds_alternative<TlrMatrix>(factor); }
  const Matrix& dense() const { return std::get<Matrix>(factor); }
  const TlrMatrix& tlr() const { return std::get<TlrMatrix>(factor); }
};

/// Separation-of-variables estimate of P(a <= X <= b) with X ~ N(0, L L^T), variables taken in
/// the order of the limits. Uniforms are keyed by (seed, sample, coordinate), so the result is
/// independent of the worker count.
ProbEstimate sov_estimate(const MvnProblem& p, const Matrix& lower, const McConfig& cfg);

/// Greedy variable ordering: at each step the variable with the smallest conditional interval
/// mass goes next, with earlier variables replaced by their truncated-normal conditional means.
/// Produces the Cholesky factor of the reordered covariance as it goes.
ReorderResult univariate_reorder(const MvnProblem& p);

/// Number of samples used for each block's crude marginal estimate inside block_reorder.
inline constexpr std::size_t kCrudeBlockSamples = 64;

/// Orders consecutive blocks of block_size variables by ascending crude marginal probability
/// estimate, reorders variables within each block univariately, and factors the reordered
/// covariance into tile-low-rank form.
ReorderResult block_reorder(const MvnProblem& p, std::size_t block_size, double tol, const McConfig& cfg);

/// SOV estimate through a tile-low-rank factor produced by block_reorder.
ProbEstimate tlr_sov_estimate(const MvnProblem& p, const ReorderResult& r, const McConfig& cfg);

/// Estimate for a reordered problem of either kind.
ProbEstimate estimate_reordered(const ReorderResult& r, const McConfig& cfg);

/// One appended integration variable for ratio estimation: the factor row of the extended
/// covariance (coefficients on the existing variables, in factor order, and the diagonal entry)
/// and the new variable's limits.
struct ExtensionRow {
  Vector coeffs;
  double diagonal = 1.0;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
};

struct RatioEstimates {
  ProbEstimate denominator;            // the n-dimensional probability
  std::vector<ProbEstimate> ratios;    // one (n+1)/(n) probability ratio per extension row
};

/// Shared-sample ratio estimator: every extension's numerator reuses the denominator's samples
/// and the stored conditional draws. Ratios are clamped into the open interval (0, 1).
/// Throws NumericalError when the denominator estimate is zero.
RatioEstimates sov_ratio_estimate(const ReorderResult& r, const std::vector<ExtensionRow>& extensions,
                                  const McConfig& cfg);

}  // namespace probitgp
