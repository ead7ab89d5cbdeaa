#include "probitgp/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "probitgp/dense.hpp"
#include "probitgp/errors.hpp"
#include "probitgp/normal.hpp"
#include "probitgp/philox.hpp"
#include "probitgp/probit_model.hpp"
#include "probitgp/vb.hpp"

namespace probitgp {

namespace {

using Eigen::Index;
using Clock = std::chrono::steady_clock;

Index idx(std::size_t v) { return static_cast<Index>(v); }

// Sample-index namespaces inside the simulation stream.
constexpr std::uint64_t kHoldoutCoords = 0;
constexpr std::uint64_t kLatentNormals = 1;
constexpr std::uint64_t kResponses = 2;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<std::vector<double>> holdout_locations(std::size_t grid_size, HoldoutScheme scheme,
                                                   std::size_t count, const UniformStream& stream) {
  std::vector<std::vector<double>> out;
  out.reserve(count);
  if (scheme == HoldoutScheme::kRandom) {
    for (std::size_t h = 0; h < count; ++h) {
      out.push_back({stream(kHoldoutCoords, 2 * h), stream(kHoldoutCoords, 2 * h + 1)});
    }
    return out;
  }
  std::size_t side = 1;
  while (side * side < count) ++side;
  if (side > grid_size) {
    std::ostringstream msg;
    msg << "grid holdout of " << count << " points needs more than " << grid_size << " cells per axis";
    throw ValidationError(msg.str());
  }
  const double g = static_cast<double>(grid_size);
  std::vector<double> coords(side);
  for (std::size_t k = 0; k < side; ++k) {
    const auto cell = static_cast<std::size_t>(std::floor((static_cast<double>(k) + 0.5) * g / static_cast<double>(side)));
    coords[k] = (static_cast<double>(cell) + 0.5) / g;
  }
  for (std::size_t i = 0; i < side && out.size() < count; ++i) {
    for (std::size_t j = 0; j < side && out.size() < count; ++j) out.push_back({coords[i], coords[j]});
  }
  return out;
}

}  // namespace

void Dataset::validate() const {
  if (y.size() != locs.size()) throw ValidationError("dataset has a different number of responses and locations");
  for (const int v : y) {
    if (v != 0 && v != 1) throw ValidationError("responses must be 0 or 1");
  }
  if (truth_probs) {
    if (truth_probs->size() != locs.size()) throw ValidationError("truth_prob column has the wrong length");
    for (const double p : *truth_probs) {
      if (!(p > 0.0 && p < 1.0)) throw ValidationError("truth probabilities must lie in (0, 1)");
    }
  }
  for (const auto& h : holdout) {
    if (h.x.size() != locs.dim()) throw ValidationError("holdout point has the wrong dimension");
    if (h.truth_prob && !(*h.truth_prob > 0.0 && *h.truth_prob < 1.0)) {
      throw ValidationError("holdout truth probabilities must lie in (0, 1)");
    }
    if (h.y && *h.y != 0 && *h.y != 1) throw ValidationError("holdout responses must be 0 or 1");
  }
}

Dataset simulate_dataset(std::size_t grid_size, double alpha, std::uint64_t seed, HoldoutScheme scheme,
                         std::size_t holdout_count) {
  if (grid_size < 2) throw ValidationError("grid_size must be at least 2");
  if (holdout_count == 0) throw ValidationError("holdout_count must be positive");
  const KernelSpec kernel{KernelFamily::kSquaredExponential, alpha};
  kernel.validate();

  const UniformStream stream(seed, StreamTag::kSimulation);
  const std::size_t n = grid_size * grid_size;
  const auto holdout = holdout_locations(grid_size, scheme, holdout_count, stream);

  Locations::Storage joint(idx(n + holdout.size()), 2);
  const double g = static_cast<double>(grid_size);
  for (std::size_t i = 0; i < grid_size; ++i) {
    for (std::size_t j = 0; j < grid_size; ++j) {
      joint(idx(i * grid_size + j), 0) = static_cast<double>(i + 1) / g;
      joint(idx(i * grid_size + j), 1) = static_cast<double>(j + 1) / g;
    }
  }
  for (std::size_t h = 0; h < holdout.size(); ++h) {
    joint(idx(n + h), 0) = holdout[h][0];
    joint(idx(n + h), 1) = holdout[h][1];
  }
  const Locations all = Locations::from_rows(joint);
  const CholeskyFactor chol = dense_cholesky(build_covariance(kernel, all));

  const std::size_t total = all.size();
  Vector e(idx(total));
  for (std::size_t i = 0; i < total; ++i) e(idx(i)) = norm_quantile(stream(kLatentNormals, i));
  const Vector f = chol.lower.triangularView<Eigen::Lower>() * e;

  std::vector<double> probs(total);
  std::vector<int> responses(total);
  for (std::size_t i = 0; i < total; ++i) {
    probs[i] = norm_cdf(f(idx(i)));
    responses[i] = stream(kResponses, i) < probs[i] ? 1 : 0;
  }

  Dataset out{Locations::from_rows(joint.topRows(idx(n))),
              std::vector<int>(responses.begin(), responses.begin() + static_cast<std::ptrdiff_t>(n)),
              std::vector<double>(probs.begin(), probs.begin() + static_cast<std::ptrdiff_t>(n)),
              {}};
  out.holdout.reserve(holdout.size());
  for (std::size_t h = 0; h < holdout.size(); ++h) {
    out.holdout.push_back({holdout[h], probs[n + h], responses[n + h]});
  }
  out.validate();
  return out;
}

double compute_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw ValidationError("AUC: scores and labels differ in length");
  std::size_t pos = 0;
  for (const int l : labels) {
    if (l != 0 && l != 1) throw ValidationError("AUC: labels must be 0 or 1");
    pos += static_cast<std::size_t>(l);
  }
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) throw ValidationError("AUC is undefined when only one class is present");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Sum of mid-ranks of the positives; tied scores share the average rank.
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) rank_sum += mid_rank;
    }
    i = j;
  }
  const double p = static_cast<double>(pos);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));
}

double compute_mse(const std::vector<double>& estimates, const std::vector<double>& truth) {
  if (estimates.size() != truth.size()) throw ValidationError("MSE: vectors differ in length");
  if (estimates.empty()) throw ValidationError("MSE: vectors are empty");
  double sum = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) sum += (estimates[i] - truth[i]) * (estimates[i] - truth[i]);
  return sum / static_cast<double>(estimates.size());
}

std::string to_string(Method m) { return m == Method::kTlr ? "tlr" : "vb"; }

Method parse_method(const std::string& s) {
  if (s == "tlr") return Method::kTlr;
  if (s == "vb") return Method::kVb;
  throw ValidationError("unknown method '" + s + "' (expected tlr or vb)");
}

void AlphaGrid::validate() const {
  if (count == 0) throw ValidationError("alpha grid count must be at least 1");
  if (!(min > 0.0) || !std::isfinite(max) || !(min <= max)) {
    throw ValidationError("alpha grid needs 0 < min <= max");
  }
}

double AlphaGrid::at(std::size_t k) const {
  if (count == 1) return min;
  return min + (max - min) * static_cast<double>(k) / static_cast<double>(count - 1);
}

void RunConfig::validate() const {
  mc().validate();
  if (!(trunc_tol >= 0.0)) throw ValidationError("trunc_tol must be non-negative");
  if (alpha && !(*alpha > 0.0 && std::isfinite(*alpha))) throw ValidationError("alpha must be positive");
  grid.validate();
  if (!(cavi_tol > 0.0)) throw ValidationError("cavi_tol must be positive");
  if (cavi_max_iter == 0) throw ValidationError("cavi_max_iter must be positive");
}

McConfig RunConfig::mc() const {
  McConfig out;
  out.samples = samples;
  out.seed = seed;
  out.antithetic = antithetic;
  return out;
}

AlphaFit estimate_alpha(const Dataset& data, const AlphaGrid& grid, const RunConfig& cfg) {
  grid.validate();
  cfg.validate();
  data.validate();
  AlphaFit out;
  out.curve.reserve(grid.count);
  double best = -std::numeric_limits<double>::infinity();
  const TlrSettings tlr{cfg.block_size, cfg.trunc_tol};
  for (std::size_t k = 0; k < grid.count; ++k) {
    const double alpha = grid.at(k);
    const ProbitGpModel model(data.locs, data.y, KernelSpec{KernelFamily::kSquaredExponential, alpha});
    const ProbEstimate est = marginal_likelihood(model, cfg.mc(), EvidenceMethod::kTlr, tlr);
    out.curve.push_back({alpha, est});
    if (k == 0 || est.log_value > best) {
      best = est.log_value;
      out.alpha_hat = alpha;
    }
  }
  return out;
}

BatchResult predict_batch(const Dataset& data, double alpha, const RunConfig& cfg) {
  cfg.validate();
  data.validate();
  if (data.holdout.empty()) throw ValidationError("dataset has no holdout points to predict");

  const ProbitGpModel model(data.locs, data.y, KernelSpec{KernelFamily::kSquaredExponential, alpha});
  std::vector<std::vector<double>> points;
  points.reserve(data.holdout.size());
  for (const auto& h : data.holdout) {
    model.check_new_location(h.x);
    points.push_back(h.x);
  }

  BatchResult out;
  MetricsReport& m = out.metrics;
  m.method = cfg.method;
  m.n = model.size();
  m.holdout = points.size();
  m.samples = cfg.samples;
  m.seed = cfg.seed;
  m.alpha = alpha;

  auto start = Clock::now();
  if (cfg.method == Method::kTlr) {
    const RatioPredictor predictor(model, cfg.mc(), TlrSettings{cfg.block_size, cfg.trunc_tol});
    m.setup_seconds = seconds_since(start);
    start = Clock::now();
    out.predictions.reserve(points.size());
    for (const auto& x : points) out.predictions.push_back(predictor.predict(x));
  } else {
    TnFactorSet factors = cavi_fit(model, CaviOptions{cfg.cavi_tol, cfg.cavi_max_iter});
    m.cavi_iterations = factors.iterations;
    m.cavi_converged = factors.converged;
    const VbPredictor predictor(model, std::move(factors), cfg.mc());
    m.setup_seconds = seconds_since(start);
    start = Clock::now();
    out.predictions = predictor.predict_many(points);
  }
  m.per_prediction_seconds = seconds_since(start) / static_cast<double>(points.size());

  std::vector<double> probs;
  probs.reserve(points.size());
  for (const auto& p : out.predictions) probs.push_back(p.value);

  const bool have_truth = std::all_of(data.holdout.begin(), data.holdout.end(),
                                      [](const HoldoutPoint& h) { return h.truth_prob.has_value(); });
  if (have_truth) {
    std::vector<double> truth;
    for (const auto& h : data.holdout) truth.push_back(*h.truth_prob);
    m.mse = compute_mse(probs, truth);
  }
  const bool have_labels =
      std::all_of(data.holdout.begin(), data.holdout.end(), [](const HoldoutPoint& h) { return h.y.has_value(); });
  if (have_labels) {
    std::vector<int> labels;
    for (const auto& h : data.holdout) labels.push_back(*h.y);
    const auto ones = std::count(labels.begin(), labels.end(), 1);
    if (ones > 0 && static_cast<std::size_t>(ones) < labels.size()) m.auc = compute_auc(probs, labels);
  }
  m.auc_omitted = !m.auc.has_value();
  return out;
}

}  // namespace probitgp
