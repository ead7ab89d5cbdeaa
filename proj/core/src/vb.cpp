#include "probitgp/vb.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "probitgp/errors.hpp"
#include "probitgp/normal.hpp"
#include "probitgp/parallel.hpp"
#include "probitgp/philox.hpp"

namespace probitgp {

namespace {

using Eigen::Index;

Index idx(std::size_t v) { return static_cast<Index>(v); }

constexpr std::size_t kSampleBatch = 64;
constexpr std::size_t kMaxExactDimension = 12;

TnSide side_of(int y) { return y == 1 ? TnSide::kPositive : TnSide::kNegative; }

ProbEstimate summarize(const std::vector<double>& values) {
  const double count = static_cast<double>(values.size());
  const double pivot = values.front();
  double sum = 0.0;
  for (const double v : values) sum += v - pivot;
  const double shift = sum / count;
  const double mean = pivot + shift;
  double ss = 0.0;
  for (const double v : values) ss += (v - pivot - shift) * (v - pivot - shift);
  ProbEstimate out;
  out.samples = values.size();
  out.value = mean;
  out.std_error = values.size() > 1 ? std::sqrt(ss / (count - 1.0) / count) : 0.0;
  out.log_value = std::log(mean);
  return out;
}

double apply(const PredictiveFunctional& f, const double* z, std::size_t n) {
  double acc = 0.0;
  for (std::size_t j = 0; j < n; ++j) acc += f.g(idx(j)) * z[j];
  return norm_cdf((f.offset + acc) / f.scale);
}

}  // namespace

void CaviOptions::validate() const {
  if (!(tol > 0.0)) throw ValidationError("CAVI tolerance must be positive");
  if (max_iter == 0) throw ValidationError("CAVI max_iter must be positive");
}

TnFactorSet cavi_fit(const ProbitGpModel& model, const CaviOptions& opts) {
  opts.validate();
  const std::size_t n = model.size();
  const Vector& xi = model.xi();
  // Precision of z; row i gives the coordinate's full conditional N(loc_i, 1 / P_ii).
  const Matrix precision = model.latent_factor().solve(Matrix::Identity(idx(n), idx(n)));

  TnFactorSet out;
  out.factors.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double pii = precision(idx(i), idx(i));
    if (!(pii > 0.0)) throw NumericalError("CAVI: non-positive conditional precision");
    out.factors[i].scale = 1.0 / std::sqrt(pii);
    out.factors[i].side = side_of(model.y()[i]);
  }

  Vector means = Vector::Zero(idx(n));
  Vector centered = means - xi;
  for (std::size_t sweep = 1; sweep <= opts.max_iter; ++sweep) {
    double delta = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const Index ii = idx(i);
      const double pii = precision(ii, ii);
      const double off = precision.col(ii).dot(centered) - pii * centered(ii);
      TnFactor& f = out.factors[i];
      f.loc = xi(ii) - off / pii;
      const double m = tn_mean(f.loc, f.scale, f.side);
      delta = std::max(delta, std::abs(m - means(ii)));
      means(ii) = m;
      centered(ii) = m - xi(ii);
    }
    out.final_delta = delta;
    if (delta < opts.tol) {
      out.converged = true;
      out.iterations = std::max<std::size_t>(1, sweep - 1);
      return out;
    }
  }
  out.iterations = opts.max_iter;
  return out;
}

VbPredictor::VbPredictor(const ProbitGpModel& model, TnFactorSet factors, const McConfig& cfg)
    : model_(model), factors_(std::move(factors)), cfg_(cfg) {
  cfg_.validate();
  if (factors_.factors.size() != model_.size()) {
    throw ValidationError("factor set size does not match the model");
  }
}

std::vector<ProbEstimate> VbPredictor::predict_many(const std::vector<std::vector<double>>& points) const {
  const std::size_t n = model_.size();
  std::vector<PredictiveFunctional> funcs;
  funcs.reserve(points.size());
  for (const auto& x : points) funcs.push_back(predictive_functional(model_, x));

  const UniformStream stream(cfg_.seed, StreamTag::kVariational);
  const std::size_t samples = cfg_.samples;
  std::vector<std::vector<double>> values(points.size(), std::vector<double>(samples));
  const std::size_t batches = (samples + kSampleBatch - 1) / kSampleBatch;
  parallel_for(batches, [&](std::size_t batch) {
    std::vector<double> z(n);
    const std::size_t first = batch * kSampleBatch;
    const std::size_t last = std::min(samples, first + kSampleBatch);
    for (std::size_t r = first; r < last; ++r) {
      for (std::size_t i = 0; i < n; ++i) {
        TnSubstream sub(stream, r, i);
        const TnFactor& f = factors_.factors[i];
        z[i] = tn_sample(f.loc, f.scale, f.side, sub);
      }
      for (std::size_t m = 0; m < funcs.size(); ++m) values[m][r] = apply(funcs[m], z.data(), n);
    }
  });

  std::vector<ProbEstimate> out;
  out.reserve(points.size());
  for (const auto& v : values) out.push_back(summarize(v));
  return out;
}

ProbEstimate VbPredictor::predict(std::span<const double> x_new) const {
  return predict_many({std::vector<double>(x_new.begin(), x_new.end())}).front();
}

ProbEstimate predict_vb(const ProbitGpModel& model, const TnFactorSet& factors, std::span<const double> x_new,
                        const McConfig& cfg) {
  return VbPredictor(model, factors, cfg).predict(x_new);
}

ExactTnEstimate exact_tn_predict(const ProbitGpModel& model, std::span<const double> x_new, const McConfig& cfg) {
  cfg.validate();
  const std::size_t n = model.size();
  if (n > kMaxExactDimension) {
    std::ostringstream msg;
    msg << "exact truncated-normal sampling supports n <= " << kMaxExactDimension << ", got " << n;
    throw ValidationError(msg.str());
  }
  const PredictiveFunctional func = predictive_functional(model, x_new);
  const Matrix lower = model.latent_factor().matrixL();
  const Vector& xi = model.xi();
  const Vector& signs = model.signs();
  const UniformStream stream(cfg.seed, StreamTag::kRejection);

  std::vector<double> values;
  values.reserve(cfg.samples);
  std::vector<double> e(n);
  std::vector<double> z(n);
  std::size_t proposals = 0;
  while (values.size() < cfg.samples) {
    for (std::size_t i = 0; i < n; ++i) e[i] = norm_quantile(stream(proposals, i));
    ++proposals;
    bool inside = true;
    for (std::size_t i = 0; i < n && inside; ++i) {
      double acc = xi(idx(i));
      for (std::size_t j = 0; j <= i; ++j) acc += lower(idx(i), idx(j)) * e[j];
      z[i] = acc;
      inside = signs(idx(i)) * acc > 0.0;
    }
    if (inside) values.push_back(apply(func, z.data(), n));
    if (proposals % kRejectionCheckInterval == 0 &&
        static_cast<double>(values.size()) < kMinAcceptanceRate * static_cast<double>(proposals)) {
      std::ostringstream msg;
      msg << "exact truncated-normal sampler accepted " << values.size() << " of " << proposals
          << " proposals; use a smaller problem";
      throw NumericalError(msg.str());
    }
  }

  ExactTnEstimate out;
  out.estimate = summarize(values);
  out.proposals = proposals;
  out.acceptance_rate = static_cast<double>(values.size()) / static_cast<double>(proposals);
  return out;
}

}  // namespace probitgp
