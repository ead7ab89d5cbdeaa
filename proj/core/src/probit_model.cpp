#include "probitgp/probit_model.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <optional>
#include <sstream>

#include "probitgp/errors.hpp"
#include "probitgp/normal.hpp"

namespace probitgp {

namespace {

using Eigen::Index;

Index idx(std::size_t v) { return static_cast<Index>(v); }

Vector signs_of(const std::vector<int>& y) {
  Vector d(idx(y.size()));
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] != 0 && y[i] != 1) {
      std::ostringstream msg;
      msg << "response " << i << " must be 0 or 1, got " << y[i];
      throw ValidationError(msg.str());
    }
    d(idx(i)) = 2.0 * y[i] - 1.0;
  }
  return d;
}

Vector zero_mean(const Locations& locs) { return Vector::Zero(idx(locs.size())); }

}  // namespace

struct ProbitGpModel::Cache {
  std::once_flag omega_once;
  std::optional<CholeskyFactor> omega;
  std::once_flag latent_once;
  std::optional<Eigen::LLT<Matrix>> latent;
};

ProbitGpModel::ProbitGpModel(Locations locs, std::vector<int> y, KernelSpec kernel)
    : ProbitGpModel(locs, std::move(y), kernel, zero_mean(locs), 0.0) {}

ProbitGpModel::ProbitGpModel(Locations locs, std::vector<int> y, KernelSpec kernel, Vector xi, double new_mean)
    : locs_(std::move(locs)),
      y_(std::move(y)),
      kernel_(kernel),
      xi_(std::move(xi)),
      omega_(build_covariance(kernel_, locs_)),
      signs_(signs_of(y_)),
      new_mean_(new_mean),
      cache_(std::make_shared<Cache>()) {
  if (y_.size() != locs_.size()) {
    std::ostringstream msg;
    msg << "got " << y_.size() << " responses for " << locs_.size() << " locations";
    throw ValidationError(msg.str());
  }
  if (static_cast<std::size_t>(xi_.size()) != locs_.size()) {
    throw ValidationError("prior mean vector length does not match the number of locations");
  }
  if (!xi_.allFinite() || !std::isfinite(new_mean_)) throw ValidationError("prior mean must be finite");
}

const CholeskyFactor& ProbitGpModel::omega_factor() const {
  std::call_once(cache_->omega_once, [this] { cache_->omega = dense_cholesky(omega_); });
  return *cache_->omega;
}

const Eigen::LLT<Matrix>& ProbitGpModel::latent_factor() const {
  std::call_once(cache_->latent_once, [this] {
    Matrix sz = omega_.matrix();
    sz.diagonal().array() += 1.0;
    Eigen::LLT<Matrix> llt(sz);
    if (llt.info() != Eigen::Success) throw NumericalError("Cholesky of I + Omega failed");
    cache_->latent = std::move(llt);
  });
  return *cache_->latent;
}

void ProbitGpModel::check_new_location(std::span<const double> x) const {
  if (x.size() != locs_.dim()) {
    std::ostringstream msg;
    msg << "new location has dimension " << x.size() << ", expected " << locs_.dim();
    throw ValidationError(msg.str());
  }
  const std::size_t hit = locs_.find(x);
  if (hit != locs_.size()) {
    std::ostringstream msg;
    msg << "new location coincides with training location " << hit;
    throw ValidationError(msg.str());
  }
}

ExtendedProblem extend_problem(const ProbitGpModel& model, std::span<const double> x_new) {
  model.check_new_location(x_new);
  const Index n = idx(model.size());
  const Vector k = cross_covariance(model.kernel(), model.locs(), x_new);

  Vector d(n + 1);
  d.head(n) = model.signs();
  d(n) = 1.0;
  Vector xi(n + 1);
  xi.head(n) = model.xi();
  xi(n) = model.new_mean();
  Matrix om(n + 1, n + 1);
  om.topLeftCorner(n, n) = model.omega().matrix();
  om.col(n).head(n) = k;
  om.row(n).head(n) = k.transpose();
  om(n, n) = kernel_eval(model.kernel(), x_new, x_new);
  return {std::move(d), std::move(xi), DenseSpd(std::move(om))};
}

ConditionalGp conditional_gp_params(const ProbitGpModel& model, std::span<const double> x_new) {
  model.check_new_location(x_new);
  const Vector k = cross_covariance(model.kernel(), model.locs(), x_new);
  const auto lower = model.omega_factor().lower.triangularView<Eigen::Lower>();
  const Vector u = lower.transpose().solve(lower.solve(k));  // Omega^{-1} k
  ConditionalGp out;
  out.h = u;
  out.mu = model.new_mean() - u.dot(model.xi());
  out.sigma2 = std::max(0.0, kernel_eval(model.kernel(), x_new, x_new) - k.dot(u));
  return out;
}

LatentParams latent_params(const ProbitGpModel& model) {
  const Index n = idx(model.size());
  const auto& llt = model.latent_factor();
  Matrix inv = llt.solve(Matrix::Identity(n, n));
  Matrix sigma_x = Matrix::Identity(n, n) - inv;
  sigma_x = 0.5 * (sigma_x + sigma_x.transpose()).eval();
  Matrix sigma_z = model.omega().matrix();
  sigma_z.diagonal().array() += 1.0;
  return {DenseSpd(std::move(sigma_x)), llt.solve(model.xi()), DenseSpd(std::move(sigma_z))};
}

SunParams sun_params(const ProbitGpModel& model) {
  const Index n = idx(model.size());
  const Matrix& om = model.omega().matrix();
  const Vector& d = model.signs();
  SunParams out{model.xi(), model.omega(), Matrix(n, n), Vector(n), DenseSpd(Matrix::Identity(n, n)),
                Vector(n), Vector(n)};
  out.s = (om.diagonal().array() + 1.0).sqrt();
  out.w = om.diagonal().array().sqrt();
  Matrix gamma_mat(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      const double omega_bar = om(i, j) / (out.w(i) * out.w(j));
      out.delta(i, j) = omega_bar * out.w(j) * d(j) / out.s(j);
      gamma_mat(i, j) = i == j ? 1.0 : d(i) * om(i, j) * d(j) / (out.s(i) * out.s(j));
    }
    out.gamma(i) = d(i) * model.xi()(i) / out.s(i);
  }
  out.big_gamma = DenseSpd(std::move(gamma_mat));
  return out;
}

MvnProblem evidence_problem(const ProbitGpModel& model) {
  const Index n = idx(model.size());
  const Vector& d = model.signs();
  Matrix sigma = d.asDiagonal() * model.omega().matrix() * d.asDiagonal();
  sigma.diagonal().array() += 1.0;
  Vector a = Vector::Constant(n, -std::numeric_limits<double>::infinity());
  Vector b = d.cwiseProduct(model.xi());
  return MvnProblem(std::move(a), std::move(b), DenseSpd(std::move(sigma)));
}

std::size_t TlrSettings::resolved_block_size(std::size_t n) const {
  if (block_size > 0) return block_size;
  auto bs = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
  while (bs * bs < n) ++bs;
  return std::max<std::size_t>(bs, 1);
}

ProbEstimate marginal_likelihood(const ProbitGpModel& model, const McConfig& cfg, EvidenceMethod method,
                                 const TlrSettings& tlr) {
  const MvnProblem p = evidence_problem(model);
  if (method == EvidenceMethod::kDense) return estimate_reordered(univariate_reorder(p), cfg);
  return estimate_reordered(block_reorder(p, tlr.resolved_block_size(p.size()), tlr.tol, cfg), cfg);
}

RatioPredictor::RatioPredictor(const ProbitGpModel& model, const McConfig& cfg, const TlrSettings& tlr)
    : model_(model), cfg_(cfg) {
  cfg_.validate();
  const MvnProblem p = evidence_problem(model);
  reorder_ = block_reorder(p, tlr.resolved_block_size(p.size()), tlr.tol, cfg_);
}

ExtensionRow RatioPredictor::extension_row(std::span<const double> x_new) const {
  model_.check_new_location(x_new);
  const std::size_t n = model_.size();
  const Vector k = cross_covariance(model_.kernel(), model_.locs(), x_new);
  Vector c(idx(n));
  for (std::size_t p = 0; p < n; ++p) {
    const std::size_t orig = reorder_.permutation[p];
    c(idx(p)) = model_.signs()(idx(orig)) * k(idx(orig));
  }
  const TlrMatrix& factor = reorder_.tlr();
  ExtensionRow row;
  row.coeffs = factor.forward_solve(c);
  // Diagonal of the extended covariance 1 + K(x, x), shifted like the factored block.
  const double corner = 1.0 + kernel_eval(model_.kernel(), x_new, x_new) + factor.jitter();
  const double schur = corner - row.coeffs.squaredNorm();
  if (!(schur > 0.0)) throw NumericalError("extended covariance is not positive definite at the new location");
  row.diagonal = std::sqrt(schur);
  row.upper = model_.new_mean();
  return row;
}

RatioEstimates RatioPredictor::predict_with_evidence(std::span<const double> x_new) const {
  return sov_ratio_estimate(reorder_, {extension_row(x_new)}, cfg_);
}

ProbEstimate RatioPredictor::predict(std::span<const double> x_new) const {
  return predict_with_evidence(x_new).ratios.front();
}

ProbEstimate predict_ratio(const ProbitGpModel& model, std::span<const double> x_new, const McConfig& cfg,
                           const TlrSettings& tlr) {
  model.check_new_location(x_new);
  return RatioPredictor(model, cfg, tlr).predict(x_new);
}

double PredictiveFunctional::operator()(const Vector& z) const { return norm_cdf((offset + g.dot(z)) / scale); }

PredictiveFunctional predictive_functional(const ProbitGpModel& model, std::span<const double> x_new) {
  model.check_new_location(x_new);
  const Vector k = cross_covariance(model.kernel(), model.locs(), x_new);
  PredictiveFunctional out;
  out.g = model.latent_factor().solve(k);
  out.offset = model.new_mean() - out.g.dot(model.xi());
  // Exact value is at least 1 (a prior variance plus the probit noise); the floor only absorbs
  // rounding.
  out.scale = std::sqrt(std::max(1.0, 1.0 + kernel_eval(model.kernel(), x_new, x_new) - k.dot(out.g)));
  return out;
}

}  // namespace probitgp
