#include "probitgp/mvn.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <optional>
#include <sstream>

#include "probitgp/errors.hpp"
#include "probitgp/normal.hpp"
#include "probitgp/parallel.hpp"
#include "probitgp/philox.hpp"
#include "sov_kernel.hpp"

namespace probitgp {

namespace {

using Eigen::Index;
using detail::kBatch;

Index idx(std::size_t v) { return static_cast<Index>(v); }

std::size_t batch_count(std::size_t samples) { return (samples + kBatch - 1) / kBatch; }

// Values m_s * 2^e_s rescaled to a common exponent so they can be summed directly.
struct CommonScale {
  int exponent = 0;
  bool all_zero = true;
};

CommonScale common_scale(const std::vector<double>& mantissa, const std::vector<int>& exponent) {
  CommonScale out;
  for (std::size_t s = 0; s < mantissa.size(); ++s) {
    if (mantissa[s] == 0.0) continue;
    if (out.all_zero || exponent[s] > out.exponent) out.exponent = exponent[s];
    out.all_zero = false;
  }
  return out;
}

// Per-sample values reduced to independent replicates: single samples, or antithetic pair means.
std::vector<double> replicates(const std::vector<double>& values, bool antithetic) {
  if (!antithetic) return values;
  std::vector<double> out(values.size() / 2);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = 0.5 * (values[2 * k] + values[2 * k + 1]);
  return out;
}

// Mean and standard error of the mean, summed in index order. Deviations are taken from the
// first replicate, so a constant sample returns that constant exactly with zero error.
std::pair<double, double> mean_and_error(const std::vector<double>& reps) {
  const double count = static_cast<double>(reps.size());
  const double pivot = reps.front();
  double sum = 0.0;
  for (const double x : reps) sum += x - pivot;
  const double shift = sum / count;
  double ss = 0.0;
  for (const double x : reps) ss += (x - pivot - shift) * (x - pivot - shift);
  const double var = reps.size() > 1 ? ss / (count - 1.0) : 0.0;
  return {pivot + shift, std::sqrt(var / count)};
}

ProbEstimate reduce_products(const detail::ScaledSamples& products, bool antithetic) {
  ProbEstimate out;
  out.samples = products.mantissa.size();
  const CommonScale scale = common_scale(products.mantissa, products.exponent);
  if (scale.all_zero) {
    out.log_value = -std::numeric_limits<double>::infinity();
    return out;
  }
  std::vector<double> values(products.mantissa.size());
  for (std::size_t s = 0; s < values.size(); ++s) {
    values[s] = std::ldexp(products.mantissa[s], products.exponent[s] - scale.exponent);
  }
  const auto [mean, err] = mean_and_error(replicates(values, antithetic));
  out.value = std::clamp(std::ldexp(mean, scale.exponent), 0.0, 1.0);
  out.std_error = std::ldexp(err, scale.exponent);
  out.log_value = std::log(mean) + scale.exponent * std::numbers::ln2;
  return out;
}

template <class MakeRows>
detail::ScaledSamples run_products(MakeRows make_rows, const Vector& a, const Vector& b,
                                   const McConfig& cfg, StreamTag tag) {
  const UniformStream stream(cfg.seed, tag);
  detail::ScaledSamples products(cfg.samples);
  parallel_for(batch_count(cfg.samples), [&](std::size_t batch) {
    auto rows = make_rows();
    std::vector<double> v;
    const std::size_t first = batch * kBatch;
    const std::size_t count = std::min(kBatch, cfg.samples - first);
    detail::run_sov_batch(rows, a, b, stream, cfg.antithetic, first, count, v,
                          products.mantissa.data() + first, products.exponent.data() + first);
  });
  return products;
}

void check_dense_factor(const Matrix& lower, std::size_t n) {
  if (static_cast<std::size_t>(lower.rows()) != n || static_cast<std::size_t>(lower.cols()) != n) {
    std::ostringstream msg;
    msg << "factor is " << lower.rows() << "x" << lower.cols() << ", expected " << n << "x" << n;
    throw ValidationError(msg.str());
  }
  for (Index i = 0; i < lower.rows(); ++i) {
    if (!(lower(i, i) > 0.0)) {
      std::ostringstream msg;
      msg << "factor diagonal entry " << i << " is not positive";
      throw NumericalError(msg.str());
    }
  }
}

ProbEstimate dense_estimate(const Vector& a, const Vector& b, const Matrix& lower, const McConfig& cfg,
                            StreamTag tag) {
  cfg.validate();
  check_dense_factor(lower, static_cast<std::size_t>(a.size()));
  const auto products = run_products([&] { return detail::DenseRows(lower); }, a, b, cfg, tag);
  return reduce_products(products, cfg.antithetic);
}

ProbEstimate tlr_estimate(const Vector& a, const Vector& b, const TlrMatrix& factor, const McConfig& cfg) {
  cfg.validate();
  if (factor.size() != static_cast<std::size_t>(a.size())) {
    throw ValidationError("tile-low-rank factor size does not match the limits");
  }
  const auto products = run_products([&] { return detail::TlrRows(factor); }, a, b, cfg, StreamTag::kSov);
  return reduce_products(products, cfg.antithetic);
}

MvnProblem sub_problem(const MvnProblem& p, std::size_t start, std::size_t extent) {
  return MvnProblem(p.a.segment(idx(start), idx(extent)), p.b.segment(idx(start), idx(extent)),
                    DenseSpd(p.sigma.matrix().block(idx(start), idx(start), idx(extent), idx(extent))));
}

Matrix permute_symmetric(const Matrix& s, const std::vector<std::size_t>& perm) {
  const Index n = s.rows();
  Matrix out(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) out(i, j) = s(idx(perm[static_cast<std::size_t>(i)]), idx(perm[static_cast<std::size_t>(j)]));
  }
  return out;
}

// One greedy reorder-and-factor pass on sigma + shift * I; empty on a non-positive pivot.
std::optional<ReorderResult> reorder_attempt(const MvnProblem& p, double shift) {
  const std::size_t n = p.size();
  Matrix c = p.sigma.matrix();
  c.diagonal().array() += shift;
  Vector a = p.a;
  Vector b = p.b;
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);

  Matrix lower = Matrix::Zero(idx(n), idx(n));
  Vector residual = c.diagonal();  // Sigma_jj - sum_k L_jk^2 over placed columns
  Vector shift_sum = Vector::Zero(idx(n));  // sum_k L_jk y_k over placed columns
  Vector y = Vector::Zero(idx(n));

  auto swap_vars = [&](Index i, Index j) {
    if (i == j) return;
    c.row(i).swap(c.row(j));
    c.col(i).swap(c.col(j));
    lower.row(i).swap(lower.row(j));
    std::swap(a(i), a(j));
    std::swap(b(i), b(j));
    std::swap(residual(i), residual(j));
    std::swap(shift_sum(i), shift_sum(j));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  };

  for (Index i = 0; i < idx(n); ++i) {
    Index best = -1;
    double best_mass = 0.0;
    for (Index j = i; j < idx(n); ++j) {
      if (!(residual(j) > 0.0)) return std::nullopt;
      const double sd = std::sqrt(residual(j));
      const double mass = norm_interval_mass((a(j) - shift_sum(j)) / sd, (b(j) - shift_sum(j)) / sd);
      const bool better = best < 0 || mass < best_mass ||
                          (mass == best_mass && perm[static_cast<std::size_t>(j)] < perm[static_cast<std::size_t>(best)]);
      if (better) {
        best = j;
        best_mass = mass;
      }
    }
    swap_vars(i, best);

    const double lii = std::sqrt(residual(i));
    lower(i, i) = lii;
    for (Index j = i + 1; j < idx(n); ++j) {
      double acc = c(j, i);
      for (Index k = 0; k < i; ++k) acc -= lower(j, k) * lower(i, k);
      lower(j, i) = acc / lii;
    }
    y(i) = truncated_std_normal_mean((a(i) - shift_sum(i)) / lii, (b(i) - shift_sum(i)) / lii);
    for (Index j = i + 1; j < idx(n); ++j) {
      residual(j) -= lower(j, i) * lower(j, i);
      shift_sum(j) += lower(j, i) * y(i);
    }
  }
  if (!lower.allFinite()) return std::nullopt;

  ReorderResult out;
  out.permutation = std::move(perm);
  out.factor = std::move(lower);
  out.a = std::move(a);
  out.b = std::move(b);
  return out;
}

}  // namespace

MvnProblem::MvnProblem(Vector lower, Vector upper, DenseSpd cov)
    : a(std::move(lower)), b(std::move(upper)), sigma(std::move(cov)) {
  if (a.size() != b.size() || static_cast<std::size_t>(a.size()) != sigma.size()) {
    std::ostringstream msg;
    msg << "MVN problem dimensions disagree: " << a.size() << " lower limits, " << b.size()
        << " upper limits, covariance of size " << sigma.size();
    throw ValidationError(msg.str());
  }
  for (Index i = 0; i < a.size(); ++i) {
    if (!(a(i) < b(i))) {
      std::ostringstream msg;
      msg << "MVN limits must satisfy a < b; violated at index " << i << " (a=" << a(i) << ", b=" << b(i) << ")";
      throw ValidationError(msg.str());
    }
  }
}

void McConfig::validate() const {
  if (samples < 2) throw ValidationError("Monte Carlo sample count must be at least 2");
  if (antithetic && samples % 2 != 0) {
    throw ValidationError("antithetic sampling requires an even sample count");
  }
}

ProbEstimate sov_estimate(const MvnProblem& p, const Matrix& lower, const McConfig& cfg) {
  return dense_estimate(p.a, p.b, lower, cfg, StreamTag::kSov);
}

ReorderResult univariate_reorder(const MvnProblem& p) {
  const double base = p.sigma.mean_diagonal();
  for (const double level : kJitterLadder) {
    if (auto r = reorder_attempt(p, level * base)) return std::move(*r);
  }
  throw NumericalError("Cholesky breakdown during univariate reordering: covariance is not positive definite after jitter");
}

ReorderResult block_reorder(const MvnProblem& p, std::size_t block_size, double tol, const McConfig& cfg) {
  if (block_size == 0) throw ValidationError("block_size must be positive");
  cfg.validate();
  const std::size_t n = p.size();
  const std::size_t bs = std::min(block_size, n);
  const std::size_t nb = (n + bs - 1) / bs;

  struct BlockInfo {
    std::size_t index;
    double log_estimate;
    std::vector<std::size_t> order;  // original indices in within-block order
  };
  std::vector<BlockInfo> blocks(nb);
  for (std::size_t k = 0; k < nb; ++k) {
    const std::size_t start = k * bs;
    const std::size_t extent = std::min(bs, n - start);
    const MvnProblem sub = sub_problem(p, start, extent);
    const ReorderResult local = univariate_reorder(sub);
    McConfig crude;
    crude.samples = kCrudeBlockSamples;
    crude.seed = derive_seed(cfg.seed, k);
    const ProbEstimate est = dense_estimate(local.a, local.b, local.dense(), crude, StreamTag::kCrudeBlock);
    blocks[k].index = k;
    blocks[k].log_estimate = est.log_value;
    for (const std::size_t v : local.permutation) blocks[k].order.push_back(start + v);
  }
  std::stable_sort(blocks.begin(), blocks.end(), [](const BlockInfo& x, const BlockInfo& y) {
    return x.log_estimate < y.log_estimate;
  });

  ReorderResult out;
  out.permutation.reserve(n);
  for (const auto& blk : blocks) {
    out.permutation.insert(out.permutation.end(), blk.order.begin(), blk.order.end());
  }
  out.a.resize(idx(n));
  out.b.resize(idx(n));
  for (std::size_t i = 0; i < n; ++i) {
    out.a(idx(i)) = p.a(idx(out.permutation[i]));
    out.b(idx(i)) = p.b(idx(out.permutation[i]));
  }
  out.factor = tlr_compress(DenseSpd(permute_symmetric(p.sigma.matrix(), out.permutation)), bs, tol);
  return out;
}

ProbEstimate tlr_sov_estimate(const MvnProblem& p, const ReorderResult& r, const McConfig& cfg) {
  if (!r.is_tlr()) throw ValidationError("tlr_sov_estimate requires a tile-low-rank reorder result");
  if (r.tlr().size() != p.size()) throw ValidationError("reorder result does not match the problem size");
  return tlr_estimate(r.a, r.b, r.tlr(), cfg);
}

ProbEstimate estimate_reordered(const ReorderResult& r, const McConfig& cfg) {
  if (r.is_tlr()) return tlr_estimate(r.a, r.b, r.tlr(), cfg);
  return dense_estimate(r.a, r.b, r.dense(), cfg, StreamTag::kSov);
}

namespace {

// Per-sample numerator and complement factors for one extension row, sharing the exponent of
// the sample's denominator product.
struct ExtensionSamples {
  std::vector<double> num;
  std::vector<double> comp;
};

ProbEstimate reduce_ratio(const detail::ScaledSamples& products, const ExtensionSamples& ext,
                          int common_exponent, bool antithetic) {
  const std::size_t count = products.mantissa.size();
  std::vector<double> num(count);
  std::vector<double> comp(count);
  for (std::size_t s = 0; s < count; ++s) {
    const int shift = products.exponent[s] - common_exponent;
    num[s] = std::ldexp(ext.num[s], shift);
    comp[s] = std::ldexp(ext.comp[s], shift);
  }
  const auto num_reps = replicates(num, antithetic);
  const auto comp_reps = replicates(comp, antithetic);
  double num_sum = 0.0;
  double comp_sum = 0.0;
  for (std::size_t k = 0; k < num_reps.size(); ++k) {
    num_sum += num_reps[k];
    comp_sum += comp_reps[k];
  }
  const double total = num_sum + comp_sum;
  if (!(total > 0.0)) throw NumericalError("ratio estimator: denominator sample mean is zero");
  const double p = num_sum / total;
  const double q = comp_sum / total;

  // Delta method: residuals num_s - p * den_s = q * num_s - p * comp_s.
  const double reps = static_cast<double>(num_reps.size());
  const double den_mean = total / reps;
  double ss = 0.0;
  for (std::size_t k = 0; k < num_reps.size(); ++k) {
    const double r = q * num_reps[k] - p * comp_reps[k];
    ss += r * r;
  }
  const double var = num_reps.size() > 1 ? ss / (reps - 1.0) : 0.0;

  ProbEstimate out;
  out.samples = count;
  out.value = std::clamp(p, std::numeric_limits<double>::min(), std::nextafter(1.0, 0.0));
  out.std_error = std::sqrt(var / reps) / den_mean;
  out.log_value = std::log(out.value);
  return out;
}

}  // namespace

RatioEstimates sov_ratio_estimate(const ReorderResult& r, const std::vector<ExtensionRow>& extensions,
                                  const McConfig& cfg) {
  cfg.validate();
  const std::size_t n = static_cast<std::size_t>(r.a.size());
  if (!r.is_tlr()) check_dense_factor(r.dense(), n);
  else if (r.tlr().size() != n) throw ValidationError("tile-low-rank factor size does not match the limits");
  for (const auto& e : extensions) {
    if (static_cast<std::size_t>(e.coeffs.size()) != n) {
      throw ValidationError("extension row length does not match the problem size");
    }
    if (!(e.diagonal > 0.0)) throw NumericalError("extension row has a non-positive diagonal entry");
    if (!(e.lower < e.upper)) throw ValidationError("extension row limits must satisfy lower < upper");
  }

  const UniformStream stream(cfg.seed, StreamTag::kSov);
  detail::ScaledSamples products(cfg.samples);
  std::vector<ExtensionSamples> ext(extensions.size());
  for (auto& e : ext) {
    e.num.assign(cfg.samples, 0.0);
    e.comp.assign(cfg.samples, 0.0);
  }

  auto run_batch = [&](auto& rows, std::size_t batch) {
    std::vector<double> v;
    const std::size_t first = batch * kBatch;
    const std::size_t count = std::min(kBatch, cfg.samples - first);
    double* mant = products.mantissa.data() + first;
    detail::run_sov_batch(rows, r.a, r.b, stream, cfg.antithetic, first, count, v, mant,
                          products.exponent.data() + first);
    std::array<double, kBatch> acc{};
    for (std::size_t e = 0; e < extensions.size(); ++e) {
      const ExtensionRow& row = extensions[e];
      for (std::size_t s = 0; s < count; ++s) acc[s] = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double l = row.coeffs(idx(j));
        const double* vj = v.data() + j * kBatch;
        for (std::size_t s = 0; s < count; ++s) acc[s] += l * vj[s];
      }
      for (std::size_t s = 0; s < count; ++s) {
        const double lo = (row.lower - acc[s]) / row.diagonal;
        const double hi = (row.upper - acc[s]) / row.diagonal;
        const double inside = norm_interval_mass(lo, hi);
        const double outside = norm_cdf(lo) + norm_sf(hi);
        ext[e].num[first + s] = mant[s] * inside;
        ext[e].comp[first + s] = mant[s] * outside;
      }
    }
  };

  parallel_for(batch_count(cfg.samples), [&](std::size_t batch) {
    if (r.is_tlr()) {
      detail::TlrRows rows(r.tlr());
      run_batch(rows, batch);
    } else {
      detail::DenseRows rows(r.dense());
      run_batch(rows, batch);
    }
  });

  RatioEstimates out;
  out.denominator = reduce_products(products, cfg.antithetic);
  if (!(out.denominator.value > 0.0) && !std::isfinite(out.denominator.log_value)) {
    throw NumericalError("ratio estimator: denominator sample mean is zero");
  }
  const CommonScale scale = common_scale(products.mantissa, products.exponent);
  out.ratios.reserve(extensions.size());
  for (std::size_t e = 0; e < extensions.size(); ++e) {
    out.ratios.push_back(reduce_ratio(products, ext[e], scale.exponent, cfg.antithetic));
  }
  return out;
}

}  // namespace probitgp
