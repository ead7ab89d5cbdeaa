#pragma once

// Batched separation-of-variables sample loop shared by the dense and tile-low-rank paths.
//
// A batch holds kBatch consecutive samples. The conditional draws v_j of all samples in the
// batch are kept row-major (row j holds v_j for every sample), so each row's inner product
// sum_{k<j} l_jk v_k is an axpy across the batch. Per-sample arithmetic never depends on how
// batches are distributed over workers.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "probitgp/normal.hpp"
#include "probitgp/philox.hpp"
#include "probitgp/tlr.hpp"
#include "probitgp/types.hpp"

namespace probitgp::detail {

inline constexpr std::size_t kBatch = 64;
inline constexpr double kQuantileClampLo = 1e-16;
inline constexpr double kQuantileClampHi = 1.0 - 1e-16;

/// Sample product stored as mantissa * 2^exponent so that long products do not underflow.
struct ScaledSamples {
  std::vector<double> mantissa;
  std::vector<int> exponent;

  explicit ScaledSamples(std::size_t count) : mantissa(count, 0.0), exponent(count, 0) {}
};

inline double clamp_probability(double p) {
  return p < kQuantileClampLo ? kQuantileClampLo : (p > kQuantileClampHi ? kQuantileClampHi : p);
}

class DenseRows {
 public:
  explicit DenseRows(const Matrix& lower) : lower_(lower) {}

  std::size_t size() const { return static_cast<std::size_t>(lower_.rows()); }
  double diag(std::size_t i) const { return lower_(idx(i), idx(i)); }

  void inner(std::size_t i, const double* v, std::size_t count, double* acc) {
    for (std::size_t s = 0; s < count; ++s) acc[s] = 0.0;
    for (std::size_t j = 0; j < i; ++j) {
      const double l = lower_(idx(i), idx(j));
      const double* row = v + j * kBatch;
      for (std::size_t s = 0; s < count; ++s) acc[s] += l * row[s];
    }
  }

 private:
  static Eigen::Index idx(std::size_t v) { return static_cast<Eigen::Index>(v); }
  const Matrix& lower_;
};

class TlrRows {
 public:
  explicit TlrRows(const TlrMatrix& factor) : t_(factor), y_(factor.block_size() * kBatch), w_() {}

  std::size_t size() const { return t_.size(); }
  double diag(std::size_t i) const {
    const std::size_t block = t_.block_of(i);
    const auto local = static_cast<Eigen::Index>(i - t_.block_start(block));
    return t_.diagonal_tile(block)(local, local);
  }

  void inner(std::size_t i, const double* v, std::size_t count, double* acc) {
    const std::size_t block = t_.block_of(i);
    const std::size_t start = t_.block_start(block);
    const std::size_t local = i - start;
    if (local == 0) accumulate_low_rank(block, v, count);

    const double* y = y_.data() + local * kBatch;
    for (std::size_t s = 0; s < count; ++s) acc[s] = y[s];
    const Matrix& diag_tile = t_.diagonal_tile(block);
    for (std::size_t c = 0; c < local; ++c) {
      const double l = diag_tile(static_cast<Eigen::Index>(local), static_cast<Eigen::Index>(c));
      const double* row = v + (start + c) * kBatch;
      for (std::size_t s = 0; s < count; ++s) acc[s] += l * row[s];
    }
  }

 private:
  // y = sum_{j < block} U_{block,j} (V_{block,j}^T v_j) for every sample in the batch.
  void accumulate_low_rank(std::size_t block, const double* v, std::size_t count) {
    const std::size_t extent = t_.block_extent(block);
    std::fill(y_.begin(), y_.begin() + static_cast<std::ptrdiff_t>(extent * kBatch), 0.0);
    for (std::size_t j = 0; j < block; ++j) {
      const LowRankTile& tile = t_.tile(block, j);
      const std::size_t rank = tile.rank();
      if (rank == 0) continue;
      const std::size_t start_j = t_.block_start(j);
      const std::size_t extent_j = t_.block_extent(j);
      w_.assign(rank * kBatch, 0.0);
      for (std::size_t k = 0; k < rank; ++k) {
        double* wk = w_.data() + k * kBatch;
        for (std::size_t c = 0; c < extent_j; ++c) {
          const double coef = tile.v(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(k));
          const double* row = v + (start_j + c) * kBatch;
          for (std::size_t s = 0; s < count; ++s) wk[s] += coef * row[s];
        }
      }
      for (std::size_t r = 0; r < extent; ++r) {
        double* yr = y_.data() + r * kBatch;
        for (std::size_t k = 0; k < rank; ++k) {
          const double coef = tile.u(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k));
          const double* wk = w_.data() + k * kBatch;
          for (std::size_t s = 0; s < count; ++s) yr[s] += coef * wk[s];
        }
      }
    }
  }

  const TlrMatrix& t_;
  std::vector<double> y_;
  std::vector<double> w_;
};

/// Mass of [lo, hi] and the conditional draw Phi^{-1}(d + u (e - d)), computed on the tail
/// side that keeps relative precision.
inline void sov_step(double lo, double hi, double u, double& mass, double& draw) {
  if (lo > 0.0) {
    const double dc = norm_sf(lo);
    const double ec = norm_sf(hi);
    mass = dc - ec;
    draw = -norm_quantile(clamp_probability(dc - u * mass));
  } else {
    const double d = norm_cdf(lo);
    const double e = norm_cdf(hi);
    mass = e - d;
    draw = norm_quantile(clamp_probability(d + u * mass));
  }
}

/// Runs samples [first, first + count) through all rows. On return `v` holds the conditional
/// draws (row-major, stride kBatch) and mantissa/exponent hold each sample's product.
template <class Rows>
void run_sov_batch(Rows& rows, const Vector& a, const Vector& b, const UniformStream& stream,
                   bool antithetic, std::size_t first, std::size_t count, std::vector<double>& v,
                   double* mantissa, int* exponent) {
  const std::size_t n = rows.size();
  v.resize(n * kBatch);
  std::array<double, kBatch> acc{};
  std::array<double, kBatch> odd_uniform{};
  for (std::size_t s = 0; s < count; ++s) {
    mantissa[s] = 1.0;
    exponent[s] = 0;
  }

  for (std::size_t i = 0; i < n; ++i) {
    rows.inner(i, v.data(), count, acc.data());
    const double lii = rows.diag(i);
    const double ai = a(static_cast<Eigen::Index>(i));
    const double bi = b(static_cast<Eigen::Index>(i));
    double* vi = v.data() + i * kBatch;
    for (std::size_t s = 0; s < count; ++s) {
      const std::size_t r = first + s;
      const std::size_t base = antithetic ? r / 2 : r;
      double u;
      if ((i & 1U) == 0) {
        const auto pr = stream.pair(base, i / 2);
        u = pr[0];
        odd_uniform[s] = pr[1];
      } else {
        u = odd_uniform[s];
      }
      if (antithetic && (r & 1U) != 0) u = 1.0 - u;

      double mass;
      double draw;
      sov_step((ai - acc[s]) / lii, (bi - acc[s]) / lii, u, mass, draw);
      vi[s] = draw;
      double m = mantissa[s] * mass;
      if (m < 0x1p-500 && m > 0.0) {
        int e;
        m = std::frexp(m, &e);
        exponent[s] += e;
      }
      mantissa[s] = m;
    }
  }
}

}  // namespace probitgp::detail
