#include "probitgp/tlr.hpp"

#include <algorithm>
#include <sstream>

#include "probitgp/errors.hpp"
#include "probitgp/parallel.hpp"

namespace probitgp {

namespace {

using Eigen::Index;

Index idx(std::size_t v) { return static_cast<Index>(v); }

LowRankTile compress_tile(const Matrix& dense, double tol) {
  LowRankTile out;
  if (dense.size() == 0 || dense.cwiseAbs().maxCoeff() == 0.0) {
    out.u.resize(dense.rows(), 0);
    out.v.resize(dense.cols(), 0);
    return out;
  }
  Eigen::BDCSVD<Matrix> svd(dense, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sigma = svd.singularValues();
  const double cutoff = tol * sigma(0);
  Index rank = 0;
  while (rank < sigma.size() && sigma(rank) > cutoff) ++rank;
  if (rank == dense.cols()) {
    // Nothing truncated: keep the tile itself so the factor carries no SVD round-off.
    out.u = dense;
    out.v = Matrix::Identity(dense.cols(), dense.cols());
    return out;
  }
  out.u = svd.matrixU().leftCols(rank) * sigma.head(rank).asDiagonal();
  out.v = svd.matrixV().leftCols(rank);
  return out;
}

}  // namespace

std::size_t TlrMatrix::block_extent(std::size_t block) const {
  return std::min(block_size_, n_ - block_start(block));
}

std::size_t TlrMatrix::max_rank() const {
  std::size_t r = 0;
  for (const auto& t : offdiag_) r = std::max(r, t.rank());
  return r;
}

Matrix TlrMatrix::to_dense() const {
  Matrix out = Matrix::Zero(idx(n_), idx(n_));
  for (std::size_t i = 0; i < num_blocks(); ++i) {
    const Index ri = idx(block_start(i));
    const Index mi = idx(block_extent(i));
    out.block(ri, ri, mi, mi) = diagonal_[i].triangularView<Eigen::Lower>();
    for (std::size_t j = 0; j < i; ++j) {
      const auto& t = tile(i, j);
      if (t.rank() == 0) continue;
      out.block(ri, idx(block_start(j)), mi, idx(block_extent(j))) = t.u * t.v.transpose();
    }
  }
  return out;
}

Vector TlrMatrix::forward_solve(const Vector& rhs) const {
  if (static_cast<std::size_t>(rhs.size()) != n_) {
    throw ValidationError("forward_solve: right-hand side has wrong length");
  }
  Vector x(idx(n_));
  for (std::size_t i = 0; i < num_blocks(); ++i) {
    const Index ri = idx(block_start(i));
    const Index mi = idx(block_extent(i));
    Vector r = rhs.segment(ri, mi);
    for (std::size_t j = 0; j < i; ++j) {
      const auto& t = tile(i, j);
      if (t.rank() == 0) continue;
      r.noalias() -= t.u * (t.v.transpose() * x.segment(idx(block_start(j)), idx(block_extent(j))));
    }
    x.segment(ri, mi) = diagonal_[i].triangularView<Eigen::Lower>().solve(r);
  }
  return x;
}

namespace {

// One factorization attempt on an already-shifted matrix; false on a non-positive pivot.
bool factor_tiles(const Matrix& s, std::size_t bs, double tol, std::vector<Matrix>& diagonal,
                  std::vector<LowRankTile>& offdiag) {
  const std::size_t n = static_cast<std::size_t>(s.rows());
  const std::size_t nb = (n + bs - 1) / bs;
  auto start = [bs](std::size_t b) { return idx(b * bs); };
  auto extent = [bs, n](std::size_t b) { return idx(std::min(bs, n - b * bs)); };
  auto at = [](std::size_t i, std::size_t j) { return i * (i - 1) / 2 + j; };

  diagonal.assign(nb, Matrix());
  offdiag.assign(nb * (nb - 1) / 2, LowRankTile());

  for (std::size_t k = 0; k < nb; ++k) {
    Matrix a = s.block(start(k), start(k), extent(k), extent(k));
    for (std::size_t j = 0; j < k; ++j) {
      const auto& t = offdiag[at(k, j)];
      if (t.u.cols() == 0) continue;
      const Matrix gram = t.v.transpose() * t.v;
      a.noalias() -= t.u * gram * t.u.transpose();
    }
    if (!detail::try_cholesky(a, diagonal[k])) return false;
    const Matrix& lkk = diagonal[k];

    parallel_for(nb - k - 1, [&](std::size_t offset) {
      const std::size_t i = k + 1 + offset;
      Matrix aik = s.block(start(i), start(k), extent(i), extent(k));
      for (std::size_t j = 0; j < k; ++j) {
        const auto& ti = offdiag[at(i, j)];
        const auto& tk = offdiag[at(k, j)];
        if (ti.u.cols() == 0 || tk.u.cols() == 0) continue;
        const Matrix core = ti.v.transpose() * tk.v;
        aik.noalias() -= ti.u * core * tk.u.transpose();
      }
      const Matrix lik = lkk.triangularView<Eigen::Lower>().solve(aik.transpose()).transpose();
      offdiag[at(i, k)] = compress_tile(lik, tol);
    });
  }
  return true;
}

}  // namespace

TlrMatrix tlr_compress(const DenseSpd& s, std::size_t block_size, double tol) {
  if (block_size == 0) throw ValidationError("tlr_compress: block_size must be positive");
  if (!(tol >= 0.0)) throw ValidationError("tlr_compress: truncation tolerance must be non-negative");

  TlrMatrix out;
  out.n_ = s.size();
  out.block_size_ = std::min(block_size, s.size());
  out.tol_ = tol;

  const double base = s.mean_diagonal();
  for (const double level : kJitterLadder) {
    const double jitter = level * base;
    bool ok;
    if (jitter == 0.0) {
      ok = factor_tiles(s.matrix(), out.block_size_, tol, out.diagonal_, out.offdiag_);
    } else {
      Matrix shifted = s.matrix();
      shifted.diagonal().array() += jitter;
      ok = factor_tiles(shifted, out.block_size_, tol, out.diagonal_, out.offdiag_);
    }
    if (ok) {
      out.jitter_ = jitter;
      return out;
    }
  }
  throw NumericalError("tile-low-rank Cholesky broke down: matrix is not positive definite after jitter");
}

double tlr_row_matvec(const TlrMatrix& t, std::size_t row, std::span<const double> v) {
  if (row >= t.size()) {
    std::ostringstream msg;
    msg << "tlr_row_matvec: row " << row << " out of range for size " << t.size();
    throw ValidationError(msg.str());
  }
  if (v.size() < row) {
    std::ostringstream msg;
    msg << "tlr_row_matvec: vector of length " << v.size() << " is shorter than the row prefix " << row;
    throw ValidationError(msg.str());
  }
  const std::size_t block = t.block_of(row);
  const std::size_t local = row - t.block_start(block);
  double sum = 0.0;
  for (std::size_t j = 0; j < block; ++j) {
    const auto& tile = t.tile(block, j);
    if (tile.rank() == 0) continue;
    const Eigen::Map<const Vector> vj(v.data() + t.block_start(j), idx(t.block_extent(j)));
    sum += tile.u.row(idx(local)).transpose().dot(tile.v.transpose() * vj);
  }
  const Matrix& diag = t.diagonal_tile(block);
  const std::size_t base = t.block_start(block);
  for (std::size_t c = 0; c < local; ++c) sum += diag(idx(local), idx(c)) * v[base + c];
  return sum;
}

}  // namespace probitgp
