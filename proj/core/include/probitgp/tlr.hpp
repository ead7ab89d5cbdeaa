#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "probitgp/dense.hpp"
#include "probitgp/types.hpp"

namespace probitgp {

/// Off-diagonal factor tile stored as U * V^T (U: rows x k, V: cols x k). A tile that is exactly
/// zero has rank 0 and empty factors.
struct LowRankTile {
  Matrix u;
  Matrix v;

  std::size_t rank() const { return static_cast<std::size_t>(u.cols()); }
};

/// Tile-low-rank lower Cholesky factor. Dense lower-triangular diagonal tiles, low-rank strictly
/// lower tiles. The last block may be smaller than block_size when it does not divide n.
class TlrMatrix {
 public:
  std::size_t size() const { return n_; }
  std::size_t block_size() const { return block_size_; }
  std::size_t num_blocks() const { return diagonal_.size(); }
  std::size_t block_start(std::size_t block) const { return block * block_size_; }
  std::size_t block_extent(std::size_t block) const;
  std::size_t block_of(std::size_t row) const { return row / block_size_; }

  const Matrix& diagonal_tile(std::size_t block) const { return diagonal_[block]; }
  /// Tile at (block_row, block_col), block_row > block_col.
  const LowRankTile& tile(std::size_t block_row, std::size_t block_col) const {
    return offdiag_[offdiag_index(block_row, block_col)];
  }

  double truncation_tol() const { return tol_; }
  double jitter() const { return jitter_; }
  std::size_t max_rank() const;

  /// Materializes the full lower-triangular factor.
  Matrix to_dense() const;

  /// Solves L x = rhs by block forward substitution through the tiles.
  Vector forward_solve(const Vector& rhs) const;

 private:
  friend TlrMatrix tlr_compress(const DenseSpd& s, std::size_t block_size, double tol);

  static std::size_t offdiag_index(std::size_t i, std::size_t j) { return i * (i - 1) / 2 + j; }

  std::size_t n_ = 0;
  std::size_t block_size_ = 1;
  double tol_ = 0.0;
  double jitter_ = 0.0;
  std::vector<Matrix> diagonal_;
  std::vector<LowRankTile> offdiag_;
};

/// Left-looking block Cholesky of s in which every off-diagonal factor tile is truncated by SVD
/// to the smallest rank whose largest discarded singular value is at most tol times the tile's
/// largest singular value (tol = 0 keeps every nonzero singular value). Applies the same jitter
/// ladder as dense_cholesky to the whole matrix on breakdown.
TlrMatrix tlr_compress(const DenseSpd& s, std::size_t block_size, double tol);

/// Dot product of the factor's row `row` (0-based), restricted to columns [0, row), with v.
/// Evaluated through the tile factors without materializing the row.
double tlr_row_matvec(const TlrMatrix& t, std::size_t row, std::span<const double> v);

}  // namespace probitgp
