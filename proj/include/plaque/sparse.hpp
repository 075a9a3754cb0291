#pragma once

#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

namespace plaque {

struct Triplet {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

struct Triplets {
  int nrows = 0;
  int ncols = 0;
  std::vector<Triplet> entries;

  Triplets() = default;
  Triplets(int rows, int cols) : nrows(rows), ncols(cols) {}
  void add(int row, int col, double value) { entries.push_back({row, col, value}); }
};

/// Compressed sparse row matrix with strictly increasing columns per row.
class CsrMatrix {
 public:
  CsrMatrix() = default;
  CsrMatrix(int nrows, int ncols, std::vector<int> offsets, std::vector<int> cols,
            std::vector<double> values);

  int rows() const { return nrows_; }
  int cols() const { return ncols_; }
  int nonzeros() const { return static_cast<int>(values_.size()); }

  std::span<const int> offsets() const { return offsets_; }
  std::span<const int> col_indices() const { return cols_; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  /// Storage slot of (row, col), or -1 when the entry is not stored.
  int slot(int row, int col) const;
  /// Value at (row, col); zero when not stored.
  double coeff(int row, int col) const;

  void multiply(std::span<const double> x, std::span<double> y) const;
  std::vector<double> multiply(std::span<const double> x) const;
  /// x^T A y
  double bilinear(std::span<const double> x, std::span<const double> y) const;

  bool same_pattern(const CsrMatrix& other) const;

 private:
  int nrows_ = 0;
  int ncols_ = 0;
  std::vector<int> offsets_{0};
  std::vector<int> cols_;
  std::vector<double> values_;
};

/// Duplicates are summed; explicit zeros are kept.
CsrMatrix to_csr(const Triplets& t);

/// Sparse LU with partial pivoting. The symbolic analysis is kept between
/// factorizations that share a sparsity pattern.
class SparseLu {
 public:
  SparseLu();
  ~SparseLu();
  SparseLu(SparseLu&&) noexcept;
  SparseLu& operator=(SparseLu&&) noexcept;

  /// Throws SingularMatrix when no usable pivot exists.
  void factorize(const CsrMatrix& a);
  std::vector<double> solve(std::span<const double> rhs) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Residual tolerance promised by factor_and_solve: ||Ax - b|| <= kSolveTolerance (1 + ||b||).
inline constexpr double kSolveTolerance = 1e-10;
/// Pivots with magnitude below this are treated as zero.
inline constexpr double kPivotThreshold = 1e-14;

std::vector<double> factor_and_solve(const CsrMatrix& a, std::span<const double> rhs);

/// ||Ax - b||_2. Throws DimensionMismatch.
double residual_norm(const CsrMatrix& a, std::span<const double> x, std::span<const double> rhs);

double norm2(std::span<const double> v);
double norm_inf(std::span<const double> v);

/// MatrixMarket coordinate real general.
void write_matrix_market(const CsrMatrix& a, std::ostream& out);

}  // namespace plaque
