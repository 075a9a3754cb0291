#include "plaque/sparse.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>

#include "plaque/errors.hpp"

namespace plaque {

CsrMatrix::CsrMatrix(int nrows, int ncols, std::vector<int> offsets, std::vector<int> cols,
                     std::vector<double> values)
    : nrows_(nrows),
      ncols_(ncols),
      offsets_(std::move(offsets)),
      cols_(std::move(cols)),
      values_(std::move(values)) {
  if (static_cast<int>(offsets_.size()) != nrows_ + 1 || cols_.size() != values_.size() ||
      offsets_.back() != static_cast<int>(values_.size())) {
    throw DimensionMismatch("CsrMatrix: inconsistent storage arrays");
  }
}

int CsrMatrix::slot(int row, int col) const {
  const auto begin = cols_.begin() + offsets_[row];
  const auto end = cols_.begin() + offsets_[row + 1];
  const auto it = std::lower_bound(begin, end, col);
  if (it == end || *it != col) return -1;
  return static_cast<int>(it - cols_.begin());
}

double CsrMatrix::coeff(int row, int col) const {
  const int s = slot(row, col);
  return s < 0 ? 0.0 : values_[s];
}

void CsrMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  if (static_cast<int>(x.size()) != ncols_ || static_cast<int>(y.size()) != nrows_) {
    throw DimensionMismatch("CsrMatrix::multiply: vector size does not match matrix");
  }
  for (int r = 0; r < nrows_; ++r) {
    double sum = 0.0;
    for (int k = offsets_[r]; k < offsets_[r + 1]; ++k) sum += values_[k] * x[cols_[k]];
    y[r] = sum;
  }
}

std::vector<double> CsrMatrix::multiply(std::span<const double> x) const {
  std::vector<double> y(nrows_);
  multiply(x, y);
  return y;
}

double CsrMatrix::bilinear(std::span<const double> x, std::span<const double> y) const {
  if (static_cast<int>(x.size()) != nrows_ || static_cast<int>(y.size()) != ncols_) {
    throw DimensionMismatch("CsrMatrix::bilinear: vector size does not match matrix");
  }
  double total = 0.0;
  for (int r = 0; r < nrows_; ++r) {
    double sum = 0.0;
    for (int k = offsets_[r]; k < offsets_[r + 1]; ++k) sum += values_[k] * y[cols_[k]];
    total += x[r] * sum;
  }
  return total;
}

bool CsrMatrix::same_pattern(const CsrMatrix& other) const {
  return nrows_ == other.nrows_ && ncols_ == other.ncols_ && offsets_ == other.offsets_ &&
         cols_ == other.cols_;
}

CsrMatrix to_csr(const Triplets& t) {
  std::vector<int> counts(static_cast<std::size_t>(t.nrows) + 1, 0);
  for (const auto& e : t.entries) {
    if (e.row < 0 || e.row >= t.nrows || e.col < 0 || e.col >= t.ncols) {
      throw DimensionMismatch("to_csr: entry (" + std::to_string(e.row) + ", " +
                              std::to_string(e.col) + ") outside matrix");
    }
    ++counts[e.row + 1];
  }
  std::partial_sum(counts.begin(), counts.end(), counts.begin());

  // bucket by row (stable), then sort and merge columns within each row
  std::vector<std::pair<int, double>> bucket(t.entries.size());
  std::vector<int> fill(counts.begin(), counts.end() - 1);
  for (const auto& e : t.entries) bucket[fill[e.row]++] = {e.col, e.value};

  std::vector<int> offsets(static_cast<std::size_t>(t.nrows) + 1, 0);
  std::vector<int> cols;
  std::vector<double> values;
  cols.reserve(bucket.size());
  values.reserve(bucket.size());
  for (int r = 0; r < t.nrows; ++r) {
    auto first = bucket.begin() + counts[r];
    auto last = bucket.begin() + counts[r + 1];
    std::stable_sort(first, last, [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto it = first; it != last; ++it) {
      if (!cols.empty() && static_cast<int>(cols.size()) > offsets[r] && cols.back() == it->first) {
        values.back() += it->second;
      } else {
        cols.push_back(it->first);
        values.push_back(it->second);
      }
    }
    offsets[r + 1] = static_cast<int>(cols.size());
  }
  return CsrMatrix(t.nrows, t.ncols, std::move(offsets), std::move(cols), std::move(values));
}

struct SparseLu::Impl {
  using Matrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
  Eigen::SparseLU<Matrix, Eigen::COLAMDOrdering<int>> lu;
  Matrix a;
  CsrMatrix pattern;
  bool analyzed = false;
  int n = 0;
};

SparseLu::SparseLu() : impl_(std::make_unique<Impl>()) {}
SparseLu::~SparseLu() = default;
SparseLu::SparseLu(SparseLu&&) noexcept = default;
SparseLu& SparseLu::operator=(SparseLu&&) noexcept = default;

void SparseLu::factorize(const CsrMatrix& a) {
  if (a.rows() != a.cols()) throw DimensionMismatch("SparseLu: matrix is not square");
  auto& m = *impl_;
  const int n = a.rows();

  // CSR of A is CSC of A^T; build A in column-major via a transpose copy
  Eigen::Map<const Eigen::SparseMatrix<double, Eigen::RowMajor, int>> view(
      n, n, a.nonzeros(), a.offsets().data(), a.col_indices().data(), a.values().data());
  m.a = view;
  m.a.makeCompressed();

  const bool reuse = m.analyzed && m.n == n && a.same_pattern(m.pattern);
  if (!reuse) {
    m.lu.analyzePattern(m.a);
    m.pattern = a;
    m.analyzed = true;
    m.n = n;
  }
  m.lu.factorize(m.a);
  if (m.lu.info() != Eigen::Success) {
    throw SingularMatrix("sparse LU failed: " + m.lu.lastErrorMessage());
  }

  double scale = 0.0;
  for (double v : a.values()) scale = std::max(scale, std::abs(v));
  double smallest = std::numeric_limits<double>::infinity();
  const auto& lstore = m.lu.matrixL().m_mapL;
  for (Eigen::Index j = 0; j < n; ++j) {
    double pivot = 0.0;
    for (typename std::decay_t<decltype(lstore)>::InnerIterator it(lstore, j); it; ++it) {
      if (it.index() == j) {
        pivot = std::abs(it.value());
        break;
      }
    }
    smallest = std::min(smallest, pivot);
  }
  if (n > 0 && !(smallest > kPivotThreshold * scale)) {
    throw SingularMatrix("sparse LU: pivot " + std::to_string(smallest) + " below threshold");
  }
}

std::vector<double> SparseLu::solve(std::span<const double> rhs) const {
  const auto& m = *impl_;
  if (!m.analyzed) throw SingularMatrix("SparseLu::solve called before factorize");
  if (static_cast<int>(rhs.size()) != m.n) throw DimensionMismatch("SparseLu::solve: rhs size");
  Eigen::Map<const Eigen::VectorXd> b(rhs.data(), m.n);
  Eigen::VectorXd x = m.lu.solve(b);
  std::vector<double> out(x.data(), x.data() + m.n);
  for (double v : out) {
    if (!std::isfinite(v)) throw SingularMatrix("sparse LU produced a non-finite solution");
  }
  return out;
}

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double norm_inf(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s = std::max(s, std::abs(x));
  return s;
}

double residual_norm(const CsrMatrix& a, std::span<const double> x, std::span<const double> rhs) {
  if (static_cast<int>(x.size()) != a.cols() || static_cast<int>(rhs.size()) != a.rows()) {
    throw DimensionMismatch("residual_norm: dimensions incompatible");
  }
  auto r = a.multiply(x);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= rhs[i];
  return norm2(r);
}

std::vector<double> factor_and_solve(const CsrMatrix& a, std::span<const double> rhs) {
  if (static_cast<int>(rhs.size()) != a.rows()) throw DimensionMismatch("factor_and_solve: rhs size");
  SparseLu lu;
  lu.factorize(a);
  auto x = lu.solve(rhs);
  const double bound = kSolveTolerance * (1.0 + norm2(rhs));
  // iterative refinement when the first solve misses the residual contract
  for (int pass = 0; pass < 3; ++pass) {
    auto r = a.multiply(x);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = rhs[i] - r[i];
    if (norm2(r) <= bound) return x;
    const auto dx = lu.solve(r);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += dx[i];
  }
  if (residual_norm(a, x, rhs) > bound) {
    throw SingularMatrix("factor_and_solve: residual above tolerance, matrix numerically singular");
  }
  return x;
}

void write_matrix_market(const CsrMatrix& a, std::ostream& out) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << a.rows() << ' ' << a.cols() << ' ' << a.nonzeros() << '\n';
  out.precision(17);
  const auto off = a.offsets();
  const auto cols = a.col_indices();
  const auto vals = a.values();
  for (int r = 0; r < a.rows(); ++r) {
    for (int k = off[r]; k < off[r + 1]; ++k) out << r + 1 << ' ' << cols[k] + 1 << ' ' << vals[k] << '\n';
  }
}

}  // namespace plaque
