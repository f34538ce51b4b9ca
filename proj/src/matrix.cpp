#include "kaczmarz/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace kaczmarz {

namespace detail {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace detail

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, Vector data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  detail::require(data_.size() == rows_ * cols_, "dense matrix: buffer size mismatch");
  detail::require(detail::all_finite(data_), "dense matrix: non-finite entry");
}

CsrMatrix::CsrMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_ptr,
                     std::vector<std::size_t> col_idx, Vector values)
    : rows_(rows),
      cols_(cols),
      row_ptr_(std::move(row_ptr)),
      col_idx_(std::move(col_idx)),
      values_(std::move(values)) {
  validate();
  drop_zeros();
}

void CsrMatrix::validate() const {
  detail::require(row_ptr_.size() == rows_ + 1, "csr: row_ptr size must be rows+1");
  detail::require(row_ptr_.front() == 0, "csr: row_ptr must start at 0");
  detail::require(row_ptr_.back() == col_idx_.size(), "csr: row_ptr must end at nnz");
  detail::require(col_idx_.size() == values_.size(), "csr: col/value size mismatch");
  for (std::size_t i = 0; i < rows_; ++i) {
    detail::require(row_ptr_[i] <= row_ptr_[i + 1], "csr: row_ptr not nondecreasing");
    for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
      detail::require(col_idx_[p] < cols_, "csr: column index out of range");
      if (p > row_ptr_[i])
        detail::require(col_idx_[p - 1] < col_idx_[p],
                        "csr: column indices must be strictly increasing per row");
    }
  }
  detail::require(detail::all_finite(values_), "csr: non-finite value");
}

void CsrMatrix::drop_zeros() {
  if (std::none_of(values_.begin(), values_.end(), [](double v) { return v == 0.0; }))
    return;
  std::vector<std::size_t> new_ptr(rows_ + 1, 0);
  std::vector<std::size_t> new_idx;
  Vector new_val;
  new_idx.reserve(col_idx_.size());
  new_val.reserve(values_.size());
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
      if (values_[p] != 0.0) {
        new_idx.push_back(col_idx_[p]);
        new_val.push_back(values_[p]);
      }
    }
    new_ptr[i + 1] = new_idx.size();
  }
  row_ptr_ = std::move(new_ptr);
  col_idx_ = std::move(new_idx);
  values_ = std::move(new_val);
}

CsrMatrix CsrMatrix::from_triplets(std::size_t rows, std::size_t cols,
                                   std::span<const std::size_t> row_idx,
                                   std::span<const std::size_t> col_idx,
                                   std::span<const double> values) {
  detail::require(row_idx.size() == col_idx.size() && col_idx.size() == values.size(),
                  "triplets: array length mismatch");
  const std::size_t t = values.size();
  for (std::size_t p = 0; p < t; ++p) {
    detail::require(row_idx[p] < rows, "triplets: row index out of range");
    detail::require(col_idx[p] < cols, "triplets: column index out of range");
  }
  std::vector<std::size_t> order(t);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (row_idx[a] != row_idx[b]) return row_idx[a] < row_idx[b];
    return col_idx[a] < col_idx[b];
  });

  std::vector<std::size_t> ptr(rows + 1, 0);
  std::vector<std::size_t> idx;
  Vector val;
  idx.reserve(t);
  val.reserve(t);
  std::size_t cur_row = 0;
  for (std::size_t q = 0; q < t; ++q) {
    const std::size_t p = order[q];
    const std::size_t r = row_idx[p], c = col_idx[p];
    while (cur_row < r) ptr[++cur_row] = idx.size();
    if (!idx.empty() && ptr[cur_row] < idx.size() && idx.back() == c) {
      val.back() += values[p];  // duplicate entry: accumulate
    } else {
      idx.push_back(c);
      val.push_back(values[p]);
    }
  }
  while (cur_row < rows) ptr[++cur_row] = idx.size();
  return CsrMatrix(rows, cols, std::move(ptr), std::move(idx), std::move(val));
}

CsrMatrix CsrMatrix::from_dense(const DenseMatrix& d) {
  std::vector<std::size_t> ptr(d.rows() + 1, 0);
  std::vector<std::size_t> idx;
  Vector val;
  for (std::size_t i = 0; i < d.rows(); ++i) {
    for (std::size_t j = 0; j < d.cols(); ++j) {
      if (d(i, j) != 0.0) {
        idx.push_back(j);
        val.push_back(d(i, j));
      }
    }
    ptr[i + 1] = idx.size();
  }
  return CsrMatrix(d.rows(), d.cols(), std::move(ptr), std::move(idx), std::move(val));
}

DenseMatrix CsrMatrix::to_dense() const {
  DenseMatrix d(rows_, cols_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p)
      d(i, col_idx_[p]) = values_[p];
  return d;
}

CsrMatrix CsrMatrix::transpose() const {
  std::vector<std::size_t> ptr(cols_ + 1, 0);
  for (std::size_t c : col_idx_) ++ptr[c + 1];
  for (std::size_t j = 0; j < cols_; ++j) ptr[j + 1] += ptr[j];
  std::vector<std::size_t> idx(nnz());
  Vector val(nnz());
  std::vector<std::size_t> next(ptr.begin(), ptr.end() - 1);
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
      const std::size_t dst = next[col_idx_[p]]++;
      idx[dst] = i;
      val[dst] = values_[p];
    }
  }
  return CsrMatrix(cols_, rows_, std::move(ptr), std::move(idx), std::move(val));
}

bool CsrMatrix::has_zero_row() const {
  for (std::size_t i = 0; i < rows_; ++i)
    if (row_ptr_[i] == row_ptr_[i + 1]) return true;
  return false;
}

bool CsrMatrix::has_zero_col() const {
  std::vector<char> seen(cols_, 0);
  for (std::size_t c : col_idx_) seen[c] = 1;
  return std::find(seen.begin(), seen.end(), 0) != seen.end();
}

std::size_t rows(const Matrix& a) {
  return std::visit([](const auto& m) { return m.rows(); }, a);
}

std::size_t cols(const Matrix& a) {
  return std::visit([](const auto& m) { return m.cols(); }, a);
}

std::size_t nnz(const Matrix& a) {
  if (const auto* s = std::get_if<CsrMatrix>(&a)) return s->nnz();
  return rows(a) * cols(a);
}

bool is_sparse(const Matrix& a) { return std::holds_alternative<CsrMatrix>(a); }

DenseMatrix densify(const Matrix& a) {
  if (const auto* s = std::get_if<CsrMatrix>(&a)) return s->to_dense();
  return std::get<DenseMatrix>(a);
}

}  // namespace kaczmarz
