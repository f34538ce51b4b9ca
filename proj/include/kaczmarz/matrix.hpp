#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace kaczmarz {

using Vector = std::vector<double>;

namespace detail {
void require(bool cond, const std::string& msg);
bool all_finite(std::span<const double> v);
}  // namespace detail

/// Row-major dense matrix of 64-bit reals. Construction rejects
/// non-finite entries and mismatched buffer sizes.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols);
  DenseMatrix(std::size_t rows, std::size_t cols, Vector data);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }

  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }
  std::span<double> row(std::size_t i) {
    return {data_.data() + i * cols_, cols_};
  }

  const Vector& data() const { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Vector data_;
};

/// Compressed sparse row matrix. Canonical form: row_ptr nondecreasing,
/// column indices strictly increasing within each row, no stored zeros.
/// Construction validates and drops explicit zeros.
class CsrMatrix {
 public:
  CsrMatrix() = default;
  CsrMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_ptr,
            std::vector<std::size_t> col_idx, Vector values);

  /// Builds from (row, col, value) triplets: duplicates are summed,
  /// entries sorted per row, exact zeros dropped.
  static CsrMatrix from_triplets(std::size_t rows, std::size_t cols,
                                 std::span<const std::size_t> row_idx,
                                 std::span<const std::size_t> col_idx,
                                 std::span<const double> values);

  static CsrMatrix from_dense(const DenseMatrix& d);
  DenseMatrix to_dense() const;

  CsrMatrix transpose() const;

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nnz() const { return values_.size(); }

  std::size_t row_nnz(std::size_t i) const { return row_ptr_[i + 1] - row_ptr_[i]; }
  std::span<const std::size_t> row_cols(std::size_t i) const {
    return {col_idx_.data() + row_ptr_[i], row_nnz(i)};
  }
  std::span<const double> row_values(std::size_t i) const {
    return {values_.data() + row_ptr_[i], row_nnz(i)};
  }

  const std::vector<std::size_t>& row_ptr() const { return row_ptr_; }
  const std::vector<std::size_t>& col_idx() const { return col_idx_; }
  const Vector& values() const { return values_; }

  bool has_zero_row() const;
  bool has_zero_col() const;

 private:
  void validate() const;
  void drop_zeros();

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_ptr_ = {0};
  std::vector<std::size_t> col_idx_;
  Vector values_;
};

using Matrix = std::variant<DenseMatrix, CsrMatrix>;

std::size_t rows(const Matrix& a);
std::size_t cols(const Matrix& a);
std::size_t nnz(const Matrix& a);
bool is_sparse(const Matrix& a);
DenseMatrix densify(const Matrix& a);

}  // namespace kaczmarz
