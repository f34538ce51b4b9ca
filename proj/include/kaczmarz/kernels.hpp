#pragma once

#include <cstdint>

#include "kaczmarz/matrix.hpp"

namespace kaczmarz {

/// Arithmetic tally used by the flop-accounted kernels. Counting
/// convention (matches the cost model in flops.hpp):
///   * every *, +, -, / between reals is one flop,
///   * an accumulation of t terms costs 2t-1 (the first contribution
///     to an output is an assignment, not an add).
struct FlopCount {
  std::uint64_t flops = 0;
};

/// Squared Euclidean norms of all rows. Throws if some row is
/// identically zero (solver sampling would be ill-posed).
Vector row_sq_norms(const DenseMatrix& a);
Vector row_sq_norms(const CsrMatrix& a);
Vector row_sq_norms(const Matrix& a);

/// y = A x.
Vector matvec(const DenseMatrix& a, const Vector& x);
Vector matvec(const CsrMatrix& a, const Vector& x);
Vector matvec(const Matrix& a, const Vector& x);

/// y = A^T x.
Vector matvec_transpose(const DenseMatrix& a, const Vector& x);
Vector matvec_transpose(const CsrMatrix& a, const Vector& x);
Vector matvec_transpose(const Matrix& a, const Vector& x);

/// Column i of A A^T as a dense length-m vector, i.e. A applied to
/// the i-th row of A. Entry ell accumulates products in increasing
/// column order, which keeps it bit-identical to the corresponding
/// entry of gram_matrix().
Vector gram_column(const DenseMatrix& a, std::size_t i);
Vector gram_column(const CsrMatrix& a, std::size_t i);
Vector gram_column(const Matrix& a, std::size_t i);

/// B = A A^T, dense for dense input, CSR with symmetric pattern for
/// sparse input. Each unordered pair is computed once and mirrored,
/// so the result is exactly symmetric. Exact zeros produced by
/// cancellation are dropped from the sparse result.
DenseMatrix gram_matrix(const DenseMatrix& a, FlopCount* fc = nullptr);
CsrMatrix gram_matrix(const CsrMatrix& a, FlopCount* fc = nullptr);
Matrix gram_matrix(const Matrix& a, FlopCount* fc = nullptr);

/// Plain single-threaded reference kernels. The OpenMP kernels above
/// parallelize across output entries only, with each entry reduced
/// serially, so both flavors must produce bit-identical results; the
/// test suite asserts this and tools/bench_kernels compares speed.
namespace serial {
Vector row_sq_norms(const DenseMatrix& a);
Vector row_sq_norms(const CsrMatrix& a);
Vector matvec(const DenseMatrix& a, const Vector& x);
Vector matvec(const CsrMatrix& a, const Vector& x);
Vector matvec_transpose(const DenseMatrix& a, const Vector& x);
Vector matvec_transpose(const CsrMatrix& a, const Vector& x);
Vector gram_column(const DenseMatrix& a, std::size_t i);
Vector gram_column(const CsrMatrix& a, std::size_t i);
DenseMatrix gram_matrix(const DenseMatrix& a, FlopCount* fc = nullptr);
CsrMatrix gram_matrix(const CsrMatrix& a, FlopCount* fc = nullptr);
}  // namespace serial

// Small shared helpers (serial by construction).
double dot(std::span<const double> a, std::span<const double> b);
double sparse_row_dot_dense(const CsrMatrix& a, std::size_t i, const Vector& x);
double norm_sq(std::span<const double> v);
double norm2(std::span<const double> v);

}  // namespace kaczmarz
