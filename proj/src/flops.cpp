#include "kaczmarz/flops.hpp"

#include <stdexcept>

namespace kaczmarz {

SparsityProfile profile(const CsrMatrix& a) {
  const std::size_t m = a.rows(), n = a.cols();
  SparsityProfile p;
  p.m = m;
  p.n = n;
  p.row_nnz.resize(m);
  p.col_nnz.assign(n, 0);
  p.overlap_rows.assign(m, 0);
  p.overlap_nnz.assign(m, 0);

  for (std::size_t i = 0; i < m; ++i) p.row_nnz[i] = a.row_nnz(i);
  for (std::size_t c : a.col_idx()) ++p.col_nnz[c];

  const CsrMatrix at = a.transpose();
  std::vector<std::uint64_t> shared(m, 0);
  std::vector<std::size_t> touched;
  for (std::size_t i = 0; i < m; ++i) {
    touched.clear();
    for (std::size_t j : a.row_cols(i)) {
      for (std::size_t ell : at.row_cols(j)) {
        if (shared[ell] == 0) touched.push_back(ell);
        ++shared[ell];
      }
    }
    p.overlap_rows[i] = touched.size();
    std::uint64_t s = 0;
    for (std::size_t ell : touched) {
      s += shared[ell];
      if (i <= ell) p.upper_overlap_nnz += shared[ell];
      shared[ell] = 0;
    }
    p.overlap_nnz[i] = s;
    p.pair_count += p.overlap_rows[i];
  }
  return p;
}

SparsityProfile dense_profile(std::size_t m, std::size_t n) {
  SparsityProfile p;
  p.m = m;
  p.n = n;
  p.row_nnz.assign(m, n);
  p.col_nnz.assign(n, m);
  p.overlap_rows.assign(m, m);
  p.overlap_nnz.assign(m, static_cast<std::uint64_t>(m) * n);
  p.pair_count = static_cast<std::uint64_t>(m) * m;
  // pairs (i, ell) with i <= ell: m(m+1)/2 of them, n shared columns each
  p.upper_overlap_nnz = static_cast<std::uint64_t>(m) * (m + 1) / 2 * n;
  return p;
}

namespace {

std::uint64_t sum(const std::vector<std::uint64_t>& v) {
  std::uint64_t s = 0;
  for (std::uint64_t x : v) s += x;
  return s;
}

void check_row(const SparsityProfile& p, std::size_t i) {
  if (i >= p.m) throw std::invalid_argument("flops: row index out of range");
}

}  // namespace

// REK setup: ||A_{i,:}||^2 for every row (2 s_{i,i} - 1 each) and
// ||A_{:,j}||^2 for every column (2 m_j - 1 each).
std::uint64_t rek_init_flops(const SparsityProfile& p) {
  return 2 * sum(p.row_nnz) - p.m + 2 * sum(p.col_nnz) - p.n;
}

// One REK iteration: project z against column j (dot 2m_j - 1, one
// divide, axpy 2m_j), then update x against row i (dot 2s - 1, minus
// b_i, plus z_i, one divide, axpy 2s).
std::uint64_t rek_step_flops(const SparsityProfile& p, std::size_t i, std::size_t j) {
  check_row(p, i);
  if (j >= p.n) throw std::invalid_argument("flops: column index out of range");
  return 4 * p.row_nnz[i] + 4 * p.col_nnz[j] + 2;
}

// Stored-Gram setup: the upper triangle of A A^T (2 s_{i,ell} - 1
// per stored pair), the Gram column norms from squaring each stored
// upper entry once ((|T| + m)/2 multiplies, |T| - m adds), and the
// row norms (2 s_{i,i} - 1 each).
std::uint64_t rkas_stored_init_flops(const SparsityProfile& p) {
  const std::uint64_t upper_pairs = (p.pair_count + p.m) / 2;
  const std::uint64_t gram = 2 * p.upper_overlap_nnz - upper_pairs;
  const std::uint64_t col_norms = upper_pairs + (p.pair_count - p.m);
  const std::uint64_t row_norms = 2 * sum(p.row_nnz) - p.m;
  return gram + col_norms + row_norms;
}

// One stored-Gram iteration: dot of the Gram column with the
// residual (2|T_i| - 1), one divide (column norm precomputed),
// axpy on x over row i (2 s_{i,i}), axpy on the residual (2|T_i|).
std::uint64_t rkas_stored_step_flops(const SparsityProfile& p, std::size_t i) {
  check_row(p, i);
  return 2 * p.row_nnz[i] + 4 * p.overlap_rows[i];
}

// On-the-fly setup: row norms only.
std::uint64_t rkas_unstored_init_flops(const SparsityProfile& p) {
  return 2 * sum(p.row_nnz) - p.m;
}

// One on-the-fly iteration: build the Gram column (2 s_{i,ell} - 1
// per overlapping row), dot it with the residual and with itself
// (2|T_i| - 1 each), one divide, axpy on x (2 s_{i,i}), axpy on the
// residual (2|T_i|).
std::uint64_t rkas_unstored_step_flops(const SparsityProfile& p, std::size_t i) {
  check_row(p, i);
  return 2 * p.row_nnz[i] + 5 * p.overlap_rows[i] + 2 * p.overlap_nnz[i] - 1;
}

}  // namespace kaczmarz
