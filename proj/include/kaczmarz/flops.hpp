#pragma once

#include <cstdint>

#include "kaczmarz/matrix.hpp"

namespace kaczmarz {

/// Combinatorial sparsity data behind the per-iteration cost
/// formulas. For a CSR matrix A:
///   overlap_rows[i]  = rows ell whose support intersects row i's
///                      support (always includes i itself when row i
///                      is nonempty); |T_i| in the cost model,
///   overlap_nnz[i]   = sum over those ell of s_{i,ell}, the number
///                      of columns where both rows are nonzero,
///   row_nnz[i]       = s_{i,i}, nonzeros of row i,
///   col_nnz[j]       = m_j, nonzeros of column j,
///   pair_count       = |T| = sum_i overlap_rows[i].
///
/// Overlap is a property of the PATTERN: two rows overlap when they
/// share a column with stored values, even if their dot product
/// cancels to zero exactly.
struct SparsityProfile {
  std::vector<std::uint64_t> overlap_rows;  // |T_i|
  std::vector<std::uint64_t> overlap_nnz;   // sum_{ell in T_i} s_{i,ell}
  std::vector<std::uint64_t> row_nnz;       // s_{i,i}
  std::vector<std::uint64_t> col_nnz;       // m_j
  std::uint64_t pair_count = 0;             // |T|
  std::uint64_t upper_overlap_nnz = 0;      // sum_{i <= ell} s_{i,ell}
  std::size_t m = 0, n = 0;
};

SparsityProfile profile(const CsrMatrix& a);

/// Profile of a dense m x n matrix under the storage-based
/// convention: every entry participates in the arithmetic, so
/// s_{i,ell} = n, |T_i| = m and m_j = m.
SparsityProfile dense_profile(std::size_t m, std::size_t n);

/// Cost model shared by the formulas and the instrumented kernels:
/// one flop per *, +, -, /; an accumulation of t terms costs 2t-1
/// (the first contribution is an assignment); reading stored data,
/// index arithmetic and sampling are free.
struct FlopLedger {
  std::uint64_t init = 0;      // setup: norms, stored Gram, its column norms
  std::uint64_t iter = 0;      // iteration arithmetic
  std::uint64_t overhead = 0;  // optional extras, e.g. residual refresh
  std::uint64_t total() const { return init + iter + overhead; }
};

/// Predicted setup cost and per-iteration cost. Iteration costs
/// depend on the sampled row i (and column j where applicable).
std::uint64_t rek_init_flops(const SparsityProfile& p);
std::uint64_t rek_step_flops(const SparsityProfile& p, std::size_t i, std::size_t j);

std::uint64_t rkas_stored_init_flops(const SparsityProfile& p);
std::uint64_t rkas_stored_step_flops(const SparsityProfile& p, std::size_t i);

std::uint64_t rkas_unstored_init_flops(const SparsityProfile& p);
std::uint64_t rkas_unstored_step_flops(const SparsityProfile& p, std::size_t i);

}  // namespace kaczmarz
