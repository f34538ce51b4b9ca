#include "kaczmarz/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace kaczmarz {

namespace {

// Below this many output entries the fork/join overhead wins.
constexpr std::size_t kParallelCutoff = 128;

void check_dim(bool ok) {
  if (!ok) throw std::invalid_argument("kernel: dimension mismatch");
}

void check_no_zero_row(const Vector& norms) {
  for (double v : norms)
    if (v == 0.0) throw std::invalid_argument("row_sq_norms: matrix has a zero row");
}

double dense_row_sq(const DenseMatrix& a, std::size_t i) {
  const auto r = a.row(i);
  double s = 0.0;
  for (double v : r) s += v * v;
  return s;
}

double sparse_row_sq(const CsrMatrix& a, std::size_t i) {
  const auto v = a.row_values(i);
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

}  // namespace

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

double sparse_row_dot_dense(const CsrMatrix& a, std::size_t i, const Vector& x) {
  const auto cols = a.row_cols(i);
  const auto vals = a.row_values(i);
  double s = 0.0;
  for (std::size_t p = 0; p < cols.size(); ++p) s += vals[p] * x[cols[p]];
  return s;
}

double norm_sq(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

double norm2(std::span<const double> v) { return std::sqrt(norm_sq(v)); }

namespace serial {

Vector row_sq_norms(const DenseMatrix& a) {
  Vector out(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) out[i] = dense_row_sq(a, i);
  check_no_zero_row(out);
  return out;
}

Vector row_sq_norms(const CsrMatrix& a) {
  Vector out(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) out[i] = sparse_row_sq(a, i);
  check_no_zero_row(out);
  return out;
}

Vector matvec(const DenseMatrix& a, const Vector& x) {
  check_dim(x.size() == a.cols());
  Vector y(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) y[i] = dot(a.row(i), x);
  return y;
}

Vector matvec(const CsrMatrix& a, const Vector& x) {
  check_dim(x.size() == a.cols());
  Vector y(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) y[i] = sparse_row_dot_dense(a, i, x);
  return y;
}

Vector matvec_transpose(const DenseMatrix& a, const Vector& x) {
  check_dim(x.size() == a.rows());
  Vector y(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto r = a.row(i);
    const double xi = x[i];
    for (std::size_t j = 0; j < a.cols(); ++j) y[j] += r[j] * xi;
  }
  return y;
}

Vector matvec_transpose(const CsrMatrix& a, const Vector& x) {
  check_dim(x.size() == a.rows());
  Vector y(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto cols = a.row_cols(i);
    const auto vals = a.row_values(i);
    const double xi = x[i];
    for (std::size_t p = 0; p < cols.size(); ++p) y[cols[p]] += vals[p] * xi;
  }
  return y;
}

Vector gram_column(const DenseMatrix& a, std::size_t i) {
  check_dim(i < a.rows());
  Vector g(a.rows());
  const auto ri = a.row(i);
  for (std::size_t ell = 0; ell < a.rows(); ++ell) g[ell] = dot(a.row(ell), ri);
  return g;
}

Vector gram_column(const CsrMatrix& a, std::size_t i) {
  check_dim(i < a.rows());
  // Scatter over the columns in row i's support; each output entry
  // accumulates its products in increasing column order.
  const CsrMatrix at = a.transpose();
  Vector g(a.rows(), 0.0);
  const auto icols = a.row_cols(i);
  const auto ivals = a.row_values(i);
  for (std::size_t q = 0; q < icols.size(); ++q) {
    const std::size_t j = icols[q];
    const double aij = ivals[q];
    const auto jrows = at.row_cols(j);
    const auto jvals = at.row_values(j);
    for (std::size_t p = 0; p < jrows.size(); ++p) g[jrows[p]] += jvals[p] * aij;
  }
  return g;
}

DenseMatrix gram_matrix(const DenseMatrix& a, FlopCount* fc) {
  const std::size_t m = a.rows(), n = a.cols();
  DenseMatrix b(m, m);
  for (std::size_t u = 0; u < m; ++u) {
    for (std::size_t v = u; v < m; ++v) {
      const double s = dot(a.row(u), a.row(v));
      b(u, v) = s;
      b(v, u) = s;  // computed once, mirrored
    }
  }
  if (fc && m > 0 && n > 0) fc->flops += (m * (m + 1) / 2) * (2 * n - 1);
  return b;
}

CsrMatrix gram_matrix(const CsrMatrix& a, FlopCount* fc) {
  const std::size_t m = a.rows();
  const CsrMatrix at = a.transpose();

  // Upper triangle (including the diagonal) row by row. Row u's
  // entries w[ell], ell >= u, accumulate products in increasing
  // column order of A, the same order gram_column uses.
  std::uint64_t flops = 0;
  std::vector<std::vector<std::size_t>> up_idx(m);
  std::vector<Vector> up_val(m);
  Vector w(m, 0.0);
  std::vector<char> stamped(m, 0);
  std::vector<std::size_t> touched;
  for (std::size_t u = 0; u < m; ++u) {
    touched.clear();
    std::uint64_t pairs = 0;
    const auto ucols = a.row_cols(u);
    const auto uvals = a.row_values(u);
    for (std::size_t q = 0; q < ucols.size(); ++q) {
      const std::size_t j = ucols[q];
      const double auj = uvals[q];
      const auto jrows = at.row_cols(j);
      const auto jvals = at.row_values(j);
      const auto lo = std::lower_bound(jrows.begin(), jrows.end(), u);
      for (auto p = static_cast<std::size_t>(lo - jrows.begin()); p < jrows.size(); ++p) {
        const std::size_t ell = jrows[p];
        if (!stamped[ell]) {
          stamped[ell] = 1;
          touched.push_back(ell);
          w[ell] = jvals[p] * auj;  // first contribution is an assignment
        } else {
          w[ell] += jvals[p] * auj;
        }
        ++pairs;
      }
    }
    flops += 2 * pairs - touched.size();
    std::sort(touched.begin(), touched.end());
    for (std::size_t ell : touched) {
      if (w[ell] != 0.0) {  // exact cancellation: drop
        up_idx[u].push_back(ell);
        up_val[u].push_back(w[ell]);
      }
      stamped[ell] = 0;
      w[ell] = 0.0;
    }
  }
  if (fc) fc->flops += flops;

  // Mirror into a full symmetric-pattern CSR. Row r holds the strict
  // lower part (u, value) for u < r taken from column r of the upper
  // triangle (increasing u), then its own upper entries (increasing
  // ell), so per-row column order stays sorted.
  std::vector<std::size_t> lo_count(m, 0);
  for (std::size_t u = 0; u < m; ++u)
    for (std::size_t ell : up_idx[u])
      if (ell != u) ++lo_count[ell];
  std::vector<std::size_t> ptr(m + 1, 0);
  for (std::size_t i = 0; i < m; ++i) ptr[i + 1] = ptr[i] + lo_count[i] + up_idx[i].size();
  std::vector<std::size_t> idx(ptr[m]);
  Vector val(ptr[m]);
  std::vector<std::size_t> fill(m, 0);
  for (std::size_t u = 0; u < m; ++u) {
    for (std::size_t q = 0; q < up_idx[u].size(); ++q) {
      const std::size_t ell = up_idx[u][q];
      if (ell == u) continue;
      const std::size_t dst = ptr[ell] + fill[ell]++;
      idx[dst] = u;
      val[dst] = up_val[u][q];
    }
  }
  for (std::size_t u = 0; u < m; ++u) {
    for (std::size_t q = 0; q < up_idx[u].size(); ++q) {
      const std::size_t dst = ptr[u] + fill[u]++;
      idx[dst] = up_idx[u][q];
      val[dst] = up_val[u][q];
    }
  }
  return CsrMatrix(m, m, std::move(ptr), std::move(idx), std::move(val));
}

}  // namespace serial

Vector row_sq_norms(const DenseMatrix& a) {
  const std::size_t m = a.rows();
  if (m < kParallelCutoff) return serial::row_sq_norms(a);
  Vector out(m);
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < m; ++i) out[i] = dense_row_sq(a, i);
  check_no_zero_row(out);
  return out;
}

Vector row_sq_norms(const CsrMatrix& a) {
  const std::size_t m = a.rows();
  if (m < kParallelCutoff) return serial::row_sq_norms(a);
  Vector out(m);
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < m; ++i) out[i] = sparse_row_sq(a, i);
  check_no_zero_row(out);
  return out;
}

Vector row_sq_norms(const Matrix& a) {
  return std::visit([](const auto& m) { return row_sq_norms(m); }, a);
}

Vector matvec(const DenseMatrix& a, const Vector& x) {
  const std::size_t m = a.rows();
  if (m < kParallelCutoff) return serial::matvec(a, x);
  check_dim(x.size() == a.cols());
  Vector y(m);
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < m; ++i) y[i] = dot(a.row(i), x);
  return y;
}

Vector matvec(const CsrMatrix& a, const Vector& x) {
  const std::size_t m = a.rows();
  if (m < kParallelCutoff) return serial::matvec(a, x);
  check_dim(x.size() == a.cols());
  Vector y(m);
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < m; ++i) y[i] = sparse_row_dot_dense(a, i, x);
  return y;
}

Vector matvec(const Matrix& a, const Vector& x) {
  return std::visit([&](const auto& m) { return matvec(m, x); }, a);
}

Vector matvec_transpose(const DenseMatrix& a, const Vector& x) {
  check_dim(x.size() == a.rows());
  const std::size_t n = a.cols();
  if (n < kParallelCutoff) return serial::matvec_transpose(a, x);
  // each output entry owns one strided column reduction
  Vector y(n);
#pragma omp parallel for schedule(static)
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) s += a(i, j) * x[i];
    y[j] = s;
  }
  return y;
}

Vector matvec_transpose(const CsrMatrix& a, const Vector& x) {
  // The scatter form races across rows; a gather over A^T would need
  // the transpose anyway, so keep the serial reference semantics.
  return serial::matvec_transpose(a, x);
}

Vector matvec_transpose(const Matrix& a, const Vector& x) {
  return std::visit([&](const auto& m) { return matvec_transpose(m, x); }, a);
}

Vector gram_column(const DenseMatrix& a, std::size_t i) {
  const std::size_t m = a.rows();
  if (m < kParallelCutoff) return serial::gram_column(a, i);
  check_dim(i < m);
  Vector g(m);
  const auto ri = a.row(i);
#pragma omp parallel for schedule(static)
  for (std::size_t ell = 0; ell < m; ++ell) g[ell] = dot(a.row(ell), ri);
  return g;
}

Vector gram_column(const CsrMatrix& a, std::size_t i) { return serial::gram_column(a, i); }

Vector gram_column(const Matrix& a, std::size_t i) {
  return std::visit([&](const auto& m) { return gram_column(m, i); }, a);
}

DenseMatrix gram_matrix(const DenseMatrix& a, FlopCount* fc) {
  const std::size_t m = a.rows(), n = a.cols();
  if (m < kParallelCutoff) return serial::gram_matrix(a, fc);
  DenseMatrix b(m, m);
  // pairs (u,v), u <= v, are disjoint across iterations, so the
  // mirrored writes never collide; dynamic schedule balances the
  // triangular row lengths
#pragma omp parallel for schedule(dynamic, 16)
  for (std::size_t u = 0; u < m; ++u) {
    for (std::size_t v = u; v < m; ++v) {
      const double s = dot(a.row(u), a.row(v));
      b(u, v) = s;
      b(v, u) = s;
    }
  }
  if (fc && n > 0) fc->flops += (m * (m + 1) / 2) * (2 * n - 1);
  return b;
}

CsrMatrix gram_matrix(const CsrMatrix& a, FlopCount* fc) {
  // Row scatters are independent and could be partitioned across
  // threads with per-thread workspaces; at the sizes this library
  // targets the serial build is not the bottleneck, so the reference
  // implementation is the entry point.
  return serial::gram_matrix(a, fc);
}

Matrix gram_matrix(const Matrix& a, FlopCount* fc) {
  if (const auto* s = std::get_if<CsrMatrix>(&a)) return Matrix(gram_matrix(*s, fc));
  return Matrix(gram_matrix(std::get<DenseMatrix>(a), fc));
}

}  // namespace kaczmarz
