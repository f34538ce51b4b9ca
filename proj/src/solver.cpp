#include "kaczmarz/solver.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "kaczmarz/kernels.hpp"

namespace kaczmarz {

namespace {

using Clock = std::chrono::steady_clock;

// Iterations between expensive maintained-residual drift checks.
constexpr std::uint64_t kDriftCheckStride = 4096;

void validate(const SolverConfig& cfg) {
  if (cfg.max_iters < 1) throw std::invalid_argument("solver: max_iters must be >= 1");
  if (cfg.check_every < 1) throw std::invalid_argument("solver: check_every must be >= 1");
  if (!(cfg.rse_tol > 0.0)) throw std::invalid_argument("solver: rse_tol must be positive");
  if (cfg.method == Method::Rk && !(cfg.lambda > 0.0 && cfg.lambda < 2.0))
    throw std::invalid_argument("solver: RK relaxation must lie in (0, 2)");
}

// Row norms under the accounting convention: each is an accumulation
// of s_{i,i} squares, 2 s_{i,i} - 1 flops.
Vector counted_row_sq_norms(const Matrix& a, FlopLedger& ledger) {
  Vector out;
  std::uint64_t terms = 0;
  if (const auto* d = std::get_if<DenseMatrix>(&a)) {
    out.resize(d->rows());
    for (std::size_t i = 0; i < d->rows(); ++i) {
      out[i] = norm_sq(d->row(i));
      terms += d->cols();
    }
  } else {
    const auto& s = std::get<CsrMatrix>(a);
    out.resize(s.rows());
    for (std::size_t i = 0; i < s.rows(); ++i) {
      out[i] = norm_sq(s.row_values(i));
      terms += s.row_nnz(i);
    }
  }
  for (double v : out)
    if (v == 0.0) throw std::invalid_argument("solver: system matrix has a zero row");
  ledger.init += 2 * terms - out.size();
  return out;
}

// Column norms of A (REK setup): one accumulation per column.
Vector counted_col_sq_norms(const Matrix& a, const CsrMatrix* at, FlopLedger& ledger) {
  Vector out;
  std::uint64_t terms = 0;
  if (const auto* d = std::get_if<DenseMatrix>(&a)) {
    out.assign(d->cols(), 0.0);
    for (std::size_t j = 0; j < d->cols(); ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < d->rows(); ++i) s += (*d)(i, j) * (*d)(i, j);
      out[j] = s;
    }
    terms = d->rows() * d->cols();
  } else {
    out.resize(at->rows());
    for (std::size_t j = 0; j < at->rows(); ++j) {
      out[j] = norm_sq(at->row_values(j));
      terms += at->row_nnz(j);
    }
  }
  for (double v : out)
    if (v == 0.0) throw std::invalid_argument("solver: system matrix has a zero column");
  ledger.init += 2 * terms - out.size();
  return out;
}

// Column norms of the stored Gram matrix. Each stored upper-triangle
// entry is squared once and scattered into the one or two columns it
// belongs to; contributions to column i arrive in increasing row
// order, which makes the sum bit-identical to a dot of the column
// with itself (as the on-the-fly variant computes it).
Vector gram_col_norms(const StoredGram& g, std::size_t m, FlopLedger& ledger) {
  Vector cn(m, 0.0);
  std::uint64_t mults = 0, contribs = 0;
  if (const auto* d = std::get_if<DenseMatrix>(&g.b)) {
    for (std::size_t u = 0; u < m; ++u) {
      for (std::size_t v = u; v < m; ++v) {
        const double sq = (*d)(u, v) * (*d)(u, v);
        ++mults;
        cn[u] += sq;
        ++contribs;
        if (v != u) {
          cn[v] += sq;
          ++contribs;
        }
      }
    }
  } else {
    const auto& s = std::get<CsrMatrix>(g.b);
    for (std::size_t u = 0; u < m; ++u) {
      const auto cols = s.row_cols(u);
      const auto vals = s.row_values(u);
      for (std::size_t p = 0; p < cols.size(); ++p) {
        const std::size_t v = cols[p];
        if (v < u) continue;  // upper triangle only
        const double sq = vals[p] * vals[p];
        ++mults;
        cn[u] += sq;
        ++contribs;
        if (v != u) {
          cn[v] += sq;
          ++contribs;
        }
      }
    }
  }
  // first contribution per column is an assignment
  ledger.init += mults + (contribs - m);
  return cn;
}

double dense_col_dot(const DenseMatrix& a, std::size_t j, const Vector& v) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) s += a(i, j) * v[i];
  return s;
}

}  // namespace

const char* method_name(Method m) {
  switch (m) {
    case Method::Rkas: return "rkas";
    case Method::Rk: return "rk";
    case Method::Rek: return "rek";
  }
  return "?";
}

Method parse_method(const std::string& s) {
  if (s == "rkas") return Method::Rkas;
  if (s == "rk") return Method::Rk;
  if (s == "rek") return Method::Rek;
  throw std::invalid_argument("unknown method: " + s);
}

SolverState init_state(const LinearSystem& sys, const SolverConfig& cfg) {
  validate(cfg);
  SolverState st;
  const std::size_t m = rows(sys.A), n = cols(sys.A);
  st.x.assign(n, 0.0);
  st.row_sq_norms = counted_row_sq_norms(sys.A, st.flops);

  switch (cfg.method) {
    case Method::Rkas: {
      // r^0 = A x^0 - b = -b; the sign flip is uncounted, matching
      // the published setup accounting
      st.r.resize(m);
      for (std::size_t i = 0; i < m; ++i) st.r[i] = -sys.b[i];
      if (cfg.store_gram) {
        FlopCount fc;
        StoredGram g{gram_matrix(sys.A, &fc), {}};
        st.flops.init += fc.flops;
        g.col_sq_norms = gram_col_norms(g, m, st.flops);
        st.gram = std::move(g);
      } else if (const auto* s = std::get_if<CsrMatrix>(&sys.A)) {
        st.at = s->transpose();  // structure shuffle, no arithmetic
        st.gstamp.assign(m, 0);
        st.gcol.assign(m, 0.0);
      }
      break;
    }
    case Method::Rk:
      break;  // row norms only
    case Method::Rek: {
      st.z = sys.b;  // z^0 = b
      if (const auto* s = std::get_if<CsrMatrix>(&sys.A)) st.at = s->transpose();
      st.col_sq_norms = counted_col_sq_norms(sys.A, st.at ? &*st.at : nullptr, st.flops);
      break;
    }
  }
  return st;
}

namespace {

void rkas_step_dense(SolverState& st, const DenseMatrix& a, std::size_t i) {
  const std::size_t m = a.rows(), n = a.cols();
  const auto arow = a.row(i);
  double alpha;
  if (st.gram) {
    const auto& bmat = std::get<DenseMatrix>(st.gram->b);
    const auto grow = bmat.row(i);
    double num = 0.0;
    for (std::size_t ell = 0; ell < m; ++ell) num += grow[ell] * st.r[ell];
    alpha = num / st.gram->col_sq_norms[i];
    for (std::size_t j = 0; j < n; ++j) st.x[j] -= alpha * arow[j];
    for (std::size_t ell = 0; ell < m; ++ell) st.r[ell] -= alpha * grow[ell];
    st.flops.iter += 2 * n + 4 * m;
  } else {
    Vector& g = st.gcol;
    g.resize(m);
    for (std::size_t ell = 0; ell < m; ++ell) g[ell] = dot(a.row(ell), arow);
    double num = 0.0, gg = 0.0;
    for (std::size_t ell = 0; ell < m; ++ell) num += g[ell] * st.r[ell];
    for (std::size_t ell = 0; ell < m; ++ell) gg += g[ell] * g[ell];
    alpha = num / gg;
    for (std::size_t j = 0; j < n; ++j) st.x[j] -= alpha * arow[j];
    for (std::size_t ell = 0; ell < m; ++ell) st.r[ell] -= alpha * g[ell];
    st.flops.iter += 2 * n + 5 * m + 2 * m * n - 1;
  }
  ++st.k;
}

void rkas_step_sparse(SolverState& st, const CsrMatrix& a, std::size_t i) {
  const auto acols = a.row_cols(i);
  const auto avals = a.row_values(i);
  if (st.gram) {
    const auto& bmat = std::get<CsrMatrix>(st.gram->b);
    const auto bcols = bmat.row_cols(i);
    const auto bvals = bmat.row_values(i);
    double num = 0.0;
    for (std::size_t p = 0; p < bcols.size(); ++p) num += bvals[p] * st.r[bcols[p]];
    const double alpha = num / st.gram->col_sq_norms[i];
    for (std::size_t p = 0; p < acols.size(); ++p) st.x[acols[p]] -= alpha * avals[p];
    for (std::size_t p = 0; p < bcols.size(); ++p) st.r[bcols[p]] -= alpha * bvals[p];
    st.flops.iter += 2 * acols.size() + 4 * bcols.size();
  } else {
    // build the Gram column on the support it actually has
    const CsrMatrix& at = *st.at;
    auto& g = st.gcol;
    auto& supp = st.gsupp;
    auto& stamp = st.gstamp;
    supp.clear();
    std::uint64_t pairs = 0;
    for (std::size_t q = 0; q < acols.size(); ++q) {
      const std::size_t j = acols[q];
      const double aij = avals[q];
      const auto jrows = at.row_cols(j);
      const auto jvals = at.row_values(j);
      for (std::size_t p = 0; p < jrows.size(); ++p) {
        const std::size_t ell = jrows[p];
        if (!stamp[ell]) {
          stamp[ell] = 1;
          supp.push_back(ell);
          g[ell] = jvals[p] * aij;
        } else {
          g[ell] += jvals[p] * aij;
        }
        ++pairs;
      }
    }
    std::sort(supp.begin(), supp.end());
    double num = 0.0, gg = 0.0;
    for (std::size_t ell : supp) num += g[ell] * st.r[ell];
    for (std::size_t ell : supp) gg += g[ell] * g[ell];
    const double alpha = num / gg;
    for (std::size_t p = 0; p < acols.size(); ++p) st.x[acols[p]] -= alpha * avals[p];
    for (std::size_t ell : supp) st.r[ell] -= alpha * g[ell];
    st.flops.iter += 2 * acols.size() + 5 * supp.size() + 2 * pairs - 1;
    for (std::size_t ell : supp) {
      stamp[ell] = 0;
      g[ell] = 0.0;
    }
  }
  ++st.k;
}

void rk_step_dense(SolverState& st, const DenseMatrix& a, const Vector& b, std::size_t i,
                   double lambda) {
  const auto arow = a.row(i);
  double t = dot(arow, st.x);
  t -= b[i];
  t *= lambda;
  const double alpha = t / st.row_sq_norms[i];
  for (std::size_t j = 0; j < a.cols(); ++j) st.x[j] -= alpha * arow[j];
  st.flops.iter += 4 * a.cols() + 2;
  ++st.k;
}

void rk_step_sparse(SolverState& st, const CsrMatrix& a, const Vector& b, std::size_t i,
                    double lambda) {
  const auto acols = a.row_cols(i);
  const auto avals = a.row_values(i);
  double t = 0.0;
  for (std::size_t p = 0; p < acols.size(); ++p) t += avals[p] * st.x[acols[p]];
  t -= b[i];
  t *= lambda;
  const double alpha = t / st.row_sq_norms[i];
  for (std::size_t p = 0; p < acols.size(); ++p) st.x[acols[p]] -= alpha * avals[p];
  st.flops.iter += 4 * acols.size() + 2;
  ++st.k;
}

void rek_step_dense(SolverState& st, const DenseMatrix& a, const Vector& b, std::size_t i,
                    std::size_t j) {
  const std::size_t m = a.rows(), n = a.cols();
  // project the auxiliary iterate against column j
  const double beta = dense_col_dot(a, j, st.z) / st.col_sq_norms[j];
  for (std::size_t row = 0; row < m; ++row) st.z[row] -= beta * a(row, j);
  // then the row update sees the fresh z_i
  const auto arow = a.row(i);
  double t = dot(arow, st.x);
  t -= b[i];
  t += st.z[i];
  const double gamma = t / st.row_sq_norms[i];
  for (std::size_t c = 0; c < n; ++c) st.x[c] -= gamma * arow[c];
  st.flops.iter += 4 * m + 4 * n + 2;
  ++st.k;
}

void rek_step_sparse(SolverState& st, const CsrMatrix& a, const Vector& b, std::size_t i,
                     std::size_t j) {
  const CsrMatrix& at = *st.at;
  const auto jrows = at.row_cols(j);
  const auto jvals = at.row_values(j);
  double dz = 0.0;
  for (std::size_t p = 0; p < jrows.size(); ++p) dz += jvals[p] * st.z[jrows[p]];
  const double beta = dz / st.col_sq_norms[j];
  for (std::size_t p = 0; p < jrows.size(); ++p) st.z[jrows[p]] -= beta * jvals[p];

  const auto acols = a.row_cols(i);
  const auto avals = a.row_values(i);
  double t = 0.0;
  for (std::size_t p = 0; p < acols.size(); ++p) t += avals[p] * st.x[acols[p]];
  t -= b[i];
  t += st.z[i];
  const double gamma = t / st.row_sq_norms[i];
  for (std::size_t p = 0; p < acols.size(); ++p) st.x[acols[p]] -= gamma * avals[p];
  st.flops.iter += 4 * jrows.size() + 4 * acols.size() + 2;
  ++st.k;
}

}  // namespace

void rkas_step(SolverState& st, const LinearSystem& sys, std::size_t i) {
  if (i >= rows(sys.A)) throw std::invalid_argument("rkas_step: row index out of range");
  if (const auto* d = std::get_if<DenseMatrix>(&sys.A))
    rkas_step_dense(st, *d, i);
  else
    rkas_step_sparse(st, std::get<CsrMatrix>(sys.A), i);
}

void rk_step(SolverState& st, const LinearSystem& sys, std::size_t i, double lambda) {
  if (i >= rows(sys.A)) throw std::invalid_argument("rk_step: row index out of range");
  if (!(lambda > 0.0 && lambda < 2.0))
    throw std::invalid_argument("rk_step: relaxation must lie in (0, 2)");
  if (const auto* d = std::get_if<DenseMatrix>(&sys.A))
    rk_step_dense(st, *d, sys.b, i, lambda);
  else
    rk_step_sparse(st, std::get<CsrMatrix>(sys.A), sys.b, i, lambda);
}

void rek_step(SolverState& st, const LinearSystem& sys, std::size_t i, std::size_t j) {
  if (i >= rows(sys.A)) throw std::invalid_argument("rek_step: row index out of range");
  if (j >= cols(sys.A)) throw std::invalid_argument("rek_step: column index out of range");
  if (const auto* d = std::get_if<DenseMatrix>(&sys.A))
    rek_step_dense(st, *d, sys.b, i, j);
  else
    rek_step_sparse(st, std::get<CsrMatrix>(sys.A), sys.b, i, j);
}

RunResult run(const LinearSystem& sys, const GroundTruth& gt, const SolverConfig& cfg,
              const Vector* x0) {
  validate(cfg);
  if (norm_sq(gt.x_star) == 0.0)
    throw std::invalid_argument("run: x_star is zero, RSE undefined; regenerate the instance");

  const auto t0 = Clock::now();
  SolverState st = init_state(sys, cfg);
  const std::size_t m = rows(sys.A);

  if (x0) {
    // Testing hook, outside the cost model (experiments start at zero).
    if (x0->size() != st.x.size()) throw std::invalid_argument("run: x0 length mismatch");
    st.x = *x0;
    if (cfg.method == Method::Rkas) {
      const Vector ax = matvec(sys.A, st.x);
      for (std::size_t i = 0; i < m; ++i) st.r[i] = ax[i] - sys.b[i];
    }
  }

  std::optional<DiscreteSampler> row_sampler;
  std::optional<DiscreteSampler> col_sampler;
  row_sampler.emplace(st.row_sq_norms, derive_seed(cfg.seed, 0));
  if (cfg.method == Method::Rek)
    col_sampler.emplace(st.col_sq_norms, derive_seed(cfg.seed, 1));

  RunResult out;
  std::uint64_t last_drift_check = 0;
  const double drift_budget = 1e-8 * (1.0 + norm2(sys.b));

  auto maintained_residual_err_sq = [&]() {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double d = st.r[i] - gt.e[i];
      s += d * d;
    }
    return s;
  };

  // The maintained residual is what makes RKAS cheap per iteration, so we
  // cannot afford a fresh A*x at every checkpoint; instead verify it against
  // one on a sparse cadence and once more at the very end.
  auto drift_check = [&]() {
    last_drift_check = st.k;
    const Vector ax = matvec(sys.A, st.x);
    double drift = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double d = st.r[i] - (ax[i] - sys.b[i]);
      drift += d * d;
    }
    if (std::sqrt(drift) > drift_budget)
      throw std::logic_error("rkas: maintained residual drifted beyond tolerance");
  };

  auto checkpoint = [&]() {
    ConvergenceRecord rec;
    rec.iter = st.k;
    rec.rse = gt.rse(st.x);
    if (cfg.method == Method::Rkas) {
      rec.residual_err_sq = maintained_residual_err_sq();
      if (st.k == 0 || st.k - last_drift_check >= kDriftCheckStride) drift_check();
    } else {
      const Vector ax = matvec(sys.A, st.x);
      double s = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        const double d = ax[i] - gt.ax_star[i];
        s += d * d;
      }
      rec.residual_err_sq = s;
    }
    rec.elapsed_sec = std::chrono::duration<double>(Clock::now() - t0).count();
    rec.flops = st.flops.total();
    out.records.push_back(rec);
    return rec.rse;
  };

  double rse_now = checkpoint();  // k = 0
  bool converged = rse_now <= cfg.rse_tol;

  while (!converged && st.k < cfg.max_iters) {
    const std::size_t i = row_sampler->draw();
    switch (cfg.method) {
      case Method::Rkas:
        rkas_step(st, sys, i);
        break;
      case Method::Rk:
        rk_step(st, sys, i, cfg.lambda);
        break;
      case Method::Rek:
        rek_step(st, sys, i, col_sampler->draw());
        break;
    }
    if (cfg.method == Method::Rkas && cfg.residual_refresh_every > 0 &&
        st.k % cfg.residual_refresh_every == 0) {
      const Vector ax = matvec(sys.A, st.x);
      for (std::size_t q = 0; q < m; ++q) st.r[q] = ax[q] - sys.b[q];
      st.flops.overhead += 2 * static_cast<std::uint64_t>(nnz(sys.A));
    }
    if (st.k % cfg.check_every == 0 || st.k == cfg.max_iters) {
      rse_now = checkpoint();
      converged = rse_now <= cfg.rse_tol;
    }
  }
  if (out.records.back().iter != st.k) {
    rse_now = checkpoint();
    converged = rse_now <= cfg.rse_tol;
  }
  if (cfg.method == Method::Rkas && last_drift_check != st.k) drift_check();

  out.status = converged ? RunStatus::Converged : RunStatus::MaxIters;
  out.iters = st.k;
  out.final_rse = rse_now;
  out.state = std::move(st);
  return out;
}

double rk_error_bound(std::uint64_t k, double lambda, const GroundTruth& gt,
                      double x0_err_sq) {
  if (!(lambda > 0.0 && lambda < 1.0))
    throw std::invalid_argument("rk_error_bound: requires relaxation in (0, 1)");
  const double s2 = gt.sigma_min * gt.sigma_min;
  const double f2 = gt.frob_norm * gt.frob_norm;
  const double factor = 1.0 - 2.0 * lambda * (1.0 - lambda) * s2 / f2;
  const double horizon = lambda * gt.a_max_sq * norm_sq(gt.e) /
                         ((1.0 - lambda) * gt.a_min_sq * s2);
  return std::pow(factor, static_cast<double>(k)) * x0_err_sq + horizon;
}

double rkas_contraction_factor(const GroundTruth& gt) {
  const double s2 = gt.sigma_min * gt.sigma_min;
  const double f2 = gt.frob_norm * gt.frob_norm;
  return 1.0 - (s2 * s2) / (gt.sigma_max * gt.sigma_max * f2);
}

RkPrediction predict_iters_rk(double eps, double eps0, const GroundTruth& gt) {
  if (!(eps > 0.0) || !(eps0 > 0.0))
    throw std::invalid_argument("predict_iters_rk: eps and eps0 must be positive");
  const double s2 = gt.sigma_min * gt.sigma_min;
  const double e2 = norm_sq(gt.e);
  RkPrediction p;
  p.lambda = eps * s2 * gt.a_min_sq /
             (2.0 * eps * s2 * gt.a_min_sq + 2.0 * e2 * gt.a_max_sq);
  const double lg = std::log(2.0 * eps0 / eps);
  if (lg <= 0.0) {
    p.iters = 0;
    return p;
  }
  const double f2 = gt.frob_norm * gt.frob_norm;
  const double k = 2.0 * lg *
                   (f2 / s2 + f2 * e2 * gt.a_max_sq / (eps * s2 * s2 * gt.a_min_sq));
  p.iters = static_cast<std::uint64_t>(std::ceil(k));
  return p;
}

std::uint64_t predict_iters_rkas(double eps, double eps1, const GroundTruth& gt) {
  if (!(eps > 0.0) || !(eps1 >= 0.0))
    throw std::invalid_argument("predict_iters_rkas: eps must be positive");
  const double s2 = gt.sigma_min * gt.sigma_min;
  const double arg = eps1 / (eps * s2);
  if (arg <= 1.0) return 0;
  const double f2 = gt.frob_norm * gt.frob_norm;
  const double k = std::log(arg) * f2 * gt.sigma_max * gt.sigma_max / (s2 * s2);
  return static_cast<std::uint64_t>(std::ceil(k));
}

}  // namespace kaczmarz
