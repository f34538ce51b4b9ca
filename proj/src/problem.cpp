#include "kaczmarz/problem.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <unordered_set>

#include <Eigen/Dense>
#include <Eigen/QR>

#include "json.hpp"
#include "kaczmarz/kernels.hpp"
#include "kaczmarz/matrix_market.hpp"
#include "kaczmarz/sampler.hpp"

namespace kaczmarz {

namespace {

// Seed streams within one problem seed. Distinct constants keep the
// pattern, the values and the right-hand side independent.
enum SeedStream : std::uint64_t {
  kMatrixStream = 10,
  kRhsStream = 11,
};

Eigen::MatrixXd gaussian(std::size_t rows, std::size_t cols, NormalSource& src) {
  Eigen::MatrixXd g(rows, cols);
  for (Eigen::Index i = 0; i < g.rows(); ++i)
    for (Eigen::Index j = 0; j < g.cols(); ++j) g(i, j) = src();
  return g;
}

Eigen::MatrixXd thin_q(const Eigen::MatrixXd& g) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  return qr.householderQ() * Eigen::MatrixXd::Identity(g.rows(), g.cols());
}

DenseMatrix to_dense_matrix(const Eigen::MatrixXd& e) {
  DenseMatrix out(static_cast<std::size_t>(e.rows()), static_cast<std::size_t>(e.cols()));
  for (Eigen::Index i = 0; i < e.rows(); ++i)
    for (Eigen::Index j = 0; j < e.cols(); ++j)
      out(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = e(i, j);
  return out;
}

}  // namespace

LinearSystem::LinearSystem(Matrix a, Vector rhs) : A(std::move(a)), b(std::move(rhs)) {
  if (b.size() != rows(A)) throw std::invalid_argument("system: b length must equal row count");
  if (!detail::all_finite(b)) throw std::invalid_argument("system: b must be finite");
  if (rows(A) == 0 || cols(A) == 0) throw std::invalid_argument("system: matrix is empty");
  const bool sparse = is_sparse(A);
  if (sparse) {
    const auto& s = std::get<CsrMatrix>(A);
    if (s.has_zero_row()) throw std::invalid_argument("system: matrix has a zero row");
    if (s.has_zero_col()) throw std::invalid_argument("system: matrix has a zero column");
  } else {
    const auto& d = std::get<DenseMatrix>(A);
    for (std::size_t i = 0; i < d.rows(); ++i)
      if (norm_sq(d.row(i)) == 0.0)
        throw std::invalid_argument("system: matrix has a zero row");
    for (std::size_t j = 0; j < d.cols(); ++j) {
      bool any = false;
      for (std::size_t i = 0; i < d.rows() && !any; ++i) any = d(i, j) != 0.0;
      if (!any) throw std::invalid_argument("system: matrix has a zero column");
    }
  }
}

DenseUdvResult gen_dense_udv(std::size_t m, std::size_t n, std::size_t r, double kappa,
                             std::uint64_t seed) {
  if (m == 0 || n == 0) throw std::invalid_argument("gen_dense_udv: empty shape");
  if (r == 0 || r > std::min(m, n))
    throw std::invalid_argument("gen_dense_udv: rank must lie in [1, min(m, n)]");
  if (!(kappa >= 1.0) || !std::isfinite(kappa))
    throw std::invalid_argument("gen_dense_udv: kappa must be >= 1");

  NormalSource src(derive_seed(seed, 0));
  const Eigen::MatrixXd u = thin_q(gaussian(m, r, src));
  const Eigen::MatrixXd v = thin_q(gaussian(n, r, src));
  Vector d(r);
  for (std::size_t i = 0; i < r; ++i) d[i] = 1.0 + (kappa - 1.0) * src.uniform();

  const Eigen::MatrixXd a =
      u * Eigen::Map<const Eigen::VectorXd>(d.data(), r).asDiagonal() * v.transpose();

  DenseUdvResult out{to_dense_matrix(a), to_dense_matrix(u), to_dense_matrix(v), std::move(d)};
  return out;
}

namespace {

// Uniform pattern + standard normal values; retried until every row
// and column is covered.
CsrMatrix sparse_uniform(std::size_t m, std::size_t n, std::uint64_t target,
                         std::uint64_t seed) {
  const std::uint64_t cells = static_cast<std::uint64_t>(m) * n;
  for (int attempt = 0; attempt < 100; ++attempt) {
    NormalSource src(derive_seed(seed, 20 + static_cast<std::uint64_t>(attempt)));
    auto& eng = src.engine();

    // Floyd's uniform k-subset of the cell grid.
    std::unordered_set<std::uint64_t> chosen;
    chosen.reserve(target * 2);
    for (std::uint64_t t = cells - target; t < cells; ++t) {
      std::uint64_t c = std::uniform_int_distribution<std::uint64_t>(0, t)(eng);
      if (!chosen.insert(c).second) chosen.insert(t);
    }

    std::vector<char> row_hit(m, 0), col_hit(n, 0);
    for (std::uint64_t c : chosen) {
      row_hit[c / n] = 1;
      col_hit[c % n] = 1;
    }
    if (std::find(row_hit.begin(), row_hit.end(), 0) != row_hit.end()) continue;
    if (std::find(col_hit.begin(), col_hit.end(), 0) != col_hit.end()) continue;

    std::vector<std::uint64_t> cells_sorted(chosen.begin(), chosen.end());
    std::sort(cells_sorted.begin(), cells_sorted.end());
    std::vector<std::size_t> ri, ci;
    Vector vals;
    ri.reserve(cells_sorted.size());
    ci.reserve(cells_sorted.size());
    vals.reserve(cells_sorted.size());
    for (std::uint64_t c : cells_sorted) {
      double v = src();
      while (v == 0.0) v = src();
      ri.push_back(static_cast<std::size_t>(c / n));
      ci.push_back(static_cast<std::size_t>(c % n));
      vals.push_back(v);
    }
    return CsrMatrix::from_triplets(m, n, ri, ci, vals);
  }
  throw std::runtime_error(
      "gen_sparse_random: no zero-row/column pattern found in 100 attempts; "
      "raise the density");
}

// Spectrum-preserving fill: a diagonal of singular values is mixed by
// random Givens rotations (rows from the left, columns from the
// right) until the nonzero count reaches the target. Orthogonal
// transforms leave the singular values untouched, so the condition
// number is exact by construction.
CsrMatrix sparse_conditioned(std::size_t m, std::size_t n, std::uint64_t target, double rc,
                             std::uint64_t seed) {
  if (static_cast<double>(m) * static_cast<double>(n) > 5e7)
    throw std::invalid_argument("gen_sparse_random: rc fill needs m*n <= 5e7");

  const std::size_t k = std::min(m, n);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(m, n);
  for (std::size_t i = 0; i < k; ++i)
    w(i, i) = (k == 1) ? 1.0
                       : std::pow(rc, static_cast<double>(i) / static_cast<double>(k - 1));

  NormalSource src(derive_seed(seed, 40));
  auto& eng = src.engine();
  std::uint64_t cur = k;

  // Angles stay away from multiples of pi/2 so a rotation really
  // mixes both lines and the support union is achieved.
  auto angle = [&]() {
    return 0.3 + 0.9 * std::generate_canonical<double, 53>(eng);
  };
  auto rotate_rows = [&](std::size_t i1, std::size_t i2) {
    const double th = angle(), c = std::cos(th), s = std::sin(th);
    for (std::size_t j = 0; j < n; ++j) {
      const double a1 = w(i1, j), a2 = w(i2, j);
      if (a1 == 0.0 && a2 == 0.0) continue;
      const int before = (a1 != 0.0) + (a2 != 0.0);
      w(i1, j) = c * a1 - s * a2;
      w(i2, j) = s * a1 + c * a2;
      cur += ((w(i1, j) != 0.0) + (w(i2, j) != 0.0)) - before;
    }
  };
  auto rotate_cols = [&](std::size_t j1, std::size_t j2) {
    const double th = angle(), c = std::cos(th), s = std::sin(th);
    for (std::size_t i = 0; i < m; ++i) {
      const double a1 = w(i, j1), a2 = w(i, j2);
      if (a1 == 0.0 && a2 == 0.0) continue;
      const int before = (a1 != 0.0) + (a2 != 0.0);
      w(i, j1) = c * a1 - s * a2;
      w(i, j2) = s * a1 + c * a2;
      cur += ((w(i, j1) != 0.0) + (w(i, j2) != 0.0)) - before;
    }
  };
  auto pick = [&](std::size_t lim) {
    return std::uniform_int_distribution<std::size_t>(0, lim - 1)(eng);
  };

  // Cover phase: the diagonal leaves rows k..m-1 and columns k..n-1
  // empty; one rotation against a populated line fixes each.
  for (std::size_t i = k; i < m; ++i) rotate_rows(i, pick(k));
  for (std::size_t j = k; j < n; ++j) rotate_cols(j, pick(k));

  // Fill phase: random pairs, alternating sides.
  const std::uint64_t cap = 50 * static_cast<std::uint64_t>(m + n) + 1000;
  bool rows_turn = true;
  for (std::uint64_t it = 0; cur < target && it < cap; ++it) {
    if (rows_turn && m >= 2) {
      std::size_t i1 = pick(m), i2 = pick(m);
      if (i1 != i2) rotate_rows(i1, i2);
    } else if (n >= 2) {
      std::size_t j1 = pick(n), j2 = pick(n);
      if (j1 != j2) rotate_cols(j1, j2);
    }
    rows_turn = !rows_turn;
  }
  if (cur < target)
    throw std::runtime_error("gen_sparse_random: fill target not reached; raise rotation cap");

  CsrMatrix out = CsrMatrix::from_dense(to_dense_matrix(w));
  if (out.has_zero_row() || out.has_zero_col())
    throw std::runtime_error("gen_sparse_random: exact cancellation emptied a line (reseed)");
  return out;
}

}  // namespace

CsrMatrix gen_sparse_random(std::size_t m, std::size_t n, double density,
                            std::optional<double> rc, std::uint64_t seed) {
  if (m == 0 || n == 0) throw std::invalid_argument("gen_sparse_random: empty shape");
  if (!(density > 0.0) || density > 1.0)
    throw std::invalid_argument("gen_sparse_random: density must lie in (0, 1]");
  const double cells = static_cast<double>(m) * static_cast<double>(n);
  const std::uint64_t target =
      std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(density * cells)));
  if (target < std::max(m, n))
    throw std::invalid_argument(
        "gen_sparse_random: density too low to cover every row and column");
  if (rc) {
    if (!(*rc > 0.0) || *rc > 1.0)
      throw std::invalid_argument("gen_sparse_random: rc must lie in (0, 1]");
    return sparse_conditioned(m, n, target, *rc, seed);
  }
  return sparse_uniform(m, n, target, seed);
}

RhsResult make_rhs(const Matrix& a, const GroundTruth& gt, bool consistent,
                   double residual_scale, std::uint64_t seed) {
  const std::size_t m = rows(a), n = cols(a);
  if (gt.m != m || gt.n != n) throw std::invalid_argument("make_rhs: analysis shape mismatch");
  if (!consistent) {
    if (!(residual_scale > 0.0) || !std::isfinite(residual_scale))
      throw std::invalid_argument("make_rhs: inconsistent rhs needs residual_scale > 0");
    if (gt.rank == m)
      throw std::invalid_argument(
          "make_rhs: matrix has full row rank, every rhs is consistent");
  }

  NormalSource src(derive_seed(seed, 0));
  for (int attempt = 0; attempt < 20; ++attempt) {
    Vector x(n);
    for (auto& v : x) v = src();
    const Vector ax = matvec(a, x);
    const double axn = norm2(ax);
    if (axn == 0.0) continue;  // x landed in the nullspace, essentially impossible

    if (consistent) return {ax, std::move(x), {}};

    Vector g(m);
    for (auto& v : g) v = src();
    Vector r = gt.project_out_range(g);
    const double rn = norm2(r);
    if (!(rn > 1e-8 * norm2(g))) continue;  // degenerate projection, redraw

    const double scale = residual_scale * axn / rn;
    Vector b(m);
    for (std::size_t i = 0; i < m; ++i) {
      r[i] *= scale;
      b[i] = ax[i] - r[i];
    }
    return {std::move(b), std::move(x), std::move(r)};
  }
  throw std::runtime_error("make_rhs: no usable draw in 20 attempts");
}

LinearSystem build_problem(const ProblemSpec& spec) {
  Matrix a{DenseMatrix(1, 1)};
  switch (spec.kind) {
    case ProblemSpec::Kind::DenseUdv: {
      const std::size_t r = spec.r == 0 ? std::min(spec.m, spec.n) : spec.r;
      a = gen_dense_udv(spec.m, spec.n, r, spec.kappa, derive_seed(spec.seed, kMatrixStream)).a;
      break;
    }
    case ProblemSpec::Kind::SparseRandom:
      a = gen_sparse_random(spec.m, spec.n, spec.density, spec.rc,
                            derive_seed(spec.seed, kMatrixStream));
      break;
    case ProblemSpec::Kind::FromFile:
      a = read_matrix_market_file(spec.path);
      break;
  }

  const GroundTruth gt = analyze(a, Vector(rows(a), 0.0));
  RhsResult rhs = make_rhs(a, gt, spec.consistent, spec.residual_scale,
                           derive_seed(spec.seed, kRhsStream));
  LinearSystem sys(std::move(a), std::move(rhs.b));
  sys.planted_x = std::move(rhs.planted_x);
  sys.planted_r = std::move(rhs.planted_r);
  sys.spec = spec;
  return sys;
}

namespace {

using nlohmann::json;

const char* kind_tag(ProblemSpec::Kind k) {
  switch (k) {
    case ProblemSpec::Kind::DenseUdv: return "dense_udv";
    case ProblemSpec::Kind::SparseRandom: return "sparse_random";
    case ProblemSpec::Kind::FromFile: return "from_file";
  }
  return "?";
}

ProblemSpec::Kind parse_kind(const std::string& s) {
  if (s == "dense_udv") return ProblemSpec::Kind::DenseUdv;
  if (s == "sparse_random") return ProblemSpec::Kind::SparseRandom;
  if (s == "from_file") return ProblemSpec::Kind::FromFile;
  throw std::invalid_argument("problem file: unknown kind " + s);
}

json spec_to_json(const ProblemSpec& s) {
  json j{{"kind", kind_tag(s.kind)}, {"m", s.m},       {"n", s.n},
         {"r", s.r},                 {"kappa", s.kappa}, {"density", s.density},
         {"path", s.path},           {"seed", s.seed},   {"consistent", s.consistent},
         {"residual_scale", s.residual_scale}};
  if (s.rc) j["rc"] = *s.rc;
  return j;
}

ProblemSpec spec_from_json(const json& j) {
  ProblemSpec s;
  s.kind = parse_kind(j.at("kind").get<std::string>());
  s.m = j.at("m").get<std::size_t>();
  s.n = j.at("n").get<std::size_t>();
  s.r = j.at("r").get<std::size_t>();
  s.kappa = j.at("kappa").get<double>();
  s.density = j.at("density").get<double>();
  s.path = j.at("path").get<std::string>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.consistent = j.at("consistent").get<bool>();
  s.residual_scale = j.at("residual_scale").get<double>();
  if (j.contains("rc")) s.rc = j.at("rc").get<double>();
  return s;
}

}  // namespace

void save_problem(const std::string& path, const LinearSystem& sys) {
  json j;
  j["format"] = "kaczmarz-problem";
  j["version"] = 1;
  j["m"] = rows(sys.A);
  j["n"] = cols(sys.A);
  if (const auto* d = std::get_if<DenseMatrix>(&sys.A)) {
    j["storage"] = "dense";
    j["values"] = d->data();
  } else {
    const auto& s = std::get<CsrMatrix>(sys.A);
    j["storage"] = "csr";
    j["row_ptr"] = s.row_ptr();
    j["cols"] = s.col_idx();
    j["values"] = s.values();
  }
  j["b"] = sys.b;
  j["planted_x"] = sys.planted_x;
  j["planted_r"] = sys.planted_r;
  if (sys.spec) j["spec"] = spec_to_json(*sys.spec);

  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_problem: cannot open " + path);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("save_problem: write failed for " + path);
}

LinearSystem load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_problem: cannot open " + path);
  json j;
  in >> j;
  if (j.value("format", "") != "kaczmarz-problem")
    throw std::runtime_error("load_problem: not a problem container: " + path);

  const auto m = j.at("m").get<std::size_t>();
  const auto n = j.at("n").get<std::size_t>();
  Matrix a{DenseMatrix(1, 1)};
  const std::string storage = j.at("storage").get<std::string>();
  if (storage == "dense") {
    a = DenseMatrix(m, n, j.at("values").get<Vector>());
  } else if (storage == "csr") {
    a = CsrMatrix(m, n, j.at("row_ptr").get<std::vector<std::size_t>>(),
                  j.at("cols").get<std::vector<std::size_t>>(),
                  j.at("values").get<std::vector<double>>());
  } else {
    throw std::runtime_error("load_problem: unknown storage " + storage);
  }

  LinearSystem sys(std::move(a), j.at("b").get<Vector>());
  sys.planted_x = j.at("planted_x").get<Vector>();
  sys.planted_r = j.at("planted_r").get<Vector>();
  if (j.contains("spec")) sys.spec = spec_from_json(j.at("spec"));
  return sys;
}

}  // namespace kaczmarz
