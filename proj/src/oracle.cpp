#include "kaczmarz/oracle.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "kaczmarz/kernels.hpp"

namespace kaczmarz {

namespace {

constexpr std::size_t kMaxDim = 20000;
constexpr std::size_t kMaxDense = 50'000'000;

Eigen::MatrixXd to_eigen(const Matrix& a) {
  const DenseMatrix d = densify(a);
  Eigen::MatrixXd out(d.rows(), d.cols());
  for (std::size_t i = 0; i < d.rows(); ++i)
    for (std::size_t j = 0; j < d.cols(); ++j)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = d(i, j);
  return out;
}

void check_size(const Matrix& a) {
  const std::size_t m = rows(a), n = cols(a);
  if (m == 0 || n == 0) throw std::invalid_argument("oracle: empty matrix");
  if (std::max(m, n) > kMaxDim || m * n > kMaxDense)
    throw std::invalid_argument(
        "oracle: matrix exceeds the dense analysis cap (max dim 20000, 5e7 entries)");
}

double ulp_of(double x) {
  return std::nextafter(x, std::numeric_limits<double>::infinity()) - x;
}

}  // namespace

struct GroundTruth::Factors {
  Eigen::MatrixXd u;  // m x rank
  Eigen::MatrixXd v;  // n x rank
  Eigen::VectorXd sigma;
};

GroundTruth::GroundTruth() = default;
GroundTruth::~GroundTruth() = default;
GroundTruth::GroundTruth(GroundTruth&&) noexcept = default;
GroundTruth& GroundTruth::operator=(GroundTruth&&) noexcept = default;

double GroundTruth::rse(const Vector& x) const { return kaczmarz::rse(x, x_star); }

Vector GroundTruth::project_out_range(const Vector& g) const {
  if (g.size() != m) throw std::invalid_argument("project_out_range: length mismatch");
  Eigen::Map<const Eigen::VectorXd> gv(g.data(), static_cast<Eigen::Index>(g.size()));
  Eigen::VectorXd res = gv - factors->u * (factors->u.transpose() * gv);
  return Vector(res.data(), res.data() + res.size());
}

Vector GroundTruth::project_out_rowspace(const Vector& v) const {
  if (v.size() != n) throw std::invalid_argument("project_out_rowspace: length mismatch");
  Eigen::Map<const Eigen::VectorXd> xv(v.data(), static_cast<Eigen::Index>(v.size()));
  Eigen::VectorXd res = xv - factors->v * (factors->v.transpose() * xv);
  return Vector(res.data(), res.data() + res.size());
}

GroundTruth analyze(const Matrix& a, const Vector& b) {
  check_size(a);
  if (b.size() != rows(a)) throw std::invalid_argument("analyze: b length mismatch");
  if (!detail::all_finite(b)) throw std::invalid_argument("analyze: non-finite b");

  const Eigen::MatrixXd ad = to_eigen(a);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(ad, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();

  GroundTruth gt;
  gt.m = rows(a);
  gt.n = cols(a);
  gt.sigma_max = sv.size() > 0 ? sv(0) : 0.0;
  const double cutoff =
      static_cast<double>(std::max(gt.m, gt.n)) * ulp_of(gt.sigma_max);
  std::size_t rank = 0;
  for (Eigen::Index k = 0; k < sv.size(); ++k)
    if (sv(k) > cutoff) ++rank;
  if (rank == 0) throw std::invalid_argument("analyze: matrix is numerically zero");
  gt.rank = rank;
  gt.sigma_min = sv(static_cast<Eigen::Index>(rank - 1));
  gt.sigma_min_raw = sv(sv.size() - 1);

  gt.factors = std::make_unique<GroundTruth::Factors>();
  gt.factors->u = svd.matrixU().leftCols(static_cast<Eigen::Index>(rank));
  gt.factors->v = svd.matrixV().leftCols(static_cast<Eigen::Index>(rank));
  gt.factors->sigma = sv.head(static_cast<Eigen::Index>(rank));

  Eigen::Map<const Eigen::VectorXd> bv(b.data(), static_cast<Eigen::Index>(b.size()));
  const Eigen::VectorXd coef =
      gt.factors->sigma.array().inverse().matrix().asDiagonal() *
      (gt.factors->u.transpose() * bv);
  const Eigen::VectorXd xs = gt.factors->v * coef;
  gt.x_star.assign(xs.data(), xs.data() + xs.size());

  const Eigen::VectorXd axs = ad * xs;
  gt.ax_star.assign(axs.data(), axs.data() + axs.size());
  gt.e.resize(gt.m);
  for (std::size_t i = 0; i < gt.m; ++i) gt.e[i] = gt.ax_star[i] - b[i];

  gt.frob_norm = std::sqrt(norm_sq({ad.data(), static_cast<std::size_t>(ad.size())}));

  // row norms computed inline: unlike row_sq_norms this tolerates a
  // zero row, since analysis of such a matrix is still well defined
  gt.a_min_sq = std::numeric_limits<double>::infinity();
  gt.a_max_sq = 0.0;
  for (Eigen::Index i = 0; i < ad.rows(); ++i) {
    const double s = ad.row(i).squaredNorm();
    gt.a_min_sq = std::min(gt.a_min_sq, s);
    gt.a_max_sq = std::max(gt.a_max_sq, s);
  }
  return gt;
}

Vector nullspace_residual(const Matrix& a, const Vector& g) {
  check_size(a);
  if (g.size() != rows(a))
    throw std::invalid_argument("nullspace_residual: length mismatch");
  const Eigen::MatrixXd ad = to_eigen(a);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(ad, Eigen::ComputeThinU);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double cutoff =
      static_cast<double>(std::max(rows(a), cols(a))) *
      ulp_of(sv.size() > 0 ? sv(0) : 0.0);
  Eigen::Index rank = 0;
  for (Eigen::Index k = 0; k < sv.size(); ++k)
    if (sv(k) > cutoff) ++rank;
  const Eigen::MatrixXd u = svd.matrixU().leftCols(rank);
  Eigen::Map<const Eigen::VectorXd> gv(g.data(), static_cast<Eigen::Index>(g.size()));
  Eigen::VectorXd res = gv - u * (u.transpose() * gv);
  return Vector(res.data(), res.data() + res.size());
}

double rse(const Vector& x, const Vector& x_star) {
  if (x.size() != x_star.size()) throw std::invalid_argument("rse: length mismatch");
  const double denom = norm_sq(x_star);
  if (denom == 0.0)
    throw std::invalid_argument("rse: reference solution is zero, error undefined");
  double num = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double d = x[k] - x_star[k];
    num += d * d;
  }
  return num / denom;
}

}  // namespace kaczmarz
