#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "kaczmarz/matrix.hpp"
#include "kaczmarz/oracle.hpp"

namespace kaczmarz {

/// Replayable description of how a benchmark instance was produced.
struct ProblemSpec {
  enum class Kind { DenseUdv, SparseRandom, FromFile };
  Kind kind = Kind::DenseUdv;
  std::size_t m = 0, n = 0, r = 0;  // r: target rank (dense factor form)
  double kappa = 1.0;               // dense: singular values lie in [1, kappa]
  double density = 0.0;             // sparse: target nnz / (m n)
  std::optional<double> rc;         // sparse: reciprocal condition target
  std::string path;                 // source file for Kind::FromFile
  std::uint64_t seed = 0;
  bool consistent = false;
  double residual_scale = 0.5;      // ||r|| = residual_scale * ||A x||
};

/// A system matrix with right-hand side. Construction validates that
/// b is finite with matching length and that no row or column of A is
/// identically zero (row sampling and column sampling both need this).
struct LinearSystem {
  Matrix A;
  Vector b;
  Vector planted_x;  // empty when unknown
  Vector planted_r;  // empty when unknown (or consistent)
  std::optional<ProblemSpec> spec;

  LinearSystem(Matrix a, Vector rhs);
};

/// Dense U D V^T construction: U (m x r) and V (n x r) are
/// orthonormalized Gaussian factors, D = diag(1 + (kappa-1) u_k) with
/// u_k uniform on [0,1). Rank is exactly r and every nonzero singular
/// value lies in [1, kappa]. The factors are returned for testing.
struct DenseUdvResult {
  DenseMatrix a;
  DenseMatrix u;  // m x r
  DenseMatrix v;  // n x r
  Vector d;
};
DenseUdvResult gen_dense_udv(std::size_t m, std::size_t n, std::size_t r, double kappa,
                             std::uint64_t seed);

/// Random sparse matrix with approximately density*m*n nonzeros and
/// no zero row or column.
///
/// Without rc: uniform random pattern, standard normal values,
/// resampled (up to 100 times) until every row and column is hit.
///
/// With rc in (0, 1]: starts from a diagonal of singular values
/// placed geometrically on [rc, 1] and applies random Givens
/// rotations on rows and columns until the target fill is reached.
/// Rotations preserve the spectrum, so the condition number of the
/// result equals 1/rc up to roundoff; the nonzero count lands at or
/// slightly above the target. Requires m*n <= 5e7.
CsrMatrix gen_sparse_random(std::size_t m, std::size_t n, double density,
                            std::optional<double> rc, std::uint64_t seed);

/// Right-hand side with a planted solution and, when inconsistent, a
/// planted residual from the orthogonal complement of Range(A) scaled
/// to ||r|| = residual_scale * ||A x||. `gt` only supplies the range
/// projector, so any analysis of A (with any b) works. Throws when an
/// inconsistent system is requested but A has full row rank.
struct RhsResult {
  Vector b;
  Vector planted_x;
  Vector planted_r;
};
RhsResult make_rhs(const Matrix& a, const GroundTruth& gt, bool consistent,
                   double residual_scale, std::uint64_t seed);

/// Generate the full system a ProblemSpec describes (reads the file
/// for Kind::FromFile). Deterministic in spec.seed.
LinearSystem build_problem(const ProblemSpec& spec);

/// Self-describing JSON container: spec, seed, matrix arrays, b and
/// the planted data. Round-trips bit-exactly.
void save_problem(const std::string& path, const LinearSystem& sys);
LinearSystem load_problem(const std::string& path);

}  // namespace kaczmarz
