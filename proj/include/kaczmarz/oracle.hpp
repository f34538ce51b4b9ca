#pragma once

#include <memory>

#include "kaczmarz/matrix.hpp"

namespace kaczmarz {

/// SVD-backed ground truth for a least-squares system: the minimum
/// norm solution, the least-squares residual, and the spectral data
/// every bound and predictor consumes.
///
/// Numerical rank uses the cutoff max(m, n) * ulp(sigma_max);
/// sigma_min is the smallest singular value ABOVE that cutoff (the
/// quantity the convergence bounds depend on). sigma_min_raw keeps
/// the smallest computed singular value regardless of the cutoff, so
/// output can report both conventions without taking sides.
struct GroundTruth {
  Vector x_star;       // min-norm least squares solution A^+ b
  Vector e;            // A x_star - b (the unremovable residual)
  Vector ax_star;      // A x_star, cached for residual-space errors
  double sigma_min = 0.0;      // smallest singular value above the rank cutoff
  double sigma_max = 0.0;
  double sigma_min_raw = 0.0;  // smallest computed singular value
  double frob_norm = 0.0;
  std::size_t rank = 0;
  double a_min_sq = 0.0;  // min over rows of ||A_i||^2
  double a_max_sq = 0.0;  // max over rows of ||A_i||^2
  std::size_t m = 0, n = 0;

  /// ||x - x_star||^2 / ||x_star||^2. Throws if x_star is zero.
  double rse(const Vector& x) const;

  /// Component of g orthogonal to Range(A).
  Vector project_out_range(const Vector& g) const;
  /// Component of v orthogonal to Range(A^T) = Row(A).
  Vector project_out_rowspace(const Vector& v) const;

  ~GroundTruth();
  GroundTruth();
  GroundTruth(GroundTruth&&) noexcept;
  GroundTruth& operator=(GroundTruth&&) noexcept;
  GroundTruth(const GroundTruth&) = delete;
  GroundTruth& operator=(const GroundTruth&) = delete;

  struct Factors;  // retained singular vectors (implementation detail)
  std::unique_ptr<Factors> factors;
};

/// Full ground-truth analysis of (A, b). Dense SVD at heart: sparse
/// input is densified, and to keep that sane the dimensions are
/// capped at max(m, n) <= 20000 and m*n <= 5e7 (throws beyond).
GroundTruth analyze(const Matrix& a, const Vector& b);

/// Orthogonal projection of g onto the complement of Range(A),
/// computed from a fresh SVD of A.
Vector nullspace_residual(const Matrix& a, const Vector& g);

/// Relative squared error against a reference solution.
double rse(const Vector& x, const Vector& x_star);

}  // namespace kaczmarz
