#pragma once

#include <cstdint>
#include <optional>

#include "kaczmarz/flops.hpp"
#include "kaczmarz/matrix.hpp"
#include "kaczmarz/oracle.hpp"
#include "kaczmarz/problem.hpp"
#include "kaczmarz/sampler.hpp"

namespace kaczmarz {

enum class Method { Rkas, Rk, Rek };

const char* method_name(Method m);
Method parse_method(const std::string& s);

struct SolverConfig {
  Method method = Method::Rkas;
  bool store_gram = true;   // RKAS: precompute A A^T and its column norms
  double lambda = 1.0;      // RK relaxation, must lie in (0, 2)
  std::uint64_t seed = 0;
  double rse_tol = 1e-12;
  std::uint64_t max_iters = 1'000'000;
  std::uint64_t check_every = 1;              // RSE checkpoint cadence
  std::uint64_t residual_refresh_every = 0;   // 0: never recompute r from scratch
};

/// Stored A A^T with precomputed column norms.
struct StoredGram {
  Matrix b;
  Vector col_sq_norms;
};

/// Everything a solver carries between steps. Setup quantities are
/// charged to `flops.init` following the documented cost model; each
/// step charges `flops.iter`.
struct SolverState {
  Vector x;            // iterate (length n)
  Vector r;            // maintained A x - b (RKAS only)
  Vector z;            // REK auxiliary iterate (length m)
  std::uint64_t k = 0;
  FlopLedger flops;

  Vector row_sq_norms;
  Vector col_sq_norms;             // REK: column norms of A
  std::optional<StoredGram> gram;  // RKAS stored variant
  std::optional<CsrMatrix> at;     // A^T for sparse column access

  // scratch for the on-the-fly Gram column
  Vector gcol;
  std::vector<std::size_t> gsupp;
  std::vector<char> gstamp;
};

/// Prepares a state for the configured method: x = 0, r = -b (RKAS),
/// z = b (REK), row/column norms, and the stored Gram when requested.
SolverState init_state(const LinearSystem& sys, const SolverConfig& cfg);

/// One iteration with the given sampled indices. Increments k and the
/// flop ledger. The stored and on-the-fly RKAS variants produce
/// bit-identical iterates for the same index sequence.
void rkas_step(SolverState& st, const LinearSystem& sys, std::size_t i);
void rk_step(SolverState& st, const LinearSystem& sys, std::size_t i, double lambda);
void rek_step(SolverState& st, const LinearSystem& sys, std::size_t i, std::size_t j);

struct ConvergenceRecord {
  std::uint64_t iter = 0;
  double rse = 0.0;
  double residual_err_sq = 0.0;  // ||A x - A x_star||^2
  double elapsed_sec = 0.0;
  std::uint64_t flops = 0;
};

enum class RunStatus { Converged, MaxIters };

struct RunResult {
  std::vector<ConvergenceRecord> records;
  RunStatus status = RunStatus::MaxIters;
  std::uint64_t iters = 0;
  double final_rse = 0.0;
  SolverState state;
};

/// Full solve loop: draws indices from norm-weighted samplers seeded
/// by cfg.seed, records every check_every iterations (plus k = 0 and
/// termination) and stops when RSE <= rse_tol or max_iters is hit.
/// `x0` overrides the zero start (testing hook). Identical seeds give
/// identical index sequences and iterates.
RunResult run(const LinearSystem& sys, const GroundTruth& gt, const SolverConfig& cfg,
              const Vector* x0 = nullptr);

/// Expected-error bound for relaxed RK after k steps from a start
/// with squared error x0_err_sq; lambda must lie in (0, 1).
double rk_error_bound(std::uint64_t k, double lambda, const GroundTruth& gt,
                      double x0_err_sq);

/// Per-step contraction factor of the adaptive method in residual
/// space: 1 - sigma_min^4 / (sigma_max^2 ||A||_F^2).
double rkas_contraction_factor(const GroundTruth& gt);

/// Iteration budget for relaxed RK to reach expected squared error
/// eps from eps0, with the lambda that balances rate and horizon.
/// Returns zero iterations when eps >= 2 eps0.
struct RkPrediction {
  std::uint64_t iters = 0;
  double lambda = 0.0;
};
RkPrediction predict_iters_rk(double eps, double eps0, const GroundTruth& gt);

/// Iteration budget for the adaptive method to bring the expected
/// squared solution error to eps, starting from squared residual
/// error eps1 = ||A x^0 - A x_star||^2. Zero when the target is
/// already met.
std::uint64_t predict_iters_rkas(double eps, double eps1, const GroundTruth& gt);

}  // namespace kaczmarz
