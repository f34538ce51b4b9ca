#pragma once

#include <string>
#include <vector>

#include "kaczmarz/problem.hpp"
#include "kaczmarz/solver.hpp"

namespace kaczmarz {

/// Compact problem description for repeatable command-line flags:
///   dense:m=500,n=50,r=40,kappa=2,seed=1
///   sparse:m=1000,n=100,density=0.1,rc=0.5,seed=2
///   file:path=data/system.mtx,consistent=1
/// Unknown keys and malformed numbers throw std::invalid_argument.
ProblemSpec parse_problem_arg(const std::string& s);

struct GenerateOptions {
  ProblemSpec spec;
  std::string out;  // problem container (JSON)
};
int run_generate(const GenerateOptions& opts);

struct SolveOptions {
  std::string problem_file;          // container produced by `generate`
  std::optional<ProblemSpec> spec;   // or generate on the fly
  SolverConfig cfg;
  std::string out;                   // convergence history CSV ("" = skip)
};
int run_solve(const SolveOptions& opts);

/// Benchmark: every (problem, method) pair is run `trials` times with
/// per-trial seeds derived from `seed`. Trials are interleaved across
/// methods (trial 0 of each method, then trial 1, ...) so background
/// noise spreads evenly. Writes <out>_summary.csv (one row per pair),
/// <out>_trials.csv (one row per run) and <out>_meta.json (seeds,
/// generator identity, timer, configuration). All columns except the
/// timing ones are bit-reproducible for a fixed seed.
struct BenchOptions {
  std::vector<std::string> problems;  // parse_problem_arg strings
  std::vector<Method> methods = {Method::Rkas, Method::Rek};
  std::size_t trials = 10;
  SolverConfig base;                  // tol / max_iters / check_every / lambda / store_gram
  std::uint64_t seed = 0;
  std::string out = "bench";
};
int run_bench(const BenchOptions& opts);

/// Invariant audit. With `problem_file` set, the property checks
/// (orthogonality, range invariance, exact conditional contraction,
/// flop formula match, stored/on-the-fly bit identity) run on that
/// instance; otherwise on built-in randomized fixtures plus a few
/// structural checks (kernel agreement, Gram symmetry, the tight
/// contraction case, sampler frequencies, end-to-end solves).
/// Returns 0 when every check holds, 1 on a property failure, 2 when
/// the problem file cannot be loaded.
struct VerifyOptions {
  std::string problem_file;  // "" = built-in fixtures
  std::uint64_t seed = 0;
  bool verbose = false;
};
int run_verify(const VerifyOptions& opts);

}  // namespace kaczmarz
