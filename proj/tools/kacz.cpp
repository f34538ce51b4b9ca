// kacz - generate, solve, benchmark and audit randomized Kaczmarz runs.
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "kaczmarz/harness.hpp"

namespace {

using namespace kaczmarz;

struct SpecFlags {
  bool dense = false;
  bool sparse = false;
  std::string from_file;
  std::size_t m = 0, n = 0, r = 0;
  double kappa = 2.0;
  double density = 0.1;
  std::optional<double> rc;
  bool consistent = false;
  double residual_scale = 0.5;
  std::uint64_t seed = 0;
};

void add_spec_flags(CLI::App* cmd, SpecFlags& f) {
  cmd->add_flag("--dense", f.dense, "dense factor-form instance (m x n, rank r, spectrum in [1, kappa])");
  cmd->add_flag("--sparse", f.sparse, "random sparse instance");
  cmd->add_option("--from-file", f.from_file, "Matrix Market file to read the matrix from");
  cmd->add_option("--m", f.m, "rows");
  cmd->add_option("--n", f.n, "columns");
  cmd->add_option("--r", f.r, "rank (dense; default min(m, n))");
  cmd->add_option("--kappa", f.kappa, "dense spectrum upper end")->capture_default_str();
  cmd->add_option("--density", f.density, "sparse fill fraction")->capture_default_str();
  cmd->add_option("--rc", f.rc, "sparse reciprocal condition number (exact by construction)");
  cmd->add_flag("--consistent,!--inconsistent", f.consistent,
                "plant b in the range of A (default: inconsistent)");
  cmd->add_option("--residual-scale", f.residual_scale,
                  "inconsistent rhs: ||r|| / ||A x|| for the planted residual")->capture_default_str();
  cmd->add_option("--seed", f.seed, "instance seed")->capture_default_str();
}

ProblemSpec to_spec(const SpecFlags& f) {
  const int kinds = int(f.dense) + int(f.sparse) + int(!f.from_file.empty());
  if (kinds != 1)
    throw std::invalid_argument("pick exactly one of --dense, --sparse, --from-file");
  ProblemSpec s;
  if (f.dense) {
    s.kind = ProblemSpec::Kind::DenseUdv;
    if (f.m == 0 || f.n == 0) throw std::invalid_argument("--dense needs --m and --n");
  } else if (f.sparse) {
    s.kind = ProblemSpec::Kind::SparseRandom;
    if (f.m == 0 || f.n == 0) throw std::invalid_argument("--sparse needs --m and --n");
  } else {
    s.kind = ProblemSpec::Kind::FromFile;
    s.path = f.from_file;
  }
  s.m = f.m;
  s.n = f.n;
  s.r = f.r;
  s.kappa = f.kappa;
  s.density = f.density;
  s.rc = f.rc;
  s.consistent = f.consistent;
  s.residual_scale = f.residual_scale;
  s.seed = f.seed;
  return s;
}

void add_solver_flags(CLI::App* cmd, SolverConfig& cfg) {
  cmd->add_option("--tol", cfg.rse_tol, "relative solution error threshold")->capture_default_str();
  cmd->add_option("--max-iters", cfg.max_iters, "iteration cap")->capture_default_str();
  cmd->add_option("--check-every", cfg.check_every, "error checkpoint cadence")->capture_default_str();
  cmd->add_option("--lambda", cfg.lambda, "rk relaxation parameter in (0, 2)")->capture_default_str();
  cmd->add_flag("--store-gram,!--no-store-gram", cfg.store_gram,
                "rkas: precompute A A^T (default on)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"randomized Kaczmarz solvers with adaptive stepsizes: benchmark harness"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("generate", "build a problem instance and save it");
  SpecFlags gen_spec;
  std::string gen_out;
  add_spec_flags(gen, gen_spec);
  gen->add_option("--out", gen_out, "output problem container (JSON)")->required();

  auto* solve = app.add_subcommand("solve", "run one solver on one instance");
  SpecFlags solve_spec;
  SolveOptions solve_opts;
  std::string solve_method = "rkas";
  std::uint64_t solve_seed = 0;
  solve->add_option("--in", solve_opts.problem_file, "problem container from `generate`");
  add_spec_flags(solve, solve_spec);
  solve->add_option("--method", solve_method, "rkas | rk | rek")->capture_default_str();
  add_solver_flags(solve, solve_opts.cfg);
  solve->add_option("--solver-seed", solve_seed, "sampling seed")->capture_default_str();
  solve->add_option("--out", solve_opts.out, "convergence history CSV");

  auto* bench = app.add_subcommand("bench", "trial matrix of problems x methods");
  BenchOptions bench_opts;
  std::vector<std::string> bench_methods = {"rkas", "rek"};
  bench->add_option("--problem", bench_opts.problems,
                    "problem spec, repeatable (dense:m=500,n=50,r=40,kappa=2,seed=1 | "
                    "sparse:m=1000,n=100,density=0.1,rc=0.5,seed=2 | file:path=a.mtx)")
      ->required();
  bench->add_option("--methods", bench_methods, "comma-separated method list")
      ->delimiter(',')
      ->capture_default_str();
  bench->add_option("--trials", bench_opts.trials, "runs per problem x method")->capture_default_str();
  add_solver_flags(bench, bench_opts.base);
  bench->add_option("--seed", bench_opts.seed, "master seed for per-trial streams")->capture_default_str();
  bench->add_option("--out", bench_opts.out, "output prefix")->capture_default_str();

  auto* verify = app.add_subcommand("verify",
                                    "audit solver invariants (built-in fixtures or --in file)");
  VerifyOptions verify_opts;
  verify->add_option("--in", verify_opts.problem_file,
                     "problem container to audit (default: built-in fixtures)");
  verify->add_option("--seed", verify_opts.seed, "audit seed")->capture_default_str();
  verify->add_flag("--verbose", verify_opts.verbose, "print per-check details");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // usage problems exit 2, --help exits 0
  }

  try {
    if (gen->parsed()) {
      return run_generate({to_spec(gen_spec), gen_out});
    }
    if (solve->parsed()) {
      solve_opts.cfg.method = parse_method(solve_method);
      solve_opts.cfg.seed = solve_seed;
      if (solve_opts.problem_file.empty()) solve_opts.spec = to_spec(solve_spec);
      return run_solve(solve_opts);
    }
    if (bench->parsed()) {
      bench_opts.methods.clear();
      for (const auto& s : bench_methods) bench_opts.methods.push_back(parse_method(s));
      return run_bench(bench_opts);
    }
    return run_verify(verify_opts);
  } catch (const std::invalid_argument& ex) {
    std::fprintf(stderr, "usage error: %s\n", ex.what());
    return 2;
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 1;
  }
}
