// Solver tests: hand-traced single steps (bit-exact across the stored
// and on-the-fly variants), run() loop behavior, frozen-seed
// regression pins, and the closed-form bounds and iteration
// predictors with independently derived values.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "kaczmarz/flops.hpp"
#include "kaczmarz/kernels.hpp"
#include "kaczmarz/matrix.hpp"
#include "kaczmarz/oracle.hpp"
#include "kaczmarz/problem.hpp"
#include "kaczmarz/sampler.hpp"
#include "kaczmarz/solver.hpp"

using namespace kaczmarz;

namespace {

// A = [[1,0],[0,1],[1,1]], b = [1,1,1]: inconsistent, x* = (2/3, 2/3),
// e = A x* - b = (-1/3, -1/3, 1/3).
CsrMatrix fixture_3x2_sparse() {
  const std::vector<std::size_t> ri{0, 1, 2, 2};
  const std::vector<std::size_t> ci{0, 1, 0, 1};
  const std::vector<double> v{1.0, 1.0, 1.0, 1.0};
  return CsrMatrix::from_triplets(3, 2, ri, ci, v);
}

DenseMatrix fixture_3x2_dense() { return DenseMatrix(3, 2, {1, 0, 0, 1, 1, 1}); }

LinearSystem sys_3x2(bool sparse) {
  if (sparse) return LinearSystem(Matrix(fixture_3x2_sparse()), {1.0, 1.0, 1.0});
  return LinearSystem(Matrix(fixture_3x2_dense()), {1.0, 1.0, 1.0});
}

bool same_records(const std::vector<ConvergenceRecord>& a,
                  const std::vector<ConvergenceRecord>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k].iter != b[k].iter) return false;
    if (a[k].rse != b[k].rse) return false;
    if (a[k].residual_err_sq != b[k].residual_err_sq) return false;
    if (a[k].flops != b[k].flops) return false;
    // elapsed_sec is wall time and legitimately differs
  }
  return true;
}

}  // namespace

TEST_CASE("method names round-trip and bad names are rejected") {
  for (Method m : {Method::Rkas, Method::Rk, Method::Rek})
    CHECK(parse_method(method_name(m)) == m);
  CHECK(std::string(method_name(Method::Rkas)) == "rkas");
  CHECK(std::string(method_name(Method::Rk)) == "rk");
  CHECK(std::string(method_name(Method::Rek)) == "rek");
  CHECK_THROWS_AS(parse_method("gauss"), std::invalid_argument);
  CHECK_THROWS_AS(parse_method(""), std::invalid_argument);
  CHECK_THROWS_AS(parse_method("RKAS"), std::invalid_argument);
}

TEST_CASE("solver config validation") {
  const LinearSystem sys = sys_3x2(true);
  SolverConfig cfg;

  SUBCASE("max_iters must be at least one") {
    cfg.max_iters = 0;
    CHECK_THROWS_AS(init_state(sys, cfg), std::invalid_argument);
  }
  SUBCASE("check_every must be at least one") {
    cfg.check_every = 0;
    CHECK_THROWS_AS(init_state(sys, cfg), std::invalid_argument);
  }
  SUBCASE("rse_tol must be positive") {
    cfg.rse_tol = 0.0;
    CHECK_THROWS_AS(init_state(sys, cfg), std::invalid_argument);
    cfg.rse_tol = -1e-9;
    CHECK_THROWS_AS(init_state(sys, cfg), std::invalid_argument);
  }
  SUBCASE("RK relaxation restricted to (0, 2)") {
    cfg.method = Method::Rk;
    cfg.lambda = 0.0;
    CHECK_THROWS_AS(init_state(sys, cfg), std::invalid_argument);
    cfg.lambda = 2.0;
    CHECK_THROWS_AS(init_state(sys, cfg), std::invalid_argument);
    cfg.lambda = -0.5;
    CHECK_THROWS_AS(init_state(sys, cfg), std::invalid_argument);
    cfg.lambda = 1.999;
    CHECK_NOTHROW(init_state(sys, cfg));
  }
  SUBCASE("lambda is ignored for the adaptive method") {
    cfg.method = Method::Rkas;
    cfg.lambda = 5.0;
    CHECK_NOTHROW(init_state(sys, cfg));
  }
}

TEST_CASE("init_state: start vectors, caches and setup flops") {
  const LinearSystem ssp = sys_3x2(true);
  const LinearSystem sdn = sys_3x2(false);

  SUBCASE("adaptive with stored Gram, sparse") {
    SolverConfig cfg;  // Rkas, store_gram = true
    const SolverState st = init_state(ssp, cfg);
    CHECK(st.x == Vector(2, 0.0));
    CHECK(st.r == Vector({-1.0, -1.0, -1.0}));
    CHECK(st.z.empty());
    CHECK(st.k == 0);
    CHECK(st.row_sq_norms == Vector({1.0, 1.0, 2.0}));
    REQUIRE(st.gram.has_value());
    // B = A A^T = [[1,0,1],[0,1,1],[1,1,2]]; column norms 2, 2, 6
    CHECK(st.gram->col_sq_norms == Vector({2.0, 2.0, 6.0}));
    CHECK_FALSE(st.at.has_value());
    // rows 2*4-3 = 5, Gram pairs 1+1+1+1+3 = 7, its column norms
    // 5 squares + 4 additions = 9; total 21
    CHECK(st.flops.init == 21);
    CHECK(st.flops.iter == 0);
    const SparsityProfile p = profile(fixture_3x2_sparse());
    CHECK(st.flops.init == rkas_stored_init_flops(p));
  }
  SUBCASE("adaptive on-the-fly, sparse") {
    SolverConfig cfg;
    cfg.store_gram = false;
    const SolverState st = init_state(ssp, cfg);
    CHECK(st.r == Vector({-1.0, -1.0, -1.0}));
    CHECK_FALSE(st.gram.has_value());
    REQUIRE(st.at.has_value());  // transposed structure for column walks
    CHECK(st.flops.init == 5);   // row norms only: 2*4 - 3
    const SparsityProfile p = profile(fixture_3x2_sparse());
    CHECK(st.flops.init == rkas_unstored_init_flops(p));
  }
  SUBCASE("extended method, sparse") {
    SolverConfig cfg;
    cfg.method = Method::Rek;
    const SolverState st = init_state(ssp, cfg);
    CHECK(st.z == Vector({1.0, 1.0, 1.0}));  // z^0 = b
    CHECK(st.r.empty());
    CHECK(st.col_sq_norms == Vector({2.0, 2.0}));
    REQUIRE(st.at.has_value());
    CHECK(st.flops.init == 11);  // rows 5 + columns 2*4-2 = 6
    const SparsityProfile p = profile(fixture_3x2_sparse());
    CHECK(st.flops.init == rek_init_flops(p));
  }
  SUBCASE("plain RK needs only row norms") {
    SolverConfig cfg;
    cfg.method = Method::Rk;
    cfg.lambda = 1.0;
    const SolverState st = init_state(ssp, cfg);
    CHECK(st.r.empty());
    CHECK(st.z.empty());
    CHECK_FALSE(st.gram.has_value());
    CHECK(st.flops.init == 5);
  }
  SUBCASE("dense variants match the dense closed forms") {
    const SparsityProfile p = dense_profile(3, 2);
    SolverConfig cfg;
    CHECK(init_state(sdn, cfg).flops.init == rkas_stored_init_flops(p));
    cfg.store_gram = false;
    const SolverState st = init_state(sdn, cfg);
    CHECK(st.flops.init == rkas_unstored_init_flops(p));
    CHECK_FALSE(st.at.has_value());  // dense rows give the Gram column directly
    cfg.method = Method::Rek;
    CHECK(init_state(sdn, cfg).flops.init == rek_init_flops(p));
  }
  SUBCASE("zero row or zero column is rejected") {
    CHECK_THROWS_AS(LinearSystem(Matrix(DenseMatrix(2, 2, {1, 0, 0, 0})), {1.0, 1.0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(LinearSystem(Matrix(DenseMatrix(2, 2, {1, 0, 1, 0})), {1.0, 1.0}),
                    std::invalid_argument);
  }
}

TEST_CASE("adaptive step traces match hand computation bit for bit") {
  SUBCASE("single row [3 4], b = 10") {
    const LinearSystem sys(Matrix(DenseMatrix(1, 2, {3.0, 4.0})), {10.0});
    // g = A A^T = [25], r0 = -10, alpha = -250/625 = -0.4,
    // x1 = -alpha * (3, 4), r1 = -10 - alpha*25 = 0
    const double alpha = -250.0 / 625.0;
    const Vector x_exp{0.0 - alpha * 3.0, 0.0 - alpha * 4.0};
    for (bool stored : {true, false}) {
      SolverConfig cfg;
      cfg.store_gram = stored;
      SolverState st = init_state(sys, cfg);
      rkas_step(st, sys, 0);
      CHECK(st.x == x_exp);
      CHECK(st.r == Vector({0.0}));
      CHECK(st.k == 1);
    }
  }
  SUBCASE("identity rows leave untouched residual components alone") {
    const LinearSystem sys(Matrix(DenseMatrix(2, 2, {1, 0, 0, 1})), {5.0, 7.0});
    SolverConfig cfg;
    SolverState st = init_state(sys, cfg);
    rkas_step(st, sys, 0);
    CHECK(st.x == Vector({5.0, 0.0}));
    CHECK(st.r == Vector({0.0, -7.0}));
  }
  SUBCASE("overlapping row of the 3x2 fixture, all four variants") {
    // Row 2: g = (1, 1, 2), num = <g, -b> = -4, ||g||^2 = 6,
    // alpha = -4/6; expectations built with the same arithmetic.
    const double alpha = -4.0 / 6.0;
    const Vector x_exp{0.0 - alpha * 1.0, 0.0 - alpha * 1.0};
    const Vector r_exp{-1.0 - alpha * 1.0, -1.0 - alpha * 1.0, -1.0 - alpha * 2.0};
    for (bool sparse : {true, false}) {
      for (bool stored : {true, false}) {
        CAPTURE(sparse);
        CAPTURE(stored);
        const LinearSystem sys = sys_3x2(sparse);
        SolverConfig cfg;
        cfg.store_gram = stored;
        SolverState st = init_state(sys, cfg);
        rkas_step(st, sys, 2);
        CHECK(st.x == x_exp);
        CHECK(st.r == r_exp);
      }
    }
    // the fixture is inconsistent, so one step does not finish:
    // x* = (2/3, 2/3) happens to equal x1 here but r stays nonzero
    CHECK(std::abs(r_exp[0]) > 0.3);
  }
  SUBCASE("per-step flop charges for row 2 of the sparse fixture") {
    const LinearSystem sys = sys_3x2(true);
    const SparsityProfile p = profile(fixture_3x2_sparse());
    SolverConfig cfg;
    SolverState st = init_state(sys, cfg);
    rkas_step(st, sys, 2);
    CHECK(st.flops.iter == 16);  // 2*2 + 4*3
    CHECK(st.flops.iter == rkas_stored_step_flops(p, 2));
    cfg.store_gram = false;
    SolverState st2 = init_state(sys, cfg);
    rkas_step(st2, sys, 2);
    CHECK(st2.flops.iter == 26);  // 2*2 + 5*3 + 2*4 - 1
    CHECK(st2.flops.iter == rkas_unstored_step_flops(p, 2));
  }
  SUBCASE("row index out of range") {
    const LinearSystem sys = sys_3x2(true);
    SolverConfig cfg;
    SolverState st = init_state(sys, cfg);
    CHECK_THROWS_AS(rkas_step(st, sys, 3), std::invalid_argument);
  }
}

TEST_CASE("plain RK step trace and validation") {
  const LinearSystem sys(Matrix(DenseMatrix(2, 2, {1, 0, 0, 1})), {5.0, 7.0});
  SolverConfig cfg;
  cfg.method = Method::Rk;
  cfg.lambda = 1.0;
  SolverState st = init_state(sys, cfg);
  rk_step(st, sys, 0, 1.0);
  CHECK(st.x == Vector({5.0, 0.0}));  // full projection onto row 0
  rk_step(st, sys, 1, 0.5);
  CHECK(st.x == Vector({5.0, 3.5}));  // half step toward x_2 = 7
  CHECK(st.k == 2);
  CHECK_THROWS_AS(rk_step(st, sys, 2, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(rk_step(st, sys, 0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(rk_step(st, sys, 0, 2.0), std::invalid_argument);
}

TEST_CASE("extended method step trace: column projection then row update") {
  const LinearSystem sys(Matrix(DenseMatrix(2, 2, {1, 0, 0, 1})), {3.0, 4.0});
  SolverConfig cfg;
  cfg.method = Method::Rek;
  SolverState st = init_state(sys, cfg);
  // z0 = b = (3,4); project out column 0: z = (0,4);
  // row 0 update: gamma = (0 - 3 + 0)/1 = -3, x = (3, 0)
  rek_step(st, sys, 0, 0);
  CHECK(st.z == Vector({0.0, 4.0}));
  CHECK(st.x == Vector({3.0, 0.0}));
  CHECK(st.k == 1);

  // sparse path produces the same numbers
  const std::vector<std::size_t> ri{0, 1}, ci{0, 1};
  const std::vector<double> vv{1.0, 1.0};
  const LinearSystem ssp(Matrix(CsrMatrix::from_triplets(2, 2, ri, ci, vv)),
                         {3.0, 4.0});
  SolverState st2 = init_state(ssp, cfg);
  rek_step(st2, ssp, 0, 0);
  CHECK(st2.z == st.z);
  CHECK(st2.x == st.x);

  CHECK_THROWS_AS(rek_step(st, sys, 2, 0), std::invalid_argument);
  CHECK_THROWS_AS(rek_step(st, sys, 0, 2), std::invalid_argument);
}

TEST_CASE("an adaptive step minimizes the residual over its search line") {
  // After the step, ||r||_2 must not exceed the residual at any other
  // stepsize along the same direction, and the new residual must be
  // orthogonal to the Gram column that was used.
  const DenseUdvResult gen = gen_dense_udv(12, 6, 6, 4.0, 321);
  const Matrix a(gen.a);
  const GroundTruth gt = analyze(a, Vector(12, 1.0));
  const RhsResult rhs = make_rhs(a, gt, false, 0.7, 654);
  const LinearSystem sys(a, rhs.b);

  SolverConfig cfg;
  SolverState st = init_state(sys, cfg);
  NormalSource warm(9);
  DiscreteSampler rows(st.row_sq_norms, 77);
  for (int s = 0; s < 5; ++s) rkas_step(st, sys, rows.draw());

  const std::size_t i = rows.draw();
  const Vector r_before = st.r;
  const Vector g = gram_column(sys.A, i);
  rkas_step(st, sys, i);

  const double best = norm_sq(st.r);
  const double gnorm = std::sqrt(norm_sq(g));
  CHECK(std::abs(dot(g, st.r)) <= 1e-10 * gnorm * (std::sqrt(best) + 1.0));

  // alpha grid around the optimum; every other stepsize is no better
  const double astar = dot(g, r_before) / norm_sq(g);
  for (int q = -50; q <= 50; ++q) {
    const double alpha = astar * (1.0 + 0.08 * q) + 1e-3 * q;
    double val = 0.0;
    for (std::size_t ell = 0; ell < r_before.size(); ++ell) {
      const double c = r_before[ell] - alpha * g[ell];
      val += c * c;
    }
    CHECK(val >= best - 1e-12 * (1.0 + best));
  }
}

TEST_CASE("run(): checkpoint structure, thinning and the x0 hook") {
  const LinearSystem sys = sys_3x2(true);
  const GroundTruth gt = analyze(sys.A, sys.b);

  SUBCASE("first record sits at k = 0 with RSE exactly one") {
    SolverConfig cfg;
    cfg.max_iters = 3;
    cfg.check_every = 1;
    const RunResult r = run(sys, gt, cfg);
    REQUIRE(!r.records.empty());
    CHECK(r.records[0].iter == 0);
    CHECK(r.records[0].rse == 1.0);  // ||0 - x*||^2 / ||x*||^2
    CHECK(r.records[0].flops == 21);  // setup only
  }
  SUBCASE("check_every thins the record stream") {
    SolverConfig cfg;
    cfg.method = Method::Rk;
    cfg.lambda = 0.5;
    cfg.max_iters = 100;
    cfg.check_every = 25;
    cfg.rse_tol = 1e-300;  // unreachable: the fixture is inconsistent
    const RunResult r = run(sys, gt, cfg);
    CHECK(r.status == RunStatus::MaxIters);
    CHECK(r.iters == 100);
    REQUIRE(r.records.size() == 5);
    for (std::size_t q = 0; q < 5; ++q) CHECK(r.records[q].iter == 25 * q);
    for (std::size_t q = 1; q < 5; ++q)
      CHECK(r.records[q].flops >= r.records[q - 1].flops);
    CHECK(r.records.back().rse == r.final_rse);
  }
  SUBCASE("a final partial stretch still gets its record") {
    SolverConfig cfg;
    cfg.method = Method::Rk;
    cfg.lambda = 0.5;
    cfg.max_iters = 10;
    cfg.check_every = 4;
    cfg.rse_tol = 1e-300;
    const RunResult r = run(sys, gt, cfg);
    REQUIRE(r.records.size() == 4);
    CHECK(r.records.back().iter == 10);
  }
  SUBCASE("starting at the solution converges in zero iterations") {
    SolverConfig cfg;
    const RunResult r = run(sys, gt, cfg, &gt.x_star);
    CHECK(r.status == RunStatus::Converged);
    CHECK(r.iters == 0);
    REQUIRE(r.records.size() == 1);
    CHECK(r.records[0].rse <= 1e-28);
  }
  SUBCASE("x0 of the wrong length is rejected") {
    SolverConfig cfg;
    const Vector bad(3, 0.0);
    CHECK_THROWS_AS(run(sys, gt, cfg, &bad), std::invalid_argument);
  }
  SUBCASE("a zero least-squares solution is rejected up front") {
    // b = (1, 1, -1) is orthogonal to Range(A), so x* = 0 and RSE is
    // undefined. The factorization leaves ~1e-17 noise in x*, so pin
    // the exact-zero guard by clearing the field.
    const LinearSystem sdeg(Matrix(fixture_3x2_dense()), {1.0, 1.0, -1.0});
    GroundTruth gdeg = analyze(sdeg.A, sdeg.b);
    CHECK(std::sqrt(norm_sq(gdeg.x_star)) <= 1e-12);
    gdeg.x_star.assign(gdeg.x_star.size(), 0.0);
    SolverConfig cfg;
    CHECK_THROWS_AS(run(sdeg, gdeg, cfg), std::invalid_argument);
  }
}

TEST_CASE("run() is deterministic in the seed") {
  const DenseUdvResult gen = gen_dense_udv(20, 8, 8, 3.0, 17);
  const Matrix a(gen.a);
  const GroundTruth gt = analyze(a, Vector(20, 1.0));
  const RhsResult rhs = make_rhs(a, gt, false, 0.5, 18);
  const LinearSystem sys(a, rhs.b);

  SolverConfig cfg;
  cfg.seed = 404;
  cfg.check_every = 7;
  cfg.max_iters = 5000;
  const RunResult r1 = run(sys, gt, cfg);
  const RunResult r2 = run(sys, gt, cfg);
  CHECK(r1.iters == r2.iters);
  CHECK(r1.final_rse == r2.final_rse);
  CHECK(r1.state.x == r2.state.x);
  CHECK(same_records(r1.records, r2.records));

  cfg.seed = 405;  // a different seed must change the trajectory
  const RunResult r3 = run(sys, gt, cfg);
  CHECK_FALSE(same_records(r1.records, r3.records));
}

TEST_CASE("stored and on-the-fly variants agree bit for bit over full runs") {
  SUBCASE("dense instance") {
    ProblemSpec ps;
    ps.kind = ProblemSpec::Kind::DenseUdv;
    ps.m = 60; ps.n = 20; ps.r = 20; ps.kappa = 3.0;
    ps.seed = 11; ps.consistent = false; ps.residual_scale = 0.5;
    const LinearSystem sys = build_problem(ps);
    const GroundTruth gt = analyze(sys.A, sys.b);
    SolverConfig cfg;
    cfg.seed = 21;
    cfg.check_every = 10;
    const RunResult st = run(sys, gt, cfg);
    SolverConfig c2 = cfg;
    c2.store_gram = false;
    const RunResult fl = run(sys, gt, c2);
    CHECK(st.iters == fl.iters);
    CHECK(st.state.x == fl.state.x);
    CHECK(st.final_rse == fl.final_rse);
    // same iterates, different arithmetic volume
    CHECK(st.state.flops.total() != fl.state.flops.total());
    // frozen-seed regression pin for this exact configuration
    CHECK(st.status == RunStatus::Converged);
    CHECK(st.iters == 4130);
  }
  SUBCASE("sparse instance") {
    const CsrMatrix a = gen_sparse_random(40, 25, 0.15, std::nullopt, 31);
    const GroundTruth gt0 = analyze(Matrix(a), Vector(40, 1.0));
    const RhsResult rhs = make_rhs(Matrix(a), gt0, false, 0.5, 32);
    const LinearSystem sys(Matrix(a), rhs.b);
    const GroundTruth gt = analyze(sys.A, sys.b);
    SolverConfig cfg;
    cfg.seed = 9;
    cfg.check_every = 50;
    cfg.max_iters = 300000;
    const RunResult st = run(sys, gt, cfg);
    SolverConfig c2 = cfg;
    c2.store_gram = false;
    const RunResult fl = run(sys, gt, c2);
    CHECK(st.state.x == fl.state.x);
    CHECK(st.iters == fl.iters);
    // records agree except for the flop column (the two variants do a
    // different amount of arithmetic per step by design)
    REQUIRE(st.records.size() == fl.records.size());
    for (std::size_t q = 0; q < st.records.size(); ++q) {
      CHECK(st.records[q].iter == fl.records[q].iter);
      CHECK(st.records[q].rse == fl.records[q].rse);
      CHECK(st.records[q].residual_err_sq == fl.records[q].residual_err_sq);
    }
  }
}

TEST_CASE("adaptive method converges on the inconsistent fixture") {
  const LinearSystem sys = sys_3x2(true);
  const GroundTruth gt = analyze(sys.A, sys.b);
  SolverConfig cfg;
  cfg.seed = 7;
  const RunResult r = run(sys, gt, cfg);
  CHECK(r.status == RunStatus::Converged);
  CHECK(r.final_rse <= 1e-12);
  // frozen: seed 7 draws the overlapping row first, which lands on x*
  CHECK(r.iters == 1);
}

TEST_CASE("unrelaxed RK stalls on an inconsistent system") {
  const LinearSystem sys = sys_3x2(true);
  const GroundTruth gt = analyze(sys.A, sys.b);
  SolverConfig cfg;
  cfg.method = Method::Rk;
  cfg.lambda = 1.0;
  cfg.seed = 7;
  cfg.max_iters = 20000;
  cfg.check_every = 100;
  const RunResult r = run(sys, gt, cfg);
  CHECK(r.status == RunStatus::MaxIters);
  // the convergence horizon keeps the error well above the tolerance
  CHECK(r.final_rse > 1e-4);
}

TEST_CASE("relaxed RK stays under its expected-error bound") {
  const LinearSystem sys = sys_3x2(true);
  const GroundTruth gt = analyze(sys.A, sys.b);
  const double xs2 = norm_sq(gt.x_star);

  SolverConfig cfg;
  cfg.method = Method::Rk;
  cfg.lambda = 0.5;
  cfg.max_iters = 2000;
  cfg.check_every = 100;
  cfg.rse_tol = 1e-300;
  double mean_err = 0.0;
  const int trials = 30;
  for (int t = 0; t < trials; ++t) {
    cfg.seed = derive_seed(99, static_cast<std::uint64_t>(t));
    const RunResult r = run(sys, gt, cfg);
    mean_err += r.final_rse * xs2;  // squared absolute error
  }
  mean_err /= trials;
  const double bound = rk_error_bound(2000, 0.5, gt, xs2);
  CHECK(mean_err <= bound);
  // measured 0.067 against a horizon of 2/3; keep a sanity corridor
  CHECK(mean_err > 1e-4);
  CHECK(mean_err < 0.3);
}

TEST_CASE("extended method solves a rank-deficient inconsistent system") {
  ProblemSpec ps;
  ps.kind = ProblemSpec::Kind::DenseUdv;
  ps.m = 20; ps.n = 12; ps.r = 8; ps.kappa = 2.0; ps.seed = 5;
  const LinearSystem sys = build_problem(ps);
  const GroundTruth gt = analyze(sys.A, sys.b);
  CHECK(gt.rank == 8);

  SolverConfig cfg;
  cfg.method = Method::Rek;
  cfg.seed = 3;
  cfg.check_every = 10;
  const RunResult r = run(sys, gt, cfg);
  CHECK(r.status == RunStatus::Converged);
  CHECK(r.final_rse <= 1e-12);
  double d2 = 0.0;
  for (std::size_t j = 0; j < gt.x_star.size(); ++j) {
    const double d = r.state.x[j] - gt.x_star[j];
    d2 += d * d;
  }
  CHECK(std::sqrt(d2) <= 1e-5);
  // frozen-seed regression pin
  CHECK(r.iters == 250);
}

TEST_CASE("extended method's auxiliary iterate never grows") {
  const CsrMatrix a = gen_sparse_random(30, 18, 0.2, std::nullopt, 71);
  const LinearSystem sys(Matrix(a), Vector(30, 1.0));
  SolverConfig cfg;
  cfg.method = Method::Rek;
  SolverState st = init_state(sys, cfg);
  DiscreteSampler rows(st.row_sq_norms, 1);
  DiscreteSampler colsmp(st.col_sq_norms, 2);
  double prev = norm_sq(st.z);
  for (int s = 0; s < 200; ++s) {
    rek_step(st, sys, rows.draw(), colsmp.draw());
    const double cur = norm_sq(st.z);
    CHECK(cur <= prev * (1.0 + 1e-12) + 1e-300);
    prev = cur;
  }
}

TEST_CASE("periodic residual refresh is charged to overhead") {
  ProblemSpec ps;
  ps.kind = ProblemSpec::Kind::DenseUdv;
  ps.m = 60; ps.n = 20; ps.r = 20; ps.kappa = 3.0;
  ps.seed = 11;
  const LinearSystem sys = build_problem(ps);
  const GroundTruth gt = analyze(sys.A, sys.b);
  SolverConfig cfg;
  cfg.seed = 21;
  cfg.check_every = 10;
  cfg.residual_refresh_every = 7;
  const RunResult r = run(sys, gt, cfg);
  CHECK(r.status == RunStatus::Converged);
  const std::uint64_t refreshes = r.iters / 7;
  CHECK(r.state.flops.overhead ==
        refreshes * 2 * static_cast<std::uint64_t>(nnz(sys.A)));
  SolverConfig c0 = cfg;
  c0.residual_refresh_every = 0;
  CHECK(run(sys, gt, c0).state.flops.overhead == 0);
}

TEST_CASE("expected-error bound: hand values and domain") {
  const LinearSystem sys = sys_3x2(true);
  const GroundTruth gt = analyze(sys.A, sys.b);
  // sigma_min^2 = 1, ||A||_F^2 = 4, a_min^2 = 1, a_max^2 = 2,
  // ||e||^2 = 1/3; lambda = 1/2: factor = 1 - 2*(1/4)*(1/4) = 7/8,
  // horizon = (1/2)*2*(1/3) / ((1/2)*1*1) = 2/3
  const double horizon = 2.0 / 3.0;
  CHECK(rk_error_bound(0, 0.5, gt, 1.0) == doctest::Approx(1.0 + horizon).epsilon(1e-12));
  CHECK(rk_error_bound(1, 0.5, gt, 8.0 / 9.0) ==
        doctest::Approx((7.0 / 8.0) * (8.0 / 9.0) + horizon).epsilon(1e-12));
  CHECK(rk_error_bound(1, 0.5, gt, 8.0 / 9.0) == doctest::Approx(13.0 / 9.0).epsilon(1e-12));
  // large k decays to the horizon
  CHECK(rk_error_bound(100000, 0.5, gt, 5.0) == doctest::Approx(horizon).epsilon(1e-9));

  CHECK_THROWS_AS(rk_error_bound(10, 0.0, gt, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(rk_error_bound(10, 1.0, gt, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(rk_error_bound(10, -0.3, gt, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(rk_error_bound(10, 1.7, gt, 1.0), std::invalid_argument);
}

TEST_CASE("residual contraction factor: hand values") {
  const LinearSystem sys = sys_3x2(true);
  const GroundTruth gt = analyze(sys.A, sys.b);
  // 1 - sigma_min^4/(sigma_max^2 F^2) = 1 - 1/(3*4) = 11/12
  CHECK(rkas_contraction_factor(gt) == doctest::Approx(11.0 / 12.0).epsilon(1e-12));

  // identity: 1 - 1/n
  for (std::size_t n : {2ul, 5ul}) {
    std::vector<std::size_t> ri(n), ci(n);
    std::vector<double> v(n, 1.0);
    for (std::size_t q = 0; q < n; ++q) ri[q] = ci[q] = q;
    const Matrix eye(CsrMatrix::from_triplets(n, n, ri, ci, v));
    const GroundTruth g = analyze(eye, Vector(n, 1.0));
    CHECK(rkas_contraction_factor(g) ==
          doctest::Approx(1.0 - 1.0 / double(n)).epsilon(1e-12));
  }
}

TEST_CASE("iteration predictors: hand values and clamps") {
  // identity I2, consistent (e = 0)
  const Matrix eye2(DenseMatrix(2, 2, {1, 0, 0, 1}));
  const GroundTruth g2 = analyze(eye2, Vector{1.0, 1.0});
  SUBCASE("relaxed RK balances rate against horizon") {
    const RkPrediction p = predict_iters_rk(1e-6, 1.0, g2);
    CHECK(p.lambda == doctest::Approx(0.5).epsilon(1e-15));  // consistent case
    // k = ceil(2 ln(2e6) * F^2/sigma^2) = ceil(4 ln(2e6)) = 59
    CHECK(p.iters == static_cast<std::uint64_t>(std::ceil(4.0 * std::log(2e6))));
    CHECK(p.iters == 59);
  }
  SUBCASE("already below target means zero iterations") {
    CHECK(predict_iters_rk(2.0, 1.0, g2).iters == 0);
    CHECK(predict_iters_rk(2.0 * 1.0, 1.0, g2).iters == 0);  // lg = ln(1) = 0
  }
  SUBCASE("domain checks") {
    CHECK_THROWS_AS(predict_iters_rk(0.0, 1.0, g2), std::invalid_argument);
    CHECK_THROWS_AS(predict_iters_rk(1e-6, 0.0, g2), std::invalid_argument);
    CHECK_THROWS_AS(predict_iters_rk(-1.0, 1.0, g2), std::invalid_argument);
    CHECK_THROWS_AS(predict_iters_rkas(0.0, 1.0, g2), std::invalid_argument);
    CHECK_THROWS_AS(predict_iters_rkas(1e-6, -1.0, g2), std::invalid_argument);
  }
  SUBCASE("adaptive predictor on I4") {
    // F^2 = 4, sigma^2 = 1: k = ceil(ln(eps1/eps) * 4); eps1/eps = e -> 4
    std::vector<std::size_t> ri{0, 1, 2, 3}, ci{0, 1, 2, 3};
    std::vector<double> v(4, 1.0);
    const Matrix eye4(CsrMatrix::from_triplets(4, 4, ri, ci, v));
    const GroundTruth g4 = analyze(eye4, Vector(4, 1.0));
    CHECK(predict_iters_rkas(1.0, std::exp(1.0), g4) == 4);
    CHECK(predict_iters_rkas(1.0, 1.0, g4) == 0);   // arg = 1
    CHECK(predict_iters_rkas(1.0, 0.5, g4) == 0);   // target already met
    CHECK(predict_iters_rkas(1.0, 0.0, g4) == 0);
  }
}

TEST_CASE("maintained residual never drifts from A x - b over a long run") {
  // the run loop cross-checks the maintained residual on a stride and
  // at termination; surviving a long run implies the drift stayed in
  // budget. Verify the final state explicitly for good measure.
  const CsrMatrix a = gen_sparse_random(50, 20, 0.2, std::nullopt, 91);
  const GroundTruth gt0 = analyze(Matrix(a), Vector(50, 1.0));
  const RhsResult rhs = make_rhs(Matrix(a), gt0, false, 0.5, 92);
  const LinearSystem sys(Matrix(a), rhs.b);
  const GroundTruth gt = analyze(sys.A, sys.b);
  SolverConfig cfg;
  cfg.seed = 5;
  cfg.check_every = 100;
  cfg.max_iters = 200000;
  const RunResult r = run(sys, gt, cfg);
  CHECK(r.status == RunStatus::Converged);
  const Vector ax = matvec(sys.A, r.state.x);
  double drift = 0.0;
  for (std::size_t i = 0; i < ax.size(); ++i) {
    const double d = r.state.r[i] - (ax[i] - sys.b[i]);
    drift += d * d;
  }
  CHECK(std::sqrt(drift) <= 1e-8 * (1.0 + std::sqrt(norm_sq(sys.b))));
}
