// bench_kernels - time the OpenMP kernels against the serial reference
// and confirm both produce bit-identical output.
#include <chrono>
#include <cstdio>
#include <functional>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "kaczmarz/kernels.hpp"
#include "kaczmarz/problem.hpp"
#include "kaczmarz/sampler.hpp"

namespace {

using namespace kaczmarz;
using Clock = std::chrono::steady_clock;

double time_best_of(const std::function<void()>& fn, int reps = 5) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = Clock::now();
    fn();
    best = std::min(best, std::chrono::duration<double>(Clock::now() - t0).count());
  }
  return best;
}

void report(const char* name, const char* shape, double serial_s, double parallel_s,
            bool identical) {
  std::printf("%-18s %-22s %10.4f ms %10.4f ms  x%-5.2f %s\n", name, shape, serial_s * 1e3,
              parallel_s * 1e3, serial_s / parallel_s, identical ? "bit-identical" : "MISMATCH");
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("threads: %d\n", omp_get_max_threads());
#else
  std::printf("threads: 1 (built without OpenMP)\n");
#endif
  std::printf("%-18s %-22s %13s %13s  %-6s\n", "kernel", "input", "serial", "parallel",
              "speedup");

  {
    const DenseMatrix a = gen_dense_udv(2000, 800, 800, 10.0, 1).a;
    Vector x(800), y(2000);
    NormalSource src(2);
    for (auto& v : x) v = src();
    for (auto& v : y) v = src();

    Vector out_s, out_p;
    double ts = time_best_of([&] { out_s = serial::row_sq_norms(a); });
    double tp = time_best_of([&] { out_p = row_sq_norms(a); });
    report("row_sq_norms", "dense 2000x800", ts, tp, out_s == out_p);

    ts = time_best_of([&] { out_s = serial::matvec(a, x); });
    tp = time_best_of([&] { out_p = matvec(a, x); });
    report("matvec", "dense 2000x800", ts, tp, out_s == out_p);

    ts = time_best_of([&] { out_s = serial::matvec_transpose(a, y); });
    tp = time_best_of([&] { out_p = matvec_transpose(a, y); });
    report("matvec_transpose", "dense 2000x800", ts, tp, out_s == out_p);

    const DenseMatrix g = gen_dense_udv(700, 500, 500, 5.0, 3).a;
    DenseMatrix gs, gp;
    ts = time_best_of([&] { gs = serial::gram_matrix(g); }, 3);
    tp = time_best_of([&] { gp = gram_matrix(g); }, 3);
    report("gram_matrix", "dense 700x500", ts, tp, gs.data() == gp.data());

    ts = time_best_of([&] { out_s = serial::gram_column(g, 123); });
    tp = time_best_of([&] { out_p = gram_column(g, 123); });
    report("gram_column", "dense 700x500", ts, tp, out_s == out_p);
  }

  {
    const CsrMatrix a = gen_sparse_random(20000, 4000, 0.002, std::nullopt, 4);
    Vector x(4000), y(20000);
    NormalSource src(5);
    for (auto& v : x) v = src();
    for (auto& v : y) v = src();

    Vector out_s, out_p;
    double ts = time_best_of([&] { out_s = serial::row_sq_norms(a); });
    double tp = time_best_of([&] { out_p = row_sq_norms(a); });
    report("row_sq_norms", "csr 20000x4000 0.002", ts, tp, out_s == out_p);

    ts = time_best_of([&] { out_s = serial::matvec(a, x); });
    tp = time_best_of([&] { out_p = matvec(a, x); });
    report("matvec", "csr 20000x4000 0.002", ts, tp, out_s == out_p);

    const CsrMatrix b = gen_sparse_random(3000, 1500, 0.01, std::nullopt, 6);
    CsrMatrix bs, bp;
    ts = time_best_of([&] { bs = serial::gram_matrix(b); }, 3);
    tp = time_best_of([&] { bp = gram_matrix(b); }, 3);
    report("gram_matrix", "csr 3000x1500 0.01", ts, tp,
           bs.values() == bp.values() && bs.col_idx() == bp.col_idx());
  }

  return 0;
}
