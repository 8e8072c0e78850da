#include <chrono>
#include <cstdio>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "cdl/sim.hpp"

using namespace cdl;

namespace {

template <class F>
double seconds(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  const int runs = argc > 1 ? std::atoi(argv[1]) : 1500;
  const int calls = argc > 2 ? std::atoi(argv[2]) : 2000;
  int threads = 1;
#ifdef _OPENMP
  threads = omp_get_max_threads();
#endif
  std::printf("threads %d, runs per step %d, calls per method %d\n\n", threads, runs, calls);

  const Method methods[] = {Method::cdl, Method::iterative};
  SweepOptions opt;
  opt.runs = runs;
  opt.record_timing = false;
  std::printf("%-6s %12s %12s %8s %s\n", "preset", "serial_s", "openmp_s", "speedup", "identical");
  for (const ScenePreset& p : {preset_2d(), preset_3d()}) {
    SweepResult serial, parallel;
    const double ts = seconds([&] { serial = run_sweep_serial(p, methods, 42, opt); });
    const double tp = seconds([&] { parallel = run_sweep(p, methods, 42, opt); });
    std::printf("%-6s %12.3f %12.3f %8.2f %s\n", p.name.c_str(), ts, tp, ts / tp,
                same_accuracy(serial, parallel) ? "yes" : "NO");
  }

  std::printf("\n%-6s %6s %12s %12s %12s %12s %8s\n", "preset", "sigma", "cdl_med_us", "cdl_iqr_us",
              "iter_med_us", "iter_iqr_us", "ratio");
  for (const ScenePreset& p : {preset_2d(), preset_3d()}) {
    for (double sigma : {0.1, 1.0, 10.0}) {
      const BenchReport r = bench_methods(p, sigma, calls, 7);
      std::printf("%-6s %6.1f %12.2f %12.2f %12.2f %12.2f %8.3f\n", p.name.c_str(), sigma, r.cdl.median_us,
                  r.cdl.q3_us - r.cdl.q1_us, r.iterative.median_us, r.iterative.q3_us - r.iterative.q1_us,
                  r.ratio);
    }
  }
  return 0;
}
