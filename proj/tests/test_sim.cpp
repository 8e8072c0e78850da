#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <omp.h>

#include "cdl/analysis.hpp"
#include "cdl/sim.hpp"

using namespace cdl;

namespace {

const std::vector<Method> kBoth{Method::cdl, Method::iterative};

ScenePreset small(ScenePreset p, std::vector<double> grid, int runs) {
  p.noise_grid = std::move(grid);
  p.runs_per_step = runs;
  return p;
}

}  // namespace

TEST_CASE("preset facts") {
  const ScenePreset p2 = preset_2d();
  CHECK(p2.noise_grid.size() == 12);
  CHECK(p2.noise_grid.front() == doctest::Approx(0.1));
  CHECK(p2.noise_grid.back() == doctest::Approx(10.0));
  CHECK(p2.runs_per_step == 1500);
  CHECK(p2.scenario.m() == 4);
  CHECK(p2.scenario.n() == 4);
  CHECK(p2.ud_region.center() == Eigen::Vector2d(100, 100));
  CHECK((p2.ud_region.hi - p2.ud_region.lo) == Eigen::Vector2d(40, 40));

  const ScenePreset p3 = preset_3d();
  CHECK(p3.scenario.m() == 4);
  CHECK(p3.scenario.n() == 6);
  CHECK(p3.ud_region.center() == Eigen::Vector3d(100, 100, 20));
  CHECK(0.5 * (p3.ud_region.hi - p3.ud_region.lo) == Eigen::Vector3d(20, 20, 20));
  CHECK(p3.noise_grid == p2.noise_grid);
}

TEST_CASE("determinism and serial reference") {
  const ScenePreset p = small(preset_3d(), {0.1, 5.5}, 200);
  const SweepResult a = run_sweep(p, kBoth, 7);
  const SweepResult b = run_sweep(p, kBoth, 7);
  CHECK(same_accuracy(a, b));
  CHECK(same_accuracy(a, run_sweep_serial(p, kBoth, 7)));
  const int threads = omp_get_max_threads();
  omp_set_num_threads(std::max(2, threads * 2));
  CHECK(same_accuracy(a, run_sweep(p, kBoth, 7)));
  omp_set_num_threads(threads);
  CHECK_FALSE(same_accuracy(a, run_sweep(p, kBoth, 8)));
}

TEST_CASE("a step's draws depend only on its own sigma") {
  const ScenePreset one = small(preset_2d(), {1.0}, 100);
  const ScenePreset two = small(preset_2d(), {0.1, 1.0}, 100);
  const SweepResult a = run_sweep(one, kBoth, 3);
  const SweepResult b = run_sweep(two, kBoth, 3);
  for (Method m : kBoth) CHECK(a.steps[0].stats(m).rmse == b.steps[1].stats(m).rmse);
}

TEST_CASE("failure accounting and monotonicity") {
  for (const ScenePreset& base : {preset_2d(), preset_3d()}) {
    const ScenePreset p = small(base, {0.1, 10.0}, 300);
    const SweepResult r = run_sweep(p, kBoth, 11);
    REQUIRE(r.steps.size() == 2);
    for (const SweepStep& s : r.steps) {
      REQUIRE(s.methods.size() == 2);
      for (const MethodStats& m : s.methods) {
        CHECK(m.attempted == 300);
        CHECK(m.attempted == m.succeeded + m.failed);
      }
    }
    for (Method m : kBoth) CHECK(r.steps[1].stats(m).rmse > r.steps[0].stats(m).rmse);
    CHECK(r.steps[1].error_lb == doctest::Approx(100 * r.steps[0].error_lb));
  }
}

TEST_CASE("zero-noise validation step") {
  for (const ScenePreset& base : {preset_2d(), preset_3d()}) {
    SweepOptions o;
    o.prepend_zero_step = true;
    const SweepResult r = run_sweep(small(base, {1.0}, 200), kBoth, 5, o);
    REQUIRE(r.steps.size() == 2);
    CHECK(r.steps[0].sigma == 0.0);
    CHECK(r.steps[0].error_lb == 0.0);
    for (Method m : kBoth) {
      CHECK(r.steps[0].stats(m).failed == 0);
      CHECK(r.steps[0].stats(m).rmse < 1e-6);
    }
  }
}

TEST_CASE("error bound at the region center, or averaged per run") {
  const ScenePreset p = small(preset_2d(), {0.1}, 100);
  const SweepResult center = run_sweep(p, kBoth, 1);
  const CrlbReport rep = crlb_report(p.scenario, p.ud_region.center(), NoiseModel::uniform(4, 4, 0.1));
  CHECK(center.steps[0].error_lb == doctest::Approx(rep.error_lb).epsilon(1e-14));
  SweepOptions o;
  o.per_run_crlb = true;
  const SweepResult per_run = run_sweep(p, kBoth, 1, o);
  CHECK(per_run.steps[0].per_run_lb);
  CHECK(per_run.steps[0].error_lb == doctest::Approx(rep.error_lb).epsilon(0.05));
}

TEST_CASE("2D preset at sigma 0.1: CDL reaches the bound") {
  const ScenePreset p = small(preset_2d(), {0.1}, 1500);
  const SweepResult r = run_sweep(p, std::vector<Method>{Method::cdl}, 42);
  const double ratio = r.steps[0].stats(Method::cdl).rmse / r.steps[0].error_lb;
  CHECK(ratio >= 0.95);
  CHECK(ratio <= 1.10);
}

TEST_CASE("timing statistics") {
  const TimingStats t = timing_stats({5, 1, 4, 2, 3}, 2);
  CHECK(t.calls == 5);
  CHECK(t.failures == 2);
  CHECK(t.median_us == 3.0);
  CHECK(t.q1_us == 2.0);
  CHECK(t.q3_us == 4.0);
  const BenchReport b = bench_methods(preset_2d(), 1.0, 50, 9);
  CHECK(b.cdl.calls == 50);
  CHECK(b.iterative.calls == 50);
  CHECK(b.ratio > 0.0);
}

TEST_CASE("method names") {
  CHECK(std::string(to_string(Method::cdl)) == "cdl");
  CHECK(method_from_string("iterative") == Method::iterative);
  CHECK_THROWS_AS(method_from_string("newton"), Error);
}
