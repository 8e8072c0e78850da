#include "cdl/sim.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "cdl/analysis.hpp"
#include "cdl/rng.hpp"

namespace cdl {

std::vector<double> default_noise_grid() {
  std::vector<double> grid;
  for (int k = 0; k < 12; ++k) grid.push_back(0.1 + 0.9 * k);
  return grid;
}

ScenePreset preset_2d() {
  Matrix a(2, 4), b(2, 4);
  a << 0, 200, 200, 0,
       0, 0, 200, 200;
  b << 100, 200, 100, 0,
       0, 100, 200, 100;
  Vector lo(2), hi(2);
  lo << 80, 80;
  hi << 120, 120;
  return {"2d", Scenario(a, b), {lo, hi}, default_noise_grid(), 1500};
}

ScenePreset preset_3d() {
  Matrix a(3, 4), b(3, 6);
  a << 0, 200, 200, 0,
       0, 0, 200, 200,
       100, 0, 100, 0;
  b << 100, 200, 100, 0, 100, 50,
       0, 100, 200, 100, 100, 150,
       120, 30, 120, 30, 200, 80;
  Vector lo(3), hi(3);
  lo << 80, 80, 0;
  hi << 120, 120, 40;
  return {"3d", Scenario(a, b), {lo, hi}, default_noise_grid(), 1500};
}

const char* to_string(Method m) { return m == Method::cdl ? "cdl" : "iterative"; }

Method method_from_string(const std::string& s) {
  if (s == "cdl") return Method::cdl;
  if (s == "iterative" || s == "iter") return Method::iterative;
  throw ValidationError("unknown method '" + s + "' (expected cdl or iterative)");
}

const MethodStats& SweepStep::stats(Method m) const {
  for (const auto& s : methods) {
    if (s.method == m) return s;
  }
  throw ValidationError(std::string("method not in sweep: ") + to_string(m));
}

namespace {

bool same_bits(double x, double y) {
  return std::bit_cast<std::uint64_t>(x) == std::bit_cast<std::uint64_t>(y);
}

bool same_bits(const Matrix& x, const Matrix& y) {
  if (x.rows() != y.rows() || x.cols() != y.cols()) return false;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!same_bits(x.data()[i], y.data()[i])) return false;
  }
  return true;
}

using Clock = std::chrono::steady_clock;

struct RunOutcome {
  Vector error;     // empty on failure
  double micros = 0.0;
};

struct RunDraw {
  TruthState truth;
  EpochMeasurements epoch;
};

RunDraw draw_run(const ScenePreset& preset, double sigma, std::uint64_t seed,
                 double clock_range) {
  Rng rng(seed);
  const Box& box = preset.ud_region;
  TruthState truth;
  truth.p_u.resize(box.lo.size());
  for (Eigen::Index i = 0; i < box.lo.size(); ++i) truth.p_u[i] = rng.uniform(box.lo[i], box.hi[i]);
  truth.b_a = rng.uniform(-clock_range, clock_range);
  truth.b_b = rng.uniform(-clock_range, clock_range);
  const auto noise = NoiseModel::uniform(preset.scenario.m(), preset.scenario.n(), sigma);
  return {truth, forward_model(preset.scenario, truth, noise, splitmix64(seed ^ 0x6E6F697365ULL))};
}

RunOutcome run_method(Method method, const ScenePreset& preset, const RunDraw& draw,
                      const SweepOptions& opt) {
  RunOutcome out;
  const auto t0 = Clock::now();
  try {
    if (method == Method::cdl) {
      out.error = cdl_solve(preset.scenario, draw.epoch, opt.cdl).position - draw.truth.p_u;
    } else {
      const IterState st = iterative_solve(preset.scenario, draw.epoch, std::nullopt, opt.iterative);
      if (st.converged) out.error = st.position() - draw.truth.p_u;
    }
  } catch (const Error&) {
    out.error.resize(0);
  }
  if (opt.record_timing) {
    out.micros = std::chrono::duration<double, std::micro>(Clock::now() - t0).count();
  }
  if (out.error.size() > 0 && !out.error.allFinite()) out.error.resize(0);
  return out;
}

// One run: every method on the same draw. Writes only to its own slots.
void run_kernel(const ScenePreset& preset, std::span<const Method> methods, double sigma,
                std::uint64_t master_seed, int run, const SweepOptions& opt,
                std::vector<std::vector<RunOutcome>>& outcomes, std::vector<double>& traces) {
  const RunDraw draw = draw_run(preset, sigma, run_seed(master_seed, sigma, run), opt.clock_range);
  for (std::size_t m = 0; m < methods.size(); ++m) {
    outcomes[m][static_cast<std::size_t>(run)] = run_method(methods[m], preset, draw, opt);
  }
  if (opt.per_run_crlb && sigma > 0.0) {
    const auto noise = NoiseModel::uniform(preset.scenario.m(), preset.scenario.n(), sigma);
    traces[static_cast<std::size_t>(run)] =
        crlb_report(preset.scenario, draw.truth.p_u, noise, opt.cdl.refs).crlb_tdoa.trace();
  }
}

MethodStats reduce(Method method, const std::vector<RunOutcome>& runs, int dim) {
  MethodStats s;
  s.method = method;
  s.attempted = static_cast<int>(runs.size());
  s.mean_error = Vector::Zero(dim);
  s.error_moment = Matrix::Zero(dim, dim);
  double sq = 0.0;
  std::vector<double> times;
  times.reserve(runs.size());
  for (const RunOutcome& r : runs) {
    times.push_back(r.micros);
    if (r.error.size() == 0) {
      ++s.failed;
      continue;
    }
    ++s.succeeded;
    sq += r.error.squaredNorm();
    s.mean_error += r.error;
    s.error_moment += r.error * r.error.transpose();
  }
  if (s.succeeded > 0) {
    s.rmse = std::sqrt(sq / s.succeeded);
    s.mean_error /= s.succeeded;
    s.error_moment /= s.succeeded;
  } else {
    s.rmse = std::numeric_limits<double>::quiet_NaN();
  }
  s.median_us = timing_stats(std::move(times), 0).median_us;
  return s;
}

SweepResult sweep_impl(const ScenePreset& preset, std::span<const Method> methods,
                       std::uint64_t master_seed, const SweepOptions& opt, bool parallel) {
  if (methods.empty()) throw ValidationError("sweep needs at least one method");
  const int runs = opt.runs.value_or(preset.runs_per_step);
  if (runs < 1) throw ValidationError("runs per step must be >= 1");
  std::vector<double> sigmas = preset.noise_grid;
  if (opt.prepend_zero_step) sigmas.insert(sigmas.begin(), 0.0);

  SweepResult result;
  result.preset = preset.name;
  result.master_seed = master_seed;
  const int dim = preset.scenario.dim();
  for (double sigma : sigmas) {
    std::vector<std::vector<RunOutcome>> outcomes(methods.size(),
                                                  std::vector<RunOutcome>(static_cast<std::size_t>(runs)));
    std::vector<double> traces(static_cast<std::size_t>(runs), 0.0);
    if (parallel) {
#pragma omp parallel for schedule(dynamic, 16)
      for (int run = 0; run < runs; ++run) {
        run_kernel(preset, methods, sigma, master_seed, run, opt, outcomes, traces);
      }
    } else {
      for (int run = 0; run < runs; ++run) {
        run_kernel(preset, methods, sigma, master_seed, run, opt, outcomes, traces);
      }
    }

    SweepStep step;
    step.sigma = sigma;
    if (sigma > 0.0) {
      if (opt.per_run_crlb) {
        double sum = 0.0;
        for (double t : traces) sum += t;
        step.error_lb = std::sqrt(sum / runs);
        step.per_run_lb = true;
      } else {
        const auto noise = NoiseModel::uniform(preset.scenario.m(), preset.scenario.n(), sigma);
        step.error_lb = crlb_report(preset.scenario, preset.ud_region.center(), noise, opt.cdl.refs)
                            .error_lb;
      }
    }
    for (std::size_t m = 0; m < methods.size(); ++m) {
      step.methods.push_back(reduce(methods[m], outcomes[m], dim));
    }
    result.steps.push_back(std::move(step));
  }
  return result;
}

}  // namespace

bool same_accuracy(const SweepResult& x, const SweepResult& y) {
  if (x.preset != y.preset || x.master_seed != y.master_seed || x.steps.size() != y.steps.size()) {
    return false;
  }
  for (std::size_t i = 0; i < x.steps.size(); ++i) {
    const SweepStep& a = x.steps[i];
    const SweepStep& b = y.steps[i];
    if (!same_bits(a.sigma, b.sigma) || !same_bits(a.error_lb, b.error_lb) ||
        a.per_run_lb != b.per_run_lb || a.methods.size() != b.methods.size()) {
      return false;
    }
    for (std::size_t m = 0; m < a.methods.size(); ++m) {
      const MethodStats& p = a.methods[m];
      const MethodStats& q = b.methods[m];
      if (p.method != q.method || !same_bits(p.rmse, q.rmse) || p.attempted != q.attempted ||
          p.succeeded != q.succeeded || p.failed != q.failed ||
          !same_bits(p.mean_error, q.mean_error) || !same_bits(p.error_moment, q.error_moment)) {
        return false;
      }
    }
  }
  return true;
}

std::uint64_t run_seed(std::uint64_t master_seed, double sigma, int run) {
  return derive_seed(master_seed, std::bit_cast<std::uint64_t>(sigma),
                     static_cast<std::uint64_t>(run));
}

SweepResult run_sweep(const ScenePreset& preset, std::span<const Method> methods,
                      std::uint64_t master_seed, const SweepOptions& options) {
  return sweep_impl(preset, methods, master_seed, options, true);
}

SweepResult run_sweep_serial(const ScenePreset& preset, std::span<const Method> methods,
                             std::uint64_t master_seed, const SweepOptions& options) {
  return sweep_impl(preset, methods, master_seed, options, false);
}

TimingStats timing_stats(std::vector<double> samples_us, int failures) {
  TimingStats t;
  t.calls = static_cast<int>(samples_us.size());
  t.failures = failures;
  if (samples_us.empty()) return t;
  std::sort(samples_us.begin(), samples_us.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(samples_us.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, samples_us.size() - 1);
    return samples_us[lo] + (pos - static_cast<double>(lo)) * (samples_us[hi] - samples_us[lo]);
  };
  t.median_us = quantile(0.5);
  t.q1_us = quantile(0.25);
  t.q3_us = quantile(0.75);
  return t;
}

BenchReport bench_methods(const ScenePreset& preset, double sigma, int calls,
                          std::uint64_t seed, const CdlOptions& cdl, const IterConfig& iterative) {
  if (calls < 1) throw ValidationError("bench needs at least one call");
  std::vector<RunDraw> draws;
  draws.reserve(static_cast<std::size_t>(calls));
  for (int i = 0; i < calls; ++i) draws.push_back(draw_run(preset, sigma, run_seed(seed, sigma, i), 1e5));

  BenchReport rep;
  rep.sigma = sigma;
  SweepOptions opt;
  opt.cdl = cdl;
  opt.iterative = iterative;
  for (Method m : {Method::cdl, Method::iterative}) {
    std::vector<double> samples;
    samples.reserve(draws.size());
    int failures = 0;
    // One untimed pass warms caches and the allocator.
    for (int i = 0; i < std::min(calls, 50); ++i) run_method(m, preset, draws[static_cast<std::size_t>(i)], opt);
    for (const RunDraw& d : draws) {
      const RunOutcome r = run_method(m, preset, d, opt);
      samples.push_back(r.micros);
      if (r.error.size() == 0) ++failures;
    }
    (m == Method::cdl ? rep.cdl : rep.iterative) = timing_stats(std::move(samples), failures);
  }
  rep.ratio = rep.iterative.median_us > 0.0 ? rep.cdl.median_us / rep.iterative.median_us : 0.0;
  return rep;
}

}  // namespace cdl
