#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cdl/iterative.hpp"
#include "cdl/solver.hpp"

namespace cdl {

struct Box {
  Vector lo;
  Vector hi;

  Vector center() const { return 0.5 * (lo + hi); }
};

struct ScenePreset {
  std::string name;
  Scenario scenario;
  Box ud_region;
  std::vector<double> noise_grid;  // sigma values, m
  int runs_per_step = 1500;
};

// 0.1, 1.0, ..., 10.0 m (12 values).
std::vector<double> default_noise_grid();

// 200 m square; system A on the corners, system B on the side midpoints;
// user region is the central 40 m square.
ScenePreset preset_2d();

// M = 4, N = 6 around a 40 m cube centered at (100, 100, 20).
ScenePreset preset_3d();

enum class Method { cdl, iterative };

const char* to_string(Method m);
Method method_from_string(const std::string& s);

struct SweepOptions {
  bool prepend_zero_step = false;
  bool per_run_crlb = false;   // average trace(CRLB) over run positions instead of the center
  double clock_range = 1e5;    // clock offsets ~ U(-clock_range, clock_range), m
  bool record_timing = true;
  std::optional<int> runs;     // overrides preset.runs_per_step
  CdlOptions cdl;
  IterConfig iterative;
};

struct MethodStats {
  Method method = Method::cdl;
  double rmse = 0.0;  // over succeeded runs; NaN when none succeeded
  int attempted = 0;
  int succeeded = 0;
  int failed = 0;
  double median_us = 0.0;  // per-call wall time; excluded from determinism
  Vector mean_error;
  Matrix error_moment;  // mean of e e^T over succeeded runs
};

struct SweepStep {
  double sigma = 0.0;
  double error_lb = 0.0;  // 0 for the zero-noise step
  bool per_run_lb = false;
  std::vector<MethodStats> methods;

  const MethodStats& stats(Method m) const;
};

struct SweepResult {
  std::string preset;
  std::uint64_t master_seed = 0;
  std::vector<SweepStep> steps;
};

// Every field except the timing measurements compared bitwise.
bool same_accuracy(const SweepResult& x, const SweepResult& y);

// Per-run seed of run `run` at noise level `sigma`; derived from the bit
// pattern of sigma so a step's draws do not depend on the rest of the grid.
std::uint64_t run_seed(std::uint64_t master_seed, double sigma, int run);

// Runs within a step are executed on OpenMP threads. Per-run outcomes land in
// run-indexed slots and are reduced in run order, so the result matches
// run_sweep_serial bit for bit.
SweepResult run_sweep(const ScenePreset& preset, std::span<const Method> methods,
                      std::uint64_t master_seed, const SweepOptions& options = {});

// Single-threaded reference implementation of run_sweep.
SweepResult run_sweep_serial(const ScenePreset& preset, std::span<const Method> methods,
                             std::uint64_t master_seed, const SweepOptions& options = {});

struct TimingStats {
  int calls = 0;
  int failures = 0;
  double median_us = 0.0;
  double q1_us = 0.0;
  double q3_us = 0.0;
};

struct BenchReport {
  double sigma = 0.0;
  TimingStats cdl;
  TimingStats iterative;
  double ratio = 0.0;  // median CDL / median iterative
};

TimingStats timing_stats(std::vector<double> samples_us, int failures);

BenchReport bench_methods(const ScenePreset& preset, double sigma, int calls,
                          std::uint64_t seed, const CdlOptions& cdl = {},
                          const IterConfig& iterative = {});

}  // namespace cdl
