#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cdl/sim.hpp"

namespace cdl {

enum class DiagCode { syntax, missing_field, too_few_a, too_few_b, dim_mismatch, bad_value };

const char* to_string(DiagCode code);

struct Diagnostic {
  DiagCode code = DiagCode::syntax;
  std::string file;
  int line = 0;  // 1-based; 0 when unknown
  std::string field;
  std::string message;

  // "file:line: [code] field: message"
  std::string to_string() const;
};

class ParseError : public Error {
 public:
  explicit ParseError(Diagnostic diag)
      : Error(ErrorCode::validation, diag.to_string()), diag_(std::move(diag)) {}
  const Diagnostic& diagnostic() const { return diag_; }

 private:
  Diagnostic diag_;
};

// Everything a scenario file describes.
struct ScenarioConfig {
  Scenario scenario;
  NoiseModel noise;
  std::vector<std::string> ids_a;  // external anchor labels, ordinal order
  std::vector<std::string> ids_b;
  References refs;
  bool simplified_score = false;
  std::optional<Box> ud_region;
  std::vector<double> noise_grid;

  bool operator==(const ScenarioConfig& other) const;
};

// YAML schema:
//   dim: 2 | 3
//   sigma: {A: <m>, B: <m>}          optional, default 1 m per system
//   anchors:                         list, ordinal order per system
//     - {system: A|B, id: <label>, position: [x, y(, z)], sigma: <m>}
//   solver: {ref_a: 1, ref_b: 1, simplified_score: false}   optional
//   ud_region: {min: [...], max: [...]}                     optional
//   noise_grid: [<m>, ...]                                  optional
// Throws ParseError.
ScenarioConfig parse_scenario(std::string_view text, const std::string& source = "<input>");
ScenarioConfig load_scenario(const std::string& path);
std::string emit_scenario(const ScenarioConfig& config);

ScenarioConfig config_from_preset(const ScenePreset& preset, double sigma = 1.0);

// One epoch of a measurement file. Ordinals follow row order; the first row
// of each system is its reference anchor.
struct EpochRecord {
  std::string id;
  Scenario scenario;
  EpochMeasurements epoch;
  std::vector<std::string> ids_a;
  std::vector<std::string> ids_b;
};

struct EpochReadOptions {
  bool strict = false;  // abort on the first problem instead of skipping
  std::string source = "<input>";
};

struct EpochReadResult {
  std::vector<EpochRecord> epochs;  // in order of first appearance
  std::vector<Diagnostic> warnings;
};

// Rows: epoch_id,system,anchor_id,x,y[,z],pseudorange_m,sigma_m
EpochReadResult read_epochs(std::istream& in, const EpochReadOptions& options = {});
EpochReadResult load_epochs(const std::string& path, const EpochReadOptions& options = {});
void write_epochs(std::ostream& out, std::span<const EpochRecord> epochs);

// `count` epochs at a fixed user position with clock offsets drifting from
// epoch to epoch.
std::vector<EpochRecord> synthesize_epochs(const Scenario& scenario, const Position& p_u,
                                           int count, double sigma, std::uint64_t seed);

// Numbers in result tables: 9 significant digits.
std::string format_number(double v);

struct SweepRow {
  double sigma_m = 0.0;
  std::string method;
  double rmse_m = 0.0;
  double crlb_lb_m = 0.0;
  int fail_count = 0;
  double median_us = 0.0;
};

// One row per (sigma step, method), steps in sweep order.
std::vector<SweepRow> sweep_rows(const SweepResult& result);
void emit_sweep_table(std::ostream& out, std::span<const SweepRow> rows);
std::vector<SweepRow> read_sweep_table(std::istream& in);

struct EpochResultRow {
  std::string epoch_id;
  Position position;  // NaN coordinates on failure
  double score = 0.0;
  std::string method;
};

void emit_epoch_results(std::ostream& out, std::span<const EpochResultRow> rows, int dim);
std::vector<EpochResultRow> read_epoch_results(std::istream& in);

// Solves every epoch; runs on OpenMP threads, output in input order.
std::vector<EpochResultRow> solve_epochs(std::span<const EpochRecord> epochs, Method method,
                                         const CdlOptions& cdl = {}, const IterConfig& iter = {});

std::string read_text_file(const std::string& path);

}  // namespace cdl
