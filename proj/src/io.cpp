#include "cdl/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "cdl/rng.hpp"

namespace cdl {

const char* to_string(DiagCode code) {
  switch (code) {
    case DiagCode::syntax: return "syntax";
    case DiagCode::missing_field: return "missing_field";
    case DiagCode::too_few_a: return "too_few_a";
    case DiagCode::too_few_b: return "too_few_b";
    case DiagCode::dim_mismatch: return "dim_mismatch";
    case DiagCode::bad_value: return "bad_value";
  }
  return "unknown";
}

std::string Diagnostic::to_string() const {
  std::string out = file + ":" + std::to_string(line) + ": [" + cdl::to_string(code) + "]";
  if (!field.empty()) out += " " + field + ":";
  return out + " " + message;
}

bool ScenarioConfig::operator==(const ScenarioConfig& other) const {
  auto same_box = [](const std::optional<Box>& x, const std::optional<Box>& y) {
    if (x.has_value() != y.has_value()) return false;
    return !x || (x->lo == y->lo && x->hi == y->hi);
  };
  return scenario == other.scenario && noise.sigma_a == other.noise.sigma_a &&
         noise.sigma_b == other.noise.sigma_b && ids_a == other.ids_a && ids_b == other.ids_b &&
         refs.a == other.refs.a && refs.b == other.refs.b &&
         simplified_score == other.simplified_score && same_box(ud_region, other.ud_region) &&
         noise_grid == other.noise_grid;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::io, "read failed: " + path);
  return ss.str();
}

// ---------------------------------------------------------------- scenario

namespace {

class YamlReader {
 public:
  explicit YamlReader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(DiagCode code, const YAML::Node& at, const std::string& field,
                         const std::string& msg) const {
    const int line = at.IsDefined() ? at.Mark().line + 1 : 0;
    throw ParseError({code, source_, line, field, msg});
  }

  YAML::Node require(const YAML::Node& parent, const char* key, const std::string& field) const {
    YAML::Node n = parent[key];
    if (!n.IsDefined() || n.IsNull()) fail(DiagCode::missing_field, parent, field, "required field is missing");
    return n;
  }

  double number(const YAML::Node& n, const std::string& field) const {
    if (!n.IsScalar()) fail(DiagCode::bad_value, n, field, "expected a number");
    double v = 0.0;
    if (!YAML::convert<double>::decode(n, v) || !std::isfinite(v)) {
      fail(DiagCode::bad_value, n, field, "expected a finite number, got '" + n.Scalar() + "'");
    }
    return v;
  }

  double sigma(const YAML::Node& n, const std::string& field) const {
    const double v = number(n, field);
    if (v < 0.0) fail(DiagCode::bad_value, n, field, "sigma must be >= 0");
    return v;
  }

  int integer(const YAML::Node& n, const std::string& field) const {
    int v = 0;
    if (!n.IsScalar() || !YAML::convert<int>::decode(n, v)) {
      fail(DiagCode::bad_value, n, field, "expected an integer");
    }
    return v;
  }

  bool boolean(const YAML::Node& n, const std::string& field) const {
    bool v = false;
    if (!n.IsScalar() || !YAML::convert<bool>::decode(n, v)) {
      fail(DiagCode::bad_value, n, field, "expected true or false");
    }
    return v;
  }

  Vector vec(const YAML::Node& n, int dim, const std::string& field) const {
    if (!n.IsSequence()) fail(DiagCode::bad_value, n, field, "expected a coordinate list");
    if (static_cast<int>(n.size()) != dim) {
      fail(DiagCode::dim_mismatch, n, field,
           "has " + std::to_string(n.size()) + " coordinates, dim is " + std::to_string(dim));
    }
    Vector v(dim);
    for (int i = 0; i < dim; ++i) v[i] = number(n[i], field + "[" + std::to_string(i) + "]");
    return v;
  }

 private:
  std::string source_;
};

struct ParsedAnchor {
  std::string id;
  Vector position;
  double sigma;
  YAML::Node node;
};

}  // namespace

ScenarioConfig parse_scenario(std::string_view text, const std::string& source) {
  YamlReader rd(source);
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::ParserException& e) {
    throw ParseError({DiagCode::syntax, source, e.mark.line + 1, "", e.msg});
  }
  if (!root.IsMap()) {
    throw ParseError({DiagCode::syntax, source, root.IsDefined() ? root.Mark().line + 1 : 1, "",
                      "top level must be a mapping"});
  }

  const int dim = rd.integer(rd.require(root, "dim", "dim"), "dim");
  if (dim != 2 && dim != 3) rd.fail(DiagCode::bad_value, root["dim"], "dim", "must be 2 or 3");

  double default_sigma[2] = {1.0, 1.0};
  if (YAML::Node s = root["sigma"]; s.IsDefined() && !s.IsNull()) {
    if (!s.IsMap()) rd.fail(DiagCode::bad_value, s, "sigma", "expected {A: <m>, B: <m>}");
    if (s["A"].IsDefined()) default_sigma[0] = rd.sigma(s["A"], "sigma.A");
    if (s["B"].IsDefined()) default_sigma[1] = rd.sigma(s["B"], "sigma.B");
  }

  const YAML::Node anchors = rd.require(root, "anchors", "anchors");
  if (!anchors.IsSequence()) rd.fail(DiagCode::bad_value, anchors, "anchors", "expected a list");
  std::vector<ParsedAnchor> parsed[2];
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    const YAML::Node a = anchors[i];
    const std::string f = "anchors[" + std::to_string(i) + "]";
    if (!a.IsMap()) rd.fail(DiagCode::bad_value, a, f, "expected a mapping");
    const YAML::Node sys = rd.require(a, "system", f + ".system");
    const std::string tag = sys.IsScalar() ? sys.Scalar() : "";
    if (tag != "A" && tag != "B") rd.fail(DiagCode::bad_value, sys, f + ".system", "must be A or B");
    const int s = tag == "A" ? 0 : 1;
    ParsedAnchor pa;
    pa.id = a["id"].IsDefined() && a["id"].IsScalar()
                ? a["id"].Scalar()
                : tag + std::to_string(parsed[s].size() + 1);
    pa.position = rd.vec(rd.require(a, "position", f + ".position"), dim, f + ".position");
    pa.sigma = a["sigma"].IsDefined() ? rd.sigma(a["sigma"], f + ".sigma") : default_sigma[s];
    pa.node = a;
    parsed[s].push_back(std::move(pa));
  }
  if (parsed[0].size() < 2) {
    rd.fail(DiagCode::too_few_a, anchors, "anchors",
            "M < 2: system A needs at least 2 anchors, found " + std::to_string(parsed[0].size()));
  }
  if (parsed[1].size() < 2) {
    rd.fail(DiagCode::too_few_b, anchors, "anchors",
            "N < 2: system B needs at least 2 anchors, found " + std::to_string(parsed[1].size()));
  }

  Matrix pos[2];
  Vector sig[2];
  std::vector<std::string> ids[2];
  for (int s = 0; s < 2; ++s) {
    pos[s].resize(dim, static_cast<Eigen::Index>(parsed[s].size()));
    sig[s].resize(static_cast<Eigen::Index>(parsed[s].size()));
    for (std::size_t i = 0; i < parsed[s].size(); ++i) {
      pos[s].col(static_cast<Eigen::Index>(i)) = parsed[s][i].position;
      sig[s][static_cast<Eigen::Index>(i)] = parsed[s][i].sigma;
      ids[s].push_back(parsed[s][i].id);
    }
  }

  References refs;
  bool simplified = false;
  if (YAML::Node sv = root["solver"]; sv.IsDefined() && !sv.IsNull()) {
    if (!sv.IsMap()) rd.fail(DiagCode::bad_value, sv, "solver", "expected a mapping");
    if (sv["ref_a"].IsDefined()) refs.a = rd.integer(sv["ref_a"], "solver.ref_a");
    if (sv["ref_b"].IsDefined()) refs.b = rd.integer(sv["ref_b"], "solver.ref_b");
    if (sv["simplified_score"].IsDefined()) {
      simplified = rd.boolean(sv["simplified_score"], "solver.simplified_score");
    }
    if (refs.a < 1 || refs.a > static_cast<int>(parsed[0].size())) {
      rd.fail(DiagCode::bad_value, sv["ref_a"], "solver.ref_a", "out of range");
    }
    if (refs.b < 1 || refs.b > static_cast<int>(parsed[1].size())) {
      rd.fail(DiagCode::bad_value, sv["ref_b"], "solver.ref_b", "out of range");
    }
  }

  std::optional<Box> region;
  if (YAML::Node ud = root["ud_region"]; ud.IsDefined() && !ud.IsNull()) {
    Box b{rd.vec(rd.require(ud, "min", "ud_region.min"), dim, "ud_region.min"),
          rd.vec(rd.require(ud, "max", "ud_region.max"), dim, "ud_region.max")};
    if ((b.hi.array() < b.lo.array()).any()) {
      rd.fail(DiagCode::bad_value, ud, "ud_region", "max must be >= min on every axis");
    }
    region = std::move(b);
  }

  std::vector<double> grid;
  if (YAML::Node g = root["noise_grid"]; g.IsDefined() && !g.IsNull()) {
    if (!g.IsSequence()) rd.fail(DiagCode::bad_value, g, "noise_grid", "expected a list");
    for (std::size_t i = 0; i < g.size(); ++i) grid.push_back(rd.sigma(g[i], "noise_grid[" + std::to_string(i) + "]"));
  }

  try {
    return {Scenario(pos[0], pos[1]), {sig[0], sig[1]}, ids[0], ids[1], refs, simplified, region, grid};
  } catch (const ValidationError& e) {
    rd.fail(DiagCode::bad_value, anchors, "anchors", e.what());
  }
}

ScenarioConfig load_scenario(const std::string& path) {
  return parse_scenario(read_text_file(path), path);
}

std::string emit_scenario(const ScenarioConfig& c) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  auto flow_vec = [&out](const Vector& v) {
    out << YAML::Flow << YAML::BeginSeq;
    for (double x : v) out << x;
    out << YAML::EndSeq;
  };
  out << YAML::BeginMap;
  out << YAML::Key << "dim" << YAML::Value << c.scenario.dim();
  out << YAML::Key << "anchors" << YAML::Value << YAML::BeginSeq;
  for (System s : {System::A, System::B}) {
    const auto& ids = s == System::A ? c.ids_a : c.ids_b;
    for (int i = 0; i < c.scenario.count(s); ++i) {
      out << YAML::Flow << YAML::BeginMap;
      out << YAML::Key << "system" << YAML::Value << to_string(s);
      out << YAML::Key << "id" << YAML::Value
          << (static_cast<std::size_t>(i) < ids.size() ? ids[static_cast<std::size_t>(i)]
                                                       : to_string(s) + std::to_string(i + 1));
      out << YAML::Key << "position" << YAML::Value;
      flow_vec(c.scenario.anchor(s, i));
      out << YAML::Key << "sigma" << YAML::Value << c.noise.sigmas(s)[i];
      out << YAML::EndMap;
    }
  }
  out << YAML::EndSeq;
  out << YAML::Key << "solver" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "ref_a" << YAML::Value << c.refs.a;
  out << YAML::Key << "ref_b" << YAML::Value << c.refs.b;
  out << YAML::Key << "simplified_score" << YAML::Value << c.simplified_score;
  out << YAML::EndMap;
  if (c.ud_region) {
    out << YAML::Key << "ud_region" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "min" << YAML::Value;
    flow_vec(c.ud_region->lo);
    out << YAML::Key << "max" << YAML::Value;
    flow_vec(c.ud_region->hi);
    out << YAML::EndMap;
  }
  if (!c.noise_grid.empty()) {
    out << YAML::Key << "noise_grid" << YAML::Value << YAML::Flow << c.noise_grid;
  }
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

ScenarioConfig config_from_preset(const ScenePreset& preset, double sigma) {
  std::vector<std::string> ids[2];
  for (System s : {System::A, System::B}) {
    for (int i = 0; i < preset.scenario.count(s); ++i) {
      ids[s == System::A ? 0 : 1].push_back(std::string(to_string(s)) + std::to_string(i + 1));
    }
  }
  return {preset.scenario,
          NoiseModel::uniform(preset.scenario.m(), preset.scenario.n(), sigma),
          ids[0], ids[1], References{}, false, preset.ud_region, preset.noise_grid};
}

// ---------------------------------------------------------------- delimited text

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

bool parse_double(std::string_view s, double& v) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool parse_int(std::string_view s, int& v) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return !s.empty() && ec == std::errc() && ptr == s.data() + s.size();
}

// Data lines with their 1-based line numbers; blank and '#' lines dropped.
std::vector<std::pair<int, std::string>> data_lines(std::istream& in) {
  std::vector<std::pair<int, std::string>> out;
  std::string line;
  int no = 0;
  while (std::getline(in, line)) {
    ++no;
    const std::string_view t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    out.emplace_back(no, std::string(t));
  }
  if (in.bad()) throw Error(ErrorCode::io, "stream read failed");
  return out;
}

struct RawRow {
  int line;
  System system;
  std::string anchor_id;
  Vector position;
  double rho;
  double sigma;
};

struct RawEpoch {
  std::string id;
  int first_line;
  std::vector<RawRow> rows;
};

}  // namespace

EpochReadResult read_epochs(std::istream& in, const EpochReadOptions& opt) {
  EpochReadResult result;
  auto report = [&](DiagCode code, int line, const std::string& field, const std::string& msg) {
    Diagnostic d{code, opt.source, line, field, msg};
    if (opt.strict) throw ParseError(d);
    result.warnings.push_back(std::move(d));
  };

  std::vector<RawEpoch> raw;
  std::map<std::string, std::size_t> index;
  int dim = 0;
  int dim_line = 0;
  for (const auto& [no, text] : data_lines(in)) {
    const auto cols = split(text);
    const int ncols = static_cast<int>(cols.size());
    if (ncols != 7 && ncols != 8) {
      report(DiagCode::syntax, no, "", "expected 7 (2D) or 8 (3D) columns, got " + std::to_string(ncols));
      continue;
    }
    const int row_dim = ncols - 5;
    if (dim == 0) {
      dim = row_dim;
      dim_line = no;
    } else if (row_dim != dim) {
      report(DiagCode::dim_mismatch, no, "",
             std::to_string(row_dim) + "D row in a " + std::to_string(dim) + "D file (set at line " +
                 std::to_string(dim_line) + ")");
      continue;
    }
    if (cols[0].empty()) {
      report(DiagCode::missing_field, no, "epoch_id", "empty epoch id");
      continue;
    }
    RawRow row;
    row.line = no;
    if (cols[1] == "A") {
      row.system = System::A;
    } else if (cols[1] == "B") {
      row.system = System::B;
    } else {
      report(DiagCode::bad_value, no, "system", "must be A or B, got '" + std::string(cols[1]) + "'");
      continue;
    }
    row.anchor_id = std::string(cols[2]);
    row.position.resize(dim);
    static constexpr const char* kAxes[] = {"x", "y", "z"};
    bool ok = true;
    for (int k = 0; k < dim && ok; ++k) {
      if (!parse_double(cols[static_cast<std::size_t>(3 + k)], row.position[k]) || !std::isfinite(row.position[k])) {
        report(DiagCode::bad_value, no, kAxes[k], "not a finite number");
        ok = false;
      }
    }
    if (!ok) continue;
    const auto rho_col = cols[static_cast<std::size_t>(3 + dim)];
    const auto sig_col = cols[static_cast<std::size_t>(4 + dim)];
    if (!parse_double(rho_col, row.rho) || !std::isfinite(row.rho)) {
      report(DiagCode::bad_value, no, "pseudorange_m", "not a finite number");
      continue;
    }
    if (!parse_double(sig_col, row.sigma) || !std::isfinite(row.sigma) || row.sigma < 0.0) {
      report(DiagCode::bad_value, no, "sigma_m", "must be a finite number >= 0");
      continue;
    }
    const std::string id(cols[0]);
    auto it = index.find(id);
    if (it == index.end()) {
      it = index.emplace(id, raw.size()).first;
      raw.push_back({id, no, {}});
    }
    raw[it->second].rows.push_back(std::move(row));
  }

  for (RawEpoch& e : raw) {
    std::vector<const RawRow*> rows[2];
    for (const RawRow& r : e.rows) rows[r.system == System::A ? 0 : 1].push_back(&r);
    if (rows[0].size() < 2) {
      report(DiagCode::too_few_a, e.first_line, "epoch " + e.id,
             "M < 2: " + std::to_string(rows[0].size()) + " system-A rows; epoch rejected");
      continue;
    }
    if (rows[1].size() < 2) {
      report(DiagCode::too_few_b, e.first_line, "epoch " + e.id,
             "N < 2: " + std::to_string(rows[1].size()) + " system-B rows; epoch rejected");
      continue;
    }
    Matrix pos[2];
    Vector rho[2], sig[2];
    std::vector<std::string> ids[2];
    for (int s = 0; s < 2; ++s) {
      const auto n = static_cast<Eigen::Index>(rows[s].size());
      pos[s].resize(dim, n);
      rho[s].resize(n);
      sig[s].resize(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const RawRow& r = *rows[s][static_cast<std::size_t>(i)];
        pos[s].col(i) = r.position;
        rho[s][i] = r.rho;
        sig[s][i] = r.sigma;
        ids[s].push_back(r.anchor_id);
      }
    }
    try {
      result.epochs.push_back({e.id, Scenario(pos[0], pos[1]), {rho[0], rho[1], {sig[0], sig[1]}}, ids[0], ids[1]});
    } catch (const ValidationError& err) {
      report(DiagCode::bad_value, e.first_line, "epoch " + e.id, std::string(err.what()) + "; epoch rejected");
    }
  }
  return result;
}

EpochReadResult load_epochs(const std::string& path, const EpochReadOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path);
  EpochReadOptions opt = options;
  if (opt.source == "<input>") opt.source = path;
  return read_epochs(in, opt);
}

namespace {

std::string full_precision(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_epochs(std::ostream& out, std::span<const EpochRecord> epochs) {
  const int dim = epochs.empty() ? 2 : epochs.front().scenario.dim();
  out << "# epoch_id,system,anchor_id,x,y" << (dim == 3 ? ",z" : "") << ",pseudorange_m,sigma_m\n";
  for (const EpochRecord& e : epochs) {
    for (System s : {System::A, System::B}) {
      const auto& ids = s == System::A ? e.ids_a : e.ids_b;
      for (int i = 0; i < e.scenario.count(s); ++i) {
        out << e.id << ',' << to_string(s) << ','
            << (static_cast<std::size_t>(i) < ids.size() ? ids[static_cast<std::size_t>(i)] : std::to_string(i + 1));
        for (double c : e.scenario.anchor(s, i)) out << ',' << full_precision(c);
        out << ',' << full_precision(e.epoch.rho(s)[i]) << ',' << full_precision(e.epoch.noise.sigmas(s)[i]) << '\n';
      }
    }
  }
}

std::vector<EpochRecord> synthesize_epochs(const Scenario& scenario, const Position& p_u,
                                           int count, double sigma, std::uint64_t seed) {
  if (count < 0) throw ValidationError("epoch count must be >= 0");
  validate_position(p_u, scenario.dim(), "user position");
  Rng rng(seed);
  const NoiseModel noise = NoiseModel::uniform(scenario.m(), scenario.n(), sigma);
  TruthState truth{p_u, rng.uniform(-1e5, 1e5), rng.uniform(-1e5, 1e5)};
  const double drift_a = rng.uniform(-10.0, 10.0);
  const double drift_b = rng.uniform(-10.0, 10.0);
  std::vector<EpochRecord> out;
  for (int k = 0; k < count; ++k) {
    EpochRecord rec{"e" + std::to_string(k + 1), scenario,
                    forward_model(scenario, truth, noise, derive_seed(seed, 1, static_cast<std::uint64_t>(k))),
                    {}, {}};
    for (int i = 0; i < scenario.m(); ++i) rec.ids_a.push_back("G" + std::to_string(i + 1));
    for (int j = 0; j < scenario.n(); ++j) rec.ids_b.push_back("C" + std::to_string(j + 1));
    out.push_back(std::move(rec));
    truth.b_a += drift_a;
    truth.b_b += drift_b;
  }
  return out;
}

// ---------------------------------------------------------------- result tables

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::vector<SweepRow> sweep_rows(const SweepResult& result) {
  std::vector<SweepRow> rows;
  for (const SweepStep& step : result.steps) {
    for (const MethodStats& m : step.methods) {
      rows.push_back({step.sigma, to_string(m.method), m.rmse, step.error_lb, m.failed, m.median_us});
    }
  }
  return rows;
}

namespace {

constexpr const char* kSweepHeader = "sigma_m,method,rmse_m,crlb_lb_m,fail_count,median_us";

[[noreturn]] void table_error(int line, const std::string& msg) {
  throw ParseError({DiagCode::syntax, "<table>", line, "", msg});
}

double table_double(std::string_view s, int line, const char* field) {
  double v = 0.0;
  if (!parse_double(s, v)) throw ParseError({DiagCode::bad_value, "<table>", line, field, "not a number"});
  return v;
}

}  // namespace

void emit_sweep_table(std::ostream& out, std::span<const SweepRow> rows) {
  out << kSweepHeader << '\n';
  for (const SweepRow& r : rows) {
    out << format_number(r.sigma_m) << ',' << r.method << ',' << format_number(r.rmse_m) << ','
        << format_number(r.crlb_lb_m) << ',' << r.fail_count << ',' << format_number(r.median_us) << '\n';
  }
}

std::vector<SweepRow> read_sweep_table(std::istream& in) {
  const auto lines = data_lines(in);
  if (lines.empty()) return {};
  if (lines.front().second != kSweepHeader) table_error(lines.front().first, "unexpected sweep header");
  std::vector<SweepRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const int no = lines[i].first;
    const auto c = split(lines[i].second);
    if (c.size() != 6) table_error(no, "expected 6 columns");
    SweepRow r;
    r.sigma_m = table_double(c[0], no, "sigma_m");
    r.method = std::string(c[1]);
    r.rmse_m = table_double(c[2], no, "rmse_m");
    r.crlb_lb_m = table_double(c[3], no, "crlb_lb_m");
    if (!parse_int(c[4], r.fail_count)) throw ParseError({DiagCode::bad_value, "<table>", no, "fail_count", "not an integer"});
    r.median_us = table_double(c[5], no, "median_us");
    rows.push_back(std::move(r));
  }
  return rows;
}

void emit_epoch_results(std::ostream& out, std::span<const EpochResultRow> rows, int dim) {
  if (dim != 2 && dim != 3) throw ValidationError("result dimension must be 2 or 3");
  out << "epoch_id,x,y" << (dim == 3 ? ",z" : "") << ",score,method\n";
  for (const EpochResultRow& r : rows) {
    out << r.epoch_id;
    for (int k = 0; k < dim; ++k) {
      out << ',' << format_number(k < r.position.size() ? r.position[k] : std::nan(""));
    }
    out << ',' << format_number(r.score) << ',' << r.method << '\n';
  }
}

std::vector<EpochResultRow> read_epoch_results(std::istream& in) {
  const auto lines = data_lines(in);
  if (lines.empty()) return {};
  const auto header = split(lines.front().second);
  const int dim = static_cast<int>(header.size()) - 3;
  if ((dim != 2 && dim != 3) || header[0] != "epoch_id") table_error(lines.front().first, "unexpected result header");
  std::vector<EpochResultRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const int no = lines[i].first;
    const auto c = split(lines[i].second);
    if (static_cast<int>(c.size()) != dim + 3) table_error(no, "column count does not match header");
    EpochResultRow r;
    r.epoch_id = std::string(c[0]);
    r.position.resize(dim);
    for (int k = 0; k < dim; ++k) r.position[k] = table_double(c[static_cast<std::size_t>(1 + k)], no, "position");
    r.score = table_double(c[static_cast<std::size_t>(1 + dim)], no, "score");
    r.method = std::string(c[static_cast<std::size_t>(2 + dim)]);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<EpochResultRow> solve_epochs(std::span<const EpochRecord> epochs, Method method,
                                         const CdlOptions& cdl, const IterConfig& iter) {
  std::vector<EpochResultRow> rows(epochs.size());
  const auto n = static_cast<long>(epochs.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    const EpochRecord& e = epochs[static_cast<std::size_t>(i)];
    EpochResultRow& r = rows[static_cast<std::size_t>(i)];
    r.epoch_id = e.id;
    r.method = to_string(method);
    r.position = Vector::Constant(e.scenario.dim(), std::nan(""));
    r.score = std::nan("");
    try {
      if (method == Method::cdl) {
        const CdlResult res = cdl_solve(e.scenario, e.epoch, cdl);
        r.position = res.position;
        r.score = res.chosen.score;
      } else {
        const IterState st = iterative_solve(e.scenario, e.epoch, std::nullopt, iter);
        if (st.converged) {
          r.position = st.position();
          r.score = st.cost;
        }
      }
    } catch (const Error&) {
    }
  }
  return rows;
}

}  // namespace cdl
