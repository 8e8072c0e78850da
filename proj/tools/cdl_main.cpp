#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "cdl/analysis.hpp"
#include "cdl/io.hpp"

using namespace cdl;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNoSolution = 3;
constexpr int kExitIo = 4;

struct Globals {
  std::uint64_t seed = 1;
  std::string method = "both";
  bool simplified = false;
  bool strict = false;
  std::string output;
};

struct SceneArgs {
  std::string preset;
  std::string scenario;
};

void add_scene(CLI::App* cmd, SceneArgs& s) {
  auto* p = cmd->add_option("--preset", s.preset, "built-in scene: 2d or 3d");
  auto* f = cmd->add_option("--scenario", s.scenario, "scenario YAML file");
  p->excludes(f);
}

ScenePreset resolve_scene(const SceneArgs& s) {
  if (!s.scenario.empty()) {
    const ScenarioConfig cfg = load_scenario(s.scenario);
    if (!cfg.ud_region) throw ValidationError(s.scenario + ": ud_region is required for simulation");
    ScenePreset p{s.scenario, cfg.scenario, *cfg.ud_region,
                  cfg.noise_grid.empty() ? default_noise_grid() : cfg.noise_grid, 1500};
    return p;
  }
  if (s.preset.empty() || s.preset == "2d") return preset_2d();
  if (s.preset == "3d") return preset_3d();
  throw ValidationError("unknown preset '" + s.preset + "' (expected 2d or 3d)");
}

std::vector<Method> resolve_methods(const std::string& m) {
  if (m == "both") return {Method::cdl, Method::iterative};
  return {method_from_string(m)};
}

Method single_method(const std::string& m) { return m == "both" ? Method::cdl : method_from_string(m); }

CdlOptions cdl_options(const Globals& g) {
  CdlOptions o;
  o.simplified_score = g.simplified;
  return o;
}

// Writes to -o when given, stdout otherwise.
template <class F>
void with_output(const Globals& g, F&& body) {
  if (g.output.empty()) {
    body(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(g.output);
  if (!out) throw Error(ErrorCode::io, "cannot write " + g.output);
  body(out);
  if (!out) throw Error(ErrorCode::io, "write failed: " + g.output);
}

Vector parse_vector(const std::vector<double>& v, int dim, const char* what) {
  if (static_cast<int>(v.size()) != dim) {
    throw ValidationError(std::string(what) + " needs " + std::to_string(dim) + " coordinates");
  }
  return Eigen::Map<const Vector>(v.data(), dim);
}

EpochReadResult read_epoch_file(const std::string& path, const Globals& g) {
  EpochReadOptions opt;
  opt.strict = g.strict;
  EpochReadResult r = load_epochs(path, opt);
  for (const Diagnostic& d : r.warnings) std::cerr << "warning: " << d.to_string() << '\n';
  return r;
}

void print_matrix(std::ostream& out, const char* name, const Matrix& m) {
  out << name << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << format_number(m(i, j));
    out << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Closed-form dual-system localization from pseudoranges"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "master seed")->capture_default_str();
  app.add_option("--method", g.method, "cdl, iterative or both")
      ->check(CLI::IsMember({"cdl", "iterative", "both"}))
      ->capture_default_str();
  app.add_flag("--simplified-score", g.simplified, "select the candidate by d^T d");
  app.add_flag("--strict", g.strict, "abort on malformed input; exit 3 when solve finds no solution");
  app.add_option("-o,--output", g.output, "output path (default stdout)");

  std::string epochs_path, epoch_id;
  auto* solve = app.add_subcommand("solve", "solve one epoch of a measurement file");
  solve->add_option("epochs", epochs_path, "epoch CSV file")->required();
  solve->add_option("--epoch", epoch_id, "epoch id (default: first epoch)");

  auto* batch = app.add_subcommand("batch", "solve every epoch of a measurement file");
  batch->add_option("epochs", epochs_path, "epoch CSV file")->required();

  SceneArgs scene;
  double sigma = 1.0;
  std::optional<int> runs;
  auto* simulate = app.add_subcommand("simulate", "Monte-Carlo run at one noise level");
  add_scene(simulate, scene);
  simulate->add_option("--sigma", sigma, "pseudorange sigma, m")->capture_default_str();
  simulate->add_option("--runs", runs, "runs (default 1500)");

  bool zero_step = false, per_run_crlb = false;
  auto* sweep = app.add_subcommand("sweep", "Monte-Carlo sweep over the noise grid");
  add_scene(sweep, scene);
  sweep->add_option("--runs", runs, "runs per step (default 1500)");
  sweep->add_flag("--zero-step", zero_step, "prepend a sigma = 0 step");
  sweep->add_flag("--per-run-crlb", per_run_crlb, "average the bound over run positions");

  std::vector<double> position;
  std::optional<double> crlb_sigma;
  auto* crlb = app.add_subcommand("crlb", "lower bound for a geometry");
  add_scene(crlb, scene);
  crlb->add_option("--position", position, "user position x y [z] (default: region center)")->expected(2, 3);
  crlb->add_option("--sigma", crlb_sigma, "uniform sigma, m (default: scenario sigmas)");

  int calls = 1000;
  auto* bench = app.add_subcommand("bench", "per-call runtime, CDL vs iterative");
  add_scene(bench, scene);
  bench->add_option("--sigma", sigma, "pseudorange sigma, m")->capture_default_str();
  bench->add_option("--calls", calls, "calls per method")->capture_default_str();

  int count = 10;
  auto* synth = app.add_subcommand("synth", "write a synthetic epoch CSV fixture");
  add_scene(synth, scene);
  synth->add_option("--epochs", count, "number of epochs")->capture_default_str();
  synth->add_option("--sigma", sigma, "pseudorange sigma, m")->capture_default_str();
  synth->add_option("--position", position, "user position (default: region center)")->expected(2, 3);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (*solve) {
      const EpochReadResult r = read_epoch_file(epochs_path, g);
      if (r.epochs.empty()) throw ValidationError(epochs_path + ": no valid epochs");
      const EpochRecord* rec = &r.epochs.front();
      if (!epoch_id.empty()) {
        rec = nullptr;
        for (const EpochRecord& e : r.epochs) {
          if (e.id == epoch_id) rec = &e;
        }
        if (!rec) throw ValidationError("epoch '" + epoch_id + "' not found");
      }
      const Method m = single_method(g.method);
      EpochResultRow row{rec->id, Vector::Constant(rec->scenario.dim(), std::nan("")), std::nan(""),
                         to_string(m)};
      try {
        if (m == Method::cdl) {
          const CdlResult res = cdl_solve(rec->scenario, rec->epoch, cdl_options(g));
          row.position = res.position;
          row.score = res.chosen.score;
        } else {
          const IterState st = iterative_solve(rec->scenario, rec->epoch);
          if (!st.converged) throw Error(ErrorCode::no_solution, "iterative solve did not converge");
          row.position = st.position();
          row.score = st.cost;
        }
      } catch (const Error& e) {
        if (e.code() != ErrorCode::no_solution) throw;
        std::cerr << "no solution: " << e.what() << '\n';
        if (g.strict) return kExitNoSolution;
      }
      with_output(g, [&](std::ostream& out) { emit_epoch_results(out, std::span(&row, 1), rec->scenario.dim()); });
    } else if (*batch) {
      const EpochReadResult r = read_epoch_file(epochs_path, g);
      const Method m = single_method(g.method);
      const auto rows = solve_epochs(r.epochs, m, cdl_options(g));
      const int dim = r.epochs.empty() ? 2 : r.epochs.front().scenario.dim();
      with_output(g, [&](std::ostream& out) { emit_epoch_results(out, rows, dim); });
    } else if (*simulate || *sweep) {
      ScenePreset p = resolve_scene(scene);
      if (*simulate) p.noise_grid = {sigma};
      SweepOptions opt;
      opt.runs = runs;
      opt.prepend_zero_step = zero_step;
      opt.per_run_crlb = per_run_crlb;
      opt.cdl = cdl_options(g);
      const auto methods = resolve_methods(g.method);
      const SweepResult res = run_sweep(p, methods, g.seed, opt);
      with_output(g, [&](std::ostream& out) {
        if (per_run_crlb) out << "# crlb_lb_m averaged over run positions\n";
        emit_sweep_table(out, sweep_rows(res));
      });
    } else if (*crlb) {
      ScenarioConfig cfg = !scene.scenario.empty() ? load_scenario(scene.scenario)
                                                   : config_from_preset(resolve_scene(scene));
      if (crlb_sigma) cfg.noise = NoiseModel::uniform(cfg.scenario.m(), cfg.scenario.n(), *crlb_sigma);
      Vector p_u;
      if (!position.empty()) {
        p_u = parse_vector(position, cfg.scenario.dim(), "--position");
      } else if (cfg.ud_region) {
        p_u = cfg.ud_region->center();
      } else {
        throw ValidationError("--position is required when the scenario has no ud_region");
      }
      const CrlbReport rep = crlb_report(cfg.scenario, p_u, cfg.noise, cfg.refs);
      const Matrix toa = rep.j_pos_inverse.inverse();
      const double rel = (toa - rep.crlb_tdoa).norm() / rep.crlb_tdoa.norm();
      with_output(g, [&](std::ostream& out) {
        out << "error_lb_m," << format_number(rep.error_lb) << '\n';
        out << "toa_tdoa_rel_diff," << format_number(rel) << '\n';
        print_matrix(out, "crlb_tdoa", rep.crlb_tdoa);
        print_matrix(out, "predicted_covariance", predicted_covariance(cfg.scenario, p_u, cfg.noise, cfg.refs));
      });
    } else if (*bench) {
      const ScenePreset p = resolve_scene(scene);
      const BenchReport rep = bench_methods(p, sigma, calls, g.seed, cdl_options(g));
      with_output(g, [&](std::ostream& out) {
        out << "method,calls,failures,median_us,q1_us,q3_us\n";
        for (const auto& [name, t] : {std::pair{"cdl", rep.cdl}, std::pair{"iterative", rep.iterative}}) {
          out << name << ',' << t.calls << ',' << t.failures << ',' << format_number(t.median_us) << ','
              << format_number(t.q1_us) << ',' << format_number(t.q3_us) << '\n';
        }
        out << "# ratio cdl/iterative " << format_number(rep.ratio) << '\n';
      });
    } else if (*synth) {
      const ScenePreset p = resolve_scene(scene);
      const Vector p_u = position.empty() ? p.ud_region.center()
                                          : parse_vector(position, p.scenario.dim(), "--position");
      const auto epochs = synthesize_epochs(p.scenario, p_u, count, sigma, g.seed);
      with_output(g, [&](std::ostream& out) {
        out << "# synthetic fixture: " << p.name << ", sigma " << format_number(sigma) << " m, seed "
            << g.seed << ", user position";
        for (double c : p_u) out << ' ' << format_number(c);
        out << '\n';
        write_epochs(out, epochs);
      });
    }
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    if (e.code() == ErrorCode::io) return kExitIo;
    if (e.code() == ErrorCode::no_solution && g.strict) return kExitNoSolution;
    return kExitValidation;
  }
  return 0;
}
