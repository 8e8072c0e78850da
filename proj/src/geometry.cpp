#include "cdl/geometry.hpp"

#include <algorithm>
#include <sstream>

#include "cdl/rng.hpp"

namespace cdl {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::validation: return "validation";
    case ErrorCode::degenerate_geometry: return "degenerate-geometry";
    case ErrorCode::degenerate_elimination: return "degenerate-elimination";
    case ErrorCode::invalid_input: return "invalid-input";
    case ErrorCode::no_solution: return "no-solution";
    case ErrorCode::not_spd: return "not-spd";
    case ErrorCode::undefined_los: return "undefined-los";
    case ErrorCode::io: return "io";
  }
  return "unknown";
}

const char* to_string(System s) { return s == System::A ? "A" : "B"; }

namespace {

void check_system(const Matrix& anchors, System s) {
  const char* name = to_string(s);
  if (anchors.cols() < 2) {
    std::ostringstream os;
    os << (s == System::A ? "M" : "N") << " < 2: system " << name << " has " << anchors.cols()
       << " anchor(s); differencing needs a reference plus at least one other";
    throw ValidationError(os.str());
  }
  if (!anchors.allFinite()) {
    throw ValidationError(std::string("system ") + name + " has a non-finite anchor coordinate");
  }
  for (Eigen::Index i = 0; i < anchors.cols(); ++i) {
    for (Eigen::Index j = i + 1; j < anchors.cols(); ++j) {
      if ((anchors.col(i) - anchors.col(j)).norm() <= Scenario::kCoincidenceTolerance) {
        std::ostringstream os;
        os << "system " << name << " anchors " << i + 1 << " and " << j + 1 << " coincide";
        throw ValidationError(os.str());
      }
    }
  }
}

}  // namespace

Scenario::Scenario(Matrix anchors_a, Matrix anchors_b)
    : anchors_a_(std::move(anchors_a)), anchors_b_(std::move(anchors_b)) {
  if (anchors_a_.rows() != anchors_b_.rows()) {
    throw ValidationError("dimension mismatch between system A and system B anchors");
  }
  if (dim() != 2 && dim() != 3) {
    throw ValidationError("dimension must be 2 or 3, got " + std::to_string(dim()));
  }
  check_system(anchors_a_, System::A);
  check_system(anchors_b_, System::B);
  if (m() + n() < dim() + 2) {
    throw ValidationError("M + N must be at least K + 2");
  }
}

Scenario Scenario::from_anchors(const std::vector<Anchor>& anchors) {
  if (anchors.empty()) {
    throw ValidationError("no anchors");
  }
  const Eigen::Index k = anchors.front().position.size();
  std::vector<const Anchor*> by_system[2];
  for (const auto& a : anchors) {
    if (a.position.size() != k) {
      throw ValidationError("dimension mismatch: anchor " + std::string(to_string(a.system)) +
                            std::to_string(a.index) + " has " +
                            std::to_string(a.position.size()) + " coordinates");
    }
    by_system[a.system == System::A ? 0 : 1].push_back(&a);
  }
  Matrix cols[2];
  for (int s = 0; s < 2; ++s) {
    auto& list = by_system[s];
    std::sort(list.begin(), list.end(),
              [](const Anchor* x, const Anchor* y) { return x->index < y->index; });
    cols[s].resize(k, static_cast<Eigen::Index>(list.size()));
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (list[i]->index != static_cast<int>(i) + 1) {
        throw ValidationError(std::string("system ") + (s == 0 ? "A" : "B") +
                              " anchor indices must be unique and contiguous from 1");
      }
      cols[s].col(static_cast<Eigen::Index>(i)) = list[i]->position;
    }
  }
  return Scenario(std::move(cols[0]), std::move(cols[1]));
}

std::vector<Anchor> Scenario::to_anchors() const {
  std::vector<Anchor> out;
  out.reserve(static_cast<std::size_t>(m() + n()));
  for (System s : {System::A, System::B}) {
    for (int i = 0; i < count(s); ++i) {
      out.push_back({s, i + 1, anchors(s).col(i)});
    }
  }
  return out;
}

Scenario Scenario::translated(const Vector& offset) const {
  return Scenario(anchors_a_.colwise() + offset, anchors_b_.colwise() + offset);
}

bool NoiseModel::all_zero() const {
  return (sigma_a.array() == 0.0).all() && (sigma_b.array() == 0.0).all();
}

bool NoiseModel::all_positive() const {
  return (sigma_a.array() > 0.0).all() && (sigma_b.array() > 0.0).all();
}

void NoiseModel::validate(int m, int n) const {
  if (sigma_a.size() != m || sigma_b.size() != n) {
    throw ValidationError("noise model length does not match anchor counts");
  }
  if (!sigma_a.allFinite() || !sigma_b.allFinite() || (sigma_a.array() < 0.0).any() ||
      (sigma_b.array() < 0.0).any()) {
    throw ValidationError("sigmas must be finite and non-negative");
  }
}

void EpochMeasurements::validate(const Scenario& scenario) const {
  if (rho_a.size() != scenario.m() || rho_b.size() != scenario.n()) {
    throw ValidationError("pseudorange vector lengths do not match the scenario");
  }
  if (!rho_a.allFinite() || !rho_b.allFinite()) {
    throw ValidationError("non-finite pseudorange");
  }
  noise.validate(scenario.m(), scenario.n());
}

void validate_position(const Position& p, int dim, const char* what) {
  if (p.size() != dim) {
    throw ValidationError(std::string(what) + ": dimension mismatch (" +
                          std::to_string(p.size()) + " vs " + std::to_string(dim) + ")");
  }
  if (!p.allFinite()) {
    throw ValidationError(std::string(what) + ": non-finite coordinate");
  }
}

Ranges true_ranges(const Scenario& scenario, const Position& p_u) {
  validate_position(p_u, scenario.dim(), "user position");
  return {(scenario.anchors_a().colwise() - p_u).colwise().norm().transpose(),
          (scenario.anchors_b().colwise() - p_u).colwise().norm().transpose()};
}

EpochMeasurements forward_model(const Scenario& scenario, const TruthState& truth,
                                const NoiseModel& noise, std::uint64_t rng_seed) {
  noise.validate(scenario.m(), scenario.n());
  if (!std::isfinite(truth.b_a) || !std::isfinite(truth.b_b)) {
    throw ValidationError("non-finite clock offset");
  }
  const Ranges r = true_ranges(scenario, truth.p_u);
  Rng rng(rng_seed);
  EpochMeasurements epoch{r.a.array() + truth.b_a, r.b.array() + truth.b_b, noise};
  for (Eigen::Index i = 0; i < epoch.rho_a.size(); ++i) epoch.rho_a[i] += rng.normal(noise.sigma_a[i]);
  for (Eigen::Index j = 0; j < epoch.rho_b.size(); ++j) epoch.rho_b[j] += rng.normal(noise.sigma_b[j]);
  return epoch;
}

}  // namespace cdl
