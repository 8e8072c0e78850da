#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cdl/errors.hpp"

namespace cdl {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class System { A, B };

const char* to_string(System s);

// Cartesian coordinates in meters, K = 2 or 3.
using Position = Vector;

struct Anchor {
  System system = System::A;
  int index = 1;  // 1-based ordinal within its system
  Position position;
};

// Anchor geometry of both systems. Immutable once constructed; the constructor
// enforces every invariant so downstream code never re-validates.
class Scenario {
 public:
  static constexpr double kCoincidenceTolerance = 1e-9;

  // Columns are anchor positions, in ordinal order.
  Scenario(Matrix anchors_a, Matrix anchors_b);
  // Accepts anchors of both systems in any order; indices must be contiguous from 1.
  static Scenario from_anchors(const std::vector<Anchor>& anchors);

  int dim() const { return static_cast<int>(anchors_a_.rows()); }
  int m() const { return static_cast<int>(anchors_a_.cols()); }
  int n() const { return static_cast<int>(anchors_b_.cols()); }
  int count(System s) const { return s == System::A ? m() : n(); }

  const Matrix& anchors(System s) const { return s == System::A ? anchors_a_ : anchors_b_; }
  const Matrix& anchors_a() const { return anchors_a_; }
  const Matrix& anchors_b() const { return anchors_b_; }
  // 0-based column access.
  Eigen::Ref<const Vector> anchor(System s, int i) const { return anchors(s).col(i); }

  std::vector<Anchor> to_anchors() const;

  // Returns a copy with every anchor moved by `offset`.
  Scenario translated(const Vector& offset) const;

  bool operator==(const Scenario& other) const {
    return anchors_a_ == other.anchors_a_ && anchors_b_ == other.anchors_b_;
  }

 private:
  Matrix anchors_a_;
  Matrix anchors_b_;
};

struct TruthState {
  Position p_u;
  double b_a = 0.0;  // system-A clock offset times propagation speed, m
  double b_b = 0.0;
};

struct NoiseModel {
  Vector sigma_a;
  Vector sigma_b;

  static NoiseModel uniform(int m, int n, double sigma) {
    return {Vector::Constant(m, sigma), Vector::Constant(n, sigma)};
  }
  const Vector& sigmas(System s) const { return s == System::A ? sigma_a : sigma_b; }
  bool all_zero() const;
  bool all_positive() const;
  void validate(int m, int n) const;
};

struct EpochMeasurements {
  Vector rho_a;
  Vector rho_b;
  NoiseModel noise;

  const Vector& rho(System s) const { return s == System::A ? rho_a : rho_b; }
  void validate(const Scenario& scenario) const;
};

struct Ranges {
  Vector a;
  Vector b;
};

Ranges true_ranges(const Scenario& scenario, const Position& p_u);

// Pseudoranges rho = r + b + eps with eps ~ N(0, sigma^2), drawn from a
// generator seeded only by `rng_seed`.
EpochMeasurements forward_model(const Scenario& scenario, const TruthState& truth,
                                const NoiseModel& noise, std::uint64_t rng_seed);

void validate_position(const Position& p, int dim, const char* what);

}  // namespace cdl
