#pragma once

#include <optional>

#include "cdl/geometry.hpp"

namespace cdl {

// Gauss-Newton state over theta = [p_u; b_A; b_B].
struct IterState {
  Vector estimate;
  int iteration = 0;
  bool converged = false;
  double last_step_norm = 0.0;
  double cost = 0.0;  // weighted sum of squared pseudorange residuals

  Position position() const { return estimate.head(estimate.size() - 2); }
  double b_a() const { return estimate[estimate.size() - 2]; }
  double b_b() const { return estimate[estimate.size() - 1]; }
};

struct IterConfig {
  int max_iters = 50;
  double step_tol = 1e-6;  // m
  int max_halvings = 8;
};

// Anchor centroid with zero clock terms.
IterState default_initial_state(const Scenario& scenario);

// Measurement weights 1/sigma^2. Zero sigmas are floored at 1e-6 * max sigma;
// an all-zero noise model gives unit weights.
Vector measurement_weights(const NoiseModel& noise);

// Pseudorange residuals rho - (|p - p_i| + b_sys), system A rows first.
Vector pseudorange_residuals(const Scenario& scenario, const EpochMeasurements& epoch,
                             const Vector& theta);

// d(predicted pseudorange)/d(theta); rows [-l^T, 1, 0] (A) and [-l^T, 0, 1] (B).
Matrix pseudorange_jacobian(const Scenario& scenario, const Vector& theta);

// Weighted Gauss-Newton with step halving. A non-converged result is returned
// with converged = false; a singular normal matrix throws DegenerateGeometryError.
IterState iterative_solve(const Scenario& scenario, const EpochMeasurements& epoch,
                          const std::optional<IterState>& init = std::nullopt,
                          const IterConfig& config = {});

}  // namespace cdl
