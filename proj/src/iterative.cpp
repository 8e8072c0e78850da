#include "cdl/iterative.hpp"

#include <algorithm>
#include <cmath>

namespace cdl {

IterState default_initial_state(const Scenario& scenario) {
  const int k = scenario.dim();
  const double total = scenario.m() + scenario.n();
  IterState s;
  s.estimate = Vector::Zero(k + 2);
  s.estimate.head(k) = (scenario.anchors_a().rowwise().sum() + scenario.anchors_b().rowwise().sum()) / total;
  return s;
}

Vector measurement_weights(const NoiseModel& noise) {
  Vector sig(noise.sigma_a.size() + noise.sigma_b.size());
  sig << noise.sigma_a, noise.sigma_b;
  const double top = sig.size() > 0 ? sig.maxCoeff() : 0.0;
  if (!(top > 0.0)) return Vector::Ones(sig.size());
  const double floor = 1e-6 * top;
  return sig.unaryExpr([floor](double s) {
    const double v = std::max(s, floor);
    return 1.0 / (v * v);
  });
}

Vector pseudorange_residuals(const Scenario& scenario, const EpochMeasurements& epoch,
                             const Vector& theta) {
  const int k = scenario.dim();
  const auto p = theta.head(k);
  Vector r(scenario.m() + scenario.n());
  for (int i = 0; i < scenario.m(); ++i) {
    r[i] = epoch.rho_a[i] - ((p - scenario.anchor(System::A, i)).norm() + theta[k]);
  }
  for (int j = 0; j < scenario.n(); ++j) {
    r[scenario.m() + j] = epoch.rho_b[j] - ((p - scenario.anchor(System::B, j)).norm() + theta[k + 1]);
  }
  return r;
}

Matrix pseudorange_jacobian(const Scenario& scenario, const Vector& theta) {
  const int k = scenario.dim();
  const auto p = theta.head(k);
  Matrix jac = Matrix::Zero(scenario.m() + scenario.n(), k + 2);
  Eigen::Index row = 0;
  for (System s : {System::A, System::B}) {
    for (int i = 0; i < scenario.count(s); ++i, ++row) {
      const Vector diff = scenario.anchor(s, i) - p;
      const double r = diff.norm();
      if (r > 0.0) jac.row(row).head(k) = -(diff / r).transpose();
      jac(row, s == System::A ? k : k + 1) = 1.0;
    }
  }
  return jac;
}

namespace {

double weighted_cost(const Vector& r, const Vector& w) { return (w.array() * r.array().square()).sum(); }

}  // namespace

IterState iterative_solve(const Scenario& scenario, const EpochMeasurements& epoch,
                          const std::optional<IterState>& init, const IterConfig& config) {
  epoch.validate(scenario);
  const int k = scenario.dim();
  if (scenario.m() + scenario.n() < k + 2) {
    throw ValidationError("M + N must be at least K + 2 for position plus two clock terms");
  }
  IterState state = init ? *init : default_initial_state(scenario);
  if (state.estimate.size() != k + 2 || !state.estimate.allFinite()) {
    throw ValidationError("initial state must be a finite (K+2)-vector");
  }
  state.iteration = 0;
  state.converged = false;
  const Vector w = measurement_weights(epoch.noise);
  Vector theta = state.estimate;
  double cost = weighted_cost(pseudorange_residuals(scenario, epoch, theta), w);

  for (int it = 1; it <= config.max_iters; ++it) {
    const Vector r = pseudorange_residuals(scenario, epoch, theta);
    const Matrix jac = pseudorange_jacobian(scenario, theta);
    const Matrix jw = jac.transpose() * w.asDiagonal();
    const Matrix normal = jw * jac;
    Eigen::LLT<Matrix> llt(normal);
    if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-14)) {
      throw DegenerateGeometryError("singular normal matrix in Gauss-Newton step");
    }
    const Vector grad = jw * r;
    Vector step = llt.solve(grad);
    const double predicted = step.dot(grad);
    state.iteration = it;
    state.last_step_norm = step.norm();
    if (state.last_step_norm < config.step_tol) {
      theta += step;
      cost = weighted_cost(pseudorange_residuals(scenario, epoch, theta), w);
      state.converged = true;
      break;
    }
    Vector next = theta + step;
    double next_cost = weighted_cost(pseudorange_residuals(scenario, epoch, next), w);
    // Below ~1e-10 relative the cost cannot arbitrate: residuals of 1e5 m
    // pseudoranges carry ~1e-11 m rounding. Take the full step there, so the
    // path near the optimum does not depend on rounding noise in the cost.
    const bool resolvable = predicted > 1e-10 * std::max(cost, 1e-300);
    for (int h = 0; h < config.max_halvings && resolvable && !(next_cost <= cost); ++h) {
      step *= 0.5;
      next = theta + step;
      next_cost = weighted_cost(pseudorange_residuals(scenario, epoch, next), w);
    }
    if (resolvable && !(next_cost <= cost)) break;
    state.last_step_norm = step.norm();
    theta = next;
    cost = next_cost;
  }
  state.estimate = theta;
  state.cost = cost;
  return state;
}

}  // namespace cdl
