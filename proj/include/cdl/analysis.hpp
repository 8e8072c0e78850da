#pragma once

#include <span>

#include "cdl/linear_stage.hpp"

namespace cdl {

// Unit line-of-sight vectors from the user to every anchor, and the TDOA
// design matrix whose rows are l_ref^T - l_i^T.
struct LosGeometry {
  Matrix l_a;    // K x M
  Matrix l_b;    // K x N
  Matrix h_mat;  // (M+N-2) x K
};

// Throws Error(undefined_los) when p_u coincides with an anchor.
LosGeometry los_geometry(const Scenario& scenario, const Position& p_u, References refs = {});

struct FimTdoa {
  Matrix fim;  // H^T Q^-1 H
  LosGeometry los;
};

FimTdoa fim_tdoa(const Scenario& scenario, const Position& p_u, const NoiseModel& noise,
                 References refs = {});

// Pseudorange (TOA) Fisher information over [p_u; b_A; b_B], partitioned.
struct FimToa {
  Matrix f11;  // K x K
  Matrix f12;  // K x 2
  Matrix f22;  // 2 x 2
};

FimToa fim_toa(const Scenario& scenario, const Position& p_u, const NoiseModel& noise);

// F11 - F12 F22^-1 F12^T: inverse of the position block of the TOA CRLB.
Matrix fim_toa_position_block(const Scenario& scenario, const Position& p_u,
                              const NoiseModel& noise);

// Sherman-Morrison form of Q^-1: diag(1/sigma_i^2) - blockdiag(X_A, X_B).
struct QInverseClosedForm {
  Vector diag_part;
  Matrix x_a;
  Matrix x_b;

  Matrix assemble() const;
};

QInverseClosedForm q_inverse_closed_form(const NoiseModel& noise, References refs = {});

// Predicted error covariance of the closed-form estimator, (H^T Q^-1 H)^-1,
// evaluated with the closed-form Q^-1.
Matrix predicted_covariance(const Scenario& scenario, const Position& p_u,
                            const NoiseModel& noise, References refs = {});

struct CrlbReport {
  Matrix fim_tdoa;
  Matrix crlb_tdoa;
  double error_lb = 0.0;
  FimToa fim_toa;
  Matrix j_pos_inverse;
};

CrlbReport crlb_report(const Scenario& scenario, const Position& p_u, const NoiseModel& noise,
                       References refs = {});

// LLT succeeds and min eigenvalue > -1e-12 * trace.
bool is_spd(const Matrix& m);

// sqrt(mean |e|^2); throws invalid_input on an empty list.
double rmse(std::span<const Vector> errors);

// sqrt(trace(crlb)); throws not_spd for a non-SPD argument.
double error_lower_bound(const Matrix& crlb);

}  // namespace cdl
