#pragma once

#include <vector>

#include "cdl/geometry.hpp"

namespace cdl {

// Reference anchor ordinals (1-based) for the two systems.
struct References {
  int a = 1;
  int b = 1;
};

// 0-based column indices of the non-reference anchors of a system, ascending.
// Row order of every TDOA-indexed quantity follows this list, system A first.
std::vector<int> non_reference_indices(int count, int ref_ordinal);

struct TdoaSet {
  Vector d_a;  // rho_{A_i} - rho_{A_ref}, i != ref
  Vector d_b;
  int ref_a = 1;
  int ref_b = 1;

  Eigen::Index size() const { return d_a.size() + d_b.size(); }
};

// Collective linear form  G p_u = C [r_A1, r_B1]^T + h  and its unweighted
// projection  p_u = S [r_A1, r_B1]^T + g.
struct LinearStage {
  Matrix g_mat;  // (M+N-2) x K
  Matrix c_mat;  // (M+N-2) x 2
  Vector h_vec;
  Matrix s_mat;  // K x 2
  Vector g_vec;  // K
  int ref_a = 1;
  int ref_b = 1;

  Eigen::Index rows() const { return g_mat.rows(); }
};

TdoaSet difference(const EpochMeasurements& epoch, References refs = {});

// Throws DegenerateGeometryError when G is rank deficient (smallest singular
// value <= kRankTolerance * largest).
LinearStage build_linear_system(const Scenario& scenario, const TdoaSet& tdoa);

inline constexpr double kRankTolerance = 1e-8;

}  // namespace cdl
