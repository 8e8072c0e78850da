#pragma once

#include <string>
#include <vector>

#include "cdl/linear_stage.hpp"
#include "cdl/polynomial.hpp"

namespace cdl {

inline constexpr double kRangeFloor = 1e-3;  // m

struct ReconstructedRanges {
  Vector a;  // r_{A_i}, i != ref, in TDOA row order
  Vector b;
  int clamped = 0;  // entries raised to the floor
};

// r_{A_i} ~ r_{A_ref} + (rho_{A_i} - rho_{A_ref}); likewise for B.
ReconstructedRanges reconstruct_ranges(const RootPair& roots, const TdoaSet& tdoa,
                                       double floor = kRangeFloor);

// Covariance of the TDOA noise vector: block diagonal, each block
// diag(sigma_i^2) + sigma_ref^2 * J.
Matrix tdoa_covariance(const NoiseModel& noise, References refs = {});

struct WeightModel {
  Vector d_diag;
  Matrix q_mat;
  Matrix w_mat;           // D Q D, or identity when weighting is bypassed
  bool weighted = true;   // false for zero-noise epochs
};

WeightModel build_weight(const ReconstructedRanges& ranges, const NoiseModel& noise,
                         References refs = {});
WeightModel build_weight(const ReconstructedRanges& ranges, const Matrix& q);

// Cholesky factor of a covariance with one diagonal-jitter retry.
class CovarianceFactor {
 public:
  // Throws Error(not_spd) when the jittered retry also fails.
  explicit CovarianceFactor(const Matrix& cov);

  double quadratic_form(const Vector& v) const;  // v^T cov^{-1} v
  // Solves L x = rhs in place, where cov = L L^T.
  void whiten(Matrix& rhs) const;
  bool jittered() const { return jittered_; }

 private:
  Eigen::LLT<Matrix> llt_;
  bool jittered_ = false;
};

// (G^T W^-1 G)^-1 G^T W^-1 (C [r_A1, r_B1]^T + h)
Position wls_position(const LinearStage& stage, const WeightModel& w, const RootPair& roots);

// d_rho: observed TDOAs minus those predicted at `p`, TDOA row order.
Vector tdoa_residuals(const Position& p, const Scenario& scenario, const TdoaSet& tdoa);

// d^T Q^-1 d, or d^T d when `simplified` (or when q is null).
double score(const Position& p, const Scenario& scenario, const TdoaSet& tdoa,
             const CovarianceFactor* q, bool simplified);
double score(const Position& p, const EpochMeasurements& epoch, const Scenario& scenario,
             const Matrix& q, bool simplified, References refs = {});

struct CdlOptions {
  References refs;
  bool simplified_score = false;
  RootTolerances roots;
  double range_floor = kRangeFloor;
  double tie_rel = 1e-12;
};

struct CandidateSolution {
  RootPair roots;
  Position position;
  Vector residual_vec;
  double score = 0.0;
};

struct CdlDiagnostics {
  int quartic_degree = 0;
  int admissible_roots = 0;
  int rejected_roots = 0;
  int clamped_ranges = 0;
  bool weighting_bypassed = false;
  bool q_jittered = false;
  bool zero_denom = false;
  bool zero_denom_no_solution = false;
  bool quartic_fallback = false;
  bool tie = false;
  std::vector<std::string> notes;
};

struct CdlResult {
  Position position;
  CandidateSolution chosen;
  std::vector<CandidateSolution> all_candidates;
  CdlDiagnostics diagnostics;
};

class NoSolutionError : public Error {
 public:
  NoSolutionError(const std::string& what, std::vector<RejectedRoot> rejected)
      : Error(ErrorCode::no_solution, what), rejected_(std::move(rejected)) {}
  const std::vector<RejectedRoot>& rejected() const { return rejected_; }

 private:
  std::vector<RejectedRoot> rejected_;
};

CdlResult cdl_solve(const Scenario& scenario, const EpochMeasurements& epoch,
                    const CdlOptions& options = {});

}  // namespace cdl
