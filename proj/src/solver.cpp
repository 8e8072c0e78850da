#include "cdl/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace cdl {

ReconstructedRanges reconstruct_ranges(const RootPair& roots, const TdoaSet& tdoa, double floor) {
  ReconstructedRanges out{roots.r_a1 + tdoa.d_a.array(), roots.r_b1 + tdoa.d_b.array(), 0};
  for (Vector* v : {&out.a, &out.b}) {
    for (Eigen::Index i = 0; i < v->size(); ++i) {
      if (!((*v)[i] >= floor)) {
        (*v)[i] = floor;
        ++out.clamped;
      }
    }
  }
  return out;
}

Matrix tdoa_covariance(const NoiseModel& noise, References refs) {
  const int m = static_cast<int>(noise.sigma_a.size());
  const int n = static_cast<int>(noise.sigma_b.size());
  Matrix q = Matrix::Zero(m + n - 2, m + n - 2);
  Eigen::Index offset = 0;
  for (System s : {System::A, System::B}) {
    const Vector& sig = noise.sigmas(s);
    const int ref = s == System::A ? refs.a : refs.b;
    const double ref_var = sig[ref - 1] * sig[ref - 1];
    const auto others = non_reference_indices(static_cast<int>(sig.size()), ref);
    const auto k = static_cast<Eigen::Index>(others.size());
    q.block(offset, offset, k, k).setConstant(ref_var);
    for (Eigen::Index i = 0; i < k; ++i) {
      const double si = sig[others[static_cast<std::size_t>(i)]];
      q(offset + i, offset + i) += si * si;
    }
    offset += k;
  }
  return q;
}

WeightModel build_weight(const ReconstructedRanges& ranges, const Matrix& q) {
  WeightModel w;
  w.d_diag.resize(ranges.a.size() + ranges.b.size());
  w.d_diag << ranges.a, ranges.b;
  w.q_mat = q;
  w.w_mat = w.d_diag.asDiagonal() * q * w.d_diag.asDiagonal();
  return w;
}

WeightModel build_weight(const ReconstructedRanges& ranges, const NoiseModel& noise,
                         References refs) {
  if (noise.all_zero()) {
    WeightModel w;
    w.d_diag.resize(ranges.a.size() + ranges.b.size());
    w.d_diag << ranges.a, ranges.b;
    w.q_mat = Matrix::Zero(w.d_diag.size(), w.d_diag.size());
    w.w_mat = Matrix::Identity(w.d_diag.size(), w.d_diag.size());
    w.weighted = false;
    return w;
  }
  return build_weight(ranges, tdoa_covariance(noise, refs));
}

CovarianceFactor::CovarianceFactor(const Matrix& cov) : llt_(cov) {
  if (llt_.info() == Eigen::Success) return;
  const double n = static_cast<double>(std::max<Eigen::Index>(cov.rows(), 1));
  double jitter = 1e-12 * cov.trace() / n;
  if (!(jitter > 0.0)) jitter = 1e-12;
  llt_.compute(cov + jitter * Matrix::Identity(cov.rows(), cov.cols()));
  jittered_ = true;
  if (llt_.info() != Eigen::Success) {
    throw Error(ErrorCode::not_spd, "covariance is not positive definite after jitter retry");
  }
}

double CovarianceFactor::quadratic_form(const Vector& v) const {
  const Vector z = llt_.matrixL().solve(v);
  return z.squaredNorm();
}

void CovarianceFactor::whiten(Matrix& rhs) const { llt_.matrixL().solveInPlace(rhs); }

Position wls_position(const LinearStage& stage, const WeightModel& w, const RootPair& roots) {
  const Eigen::Index rows = stage.rows();
  const Eigen::Index k = stage.g_mat.cols();
  Matrix sys(rows, k + 1);
  sys.leftCols(k) = stage.g_mat;
  sys.col(k) = stage.c_mat * Eigen::Vector2d(roots.r_a1, roots.r_b1) + stage.h_vec;
  if (w.weighted) {
    CovarianceFactor factor(w.w_mat);
    factor.whiten(sys);
  }
  return sys.leftCols(k).householderQr().solve(sys.col(k));
}

Vector tdoa_residuals(const Position& p, const Scenario& scenario, const TdoaSet& tdoa) {
  Vector d(tdoa.size());
  Eigen::Index row = 0;
  for (System s : {System::A, System::B}) {
    const int ref = s == System::A ? tdoa.ref_a : tdoa.ref_b;
    const Vector& obs = s == System::A ? tdoa.d_a : tdoa.d_b;
    const double r_ref = (p - scenario.anchor(s, ref - 1)).norm();
    const auto others = non_reference_indices(scenario.count(s), ref);
    for (std::size_t q = 0; q < others.size(); ++q, ++row) {
      d[row] = obs[static_cast<Eigen::Index>(q)] - (p - scenario.anchor(s, others[q])).norm() +
               r_ref;
    }
  }
  return d;
}

double score(const Position& p, const Scenario& scenario, const TdoaSet& tdoa,
             const CovarianceFactor* q, bool simplified) {
  const Vector d = tdoa_residuals(p, scenario, tdoa);
  if (simplified || q == nullptr) return d.squaredNorm();
  return q->quadratic_form(d);
}

double score(const Position& p, const EpochMeasurements& epoch, const Scenario& scenario,
             const Matrix& q, bool simplified, References refs) {
  const TdoaSet tdoa = difference(epoch, refs);
  if (simplified) return score(p, scenario, tdoa, nullptr, true);
  const CovarianceFactor factor(q);
  return score(p, scenario, tdoa, &factor, false);
}

CdlResult cdl_solve(const Scenario& scenario, const EpochMeasurements& epoch,
                    const CdlOptions& options) {
  epoch.validate(scenario);
  const TdoaSet tdoa = difference(epoch, options.refs);
  const LinearStage stage = build_linear_system(scenario, tdoa);
  const QuadraticPair quad = form_quadratics(stage, scenario.anchor(System::A, tdoa.ref_a - 1),
                                             scenario.anchor(System::B, tdoa.ref_b - 1));
  const PairSolution roots = solve_pair(quad, options.roots);

  CdlResult result;
  CdlDiagnostics& diag = result.diagnostics;
  diag.quartic_degree = roots.quartic_degree;
  diag.admissible_roots = static_cast<int>(roots.pairs.size());
  diag.rejected_roots = static_cast<int>(roots.rejected.size());
  diag.zero_denom = roots.zero_denom;
  diag.zero_denom_no_solution = roots.zero_denom_no_solution;
  diag.quartic_fallback = roots.quartic_fallback;
  if (roots.zero_denom_no_solution) diag.notes.emplace_back("zero-denominator root without a solution");
  if (roots.quartic_fallback) diag.notes.emplace_back("quartic solved by companion fallback");

  if (roots.pairs.empty()) {
    throw NoSolutionError("no real non-negative (r_A1, r_B1) root pair", roots.rejected);
  }

  const bool bypass = epoch.noise.all_zero();
  diag.weighting_bypassed = bypass;
  Matrix q;
  std::optional<CovarianceFactor> q_factor;
  if (bypass) {
    diag.notes.emplace_back("zero-noise epoch: unit weighting and unweighted score");
  } else {
    q = tdoa_covariance(epoch.noise, options.refs);
    q_factor.emplace(q);
    diag.q_jittered = q_factor->jittered();
  }

  std::vector<RejectedRoot> failed = roots.rejected;
  for (const RootPair& rp : roots.pairs) {
    const ReconstructedRanges ranges = reconstruct_ranges(rp, tdoa, options.range_floor);
    diag.clamped_ranges += ranges.clamped;
    WeightModel w;
    if (bypass) {
      w = build_weight(ranges, epoch.noise, options.refs);
    } else {
      w = build_weight(ranges, q);
    }
    CandidateSolution cand;
    cand.roots = rp;
    try {
      cand.position = wls_position(stage, w, rp);
    } catch (const Error& e) {
      failed.push_back({rp.r_a1, rp.r_b1, {}, e.what()});
      continue;
    }
    cand.residual_vec = tdoa_residuals(cand.position, scenario, tdoa);
    cand.score = (bypass || options.simplified_score)
                     ? cand.residual_vec.squaredNorm()
                     : q_factor->quadratic_form(cand.residual_vec);
    result.all_candidates.push_back(std::move(cand));
  }
  if (diag.clamped_ranges > 0) diag.notes.emplace_back("reconstructed range clamped to floor");
  if (result.all_candidates.empty()) {
    throw NoSolutionError("every admissible root pair failed the WLS stage", failed);
  }

  const auto& cands = result.all_candidates;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : cands) best = std::min(best, c.score);
  std::size_t pick = cands.size();
  int within = 0;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    if (cands[i].score - best > options.tie_rel * std::abs(best)) continue;
    ++within;
    if (pick == cands.size() ||
        std::min(cands[i].roots.r_a1, cands[i].roots.r_b1) >
            std::min(cands[pick].roots.r_a1, cands[pick].roots.r_b1)) {
      pick = i;
    }
  }
  if (within > 1) {
    diag.tie = true;
    diag.notes.emplace_back("score tie broken by larger min(r_A1, r_B1)");
  }
  result.chosen = cands[pick];
  result.position = result.chosen.position;
  return result;
}

}  // namespace cdl
