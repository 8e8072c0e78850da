#include "cdl/analysis.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "cdl/solver.hpp"

namespace cdl {

namespace {

Matrix unit_vectors(const Matrix& anchors, const Position& p_u, System s) {
  Matrix l = anchors.colwise() - p_u;
  for (Eigen::Index i = 0; i < l.cols(); ++i) {
    const double r = l.col(i).norm();
    if (r <= Scenario::kCoincidenceTolerance) {
      throw Error(ErrorCode::undefined_los, std::string("user position coincides with anchor ") +
                                                to_string(s) + std::to_string(i + 1));
    }
    l.col(i) /= r;
  }
  return l;
}

void require_positive(const NoiseModel& noise, int m, int n) {
  noise.validate(m, n);
  if (!noise.all_positive()) {
    throw ValidationError("CRLB needs every sigma > 0");
  }
}

}  // namespace

LosGeometry los_geometry(const Scenario& scenario, const Position& p_u, References refs) {
  validate_position(p_u, scenario.dim(), "user position");
  LosGeometry los;
  los.l_a = unit_vectors(scenario.anchors_a(), p_u, System::A);
  los.l_b = unit_vectors(scenario.anchors_b(), p_u, System::B);
  los.h_mat.resize(scenario.m() + scenario.n() - 2, scenario.dim());
  Eigen::Index row = 0;
  for (System s : {System::A, System::B}) {
    const Matrix& l = s == System::A ? los.l_a : los.l_b;
    const int ref = s == System::A ? refs.a : refs.b;
    for (int i : non_reference_indices(scenario.count(s), ref)) {
      los.h_mat.row(row++) = (l.col(ref - 1) - l.col(i)).transpose();
    }
  }
  return los;
}

FimTdoa fim_tdoa(const Scenario& scenario, const Position& p_u, const NoiseModel& noise,
                 References refs) {
  require_positive(noise, scenario.m(), scenario.n());
  FimTdoa out;
  out.los = los_geometry(scenario, p_u, refs);
  const Eigen::LLT<Matrix> q(tdoa_covariance(noise, refs));
  out.fim = out.los.h_mat.transpose() * q.solve(out.los.h_mat);
  out.fim = 0.5 * (out.fim + out.fim.transpose());
  return out;
}

FimToa fim_toa(const Scenario& scenario, const Position& p_u, const NoiseModel& noise) {
  require_positive(noise, scenario.m(), scenario.n());
  const LosGeometry los = los_geometry(scenario, p_u);
  const int k = scenario.dim();
  const int rows = scenario.m() + scenario.n();
  Matrix h = Matrix::Zero(rows, k + 2);
  Vector inv_var(rows);
  h.topLeftCorner(scenario.m(), k) = los.l_a.transpose();
  h.bottomLeftCorner(scenario.n(), k) = los.l_b.transpose();
  h.col(k).head(scenario.m()).setConstant(-1.0);
  h.col(k + 1).tail(scenario.n()).setConstant(-1.0);
  inv_var << noise.sigma_a.array().square().inverse(), noise.sigma_b.array().square().inverse();
  const Matrix f = h.transpose() * inv_var.asDiagonal() * h;
  return {f.topLeftCorner(k, k), f.topRightCorner(k, 2), f.bottomRightCorner(2, 2)};
}

Matrix fim_toa_position_block(const Scenario& scenario, const Position& p_u,
                              const NoiseModel& noise) {
  const FimToa f = fim_toa(scenario, p_u, noise);
  return f.f11 - f.f12 * f.f22.ldlt().solve(f.f12.transpose());
}

Matrix QInverseClosedForm::assemble() const {
  Matrix out = Matrix(diag_part.asDiagonal());
  out.topLeftCorner(x_a.rows(), x_a.cols()) -= x_a;
  out.bottomRightCorner(x_b.rows(), x_b.cols()) -= x_b;
  return out;
}

QInverseClosedForm q_inverse_closed_form(const NoiseModel& noise, References refs) {
  const int m = static_cast<int>(noise.sigma_a.size());
  const int n = static_cast<int>(noise.sigma_b.size());
  noise.validate(m, n);
  if (!noise.all_positive()) {
    throw ValidationError("closed-form Q inverse needs every sigma > 0");
  }
  QInverseClosedForm out;
  out.diag_part.resize(m + n - 2);
  Eigen::Index offset = 0;
  for (System s : {System::A, System::B}) {
    const Vector inv_var = noise.sigmas(s).array().square().inverse();
    const auto others = non_reference_indices(static_cast<int>(inv_var.size()),
                                              s == System::A ? refs.a : refs.b);
    Vector u(static_cast<Eigen::Index>(others.size()));
    for (std::size_t i = 0; i < others.size(); ++i) u[static_cast<Eigen::Index>(i)] = inv_var[others[i]];
    out.diag_part.segment(offset, u.size()) = u;
    offset += u.size();
    (s == System::A ? out.x_a : out.x_b) = (u * u.transpose()) / inv_var.sum();
  }
  return out;
}

Matrix predicted_covariance(const Scenario& scenario, const Position& p_u,
                            const NoiseModel& noise, References refs) {
  const LosGeometry los = los_geometry(scenario, p_u, refs);
  const Matrix q_inv = q_inverse_closed_form(noise, refs).assemble();
  const Matrix info = los.h_mat.transpose() * q_inv * los.h_mat;
  Eigen::LLT<Matrix> llt(info);
  if (llt.info() != Eigen::Success) {
    throw DegenerateGeometryError("H^T Q^-1 H is singular at this user position");
  }
  return llt.solve(Matrix::Identity(info.rows(), info.cols()));
}

CrlbReport crlb_report(const Scenario& scenario, const Position& p_u, const NoiseModel& noise,
                       References refs) {
  CrlbReport rep;
  rep.fim_tdoa = fim_tdoa(scenario, p_u, noise, refs).fim;
  Eigen::LLT<Matrix> llt(rep.fim_tdoa);
  if (llt.info() != Eigen::Success) {
    throw DegenerateGeometryError("TDOA Fisher information is singular");
  }
  rep.crlb_tdoa = llt.solve(Matrix::Identity(rep.fim_tdoa.rows(), rep.fim_tdoa.cols()));
  rep.error_lb = error_lower_bound(rep.crlb_tdoa);
  rep.fim_toa = fim_toa(scenario, p_u, noise);
  rep.j_pos_inverse = rep.fim_toa.f11 - rep.fim_toa.f12 * rep.fim_toa.f22.ldlt().solve(
                                                              rep.fim_toa.f12.transpose());
  return rep;
}

bool is_spd(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() == 0 || !m.allFinite()) return false;
  if (!m.isApprox(m.transpose(), 1e-9)) return false;
  if (Eigen::LLT<Matrix>(m).info() != Eigen::Success) return false;
  const double min_eig = Eigen::SelfAdjointEigenSolver<Matrix>(m, Eigen::EigenvaluesOnly)
                             .eigenvalues()
                             .minCoeff();
  return min_eig > -1e-12 * m.trace();
}

double rmse(std::span<const Vector> errors) {
  if (errors.empty()) throw Error(ErrorCode::invalid_input, "rmse of an empty error list");
  double sum = 0.0;
  for (const Vector& e : errors) sum += e.squaredNorm();
  return std::sqrt(sum / static_cast<double>(errors.size()));
}

double error_lower_bound(const Matrix& crlb) {
  if (!is_spd(crlb)) throw Error(ErrorCode::not_spd, "CRLB matrix is not SPD");
  return std::sqrt(crlb.trace());
}

}  // namespace cdl
