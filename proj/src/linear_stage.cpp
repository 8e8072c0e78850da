#include "cdl/linear_stage.hpp"

#include <string>

namespace cdl {

std::vector<int> non_reference_indices(int count, int ref_ordinal) {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(count > 0 ? count - 1 : 0));
  for (int i = 0; i < count; ++i) {
    if (i != ref_ordinal - 1) out.push_back(i);
  }
  return out;
}

namespace {

void check_reference(int ref, int count, System s) {
  if (ref < 1 || ref > count) {
    throw ValidationError(std::string("reference ordinal for system ") + to_string(s) +
                          " out of range: " + std::to_string(ref));
  }
}

Vector difference_one(const Vector& rho, int ref, System s) {
  if (rho.size() < 2) {
    throw ValidationError(std::string(s == System::A ? "M" : "N") +
                          " < 2: too few pseudoranges to difference");
  }
  check_reference(ref, static_cast<int>(rho.size()), s);
  const auto others = non_reference_indices(static_cast<int>(rho.size()), ref);
  Vector d(static_cast<Eigen::Index>(others.size()));
  for (std::size_t k = 0; k < others.size(); ++k) {
    d[static_cast<Eigen::Index>(k)] = rho[others[k]] - rho[ref - 1];
  }
  return d;
}

}  // namespace

TdoaSet difference(const EpochMeasurements& epoch, References refs) {
  return {difference_one(epoch.rho_a, refs.a, System::A),
          difference_one(epoch.rho_b, refs.b, System::B), refs.a, refs.b};
}

LinearStage build_linear_system(const Scenario& scenario, const TdoaSet& tdoa) {
  if (tdoa.d_a.size() != scenario.m() - 1 || tdoa.d_b.size() != scenario.n() - 1) {
    throw ValidationError("TDOA set lengths do not match the scenario");
  }
  check_reference(tdoa.ref_a, scenario.m(), System::A);
  check_reference(tdoa.ref_b, scenario.n(), System::B);

  const Eigen::Index rows = tdoa.size();
  const int k = scenario.dim();
  LinearStage st;
  st.ref_a = tdoa.ref_a;
  st.ref_b = tdoa.ref_b;
  st.g_mat.resize(rows, k);
  st.c_mat = Matrix::Zero(rows, 2);
  st.h_vec.resize(rows);

  Eigen::Index row = 0;
  for (System s : {System::A, System::B}) {
    const int ref = (s == System::A ? tdoa.ref_a : tdoa.ref_b) - 1;
    const Vector& d = s == System::A ? tdoa.d_a : tdoa.d_b;
    const int col = s == System::A ? 0 : 1;
    const auto p_ref = scenario.anchor(s, ref);
    const double ref_sq = p_ref.squaredNorm();
    const auto others = non_reference_indices(scenario.count(s), ref + 1);
    for (std::size_t q = 0; q < others.size(); ++q, ++row) {
      const auto p_i = scenario.anchor(s, others[q]);
      const double dq = d[static_cast<Eigen::Index>(q)];
      st.g_mat.row(row) = (p_ref - p_i).transpose();
      st.c_mat(row, col) = dq;
      st.h_vec[row] = 0.5 * (dq * dq + ref_sq - p_i.squaredNorm());
    }
  }

  Eigen::JacobiSVD<Matrix> svd(st.g_mat, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv.size() < k || !(sv[k - 1] > kRankTolerance * sv[0])) {
    throw DegenerateGeometryError("G is rank deficient: anchor geometry cannot resolve " +
                                  std::to_string(k) + "D position");
  }
  st.s_mat = svd.solve(st.c_mat);
  st.g_vec = svd.solve(st.h_vec);
  return st;
}

}  // namespace cdl
