#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cdl/linear_stage.hpp"
#include "oracles.hpp"

using namespace cdl;

namespace {

EpochMeasurements with_rho_a(Vector rho_a) {
  const auto m = static_cast<int>(rho_a.size());
  return {std::move(rho_a), Vector::Zero(2), NoiseModel::uniform(m, 2, 1.0)};
}

// Hand-sized scene shared with tests/oracles/linear_stage_oracle.py.
Scenario hand_scene() {
  Matrix a(2, 3), b(2, 2);
  a << 0, 200, 0,
       0, 0, 200;
  b << 150, 0,
       150, 120;
  return Scenario(a, b);
}

}  // namespace

TEST_CASE("difference: constant and direct subtraction") {
  Vector r(3);
  r << 5, 5, 5;
  CHECK(difference(with_rho_a(r)).d_a == Vector::Zero(2));
  r << 10, 12, 15;
  const TdoaSet t = difference(with_rho_a(r));
  CHECK(t.d_a[0] == 2.0);
  CHECK(t.d_a[1] == 5.0);
}

TEST_CASE("difference: non-default reference") {
  Vector r(3);
  r << 10, 12, 15;
  const TdoaSet t = difference(with_rho_a(r), {2, 1});
  CHECK(t.d_a[0] == -2.0);
  CHECK(t.d_a[1] == 3.0);
  CHECK_THROWS_AS(difference(with_rho_a(r), {4, 1}), ValidationError);
  CHECK(non_reference_indices(4, 3) == std::vector<int>{0, 1, 3});
}

TEST_CASE("difference: clock offset cancels exactly") {
  Rng rng(21);
  const Scenario sc = oracle::random_scenario(rng, 3, 5, 5);
  const Vector p = oracle::random_point(rng, 3, 200);
  const NoiseModel zero = NoiseModel::uniform(5, 5, 0.0);
  // Equal up to the rounding of adding 1e6 to each range.
  const TdoaSet t0 = difference(forward_model(sc, {p, 0, 0}, zero, 1));
  const TdoaSet t1 = difference(forward_model(sc, {p, 1e6, 0}, zero, 1));
  CHECK((t0.d_a - t1.d_a).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK(t0.d_b == t1.d_b);
}

TEST_CASE("build_linear_system: rows of G are p_ref - p_i") {
  const Scenario sc = hand_scene();
  Vector p(2);
  p << 60, 70;
  const TdoaSet t = difference(forward_model(sc, {p, 0, 0}, NoiseModel::uniform(3, 2, 0.0), 1));
  const LinearStage st = build_linear_system(sc, t);
  CHECK(st.g_mat(0, 0) == -200.0);
  CHECK(st.g_mat(0, 1) == 0.0);
  CHECK(st.g_mat(1, 0) == 0.0);
  CHECK(st.g_mat(1, 1) == -200.0);
}

TEST_CASE("build_linear_system: matches the numpy reference on the hand-sized scene") {
  const Scenario sc = hand_scene();
  Vector p(2);
  p << 60, 70;
  const TdoaSet t = difference(forward_model(sc, {p, 0, 0}, NoiseModel::uniform(3, 2, 0.0), 1));
  const LinearStage st = build_linear_system(sc, t);
  const double c_ref[] = {64.329313852056387, 0, 50.982766059834645, 0, 0, -42.313449028856411};
  const double h_ref[] = {-17930.869689661813, -18700.378782444088, 16195.213984358816};
  const double s_ref[] = {-0.18940429726181784, -0.10011068382221547, -0.22846537589948041, -0.020022136764443095};
  const double g_ref[] = {89.517136066004269, 93.474451435759477};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 2; ++j) {
      CHECK(st.c_mat(i, j) == doctest::Approx(c_ref[2 * i + j]).epsilon(1e-12));
    }
    CHECK(st.h_vec[i] == doctest::Approx(h_ref[i]).epsilon(1e-12));
  }
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) CHECK(st.s_mat(i, j) == doctest::Approx(s_ref[2 * i + j]).epsilon(1e-12));
    CHECK(st.g_vec[i] == doctest::Approx(g_ref[i]).epsilon(1e-12));
  }
}

TEST_CASE("build_linear_system: exact consistency at the truth (random noiseless epochs)") {
  Rng rng(22);
  for (int trial = 0; trial < 200; ++trial) {
    const int dim = trial % 2 ? 3 : 2;
    const Scenario sc = oracle::random_scenario(rng, dim, 3 + trial % 4, 3 + trial % 3);
    const Vector p = oracle::random_point(rng, dim, 300);
    const NoiseModel zero = NoiseModel::uniform(sc.m(), sc.n(), 0.0);
    const TdoaSet t = difference(forward_model(sc, {p, rng.uniform(-1e5, 1e5), rng.uniform(-1e5, 1e5)}, zero, 1));
    const LinearStage st = build_linear_system(sc, t);
    const Ranges r = true_ranges(sc, p);
    Vector z(2);
    z << r.a[0], r.b[0];
    const Vector res = st.g_mat * p - st.c_mat * z - st.h_vec;
    const double scale = st.h_vec.cwiseAbs().maxCoeff() + (st.g_mat * p).cwiseAbs().maxCoeff();
    CHECK(res.cwiseAbs().maxCoeff() <= 1e-9 * scale);
  }
}

TEST_CASE("build_linear_system: normal-equation identity for S and g") {
  Rng rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    const Scenario sc = oracle::random_scenario(rng, 3, 5, 4);
    EpochMeasurements e{oracle::random_sigmas(rng, 5, 0, 1000), oracle::random_sigmas(rng, 4, 0, 1000),
                        NoiseModel::uniform(5, 4, 1.0)};
    const LinearStage st = build_linear_system(sc, difference(e));
    for (int k = 0; k < 5; ++k) {
      const Vector z = oracle::random_point(rng, 2, 1000);
      const Vector lhs = st.g_mat.transpose() * (st.g_mat * (st.s_mat * z + st.g_vec) - st.c_mat * z - st.h_vec);
      const double scale = (st.g_mat.transpose() * (st.c_mat * z + st.h_vec)).norm();
      CHECK(lhs.norm() <= 1e-9 * scale);
    }
  }
}

TEST_CASE("build_linear_system: collinear 3D anchors are degenerate") {
  Matrix a(3, 3), b(3, 3);
  a << 0, 1, 2,
       0, 1, 2,
       0, 1, 2;
  b << 3, 4, 5,
       3, 4, 5,
       3, 4, 5;
  const Scenario sc(a, b);
  EpochMeasurements e{Vector::Constant(3, 10.0), Vector::Constant(3, 20.0), NoiseModel::uniform(3, 3, 1.0)};
  CHECK_THROWS_AS(build_linear_system(sc, difference(e)), DegenerateGeometryError);
  try {
    build_linear_system(sc, difference(e));
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::degenerate_geometry);
  }
}
