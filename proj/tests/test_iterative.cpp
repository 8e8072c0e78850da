#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cdl/iterative.hpp"
#include "cdl/sim.hpp"
#include "oracles.hpp"

using namespace cdl;

namespace {

struct Case {
  TruthState truth;
  EpochMeasurements epoch;
};

Case make_case(const Scenario& sc, Rng& rng, const Vector& center, double half, double sigma,
               std::uint64_t seed) {
  TruthState t{center + oracle::random_point(rng, sc.dim(), half), rng.uniform(-1e5, 1e5),
               rng.uniform(-1e5, 1e5)};
  return {t, forward_model(sc, t, NoiseModel::uniform(sc.m(), sc.n(), sigma), seed)};
}

Vector theta_of(const TruthState& t) {
  Vector th(t.p_u.size() + 2);
  th << t.p_u, t.b_a, t.b_b;
  return th;
}

}  // namespace

TEST_CASE("initialized at the truth with zero noise: one iteration") {
  Rng rng(60);
  const ScenePreset p = preset_3d();
  for (int k = 0; k < 20; ++k) {
    const Case c = make_case(p.scenario, rng, p.ud_region.center(), 20, 0.0, 100 + k);
    IterState init;
    init.estimate = theta_of(c.truth);
    const IterState st = iterative_solve(p.scenario, c.epoch, init);
    CHECK(st.converged);
    CHECK(st.iteration <= 1);
    CHECK((st.position() - c.truth.p_u).norm() < 1e-9);
  }
}

TEST_CASE("centroid start, zero noise: converges in at most 10 iterations") {
  Rng rng(61);
  for (const ScenePreset& p : {preset_2d(), preset_3d()}) {
    for (int k = 0; k < 50; ++k) {
      const Case c = make_case(p.scenario, rng, p.ud_region.center(), 20, 0.0, 200 + k);
      const IterState st = iterative_solve(p.scenario, c.epoch);
      CHECK(st.converged);
      CHECK(st.iteration <= 10);
      CHECK((st.position() - c.truth.p_u).norm() < 1e-6);
      CHECK(std::abs(st.b_a() - c.truth.b_a) < 1e-6);
      CHECK(std::abs(st.b_b() - c.truth.b_b) < 1e-6);
    }
  }
}

TEST_CASE("converged noisy solution is stationary") {
  Rng rng(62);
  const ScenePreset p = preset_3d();
  for (int k = 0; k < 100; ++k) {
    const Case c = make_case(p.scenario, rng, p.ud_region.center(), 20, 2.0, 300 + k);
    const IterState st = iterative_solve(p.scenario, c.epoch);
    REQUIRE(st.converged);
    const Matrix j = pseudorange_jacobian(p.scenario, st.estimate);
    const Vector w = measurement_weights(c.epoch.noise);
    const Vector r = pseudorange_residuals(p.scenario, c.epoch, st.estimate);
    const Vector grad = j.transpose() * w.asDiagonal() * r;
    const double scale = j.norm() * (w.asDiagonal() * r).norm();
    CHECK(grad.norm() <= 1e-6 * scale);
  }
}

TEST_CASE("jacobian matches central differences") {
  Rng rng(63);
  for (int dim : {2, 3}) {
    const Scenario sc = oracle::random_scenario(rng, dim, 5, 4);
    for (int k = 0; k < 20; ++k) {
      Vector theta(dim + 2);
      theta << oracle::random_point(rng, dim, 100), rng.uniform(-100, 100), rng.uniform(-100, 100);
      EpochMeasurements e{Vector::Zero(5), Vector::Zero(4), NoiseModel::uniform(5, 4, 1.0)};
      // residual = rho - predicted, so predicted = -residual at rho = 0.
      auto predicted = [&](const Vector& th) -> Vector { return -pseudorange_residuals(sc, e, th); };
      const Matrix fd = oracle::central_jacobian(predicted, theta, 1e-4);
      const Matrix jac = pseudorange_jacobian(sc, theta);
      CHECK(oracle::rel_diff(jac, fd) < 1e-5);
    }
  }
}

TEST_CASE("measurement weights") {
  Vector sa(2), sb(2);
  sa << 2, 0.5;
  sb << 1, 4;
  const Vector w = measurement_weights({sa, sb});
  CHECK(w[0] == doctest::Approx(0.25));
  CHECK(w[1] == doctest::Approx(4.0));
  CHECK(w[3] == doctest::Approx(1.0 / 16));
  const Vector unit = measurement_weights(NoiseModel::uniform(3, 2, 0.0));
  CHECK(unit == Vector::Ones(5));
}

TEST_CASE("collinear 2D anchors with the user on the line: degenerate geometry") {
  Matrix a(2, 3), b(2, 2);
  a << 0, 100, 200,
       0, 0, 0;
  b << 50, 150,
       0, 0;
  const Scenario sc(a, b);
  const TruthState t{Eigen::Vector2d(75, 0), 10, 20};
  const EpochMeasurements e = forward_model(sc, t, NoiseModel::uniform(3, 2, 0.0), 1);
  IterState init;
  init.estimate = theta_of(t);
  init.estimate[0] += 1.0;
  CHECK_THROWS_AS(iterative_solve(sc, e, init), DegenerateGeometryError);
}
