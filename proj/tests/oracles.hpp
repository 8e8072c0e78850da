#pragma once

// Test-side reference computations. Nothing here calls into the library's
// numerical kernels; scenarios and epochs are the only shared types.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "cdl/geometry.hpp"
#include "cdl/rng.hpp"

namespace oracle {

using cdl::Matrix;
using cdl::Vector;
using Complex = std::complex<double>;

// Roots of sum c[k] x^k (ascending, leading coefficient nonzero) as the
// eigenvalues of the companion matrix.
inline std::vector<Complex> companion(std::vector<double> c) {
  while (!c.empty() && c.back() == 0.0) c.pop_back();
  const int n = static_cast<int>(c.size()) - 1;
  if (n < 1) return {};
  Matrix m = Matrix::Zero(n, n);
  for (int i = 1; i < n; ++i) m(i, i - 1) = 1.0;
  for (int i = 0; i < n; ++i) m(i, n - 1) = -c[static_cast<std::size_t>(i)] / c.back();
  Eigen::EigenSolver<Matrix> es(m, false);
  std::vector<Complex> out;
  for (int i = 0; i < n; ++i) out.push_back(es.eigenvalues()[i]);
  return out;
}

// Smallest max-abs distance over all pairings of two equal-size multisets.
inline double multiset_distance(std::vector<Complex> a, std::vector<Complex> b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  std::vector<int> perm(b.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[static_cast<std::size_t>(perm[i])]));
    best = std::min(best, worst);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// Ranges, differences and a dense grid for conic pairs.
struct Conic6 {
  double a, b, c, d, e, f;
  double operator()(double x, double y) const { return a * x * x + b * x * y + c * y * y + d * x + e * y + f; }
  double scale(double x, double y) const {
    return std::abs(a * x * x) + std::abs(b * x * y) + std::abs(c * y * y) + std::abs(d * x) +
           std::abs(e * y) + std::abs(f);
  }
};

// Common zeros of two conics in [0, hi]^2: cells of a dense grid in which
// both conics change sign at the corners are bisected until they shrink to
// 1e-11 * hi; surviving cell centers are merged.
inline std::vector<std::array<double, 2>> grid_common_zeros(const Conic6& q1, const Conic6& q2, double hi,
                                                            int coarse = 512) {
  struct Cell {
    double x, y, h;
  };
  auto straddles = [](const Conic6& q, const Cell& c) {
    const double v[4] = {q(c.x, c.y), q(c.x + c.h, c.y), q(c.x, c.y + c.h), q(c.x + c.h, c.y + c.h)};
    bool pos = false, neg = false;
    for (double x : v) {
      pos = pos || x >= 0.0;
      neg = neg || x <= 0.0;
    }
    return pos && neg;
  };
  std::vector<Cell> live;
  const double h0 = hi / coarse;
  for (int i = 0; i < coarse; ++i)
    for (int j = 0; j < coarse; ++j) {
      const Cell c{i * h0, j * h0, h0};
      if (straddles(q1, c) && straddles(q2, c)) live.push_back(c);
    }
  while (!live.empty() && live.front().h > 1e-11 * hi) {
    std::vector<Cell> next;
    for (const Cell& c : live) {
      const double h = 0.5 * c.h;
      for (const Cell s : {Cell{c.x, c.y, h}, Cell{c.x + h, c.y, h}, Cell{c.x, c.y + h, h}, Cell{c.x + h, c.y + h, h}}) {
        if (straddles(q1, s) && straddles(q2, s)) next.push_back(s);
      }
    }
    // Curves that pass near each other without crossing leave clusters that
    // die out; cap the work per level.
    if (next.size() > 20000) next.resize(20000);
    live = std::move(next);
  }
  std::vector<std::array<double, 2>> out;
  for (const Cell& c : live) {
    const std::array<double, 2> p{c.x + 0.5 * c.h, c.y + 0.5 * c.h};
    bool dup = false;
    for (const auto& o : out) dup = dup || std::hypot(o[0] - p[0], o[1] - p[1]) < 1e-7 * (1 + hi);
    if (!dup) out.push_back(p);
  }
  return out;
}

// Anchors drawn in a cube around the origin, user well inside.
inline cdl::Scenario random_scenario(cdl::Rng& rng, int dim, int m, int n, double half = 500.0) {
  Matrix a(dim, m), b(dim, n);
  for (int i = 0; i < a.size(); ++i) a.data()[i] = rng.uniform(-half, half);
  for (int i = 0; i < b.size(); ++i) b.data()[i] = rng.uniform(-half, half);
  return cdl::Scenario(a, b);
}

inline Vector random_point(cdl::Rng& rng, int dim, double half) {
  Vector p(dim);
  for (int i = 0; i < dim; ++i) p[i] = rng.uniform(-half, half);
  return p;
}

inline Vector random_sigmas(cdl::Rng& rng, int count, double lo, double hi) {
  Vector s(count);
  for (int i = 0; i < count; ++i) s[i] = rng.uniform(lo, hi);
  return s;
}

// TDOA function f(p) = [r_Ai - r_A1, r_Bj - r_B1], reference = first anchor.
inline Vector tdoa_function(const cdl::Scenario& sc, const Vector& p) {
  Vector out(sc.m() + sc.n() - 2);
  int row = 0;
  for (cdl::System s : {cdl::System::A, cdl::System::B}) {
    const double r0 = (sc.anchor(s, 0) - p).norm();
    for (int i = 1; i < sc.count(s); ++i) out[row++] = (sc.anchor(s, i) - p).norm() - r0;
  }
  return out;
}

// TDOA covariance from an explicit differencing operator: T diag(sigma^2) T^T.
inline Matrix differenced_covariance(const Vector& sa, const Vector& sb) {
  const int m = static_cast<int>(sa.size()), n = static_cast<int>(sb.size());
  Matrix t = Matrix::Zero(m + n - 2, m + n);
  for (int i = 1; i < m; ++i) { t(i - 1, i) = 1; t(i - 1, 0) = -1; }
  for (int j = 1; j < n; ++j) { t(m - 2 + j, m + j) = 1; t(m - 2 + j, m) = -1; }
  Vector var(m + n);
  var << sa.array().square(), sb.array().square();
  return t * var.asDiagonal() * t.transpose();
}

template <class F>
Matrix central_jacobian(F&& f, const Vector& x, double h) {
  const Vector f0 = f(x);
  Matrix j(f0.size(), x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    Vector xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    j.col(k) = (f(xp) - f(xm)) / (2 * h);
  }
  return j;
}

inline double rel_diff(const Matrix& a, const Matrix& b) { return (a - b).norm() / b.norm(); }

}  // namespace oracle
