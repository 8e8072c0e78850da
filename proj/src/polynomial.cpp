#include "cdl/polynomial.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

namespace cdl {

namespace {

constexpr double kResidualBound = 1e-8;
constexpr double kBranchZero = 1e-12;
constexpr double kEvalBound = 1e-11;

double residual_limit(const QuarticCoeffs& q, Complex z) {
  const double r = std::max(1.0, std::abs(z));
  return kResidualBound * q.max_abs() * r * r * r * r;
}

// |P(z)| against the magnitude sum of its terms, a few thousand times the
// Horner rounding error. Catches closed-form roots spoiled by cancellation in
// the resolvent, which the coefficient-scaled limit above is too loose to see.
bool residual_tight(const QuarticCoeffs& q, Complex z) {
  const double r = std::abs(z);
  const double mag =
      (((std::abs(q.alpha) * r + std::abs(q.beta)) * r + std::abs(q.gamma)) * r + std::abs(q.lambda)) * r +
      std::abs(q.mu);
  return std::abs(q(z)) <= kEvalBound * mag;
}

Complex derivative(const QuarticCoeffs& q, Complex z) {
  return ((4.0 * q.alpha * z + 3.0 * q.beta) * z + 2.0 * q.gamma) * z + q.lambda;
}

// A few Newton steps, each kept only if it lowers |P(z)|.
Complex polish(const QuarticCoeffs& q, Complex z) {
  double best = std::abs(q(z));
  for (int it = 0; it < 4 && best > 0.0; ++it) {
    const Complex dp = derivative(q, z);
    if (dp == Complex(0.0)) break;
    const Complex next = z - q(z) / dp;
    const double val = std::abs(q(next));
    if (!(val < best)) break;
    z = next;
    best = val;
  }
  return z;
}

Complex cbrt(Complex z) {
  if (z == Complex(0.0)) return z;
  return std::pow(z, 1.0 / 3.0);
}

std::vector<Complex> linear_roots(double b, double c) { return {Complex(-c / b)}; }

std::vector<Complex> quadratic_roots(double a, double b, double c) {
  const Complex sq = std::sqrt(Complex(b * b - 4.0 * a * c));
  // Pick the sign that avoids cancellation in b + sq.
  const Complex s = (std::real(std::conj(Complex(b)) * sq) >= 0.0) ? sq : -sq;
  const Complex qq = -0.5 * (Complex(b) + s);
  if (qq == Complex(0.0)) return {Complex(0.0), Complex(0.0)};
  return {qq / a, Complex(c) / qq};
}

std::vector<Complex> cubic_roots(double a, double b, double c, double d) {
  const double d0 = b * b - 3.0 * a * c;
  const double d1 = 2.0 * b * b * b - 9.0 * a * b * c + 27.0 * a * a * d;
  const Complex sq = std::sqrt(Complex(d1 * d1 - 4.0 * d0 * d0 * d0));
  Complex u1 = 0.5 * (Complex(d1) + sq);
  Complex u2 = 0.5 * (Complex(d1) - sq);
  Complex cc = cbrt(std::abs(u1) >= std::abs(u2) ? u1 : u2);
  if (cc == Complex(0.0)) {
    const Complex r(-b / (3.0 * a));
    return {r, r, r};
  }
  const Complex xi(-0.5, std::sqrt(3.0) / 2.0);
  std::vector<Complex> roots;
  Complex ck = cc;
  for (int k = 0; k < 3; ++k) {
    roots.push_back(-(Complex(b) + ck + Complex(d0) / ck) / (3.0 * a));
    ck *= xi;
  }
  return roots;
}

// Returns false when the resolvent branch collapses (s ~ 0) on both cube-root
// branches; the caller then falls back to the companion solver.
bool quartic_closed_form(const QuarticCoeffs& q, std::vector<Complex>& out) {
  const double a = q.alpha, b = q.beta, c = q.gamma, d = q.lambda, e = q.mu;
  const double p = (8.0 * a * c - 3.0 * b * b) / (8.0 * a * a);
  const double q0 = (b * b * b - 4.0 * a * b * c + 8.0 * a * a * d) / (8.0 * a * a * a);
  const double d0 = c * c - 3.0 * b * d + 12.0 * a * e;
  const double d1 = 2.0 * c * c * c - 9.0 * b * c * d + 27.0 * b * b * e + 27.0 * a * d * d -
                    72.0 * a * c * e;
  const Complex sq = std::sqrt(Complex(d1 * d1 - 4.0 * d0 * d0 * d0));
  const double qscale = std::cbrt(std::max(std::abs(d1), std::pow(std::abs(d0), 1.5)));
  const double shift = -b / (4.0 * a);
  const double xscale = std::max({std::abs(shift), std::sqrt(std::abs(p)),
                                  std::cbrt(std::abs(q0)), std::pow(std::abs(e / a), 0.25)});

  for (double sign : {1.0, -1.0}) {
    const Complex q1 = cbrt(0.5 * (Complex(d1) + sign * sq));
    Complex term;
    if (std::abs(q1) <= kBranchZero * qscale) {
      // Both Delta0 and Delta1 vanish: the q1 + Delta0/q1 term tends to zero.
      if (sign > 0.0) continue;
      if (std::abs(d0) > kBranchZero * qscale * qscale) return false;
      term = 0.0;
    } else {
      term = q1 + Complex(d0) / q1;
    }
    const Complex s = 0.5 * std::sqrt(-2.0 / 3.0 * p + term / (3.0 * a));
    if (std::abs(s) <= kBranchZero * xscale || s == Complex(0.0)) continue;
    const Complex r12 = 0.5 * std::sqrt(-4.0 * s * s - 2.0 * p + q0 / s);
    const Complex r34 = 0.5 * std::sqrt(-4.0 * s * s - 2.0 * p - q0 / s);
    out = {shift - s + r12, shift - s - r12, shift + s + r34, shift + s - r34};
    return true;
  }
  return false;
}

}  // namespace

double Conic::term_scale(double x, double y) const {
  return std::abs(a * x * x) + std::abs(b * x * y) + std::abs(c * y * y) + std::abs(d * x) +
         std::abs(e * y) + std::abs(f);
}

double QuarticCoeffs::max_abs() const {
  return std::max({std::abs(alpha), std::abs(beta), std::abs(gamma), std::abs(lambda),
                   std::abs(mu)});
}

QuadraticPair form_quadratics(const LinearStage& stage, const Position& p_a1,
                              const Position& p_b1) {
  const auto s1 = stage.s_mat.col(0);
  const auto s2 = stage.s_mat.col(1);
  const Vector u = stage.g_vec - p_a1;
  const Vector v = stage.g_vec - p_b1;
  const double s11 = s1.dot(s1), s12 = s1.dot(s2), s22 = s2.dot(s2);
  QuadraticPair q;
  q.first = {s11 - 1.0, 2.0 * s12, s22, 2.0 * s1.dot(u), 2.0 * s2.dot(u), u.dot(u)};
  q.second = {s11, 2.0 * s12, s22 - 1.0, 2.0 * s1.dot(v), 2.0 * s2.dot(v), v.dot(v)};
  return q;
}

EliminationCoeffs elimination_coeffs(const QuadraticPair& q) {
  const Conic& c1 = q.first;
  const Conic& c2 = q.second;
  return {c1.b * c2.c - c2.b * c1.c, c1.e * c2.c - c2.e * c1.c, -c1.a * c2.c + c2.a * c1.c,
          -c1.d * c2.c + c2.d * c1.c, -c1.f * c2.c + c2.f * c1.c};
}

QuarticCoeffs quartic_coeffs(const Conic& k, const EliminationCoeffs& t) {
  const double a1 = k.a, b1 = k.b, c1 = k.c, d1 = k.d, e1 = k.e, f1 = k.f;
  const double t1 = t.t1, t2 = t.t2, t3 = t.t3, t4 = t.t4, t5 = t.t5;
  QuarticCoeffs out;
  out.alpha = a1 * t1 * t1 + b1 * t1 * t3 + c1 * t3 * t3;
  out.beta = d1 * t1 * t1 + 2.0 * a1 * t1 * t2 + b1 * t1 * t4 + b1 * t2 * t3 +
             2.0 * c1 * t3 * t4 + e1 * t1 * t3;
  out.gamma = c1 * (t4 * t4 + 2.0 * t3 * t5) + a1 * t2 * t2 + f1 * t1 * t1 + b1 * t1 * t5 +
              b1 * t2 * t4 + 2.0 * d1 * t1 * t2 + e1 * t1 * t4 + e1 * t2 * t3;
  out.lambda = d1 * t2 * t2 + b1 * t2 * t5 + 2.0 * c1 * t4 * t5 + e1 * t1 * t5 + e1 * t2 * t4 +
               2.0 * f1 * t1 * t2;
  out.mu = f1 * t2 * t2 + e1 * t2 * t5 + c1 * t5 * t5;
  return out;
}

Elimination eliminate(const QuadraticPair& q) {
  if (q.first.c == 0.0 && q.second.c == 0.0) {
    throw Error(ErrorCode::degenerate_elimination,
                "neither quadratic has a y^2 term; y cannot be eliminated");
  }
  const EliminationCoeffs t = elimination_coeffs(q);
  // On the curve y = A007 the first conic equals (c1/c2) times the second, so
  // substituting into the one with the larger |c| avoids a vanishing or
  // cancellation-scaled quartic.
  const Conic& host = std::abs(q.first.c) >= std::abs(q.second.c) ? q.first : q.second;
  return {t, quartic_coeffs(host, t)};
}

std::vector<Complex> companion_roots(const QuarticCoeffs& q) {
  const double c[5] = {q.alpha, q.beta, q.gamma, q.lambda, q.mu};
  int lead = 0;
  while (lead < 5 && c[lead] == 0.0) ++lead;
  const int degree = 4 - lead;
  if (degree <= 0) return {};
  Matrix comp = Matrix::Zero(degree, degree);
  for (int j = 0; j < degree; ++j) comp(0, j) = -c[lead + 1 + j] / c[lead];
  for (int i = 1; i < degree; ++i) comp(i, i - 1) = 1.0;
  Eigen::EigenSolver<Matrix> es(comp, false);
  std::vector<Complex> roots;
  for (int i = 0; i < degree; ++i) roots.push_back(es.eigenvalues()[i]);
  return roots;
}

QuarticRoots solve_quartic(const QuarticCoeffs& q) {
  if (q.max_abs() == 0.0) {
    throw Error(ErrorCode::invalid_input, "all polynomial coefficients are zero");
  }
  QuarticRoots out;
  std::vector<Complex>& roots = out.roots;
  bool ok = true;
  if (q.alpha != 0.0) {
    ok = quartic_closed_form(q, roots);
  } else if (q.beta != 0.0) {
    roots = cubic_roots(q.beta, q.gamma, q.lambda, q.mu);
  } else if (q.gamma != 0.0) {
    roots = quadratic_roots(q.gamma, q.lambda, q.mu);
  } else if (q.lambda != 0.0) {
    roots = linear_roots(q.lambda, q.mu);
  } else {
    return out;  // nonzero constant: no roots
  }

  if (ok) {
    for (auto& z : roots) {
      if (!(std::abs(q(z)) <= residual_limit(q, z))) z = polish(q, z);
      if (!(std::abs(q(z)) <= residual_limit(q, z)) || !residual_tight(q, z)) {
        ok = false;
        break;
      }
    }
  }
  if (!ok) {
    roots = companion_roots(q);
    for (auto& z : roots) z = polish(q, z);
    out.fallback = true;
  }
  return out;
}

namespace {

struct Candidate {
  double x;
  double y;
  Complex raw;
};

// Real solutions y of conic(x, y) = 0 for fixed x.
void solve_for_y(const Conic& k, double x, Complex raw, std::vector<Candidate>& out,
                 std::vector<RejectedRoot>& rejected, double imag_rel) {
  const double qa = k.c, qb = k.b * x + k.e, qc = k.a * x * x + k.d * x + k.f;
  std::vector<Complex> ys;
  if (qa != 0.0) {
    ys = quadratic_roots(qa, qb, qc);
  } else if (qb != 0.0) {
    ys = linear_roots(qb, qc);
  }
  for (const Complex& y : ys) {
    if (std::abs(y.imag()) <= imag_rel * (1.0 + std::abs(y.real()))) {
      out.push_back({x, y.real(), raw});
    } else {
      rejected.push_back({x, y.real(), raw, "complex y for zero-denominator root"});
    }
  }
}

double pair_residual(const QuadraticPair& q, double x, double y) {
  const double s1 = q.first.term_scale(x, y), s2 = q.second.term_scale(x, y);
  const double r1 = s1 > 0.0 ? q.first(x, y) / s1 : 0.0;
  const double r2 = s2 > 0.0 ? q.second(x, y) / s2 : 0.0;
  return std::hypot(r1, r2);
}

// Newton on both conics jointly; steps are kept only while they lower the
// scaled residual.
void polish_pair(const QuadraticPair& q, double& x, double& y) {
  double best = pair_residual(q, x, y);
  for (int it = 0; it < 4 && best > 0.0; ++it) {
    const Conic& k1 = q.first;
    const Conic& k2 = q.second;
    const double j11 = 2 * k1.a * x + k1.b * y + k1.d, j12 = k1.b * x + 2 * k1.c * y + k1.e;
    const double j21 = 2 * k2.a * x + k2.b * y + k2.d, j22 = k2.b * x + 2 * k2.c * y + k2.e;
    const double det = j11 * j22 - j12 * j21;
    if (det == 0.0 || !std::isfinite(det)) break;
    const double f1 = k1(x, y), f2 = k2(x, y);
    const double nx = x - (j22 * f1 - j12 * f2) / det;
    const double ny = y - (-j21 * f1 + j11 * f2) / det;
    const double val = pair_residual(q, nx, ny);
    if (!(val < best)) break;
    x = nx;
    y = ny;
    best = val;
  }
}

}  // namespace

PairSolution solve_pair(const QuadraticPair& q, const RootTolerances& tol) {
  PairSolution sol;
  const Elimination el = eliminate(q);
  const EliminationCoeffs& t = el.t;
  const double tscale =
      std::max({std::abs(t.t1), std::abs(t.t2), std::abs(t.t3), std::abs(t.t4), std::abs(t.t5)});
  const Conic& back = q.second.c != 0.0 ? q.second : q.first;

  std::vector<Candidate> cands;
  auto is_real = [&](Complex z) {
    return std::abs(z.imag()) <= tol.imag_rel * (1.0 + std::abs(z.real()));
  };

  if (tscale == 0.0 || (std::abs(t.t1) <= kBranchZero * tscale &&
                        std::abs(t.t2) <= kBranchZero * tscale)) {
    // Zero denominator, t1 = 0: t2 = 0 as well and x solves t3 x^2 + t4 x + t5 = 0.
    sol.zero_denom = true;
    const QuarticCoeffs reduced{0.0, 0.0, t.t3, t.t4, t.t5};
    if (reduced.max_abs() == 0.0) {
      sol.rejected.push_back({0, 0, {}, "quadratics are dependent; intersection undetermined"});
      return sol;
    }
    for (const Complex& z : solve_quartic(reduced).roots) {
      if (!is_real(z)) {
        sol.rejected.push_back({z.real(), 0, z, "complex root"});
        continue;
      }
      solve_for_y(back, z.real(), z, cands, sol.rejected, tol.imag_rel);
    }
  } else {
    const QuarticRoots qr = solve_quartic(el.quartic);
    sol.quartic_degree = static_cast<int>(qr.roots.size());
    sol.quartic_fallback = qr.fallback;
    bool zero_denom_done = false;
    for (const Complex& z : qr.roots) {
      if (!is_real(z)) {
        sol.rejected.push_back({z.real(), 0, z, "complex root"});
        continue;
      }
      const double x = z.real();
      const double den = t.t1 * x + t.t2;
      if (std::abs(den) <= tol.zero_denom * (std::abs(t.t1 * x) + std::abs(t.t2) + 1.0)) {
        // Zero denominator, t1 != 0: x = -t2/t1 must also satisfy t3 x^2 + t4 x + t5 = 0.
        sol.zero_denom = true;
        if (zero_denom_done) continue;
        zero_denom_done = true;
        const double x0 = -t.t2 / t.t1;
        const double val = t.t3 * x0 * x0 + t.t4 * x0 + t.t5;
        const double scale = std::abs(t.t3 * x0 * x0) + std::abs(t.t4 * x0) + std::abs(t.t5);
        if (std::abs(val) <= tol.verify * scale) {
          solve_for_y(back, x0, z, cands, sol.rejected, tol.imag_rel);
        } else {
          sol.zero_denom_no_solution = true;
          sol.rejected.push_back({x0, 0, z, "zero-denominator candidate -t2/t1 fails the reduced equation"});
        }
        continue;
      }
      cands.push_back({x, (t.t3 * x * x + t.t4 * x + t.t5) / den, z});
    }
  }

  for (Candidate& c : cands) {
    polish_pair(q, c.x, c.y);
    const bool ok1 = std::abs(q.first(c.x, c.y)) <= tol.verify * q.first.term_scale(c.x, c.y);
    const bool ok2 = std::abs(q.second(c.x, c.y)) <= tol.verify * q.second.term_scale(c.x, c.y);
    if (!ok1 || !ok2 || !std::isfinite(c.x) || !std::isfinite(c.y)) {
      sol.rejected.push_back({c.x, c.y, c.raw, "fails original quadratics"});
      continue;
    }
    if (c.x < -tol.negative_floor || c.y < -tol.negative_floor) {
      sol.rejected.push_back({c.x, c.y, c.raw, "negative range"});
      continue;
    }
    const RootPair rp{std::max(c.x, 0.0), std::max(c.y, 0.0)};
    const bool dup = std::any_of(sol.pairs.begin(), sol.pairs.end(), [&](const RootPair& o) {
      return std::abs(o.r_a1 - rp.r_a1) + std::abs(o.r_b1 - rp.r_b1) <=
             1e-7 * (1.0 + rp.r_a1 + rp.r_b1);
    });
    if (!dup) sol.pairs.push_back(rp);
  }
  return sol;
}

}  // namespace cdl
