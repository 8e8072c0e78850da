#pragma once

#include <array>
#include <complex>
#include <string>
#include <vector>

#include "cdl/linear_stage.hpp"

namespace cdl {

using Complex = std::complex<double>;

// a x^2 + b xy + c y^2 + d x + e y + f
struct Conic {
  double a = 0, b = 0, c = 0, d = 0, e = 0, f = 0;

  double operator()(double x, double y) const {
    return a * x * x + b * x * y + c * y * y + d * x + e * y + f;
  }
  // Sum of term magnitudes at (x, y); the reference scale for residual tests.
  double term_scale(double x, double y) const;
};

// Intermediate-variable equations in x = r_A1, y = r_B1.
struct QuadraticPair {
  Conic first;   // from |p_u - p_A1|^2 = r_A1^2
  Conic second;  // from |p_u - p_B1|^2 = r_B1^2
};

// (t1 x + t2) y = t3 x^2 + t4 x + t5
struct EliminationCoeffs {
  double t1 = 0, t2 = 0, t3 = 0, t4 = 0, t5 = 0;
};

// alpha x^4 + beta x^3 + gamma x^2 + lambda x + mu
struct QuarticCoeffs {
  double alpha = 0, beta = 0, gamma = 0, lambda = 0, mu = 0;

  Complex operator()(Complex z) const {
    return (((alpha * z + beta) * z + gamma) * z + lambda) * z + mu;
  }
  double max_abs() const;
};

struct Elimination {
  EliminationCoeffs t;
  QuarticCoeffs quartic;
};

struct RootPair {
  double r_a1 = 0;
  double r_b1 = 0;
};

inline constexpr double kZeroDenomThreshold = 1e-9;

struct RootTolerances {
  double imag_rel = 1e-7;         // |Im z| <= imag_rel * (1 + |Re z|)
  double negative_floor = 1e-6;   // r >= -negative_floor accepted, clamped to 0
  double zero_denom = kZeroDenomThreshold; // |t1 x + t2| <= zero_denom * (|t1 x| + |t2| + 1)
  double verify = 1e-6;           // |conic(x, y)| <= verify * term_scale(x, y)
};

struct RejectedRoot {
  double x = 0;
  double y = 0;
  Complex raw{};  // quartic root (or zero-denominator candidate) that produced it
  std::string reason;
};

struct PairSolution {
  std::vector<RootPair> pairs;
  std::vector<RejectedRoot> rejected;
  int quartic_degree = 0;  // 0 when the quartic path was not used
  bool zero_denom = false;      // a zero-denominator branch (t1 x + t2 = 0) was examined
  bool zero_denom_no_solution = false;
  bool quartic_fallback = false;  // closed form handed off to the companion solver
};

QuadraticPair form_quadratics(const LinearStage& stage, const Position& p_a1,
                              const Position& p_b1);

EliminationCoeffs elimination_coeffs(const QuadraticPair& q);

// Quartic in x obtained by substituting y = (t3 x^2 + t4 x + t5) / (t1 x + t2)
// into `k` and clearing the denominator.
QuarticCoeffs quartic_coeffs(const Conic& k, const EliminationCoeffs& t);

// The quartic is taken from whichever conic has the larger |c|; both give the
// same roots when c1 and c2 are nonzero. Throws Error(degenerate_elimination)
// when c1 = c2 = 0.
Elimination eliminate(const QuadraticPair& q);

struct QuarticRoots {
  std::vector<Complex> roots;  // length equals the effective degree
  bool fallback = false;       // companion-matrix path used
};

// Closed-form roots of a polynomial of degree <= 4. Leading zeros route to the
// cubic / quadratic / linear closed forms; all-zero input throws invalid_input.
QuarticRoots solve_quartic(const QuarticCoeffs& q);

// Roots via eigenvalues of the companion matrix; the fallback path for inputs
// the closed form cannot resolve.
std::vector<Complex> companion_roots(const QuarticCoeffs& q);

PairSolution solve_pair(const QuadraticPair& q, const RootTolerances& tol = {});

}  // namespace cdl
