// Profile-curve equations for rotationally symmetric f-minimal hypersurfaces:
// the arc-length system, the two graph-form residuals, and the implicit
// comparison curve l(x) with its sign functional K.

#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

#include "fminshoot/weight.hpp"

namespace fminshoot {

// Arc-length point of the profile curve: position (x, r), tangent angle theta
// with the x-axis, arc-length parameter t. theta is kept unwrapped so the
// monotone passage 0 -> -pi is a plain threshold.
struct ProfileState {
  double t = 0;
  double x = 0;
  double r = 0;
  double theta = 0;
};

struct ProblemParams {
  int n = 2;  // hypersurface dimension, >= 2
  WeightFunction weight = WeightFunction::constant(1.0);
};

class RadiusNonPositive : public std::runtime_error {
 public:
  explicit RadiusNonPositive(double r)
      : std::runtime_error("profile radius r = " + std::to_string(r) + " is not positive") {}
};

struct Derivatives {
  double dx, dr, dtheta;
};

// Arc-length system:
//   x' = cos(theta), r' = sin(theta),
//   theta' = ((n-1)/r - (r/2) f') cos(theta) + (x/2) f' sin(theta),
// with f' = f'(x^2 + r^2).
inline Derivatives rhs(const ProfileState& st, const ProblemParams& p) {
  if (st.r <= 0) throw RadiusNonPositive(st.r);
  const double fp = p.weight.fprime(st.x * st.x + st.r * st.r);
  const double c = std::cos(st.theta);
  const double s = std::sin(st.theta);
  return {c, s,
          ((p.n - 1) / st.r - 0.5 * st.r * fp) * c + 0.5 * st.x * fp * s};
}

// Residual of the graph-over-x form for a candidate r = u(x) with derivatives
// u1, u2 at x; zero for exact solutions.
inline double graph_x_residual(double x, double u, double u1, double u2,
                               const ProblemParams& p) {
  const double fp = p.weight.fprime(x * x + u * u);
  return u2 / (1.0 + u1 * u1) - ((p.n - 1) / u + (x * u1 - u) * 0.5 * fp);
}

// Residual of the graph-over-r form for a candidate x = g(r).
inline double graph_r_residual(double r, double g, double g1, double g2,
                               const ProblemParams& p) {
  const double fp = p.weight.fprime(r * r + g * g);
  return g2 / (1.0 + g1 * g1) - ((0.5 * r * fp - (p.n - 1) / r) * g1 - 0.5 * fp * g);
}

struct LCurvePoint {
  double x = 0;
  double l = 0;
};

class BracketFailure : public std::runtime_error {
 public:
  explicit BracketFailure(const std::string& what) : std::runtime_error(what) {}
};

// Solves G(x,l) = l^2 - 2(n-1)/f'(x^2+l^2) = 0 for the unique l > 0.
// l^2 f'(x^2+l^2) is strictly increasing in l, so bisection on the bracket
// [sqrt(2(n-1)/M), sqrt(2(n-1)/m)] forced by the f' bounds always converges.
inline LCurvePoint l_curve_solve(double x, const ProblemParams& p) {
  const double two_nm1 = 2.0 * (p.n - 1);
  const double m = p.weight.m_bound();
  const double M = p.weight.M_bound();

  auto G = [&](double l) {
    return l * l - two_nm1 / p.weight.fprime(x * x + l * l);
  };

  if (m == M) {
    // Constant f': closed form.
    return {x, std::sqrt(two_nm1 / m)};
  }

  double lo = std::sqrt(two_nm1 / M);
  double hi = std::sqrt(two_nm1 / m);
  double glo = G(lo);
  double ghi = G(hi);
  if (glo > 0 || ghi < 0)
    throw BracketFailure("l-curve bracket carries no sign change at x=" + std::to_string(x) +
                         " (inadmissible weight?)");

  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double gm = G(mid);
    if (std::abs(gm) <= 1e-15 || hi - lo <= 1e-16 * hi) return {x, mid};
    if (gm < 0)
      lo = mid;
    else
      hi = mid;
  }
  return {x, 0.5 * (lo + hi)};
}

// dl/dx from implicit differentiation of G; always <= 0 (zero at x=0 or for
// f'' == 0).
inline double l_curve_slope(const LCurvePoint& pt, const ProblemParams& p) {
  const double s = pt.x * pt.x + pt.l * pt.l;
  const double fp = p.weight.fprime(s);
  const double fs = p.weight.fsecond(s);
  // -G_x/G_l for G = l^2 - 2(n-1)/f', cleared of the common 1/(f')^2 factor.
  const double num = 4.0 * (p.n - 1) * pt.x * fs;
  const double den = 2.0 * pt.l * fp * fp + 4.0 * (p.n - 1) * pt.l * fs;
  return -num / den;
}

// K(u) = (n-1)/u - (u/2) f'(x^2+u^2); positive below the l-curve, zero on it.
inline double k_functional(double u, double x, const ProblemParams& p) {
  if (u <= 0) throw std::invalid_argument("k_functional: u must be positive");
  return (p.n - 1) / u - 0.5 * u * p.weight.fprime(x * x + u * u);
}

}  // namespace fminshoot
