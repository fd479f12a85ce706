// Exact-solution oracles (sphere, cylinder) and the lemma-derived property
// suites used by the `oracle` CLI command and the acceptance tests.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fminshoot/shooting.hpp"

namespace fminshoot {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

using CheckList = std::vector<CheckResult>;

inline bool all_pass(const CheckList& checks) {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

namespace detail {

inline std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

inline void add_check(CheckList& out, const std::string& name, bool pass,
                      const std::string& detail) {
  out.push_back({name, pass, detail});
}

}  // namespace detail

// Self-shrinker sphere: the shot from R = sqrt(2n) follows the circle
// x^2 + r^2 = 2n and hits the axis after a quarter turn of arc length
// (pi/2) sqrt(2n).
inline CheckList sphere_oracle(int n, const ShootingOptions& opts) {
  CheckList out;
  ProblemParams p{n, WeightFunction::constant(1.0)};
  const double rad = std::sqrt(2.0 * n);
  // The axis endpoint sits on the separatrix between the two shot families,
  // so deviations from the sphere amplify like (R / r)^(n-1) on the way in.
  // Rounding sqrt(2n) to double already costs ~1e-16 * (R/r_floor)^(n-1) at
  // the endpoint, which for n = 3 swamps the 1e-6 checks at any stepping
  // precision; the oracle therefore integrates from the working-precision
  // sqrt(2n) directly, in quad precision for n >= 3, with the axis floor
  // raised so its geometric t1 offset (~r_floor) stays inside the margins.
  ShootingOptions tight = opts;
  const double arm = 10.0 * tight.integ.initial_step;
  const std::vector<EventSpec> events = {
      {EventKind::RZero, EventDirection::Decreasing, 0.0},
      {EventKind::ThetaMinusPi, EventDirection::Decreasing, 0.0},
      {EventKind::XZero, EventDirection::Decreasing, arm},
      {EventKind::ThetaZero, EventDirection::Increasing, arm},
  };
  Trajectory traj;
  if (n == 2) {
    tight.integ.rel_tol = std::min(opts.integ.rel_tol, 1e-16);
    tight.integ.abs_tol = std::min(opts.integ.abs_tol, 1e-18);
    traj = integrate_from<long double>(0.0L, {0.0L, std::sqrt(2.0L * n), 0.0L}, p, events,
                                       tight.integ);
  } else {
#ifdef FMINSHOOT_HAVE_FLOAT128
    tight.integ.rel_tol = std::min(opts.integ.rel_tol, 3e-22);
    tight.integ.abs_tol = std::min(opts.integ.abs_tol, 3e-24);
    tight.integ.r_floor = 3e-7;
    traj = integrate_from<__float128>(0, {0, sqrtq(__float128(2 * n)), 0}, p, events,
                                      tight.integ);
#else
    tight.integ.rel_tol = std::min(opts.integ.rel_tol, 1e-17);
    tight.integ.abs_tol = std::min(opts.integ.abs_tol, 1e-19);
    tight.integ.r_floor = 1e-6;
    traj = integrate_from<long double>(0.0L, {0.0L, std::sqrt(2.0L * n), 0.0L}, p, events,
                                       tight.integ);
#endif
  }

  double max_dev = 0;
  const int samples = 4096;
  for (int i = 0; i <= samples; ++i) {
    const ProfileState st = traj.at(traj.t_end * i / static_cast<double>(samples));
    max_dev = std::max(max_dev, std::abs(st.x * st.x + st.r * st.r - 2.0 * n));
  }
  detail::add_check(out, "sphere: trajectory on x^2+r^2=2n (<=1e-8)", max_dev <= 1e-8,
                    "max deviation " + detail::sci(max_dev));
  const bool axis_hit = traj.ended_with(EventKind::RZero);
  detail::add_check(out, "sphere: terminates on the axis", axis_hit,
                    axis_hit ? "r-floor event" : "no r-floor event");
  const ProfileState& fs = traj.final_state();
  detail::add_check(out, "sphere: x(t1) = sqrt(2n) (+-1e-6)", std::abs(fs.x - rad) <= 1e-6,
                    "x(t1) = " + detail::sci(fs.x));
  detail::add_check(out, "sphere: theta(t1) = -pi/2 (+-1e-6)",
                    std::abs(fs.theta + M_PI / 2) <= 1e-6, "theta(t1) = " + detail::sci(fs.theta));
  detail::add_check(out, "sphere: t1 = (pi/2) sqrt(2n) (+-1e-6)",
                    std::abs(fs.t - 0.5 * M_PI * rad) <= 1e-6, "t1 = " + detail::sci(fs.t));
  return out;
}

// Self-shrinker cylinder: r = sqrt(2(n-1)) is an equilibrium of the profile
// system; the trajectory from it must stay put over t in [0, 10].
inline CheckList cylinder_oracle(int n, const ShootingOptions& opts) {
  CheckList out;
  ProblemParams p{n, WeightFunction::constant(1.0)};
  // Local stepping errors accumulated over t in [0, 10] sit above the 1e-9
  // check at the default tolerance, so the run is tightened and stepped in
  // extended precision with the equilibrium radius rounded only once.
  const long double rad_l = std::sqrt(2.0L * (n - 1));
  const double rad = static_cast<double>(rad_l);

  IntegratorOptions io = opts.integ;
  io.max_time = 10.0;
  io.rel_tol = std::min(io.rel_tol, 1e-14);
  io.abs_tol = std::min(io.abs_tol, 1e-16);
  Trajectory traj = integrate_from<long double>(0.0L, {0.0L, rad_l, 0.0L}, p, {}, io);

  double max_r_dev = 0, max_theta_dev = 0;
  const int samples = 4096;
  for (int i = 0; i <= samples; ++i) {
    const ProfileState st = traj.at(traj.t_end * i / static_cast<double>(samples));
    max_r_dev = std::max(max_r_dev, std::abs(st.r - rad));
    max_theta_dev = std::max(max_theta_dev, std::abs(st.theta));
  }
  const Truncated* tr = traj.truncated();
  detail::add_check(out, "cylinder: reaches t = 10",
                    tr != nullptr && tr->reason == Truncated::Reason::MaxTime &&
                        traj.t_end >= 10.0 * (1 - 1e-12),
                    "t_end = " + detail::sci(traj.t_end));
  detail::add_check(out, "cylinder: |r - sqrt(2(n-1))| <= 1e-9", max_r_dev <= 1e-9,
                    "max deviation " + detail::sci(max_r_dev));
  detail::add_check(out, "cylinder: |theta| <= 1e-9", max_theta_dev <= 1e-9,
                    "max deviation " + detail::sci(max_theta_dev));
  return out;
}

// Nonuniform 3-point second difference of x with respect to r along the
// trajectory, sampled at times ta < tb < tc (r strictly decreasing in t).
inline double second_difference_g(const Trajectory& traj, double ta, double tb, double tc) {
  const ProfileState a = traj.at(ta), b = traj.at(tb), c = traj.at(tc);
  const double s1 = (b.x - a.x) / (b.r - a.r);
  const double s2 = (c.x - b.x) / (c.r - b.r);
  return 2.0 * (s2 - s1) / (c.r - a.r);
}

// Lemma-1(i) check at a detected horizontal point of g (theta = -pi/2): the
// second difference of g in r is <= 0 there.
inline bool horizontal_point_concavity(const Trajectory& traj, double t_star, double dr,
                                       double* out_value = nullptr) {
  const ProfileState st = traj.at(t_star);
  auto t_hi = first_time_crossing(traj, 1, st.r + dr, /*decreasing=*/true);
  auto t_lo = first_time_crossing(traj, 1, st.r - dr, /*decreasing=*/true, t_star);
  if (!t_hi || !t_lo) return false;
  const double d2 = second_difference_g(traj, *t_hi, t_star, *t_lo);
  if (out_value != nullptr) *out_value = d2;
  return d2 <= 1e-6;
}

// Lemma-1(ii) check on the branch past the horizontal point (g >= 0,
// g' >= 0): scanning toward smaller r, once the second difference of g turns
// negative it must not turn significantly positive again.
inline bool concavity_persists(const Trajectory& traj, double t_star, double t_end,
                               int samples = 200, double tol = 1e-5) {
  const double margin = 0.02 * (t_end - t_star);
  const double lo = t_star + margin, hi = t_end - margin;
  if (!(hi > lo)) return true;
  bool turned_negative = false;
  for (int i = 1; i + 1 < samples; ++i) {
    const double tb = lo + (hi - lo) * i / static_cast<double>(samples - 1);
    const double dt = (hi - lo) / static_cast<double>(samples - 1);
    const double d2 = second_difference_g(traj, tb - dt, tb, tb + dt);
    if (d2 < -tol) turned_negative = true;
    if (turned_negative && d2 > tol) return false;
  }
  return true;
}

struct LemmaSweepSummary {
  CheckList checks;
  SweepTable table;
  double delta = 0;  // min over rows of r(t1)
};

// Sweep-based checks of the large-R lemmas for one weight.
inline LemmaSweepSummary lemma_sweep_suite(const ProblemParams& p, const std::vector<double>& Rs,
                                           const ShootingOptions& opts) {
  LemmaSweepSummary sum;
  sum.table = sweep(p, Rs, opts);
  CheckList& out = sum.checks;

  bool all_crossed = true, theta_band = true, r_max_increasing = true, concavity = true;
  double ratio_min = std::numeric_limits<double>::infinity();
  double ratio_max = 0;
  double delta = std::numeric_limits<double>::infinity();
  double prev_r_max = 0;
  std::ostringstream notes;

  for (const auto& row : sum.table) {
    if (row.classification != Classification::CrossedAxisEarly) {
      all_crossed = false;
      notes << "R=" << row.R << " classified " << to_string(row.classification) << "; ";
    }
    if (!(row.theta_at_level > -M_PI / 2 && row.theta_at_level < 0)) theta_band = false;
    const double scaled = row.R * row.g_at_level;
    ratio_min = std::min(ratio_min, scaled);
    ratio_max = std::max(ratio_max, scaled);
    if (!(row.r_max_loc > prev_r_max)) r_max_increasing = false;
    prev_r_max = row.r_max_loc;
    delta = std::min(delta, row.r_t1);
  }
  sum.delta = delta;

  // Lemma 1 concavity at every detected horizontal point, plus persistence on
  // the descending branch.
  for (double R : Rs) {
    ShotOutcome sh = shoot(R, p, opts);
    if (auto t_star = first_time_crossing(sh.traj, 2, -M_PI / 2, /*decreasing=*/true)) {
      if (!horizontal_point_concavity(sh.traj, *t_star, 1e-3)) {
        concavity = false;
        notes << "lemma1(i) fails at R=" << R << "; ";
      }
      if (!concavity_persists(sh.traj, *t_star, sh.traj.t_end)) {
        concavity = false;
        notes << "lemma1(ii) fails at R=" << R << "; ";
      }
    }
  }

  detail::add_check(out, "lemma 6: all sweep shots cross the axis (x(t1)=0)", all_crossed,
                    notes.str());
  detail::add_check(out, "lemma 2: theta at r=R-1/R inside (-pi/2, 0)", theta_band, "");
  detail::add_check(out, "lemma 2: R*g(R-1/R) ratio band (max/min <= 4)",
                    ratio_max / ratio_min <= 4.0,
                    "ratio " + detail::sci(ratio_max / ratio_min));
  detail::add_check(out, "lemma 4: horizontal-point radius r_R strictly increasing",
                    r_max_increasing, "");
  detail::add_check(out, "lemma 6: r(t1) bounded below (delta > 0)", delta > 0,
                    "delta = " + detail::sci(delta));
  detail::add_check(out, "lemma 1: concavity at horizontal points", concavity, notes.str());
  return sum;
}

// l-curve and K-functional properties (monotonicity, slope vs finite
// differences, sign of K around the curve).
inline CheckList l_curve_suite(const ProblemParams& p, unsigned seed = 20260823) {
  CheckList out;
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> ux(0.0, 10.0);

  bool monotone = true;
  double prev = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 200; ++i) {
    const double x = 10.0 * i / 200.0;
    const double l = l_curve_solve(x, p).l;
    if (l > prev + 1e-10) monotone = false;
    prev = l;
  }
  detail::add_check(out, "l-curve: non-increasing on [0,10]", monotone, "");

  const double lo = std::sqrt(2.0 * (p.n - 1) / p.weight.M_bound());
  const double hi = std::sqrt(2.0 * (p.n - 1) / p.weight.m_bound());
  bool bracketed = true;
  double max_slope_err = 0;
  for (int i = 0; i < 100; ++i) {
    const double x = ux(rng);
    const LCurvePoint pt = l_curve_solve(x, p);
    if (pt.l < lo * (1 - 1e-12) || pt.l > hi * (1 + 1e-12)) bracketed = false;
    const double h = 1e-5 * (1.0 + x);
    if (x - h > 0) {
      const double fd = (l_curve_solve(x + h, p).l - l_curve_solve(x - h, p).l) / (2 * h);
      const double an = l_curve_slope(pt, p);
      // Relative mismatch, with a small absolute floor where the slope falls
      // below what central differences of the root solve can resolve.
      const double err = std::abs(an - fd) / std::max(std::abs(an), 1e-3);
      max_slope_err = std::max(max_slope_err, err);
    }
  }
  detail::add_check(out, "l-curve: inside the f'-bound bracket", bracketed, "");
  detail::add_check(out, "l-curve: analytic slope matches finite differences (1e-6)",
                    max_slope_err <= 1e-6, "max error " + detail::sci(max_slope_err));

  bool k_sign = true;
  double max_k_on_curve = 0;
  std::uniform_real_distribution<double> ufrac(0.05, 0.95);
  for (int i = 0; i < 100; ++i) {
    const double x = ux(rng);
    const double l = l_curve_solve(x, p).l;
    const double below = l * ufrac(rng);
    const double above = l * (1.0 + ufrac(rng));
    if (!(k_functional(below, x, p) > 0)) k_sign = false;
    if (!(k_functional(above, x, p) < 0)) k_sign = false;
    max_k_on_curve = std::max(max_k_on_curve, std::abs(k_functional(l, x, p)));
  }
  detail::add_check(out, "K: positive below l, negative above", k_sign, "");
  detail::add_check(out, "K: |K(l)| <= 1e-10 on the curve", max_k_on_curve <= 1e-10,
                    "max |K(l)| = " + detail::sci(max_k_on_curve));
  return out;
}

}  // namespace fminshoot
