// Shot classification, bracketing and bisection of the shooting radius R to
// the torus radius R*, parameter sweeps, and the horizontal-point experiment.

#pragma once

#include <cmath>
#include <future>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "fminshoot/integrate.hpp"

namespace fminshoot {

enum class Classification {
  VerticalBeyondAxis,  // theta reached -pi with x > on_axis_tol
  CrossedAxisEarly,    // x returned to 0 with theta in (-pi, 0)
  OnAxis,              // theta reached -pi with |x| <= on_axis_tol
  AxisHit,             // r reached the axis floor (sphere-like)
  ThetaReturned,       // theta returned up through 0
  Inconclusive,        // truncated (max time / max steps / step failure)
};

inline const char* to_string(Classification c) {
  switch (c) {
    case Classification::VerticalBeyondAxis: return "vertical_beyond_axis";
    case Classification::CrossedAxisEarly: return "crossed_axis_early";
    case Classification::OnAxis: return "on_axis";
    case Classification::AxisHit: return "axis_hit";
    case Classification::ThetaReturned: return "theta_returned";
    case Classification::Inconclusive: return "inconclusive";
  }
  return "?";
}

struct ShotOutcome {
  double R = 0;
  Classification classification = Classification::Inconclusive;
  ProfileState event_state;
  Trajectory traj;
  std::string note;
};

struct ShootingOptions {
  IntegratorOptions integ;
  double on_axis_tol = 1e-8;
  double R_tol = 1e-10;
  double bracket_lo_hint = 0;   // 0: start from r0 = l(0)
  double bracket_hi_hint = 12;
  int max_probes = 64;
};

class NoBracket : public std::runtime_error {
 public:
  explicit NoBracket(const std::string& what) : std::runtime_error(what) {}
};

class BracketCollapsedOnAxisHit : public std::runtime_error {
 public:
  explicit BracketCollapsedOnAxisHit(const std::string& what) : std::runtime_error(what) {}
};

class NotConverged : public std::runtime_error {
 public:
  explicit NotConverged(const std::string& what) : std::runtime_error(what) {}
};

// One shot from (x, r, theta) = (0, R, 0) with the four t1-events armed.
// ThetaZero and XZero vanish identically at t = 0, so they carry an arming
// window; the other two are armed immediately.
template <class Real = double>
ShotOutcome shoot(double R, const ProblemParams& p, const ShootingOptions& opts) {
  if (!(R > 0)) throw std::invalid_argument("shoot: R must be positive");
  const double arm = 10.0 * opts.integ.initial_step;
  const std::vector<EventSpec> events = {
      {EventKind::RZero, EventDirection::Decreasing, 0.0},
      {EventKind::ThetaMinusPi, EventDirection::Decreasing, 0.0},
      {EventKind::XZero, EventDirection::Decreasing, arm},
      {EventKind::ThetaZero, EventDirection::Increasing, arm},
  };

  ShotOutcome out;
  out.R = R;
  out.traj = integrate<Real>({0.0, 0.0, R, 0.0}, p, events, opts.integ);
  out.event_state = out.traj.final_state();

  if (const Event* ev = out.traj.event()) {
    switch (ev->kind) {
      case EventKind::RZero:
        out.classification = Classification::AxisHit;
        break;
      case EventKind::ThetaMinusPi:
        out.classification = std::abs(ev->state.x) <= opts.on_axis_tol
                                 ? Classification::OnAxis
                                 : Classification::VerticalBeyondAxis;
        break;
      case EventKind::XZero:
        // An axis crossing with the tangent outside (-pi, 0) is not a member
        // of either shot family (reachable only by drifting off the cylinder
        // equilibrium) and is left unclassified.
        if (ev->state.theta > -M_PI && ev->state.theta < 0) {
          out.classification = Classification::CrossedAxisEarly;
        } else {
          out.classification = Classification::Inconclusive;
          out.note = "x crossing with theta outside (-pi, 0)";
        }
        break;
      case EventKind::ThetaZero:
        out.classification = Classification::ThetaReturned;
        break;
    }
  } else {
    out.classification = Classification::Inconclusive;
    switch (out.traj.truncated()->reason) {
      case Truncated::Reason::MaxTime: out.note = "max_time"; break;
      case Truncated::Reason::MaxSteps: out.note = "max_steps"; break;
      case Truncated::Reason::StepFailure: out.note = "step_failure"; break;
    }
  }
  return out;
}

namespace detail {

inline double state_component(const ProfileState& s, int comp) {
  return comp == 0 ? s.x : comp == 1 ? s.r : s.theta;
}

}  // namespace detail

// First time at which the given component crosses `level` in the given
// direction, localized on the dense output. comp: 0 = x, 1 = r, 2 = theta.
inline std::optional<double> first_time_crossing(const Trajectory& traj, int comp, double level,
                                                 bool decreasing, double t_from = 0.0) {
  for (std::size_t i = 0; i + 1 < traj.states.size(); ++i) {
    if (traj.states[i + 1].t < t_from) continue;
    const double v0 = detail::state_component(traj.states[i], comp) - level;
    const double v1 = detail::state_component(traj.states[i + 1], comp) - level;
    const bool hit = decreasing ? (v0 > 0 && v1 <= 0) : (v0 < 0 && v1 >= 0);
    if (!hit) continue;
    const auto& seg = traj.segments[i];
    double lo = 0.0;
    double hi = (traj.states[i + 1].t - seg.t0) / seg.h;
    const double sign0 = v0 > 0 ? 1.0 : -1.0;
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double gm = seg.eval(comp, mid) - level;
      if ((gm > 0 ? 1.0 : -1.0) == sign0)
        lo = mid;
      else
        hi = mid;
    }
    const double t_cross = seg.t0 + 0.5 * (lo + hi) * seg.h;
    if (t_cross >= t_from) return t_cross;
  }
  return std::nullopt;
}

// Probes R geometrically from max(r0, lo_hint) toward hi_hint and returns
// (R_lo, R_hi) with shoot(R_lo) vertical-beyond-axis and shoot(R_hi)
// crossed-axis-early. Probes classified as anything else are skipped.
inline std::pair<double, double> bracket_Rstar(const ProblemParams& p, double R_lo_hint,
                                               double R_hi_hint, int max_probes,
                                               const ShootingOptions& opts) {
  if (!(R_lo_hint > 0) || !(R_hi_hint > 0))
    throw std::invalid_argument("bracket_Rstar: hints must be positive");
  const double r0 = l_curve_solve(0.0, p).l;
  const double start = std::max(R_lo_hint, r0);
  if (start >= R_hi_hint)
    throw NoBracket("bracket_Rstar: empty probe interval [" + std::to_string(start) + ", " +
                    std::to_string(R_hi_hint) + "]");

  std::ostringstream table;
  std::optional<std::pair<double, Classification>> last_usable;
  double R = start;
  for (int probe = 0; probe < max_probes; ++probe) {
    ShotOutcome sh = shoot(R, p, opts);
    table << "  R=" << R << " -> " << to_string(sh.classification) << "\n";
    const Classification c = sh.classification;
    if (c == Classification::VerticalBeyondAxis || c == Classification::CrossedAxisEarly ||
        c == Classification::OnAxis) {
      const Classification side =
          c == Classification::OnAxis ? Classification::VerticalBeyondAxis : c;
      // Only the canonical orientation counts: vertical-beyond-axis below the
      // boundary, crossed-axis-early above. The reverse adjacency shows up
      // spuriously near the cylinder radius, where the shot family is not yet
      // monotone in R.
      if (last_usable && last_usable->second == Classification::VerticalBeyondAxis &&
          side == Classification::CrossedAxisEarly)
        return {last_usable->first, R};
      last_usable = {R, side};
    }
    if (R >= R_hi_hint) break;
    R = std::min(R * 1.5, R_hi_hint);
  }
  throw NoBracket("bracket_Rstar: no sign change found; probe table:\n" + table.str());
}

struct TorusSolution {
  double R_star = 0;
  Trajectory half_profile;
  double closure_error = 0;  // |x| at the theta = -pi event
  std::pair<double, double> bracket{0, 0};
};

// Bisects the classification boundary inside [R_lo, R_hi] until the shot at
// theta = -pi lands on the r-axis within on_axis_tol.
inline TorusSolution find_torus_in_bracket(const ProblemParams& p, double R_lo, double R_hi,
                                           const ShootingOptions& opts) {
  const std::pair<double, double> bracket0{R_lo, R_hi};
  auto accept = [&](double R_star, ShotOutcome&& sh, double lo, double hi) {
    TorusSolution sol;
    sol.R_star = R_star;
    sol.closure_error = std::abs(sh.event_state.x);
    sol.half_profile = std::move(sh.traj);
    sol.bracket = {lo, hi};
    for (const auto& st : sol.half_profile.states)
      if (!(st.r > 0)) throw NotConverged("find_torus: half profile touches the axis");
    return sol;
  };

  // Orientation check: the vertical-beyond-axis side must be below.
  ShotOutcome lo_shot = shoot(R_lo, p, opts);
  ShotOutcome hi_shot = shoot(R_hi, p, opts);
  if (lo_shot.classification == Classification::OnAxis)
    return accept(R_lo, std::move(lo_shot), R_lo, R_hi);
  if (lo_shot.classification != Classification::VerticalBeyondAxis ||
      hi_shot.classification != Classification::CrossedAxisEarly)
    throw NoBracket("find_torus: bracket endpoints classify as (" +
                    std::string(to_string(lo_shot.classification)) + ", " +
                    to_string(hi_shot.classification) +
                    "); need (vertical_beyond_axis, crossed_axis_early)");

  std::optional<ShotOutcome> best_vb = std::move(lo_shot);
  int consecutive_axis_hits = 0;

  while (R_hi - R_lo > opts.R_tol) {
    double mid = 0.5 * (R_lo + R_hi);
    ShotOutcome sh = shoot(mid, p, opts);
    if (sh.classification == Classification::ThetaReturned ||
        sh.classification == Classification::Inconclusive) {
      // Nudge once off a degenerate shot.
      mid = R_lo + 0.55 * (R_hi - R_lo);
      sh = shoot(mid, p, opts);
    }
    switch (sh.classification) {
      case Classification::OnAxis:
        return accept(mid, std::move(sh), R_lo, R_hi);
      case Classification::VerticalBeyondAxis:
        R_lo = mid;
        best_vb = std::move(sh);
        consecutive_axis_hits = 0;
        break;
      case Classification::CrossedAxisEarly:
        R_hi = mid;
        consecutive_axis_hits = 0;
        break;
      case Classification::AxisHit:
        // The sphere family lies below the torus radius; narrow from below.
        R_lo = mid;
        if (++consecutive_axis_hits > 50)
          throw BracketCollapsedOnAxisHit(
              "find_torus: bisection collapsed onto the axis-hit (sphere) family near R=" +
              std::to_string(mid));
        break;
      default:
        throw NotConverged("find_torus: unclassifiable shot at R=" + std::to_string(mid) +
                           " (" + sh.note + ")");
    }
  }

  if (consecutive_axis_hits > 0 && best_vb && std::abs(best_vb->event_state.x) > opts.on_axis_tol)
    throw BracketCollapsedOnAxisHit(
        "find_torus: bracket collapsed onto axis-hit shots near R=" + std::to_string(R_lo));
  if (best_vb && std::abs(best_vb->event_state.x) <= opts.on_axis_tol)
    return accept(best_vb->R, std::move(*best_vb), R_lo, R_hi);
  throw NotConverged("find_torus: bracket width reached R_tol=" + std::to_string(opts.R_tol) +
                     " without an on-axis shot (closure " +
                     std::to_string(best_vb ? std::abs(best_vb->event_state.x) : -1.0) + ")");
}

inline TorusSolution find_torus(const ProblemParams& p, const ShootingOptions& opts) {
  const double r0 = l_curve_solve(0.0, p).l;
  const double lo_hint = opts.bracket_lo_hint > 0 ? opts.bracket_lo_hint : r0;
  auto [R_lo, R_hi] = bracket_Rstar(p, lo_hint, opts.bracket_hi_hint, opts.max_probes, opts);
  return find_torus_in_bracket(p, R_lo, R_hi, opts);
}

struct SweepRow {
  double R = 0;
  Classification classification = Classification::Inconclusive;
  double t1 = std::numeric_limits<double>::quiet_NaN();
  double x_t1 = std::numeric_limits<double>::quiet_NaN();
  double r_t1 = std::numeric_limits<double>::quiet_NaN();
  double theta_t1 = std::numeric_limits<double>::quiet_NaN();
  // Values at the first downward crossing of r through R - 1/R.
  double theta_at_level = std::numeric_limits<double>::quiet_NaN();
  double g_at_level = std::numeric_limits<double>::quiet_NaN();
  // Horizontal point of the graph branch: first theta crossing of -pi/2.
  double r_max_loc = std::numeric_limits<double>::quiet_NaN();
  double g_max = std::numeric_limits<double>::quiet_NaN();
  std::string error;
};

using SweepTable = std::vector<SweepRow>;

inline SweepRow sweep_row(double R, const ProblemParams& p, const ShootingOptions& opts) {
  SweepRow row;
  row.R = R;
  try {
    ShotOutcome sh = shoot(R, p, opts);
    row.classification = sh.classification;
    const ProfileState& fs = sh.event_state;
    row.t1 = fs.t;
    row.x_t1 = fs.x;
    row.r_t1 = fs.r;
    row.theta_t1 = fs.theta;

    if (R > 1.0) {
      if (auto tc = first_time_crossing(sh.traj, 1, R - 1.0 / R, /*decreasing=*/true)) {
        const ProfileState st = sh.traj.at(*tc);
        row.theta_at_level = st.theta;
        row.g_at_level = st.x;
      }
    }
    if (auto th = first_time_crossing(sh.traj, 2, -M_PI / 2, /*decreasing=*/true)) {
      const ProfileState st = sh.traj.at(*th);
      row.r_max_loc = st.r;
      row.g_max = st.x;
    }
  } catch (const std::exception& e) {
    row.error = e.what();
  }
  return row;
}

// Rows are independent; with jobs > 1 they run concurrently and are merged in
// input order.
inline SweepTable sweep(const ProblemParams& p, const std::vector<double>& R_values,
                        const ShootingOptions& opts, int jobs = 1) {
  SweepTable table(R_values.size());
  if (jobs <= 1) {
    for (std::size_t i = 0; i < R_values.size(); ++i) table[i] = sweep_row(R_values[i], p, opts);
    return table;
  }
  std::vector<std::future<SweepRow>> futures;
  futures.reserve(R_values.size());
  for (double R : R_values)
    futures.push_back(std::async(std::launch::async, [&, R] { return sweep_row(R, p, opts); }));
  for (std::size_t i = 0; i < futures.size(); ++i) table[i] = futures[i].get();
  return table;
}

struct HorizontalPointResult {
  bool found = false;
  double x0 = std::numeric_limits<double>::quiet_NaN();
  double t0 = std::numeric_limits<double>::quiet_NaN();
  Trajectory traj;
};

class NoHorizontalPoint : public std::runtime_error {
 public:
  Trajectory traj;  // kept for inspection
  NoHorizontalPoint(const std::string& what, Trajectory t)
      : std::runtime_error(what), traj(std::move(t)) {}
};

// Integrates the comparison IVP from (0, r0 - epsilon, theta = 0) and locates
// the first t > arming where the tangent turns horizontal, i.e. u'(x0) = 0 for
// the local graph r = u(x). In the tangent angle this is sin(theta) = 0: the
// curve may pass a vertical point first and come back to horizontal at
// theta = pi, which still is a horizontal point of the (now leftward) graph.
inline HorizontalPointResult find_horizontal_point(double epsilon, const ProblemParams& p,
                                                   const ShootingOptions& opts) {
  const double r0 = l_curve_solve(0.0, p).l;
  if (!(epsilon > 0) || epsilon >= r0)
    throw std::invalid_argument("find_horizontal_point: require 0 < epsilon < r0 = " +
                                std::to_string(r0));
  const double arm = 10.0 * opts.integ.initial_step;
  // Terminate on the theta = 0 recrossing or on axis approach; a theta = pi
  // crossing (not an integrator event kind) is recovered from dense output.
  const std::vector<EventSpec> events = {
      {EventKind::ThetaZero, EventDirection::Decreasing, arm},
      {EventKind::XZero, EventDirection::Decreasing, arm},
      {EventKind::RZero, EventDirection::Decreasing, 0.0},
  };
  HorizontalPointResult res;
  res.traj = integrate({0.0, 0.0, r0 - epsilon, 0.0}, p, events, opts.integ);

  // First root of sin(theta(t)) on (arm, t_end]; theta moves monotonically
  // through each crossing, so a sampled sign change brackets it.
  const double t_end = res.traj.t_end;
  auto s_of = [&](double t) { return std::sin(res.traj.at(t).theta); };
  const std::size_t samples = std::max<std::size_t>(64, res.traj.segments.size() * 4);
  double t_prev = arm;
  double s_prev = s_of(t_prev);
  for (std::size_t i = 1; i <= samples; ++i) {
    const double t = arm + (t_end - arm) * static_cast<double>(i) / static_cast<double>(samples);
    const double s = s_of(t);
    if ((s_prev > 0 && s <= 0) || (s_prev < 0 && s >= 0)) {
      double lo = t_prev, hi = t;
      for (int it = 0; it < 200 && hi - lo > opts.integ.event_tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        if ((s_of(mid) > 0) == (s_prev > 0))
          lo = mid;
        else
          hi = mid;
      }
      res.t0 = 0.5 * (lo + hi);
      res.x0 = res.traj.at(res.t0).x;
      res.found = true;
      return res;
    }
    t_prev = t;
    s_prev = s;
  }
  // The run may terminate exactly at the theta = 0 recrossing, in which case
  // the sampled sin(theta) never quite changes sign before t_end.
  if (res.traj.ended_with(EventKind::ThetaZero)) {
    res.t0 = res.traj.event()->t1;
    res.x0 = res.traj.event()->state.x;
    res.found = true;
    return res;
  }
  throw NoHorizontalPoint("find_horizontal_point: no horizontal point before t = " +
                              std::to_string(t_end) + " (epsilon = " + std::to_string(epsilon) +
                              ")",
                          std::move(res.traj));
}

}  // namespace fminshoot
