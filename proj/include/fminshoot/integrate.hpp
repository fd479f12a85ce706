// Adaptive explicit Runge-Kutta integration of the arc-length profile system
// with per-step dense output and directional event localization.
//
// Two embedded pairs are provided: Dormand-Prince 5(4) with its quartic
// interpolant (the working method) and Bogacki-Shampine 3(2) with a cubic
// Hermite interpolant (an independent lower-order cross-check).

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <variant>
#include <vector>

#include "fminshoot/profile_ode.hpp"
#include "fminshoot/real_math.hpp"

namespace fminshoot {

enum class EventKind { ThetaZero, ThetaMinusPi, XZero, RZero };
enum class EventDirection { Decreasing, Increasing, Any };

// Events are ignored for t < arming_time; a directional event must also see
// its function reach the hysteresis magnitude on the approach side before a
// crossing counts, so roundoff-level wiggle around an equilibrium never
// terminates a run.
struct EventSpec {
  EventKind kind = EventKind::RZero;
  EventDirection direction = EventDirection::Decreasing;
  double arming_time = 0.0;
};

enum class Method { Dopri5, Bosh3 };

struct IntegratorOptions {
  double rel_tol = 1e-11;
  double abs_tol = 1e-13;
  double max_time = 100.0;
  std::size_t max_steps = 4'000'000;
  double event_tol = 1e-12;
  double initial_step = 1e-4;
  double event_hysteresis = 1e-6;
  double r_floor = 1e-10;  // RZero event level: trajectories reaching the axis
                           // are classified, not resolved below this radius.
  Method method = Method::Dopri5;
};

struct Event {
  EventKind kind;
  double t1 = 0;
  ProfileState state;
};

struct Truncated {
  enum class Reason { MaxTime, MaxSteps, StepFailure } reason = Reason::MaxTime;
};

class OutOfRange : public std::runtime_error {
 public:
  explicit OutOfRange(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

template <class Real>
using Vec3T = std::array<Real, 3>;  // (x, r, theta)
using Vec3 = Vec3T<double>;

// Dense segment: per component a quartic in sigma = (t - t0)/h.
struct DenseSegment {
  double t0 = 0, h = 0;
  std::array<std::array<double, 5>, 3> coef{};

  double eval(int comp, double sigma) const {
    const auto& c = coef[comp];
    return ((((c[4] * sigma) + c[3]) * sigma + c[2]) * sigma + c[1]) * sigma + c[0];
  }
};

}  // namespace detail

struct Trajectory {
  std::vector<ProfileState> states;              // accepted mesh points
  std::vector<detail::DenseSegment> segments;    // one per accepted step
  std::variant<Event, Truncated> terminal = Truncated{};
  double t_end = 0;
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;

  const ProfileState& initial_state() const { return states.front(); }
  const ProfileState& final_state() const { return states.back(); }

  bool ended_with(EventKind kind) const {
    const Event* ev = std::get_if<Event>(&terminal);
    return ev != nullptr && ev->kind == kind;
  }
  const Event* event() const { return std::get_if<Event>(&terminal); }
  const Truncated* truncated() const { return std::get_if<Truncated>(&terminal); }

  ProfileState at(double t) const {
    if (t < 0 || t > t_end * (1.0 + 1e-12) + 1e-300)
      throw OutOfRange("dense evaluation at t=" + std::to_string(t) +
                       " outside [0, " + std::to_string(t_end) + "]");
    if (segments.empty()) return states.front();
    t = std::min(t, t_end);
    // Last segment whose t0 <= t.
    auto it = std::upper_bound(segments.begin(), segments.end(), t,
                               [](double v, const detail::DenseSegment& s) { return v < s.t0; });
    const detail::DenseSegment& seg = (it == segments.begin()) ? segments.front() : *(it - 1);
    const double sigma = (t - seg.t0) / seg.h;
    return {t, seg.eval(0, sigma), seg.eval(1, sigma), seg.eval(2, sigma)};
  }
};

inline ProfileState evaluate_dense(const Trajectory& traj, double t) { return traj.at(t); }

namespace detail {

inline double event_value(EventKind kind, double x, double r, double theta, double r_floor) {
  switch (kind) {
    case EventKind::ThetaZero:
      return theta;
    case EventKind::ThetaMinusPi:
      return theta + M_PI;
    case EventKind::XZero:
      return x;
    case EventKind::RZero:
      return r - r_floor;
  }
  return 0.0;
}

inline double event_value(EventKind kind, const DenseSegment& seg, double sigma, double r_floor) {
  return event_value(kind, seg.eval(0, sigma), seg.eval(1, sigma), seg.eval(2, sigma), r_floor);
}

template <class Real = double>
class RkStepper {
 public:
  using Vec = Vec3T<Real>;

  RkStepper(const ProblemParams& params, Method method)
      : params_(&params), method_(method) {}

  // Derivative with guards: false when the state has left the admissible
  // region (r <= 0) or the weight evaluation blew up.
  bool deriv(const Vec& y, Vec& out) const {
    if (!(y[1] > 0) || !fm_isfinite(y[0]) || !fm_isfinite(y[1]) || !fm_isfinite(y[2]))
      return false;
    Real fp;
    try {
      fp = params_->weight.fprime(y[0] * y[0] + y[1] * y[1]);
    } catch (const NonFiniteError&) {
      return false;
    }
    const Real c = fm_cos(y[2]);
    const Real s = fm_sin(y[2]);
    out[0] = c;
    out[1] = s;
    out[2] = (Real(params_->n - 1) / y[1] - Real(0.5) * y[1] * fp) * c +
             Real(0.5) * y[0] * fp * s;
    return fm_isfinite(out[2]);
  }

  int error_order() const { return method_ == Method::Dopri5 ? 5 : 3; }

  // One trial step from (t, y) with the cached derivative f0 = f(y).
  // On success fills ynew, f_new (FSAL), err_norm, and the dense segment.
  bool try_step(Real t, const Vec& y, const Vec& f0, Real h, Vec& ynew, Vec& fnew,
                Real& err_norm, DenseSegment& seg, double abs_tol, double rel_tol) const {
    return method_ == Method::Dopri5
               ? step_dopri5(t, y, f0, h, ynew, fnew, err_norm, seg, abs_tol, rel_tol)
               : step_bosh3(t, y, f0, h, ynew, fnew, err_norm, seg, abs_tol, rel_tol);
  }

 private:
  const ProblemParams* params_;
  Method method_;

  static Real scaled_norm(const Vec& err, const Vec& y0, const Vec& y1, double abs_tol,
                          double rel_tol) {
    Real acc = 0;
    for (int i = 0; i < 3; ++i) {
      const Real sc = Real(abs_tol) + Real(rel_tol) * std::max(fm_abs(y0[i]), fm_abs(y1[i]));
      const Real q = err[i] / sc;
      acc += q * q;
    }
    return fm_sqrt(acc / Real(3));
  }

  bool step_dopri5(Real, const Vec& y, const Vec& k1, Real h, Vec& ynew, Vec& fnew,
                   Real& err_norm, DenseSegment& seg, double abs_tol, double rel_tol) const {
    static constexpr Real a21 = Real(1) / 5;
    static constexpr Real a31 = Real(3) / 40, a32 = Real(9) / 40;
    static constexpr Real a41 = Real(44) / 45, a42 = Real(-56) / 15, a43 = Real(32) / 9;
    static constexpr Real a51 = Real(19372) / 6561, a52 = Real(-25360) / 2187,
                          a53 = Real(64448) / 6561, a54 = Real(-212) / 729;
    static constexpr Real a61 = Real(9017) / 3168, a62 = Real(-355) / 33,
                          a63 = Real(46732) / 5247, a64 = Real(49) / 176,
                          a65 = Real(-5103) / 18656;
    static constexpr Real b1 = Real(35) / 384, b3 = Real(500) / 1113, b4 = Real(125) / 192,
                          b5 = Real(-2187) / 6784, b6 = Real(11) / 84;
    static constexpr Real e1 = Real(71) / 57600, e3 = Real(-71) / 16695, e4 = Real(71) / 1920,
                          e5 = Real(-17253) / 339200, e6 = Real(22) / 525, e7 = Real(-1) / 40;
    static constexpr Real d1 = Real(-12715105075.0L) / Real(11282082432.0L),
                          d3 = Real(87487479700.0L) / Real(32700410799.0L),
                          d4 = Real(-10690763975.0L) / Real(1880347072.0L),
                          d5 = Real(701980252875.0L) / Real(199316789632.0L),
                          d6 = Real(-1453857185.0L) / Real(822651844.0L),
                          d7 = Real(69997945.0L) / Real(29380423.0L);

    Vec k2, k3, k4, k5, k6, k7, tmp;
    auto stage = [&](const std::initializer_list<std::pair<Real, const Vec*>>& terms,
                     Vec& k) {
      for (int i = 0; i < 3; ++i) {
        Real acc = y[i];
        for (const auto& [a, kk] : terms) acc += h * a * (*kk)[i];
        tmp[i] = acc;
      }
      return deriv(tmp, k);
    };

    if (!stage({{a21, &k1}}, k2)) return false;
    if (!stage({{a31, &k1}, {a32, &k2}}, k3)) return false;
    if (!stage({{a41, &k1}, {a42, &k2}, {a43, &k3}}, k4)) return false;
    if (!stage({{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}, k5)) return false;
    if (!stage({{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}, k6)) return false;

    for (int i = 0; i < 3; ++i)
      ynew[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    if (!deriv(ynew, k7)) return false;
    fnew = k7;

    Vec err;
    for (int i = 0; i < 3; ++i)
      err[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
    err_norm = scaled_norm(err, y, ynew, abs_tol, rel_tol);

    // Hairer's quartic interpolant, expanded to monomial coefficients.
    seg.h = static_cast<double>(h);
    for (int i = 0; i < 3; ++i) {
      const Real A = y[i];
      const Real B = ynew[i] - y[i];
      const Real C = h * k1[i] - B;
      const Real D = B - h * k7[i] - C;
      const Real E = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] +
                          d7 * k7[i]);
      seg.coef[i] = {static_cast<double>(A), static_cast<double>(B + C),
                     static_cast<double>(D + E - C), static_cast<double>(-(D + Real(2) * E)),
                     static_cast<double>(E)};
    }
    return true;
  }

  bool step_bosh3(Real, const Vec& y, const Vec& k1, Real h, Vec& ynew, Vec& fnew,
                  Real& err_norm, DenseSegment& seg, double abs_tol, double rel_tol) const {
    Vec k2, k3, k4, tmp;
    for (int i = 0; i < 3; ++i) tmp[i] = y[i] + Real(0.5) * h * k1[i];
    if (!deriv(tmp, k2)) return false;
    for (int i = 0; i < 3; ++i) tmp[i] = y[i] + Real(0.75) * h * k2[i];
    if (!deriv(tmp, k3)) return false;
    for (int i = 0; i < 3; ++i)
      ynew[i] = y[i] + h * (Real(2) / 9 * k1[i] + Real(1) / 3 * k2[i] + Real(4) / 9 * k3[i]);
    if (!deriv(ynew, k4)) return false;
    fnew = k4;

    Vec err;
    for (int i = 0; i < 3; ++i)
      err[i] = h * (Real(-5) / 72 * k1[i] + Real(1) / 12 * k2[i] + Real(1) / 9 * k3[i] -
                    Real(1) / 8 * k4[i]);
    err_norm = scaled_norm(err, y, ynew, abs_tol, rel_tol);

    // Cubic Hermite on (y, k1) -> (ynew, k4).
    seg.h = static_cast<double>(h);
    for (int i = 0; i < 3; ++i) {
      seg.coef[i] = {static_cast<double>(y[i]), static_cast<double>(h * k1[i]),
                     static_cast<double>(Real(3) * (ynew[i] - y[i]) - h * (Real(2) * k1[i] + k4[i])),
                     static_cast<double>(Real(2) * (y[i] - ynew[i]) + h * (k1[i] + k4[i])), 0.0};
    }
    return true;
  }
};

struct EventTracker {
  EventSpec spec;
  bool primed;

  explicit EventTracker(const EventSpec& s)
      : spec(s), primed(s.direction == EventDirection::Any) {}

  void observe(double g, double hysteresis) {
    if (primed) return;
    if (spec.direction == EventDirection::Decreasing && g >= hysteresis) primed = true;
    if (spec.direction == EventDirection::Increasing && g <= -hysteresis) primed = true;
  }

  bool crossing(double g0, double g1) const {
    if (!primed) return false;
    switch (spec.direction) {
      case EventDirection::Decreasing:
        return g0 > 0 && g1 <= 0;
      case EventDirection::Increasing:
        return g0 < 0 && g1 >= 0;
      case EventDirection::Any:
        return (g0 > 0 && g1 <= 0) || (g0 < 0 && g1 >= 0);
    }
    return false;
  }
};

}  // namespace detail

// Integrates the profile system from (t0, y0) until the first armed event
// crossing, max_time, max_steps, or step-size underflow. The mesh, dense
// output, and event localization are always reported in double; Real selects
// the working precision of the stepper arithmetic and the initial condition.
template <class Real>
Trajectory integrate_from(Real t0, const detail::Vec3T<Real>& y0, const ProblemParams& p,
                          const std::vector<EventSpec>& events, const IntegratorOptions& opts) {
  using Vec = detail::Vec3T<Real>;
  if (!(y0[1] > 0)) throw RadiusNonPositive(static_cast<double>(y0[1]));

  detail::RkStepper<Real> stepper(p, opts.method);
  std::vector<detail::EventTracker> trackers(events.begin(), events.end());

  Trajectory traj;
  traj.states.push_back({static_cast<double>(t0), static_cast<double>(y0[0]),
                         static_cast<double>(y0[1]), static_cast<double>(y0[2])});

  Real t = t0;
  const Real t_start = t;
  Vec y = y0;
  Vec f0;
  if (!stepper.deriv(y, f0)) {
    traj.terminal = Truncated{Truncated::Reason::StepFailure};
    traj.t_end = static_cast<double>(t);
    return traj;
  }

  const Real expo = Real(1) / stepper.error_order();
  Real h = std::min(Real(opts.initial_step), Real(opts.max_time) - (t - t_start));

  while (true) {
    if (t - t_start >= Real(opts.max_time) * Real(1.0 - 1e-14)) {
      traj.terminal = Truncated{Truncated::Reason::MaxTime};
      break;
    }
    if (traj.accepted_steps + traj.rejected_steps >= opts.max_steps) {
      traj.terminal = Truncated{Truncated::Reason::MaxSteps};
      break;
    }

    h = std::min(h, Real(opts.max_time) - (t - t_start));
    if (h < Real(1e-14) * (Real(1) + detail::fm_abs(t))) {
      traj.terminal = Truncated{Truncated::Reason::StepFailure};
      break;
    }

    Vec ynew, fnew;
    Real err = 0;
    detail::DenseSegment seg;
    const bool ok =
        stepper.try_step(t, y, f0, h, ynew, fnew, err, seg, opts.abs_tol, opts.rel_tol);

    if (!ok || !(err <= 1)) {
      ++traj.rejected_steps;
      h *= ok ? std::clamp(Real(0.9) * detail::fm_pow(err, -expo), Real(0.2), Real(0.9))
              : Real(0.5);
      if (!detail::fm_isfinite(h)) h = Real(0.5) * Real(opts.initial_step);
      continue;
    }

    seg.t0 = static_cast<double>(t);
    traj.segments.push_back(seg);
    ++traj.accepted_steps;

    // Event scan on the dense output of this step.
    constexpr int kScan = 16;
    bool event_found = false;
    double best_t = 0;
    EventKind best_kind = EventKind::RZero;

    for (auto& trk : trackers) {
      std::array<double, kScan + 1> g;
      for (int j = 0; j <= kScan; ++j)
        g[j] = detail::event_value(trk.spec.kind, seg, static_cast<double>(j) / kScan,
                                   opts.r_floor);
      for (int j = 0; j <= kScan; ++j) {
        if (j > 0 && trk.crossing(g[j - 1], g[j])) {
          // Refine by bisection on the dense polynomial.
          double lo = static_cast<double>(j - 1) / kScan;
          double hi = static_cast<double>(j) / kScan;
          const double glo_sign = g[j - 1] > 0 ? 1.0 : -1.0;
          double mid = 0.5 * (lo + hi);
          for (int it = 0; it < 90; ++it) {
            mid = 0.5 * (lo + hi);
            const double gm = detail::event_value(trk.spec.kind, seg, mid, opts.r_floor);
            if (std::abs(gm) <= opts.event_tol) break;
            if (gm * glo_sign > 0)
              lo = mid;
            else
              hi = mid;
          }
          const double t_cross = static_cast<double>(t + Real(mid) * h);
          if (t_cross - static_cast<double>(t_start) >= trk.spec.arming_time &&
              (!event_found || t_cross < best_t)) {
            event_found = true;
            best_t = t_cross;
            best_kind = trk.spec.kind;
          }
          break;  // only the first crossing of this event within the step matters
        }
        trk.observe(g[j], opts.event_hysteresis);
      }
    }

    if (event_found) {
      const double sigma = static_cast<double>((Real(best_t) - t) / h);
      ProfileState ev_state{best_t, seg.eval(0, sigma), seg.eval(1, sigma), seg.eval(2, sigma)};
      traj.states.push_back(ev_state);
      traj.t_end = best_t;
      traj.terminal = Event{best_kind, best_t, ev_state};
      return traj;
    }

    t += h;
    y = ynew;
    f0 = fnew;
    traj.states.push_back({static_cast<double>(t), static_cast<double>(y[0]),
                           static_cast<double>(y[1]), static_cast<double>(y[2])});
    traj.t_end = static_cast<double>(t);

    const Real fac = std::clamp(
        Real(0.9) * detail::fm_pow(std::max(err, Real(1e-36)), -expo), Real(0.2), Real(5));
    h *= fac;
  }

  traj.t_end = static_cast<double>(t);
  return traj;
}

template <class Real = double>
Trajectory integrate(const ProfileState& init, const ProblemParams& p,
                     const std::vector<EventSpec>& events, const IntegratorOptions& opts) {
  return integrate_from<Real>(
      static_cast<Real>(init.t),
      {static_cast<Real>(init.x), static_cast<Real>(init.r), static_cast<Real>(init.theta)}, p,
      events, opts);
}

}  // namespace fminshoot
