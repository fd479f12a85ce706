// Closing the half-profile by reflection, residual and embeddedness checks,
// and revolution of the closed profile into a triangle mesh (n = 2).

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "fminshoot/shooting.hpp"

namespace fminshoot {

class NotClosed : public std::runtime_error {
 public:
  explicit NotClosed(const std::string& what) : std::runtime_error(what) {}
};

class DimensionUnsupported : public std::runtime_error {
 public:
  explicit DimensionUnsupported(const std::string& what) : std::runtime_error(what) {}
};

struct ClosedProfileMeta {
  double R_star = 0;
  int n = 2;
  std::string weight_spec;
  double closure_error = 0;
};

// Reflection-closed profile polyline, uniformly sampled in arc length.
// thetas are unwrapped tangent angles running from 0 down to -2*pi around the
// loop; the closing edge from the last point back to the first is implicit.
struct ClosedProfile {
  std::vector<std::array<double, 2>> points;  // (x, r)
  std::vector<double> thetas;
  double dt = 0;  // uniform arc-length spacing between consecutive samples
  ClosedProfileMeta meta;
};

// Resamples the half-profile (theta: 0 -> -pi, x(0) = x(t1) = 0) uniformly in
// arc length and appends its mirror image under x -> -x in reverse order.
inline ClosedProfile close_profile(const Trajectory& half, std::size_t resample_count,
                                   double on_axis_tol = 1e-6) {
  if (resample_count < 4)
    throw std::invalid_argument("close_profile: resample_count must be >= 4");
  const Event* ev = half.event();
  if (ev == nullptr || ev->kind != EventKind::ThetaMinusPi)
    throw NotClosed("close_profile: half profile does not end at theta = -pi");
  if (std::abs(ev->state.x) > on_axis_tol)
    throw NotClosed("close_profile: endpoint x = " + std::to_string(ev->state.x) +
                    " exceeds on-axis tolerance " + std::to_string(on_axis_tol));

  const std::size_t N = resample_count;
  const double t1 = half.t_end;
  ClosedProfile cp;
  cp.dt = t1 / static_cast<double>(N - 1);
  cp.points.reserve(2 * N - 2);
  cp.thetas.reserve(2 * N - 2);

  std::vector<ProfileState> samples(N);
  for (std::size_t i = 0; i < N; ++i)
    samples[i] = half.at(t1 * static_cast<double>(i) / static_cast<double>(N - 1));

  for (std::size_t i = 0; i < N; ++i) {
    cp.points.push_back({samples[i].x, samples[i].r});
    cp.thetas.push_back(samples[i].theta);
  }
  // Mirror, traversed backwards so the tangent keeps turning through -pi to
  // -2*pi; seam points (i = N-1 and i = 0) are not duplicated.
  for (std::size_t i = N - 1; i-- > 1;) {
    cp.points.push_back({-samples[i].x, samples[i].r});
    cp.thetas.push_back(-samples[i].theta - 2.0 * M_PI);
  }
  return cp;
}

// Total turning of the tangent around the closed loop (sum of wrapped angle
// increments); -2*pi for a simple clockwise loop.
inline double total_turning(const ClosedProfile& cp) {
  const std::size_t M = cp.thetas.size();
  double total = 0;
  for (std::size_t i = 0; i < M; ++i) {
    double d = cp.thetas[(i + 1) % M] - cp.thetas[i];
    d = std::remainder(d, 2.0 * M_PI);
    total += d;
  }
  return total;
}

struct ResidualReport {
  double max_resid = 0;
  std::vector<double> per_point;
};

// f-minimal residual in the arc-length (theta) form at uniformly spaced
// samples: d(theta)/dt by five-point centered differences against the
// curvature term of the profile system. `closed` wraps around the seam; open
// inputs skip two samples at each end.
inline ResidualReport theta_form_residuals(const std::vector<std::array<double, 2>>& points,
                                           const std::vector<double>& thetas, double dt,
                                           bool closed, const ProblemParams& p) {
  const std::size_t M = points.size();
  ResidualReport rep;
  rep.per_point.assign(M, 0.0);
  if (M < 5) return rep;
  const std::size_t begin = closed ? 0 : 2;
  const std::size_t end = closed ? M : M - 2;
  for (std::size_t i = begin; i < end; ++i) {
    // Angle increments taken relative to theta_i so the stencil is immune to
    // the -2*pi wrap at the seam.
    auto inc = [&](std::size_t off_fwd) {
      const std::size_t j = (i + off_fwd) % M;
      return std::remainder(thetas[j] - thetas[i], 2.0 * M_PI);
    };
    const double a1 = inc(1), a2 = inc(2), b1 = inc(M - 1), b2 = inc(M - 2);
    const double dtheta_dt = (-a2 + 8.0 * a1 - 8.0 * b1 + b2) / (12.0 * dt);
    const double x = points[i][0];
    const double r = points[i][1];
    const double th = thetas[i];
    const double fp = p.weight.fprime(x * x + r * r);
    const double model =
        ((p.n - 1) / r - 0.5 * r * fp) * std::cos(th) + 0.5 * x * fp * std::sin(th);
    const double resid = dtheta_dt - model;
    rep.per_point[i] = resid;
    rep.max_resid = std::max(rep.max_resid, std::abs(resid));
  }
  return rep;
}

inline ResidualReport profile_residual(const ClosedProfile& cp, const ProblemParams& p) {
  return theta_form_residuals(cp.points, cp.thetas, cp.dt, /*closed=*/true, p);
}

struct EmbeddednessReport {
  bool embedded = false;
  std::string reason;
  std::optional<std::pair<std::size_t, std::size_t>> intersecting_segments;
};

namespace detail {

inline bool segments_intersect(const std::array<double, 2>& a, const std::array<double, 2>& b,
                               const std::array<double, 2>& c, const std::array<double, 2>& d) {
  auto orient = [](const std::array<double, 2>& p, const std::array<double, 2>& q,
                   const std::array<double, 2>& r) {
    const double v = (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]);
    return v > 0 ? 1 : v < 0 ? -1 : 0;
  };
  const int o1 = orient(a, b, c), o2 = orient(a, b, d);
  const int o3 = orient(c, d, a), o4 = orient(c, d, b);
  if (o1 != o2 && o3 != o4) return true;
  auto on_segment = [](const std::array<double, 2>& p, const std::array<double, 2>& q,
                       const std::array<double, 2>& r) {
    return std::min(p[0], q[0]) <= r[0] && r[0] <= std::max(p[0], q[0]) &&
           std::min(p[1], q[1]) <= r[1] && r[1] <= std::max(p[1], q[1]);
  };
  if (o1 == 0 && on_segment(a, b, c)) return true;
  if (o2 == 0 && on_segment(a, b, d)) return true;
  if (o3 == 0 && on_segment(c, d, a)) return true;
  if (o4 == 0 && on_segment(c, d, b)) return true;
  return false;
}

}  // namespace detail

// Simple closed curve with r > 0 throughout. Pairwise segment test, O(N^2).
inline EmbeddednessReport check_embedded(const ClosedProfile& cp) {
  EmbeddednessReport rep;
  const std::size_t M = cp.points.size();
  if (M < 4) {
    rep.reason = "fewer than 4 points";
    return rep;
  }
  for (std::size_t i = 0; i < M; ++i) {
    if (!(cp.points[i][1] > 0)) {
      rep.reason = "profile touches the rotation axis (r <= 0) at sample " + std::to_string(i);
      return rep;
    }
  }
  for (std::size_t i = 0; i < M; ++i) {
    for (std::size_t j = i + 2; j < M; ++j) {
      if (i == 0 && j == M - 1) continue;  // adjacent through the closing edge
      if (detail::segments_intersect(cp.points[i], cp.points[(i + 1) % M], cp.points[j],
                                     cp.points[(j + 1) % M])) {
        rep.reason = "segments " + std::to_string(i) + " and " + std::to_string(j) + " intersect";
        rep.intersecting_segments = {i, j};
        return rep;
      }
    }
  }
  rep.embedded = true;
  return rep;
}

struct TorusMesh {
  std::vector<std::array<double, 3>> vertices;
  std::vector<std::array<std::uint32_t, 3>> faces;
};

// Revolves the closed profile about the x-axis (n = 2 only):
// v[i*S + j] = (x_i, r_i cos(psi_j), r_i sin(psi_j)), psi_j = 2*pi*j/S, with
// quad strips split into consistently oriented triangles.
inline TorusMesh revolve(const ClosedProfile& cp, std::size_t azimuthal_segments) {
  if (cp.meta.n != 2)
    throw DimensionUnsupported("revolve: meshes are produced for n = 2 only (got n = " +
                               std::to_string(cp.meta.n) + ")");
  if (azimuthal_segments < 8)
    throw std::invalid_argument("revolve: azimuthal_segments must be >= 8");

  const std::size_t N = cp.points.size();
  const std::size_t S = azimuthal_segments;
  TorusMesh mesh;
  mesh.vertices.reserve(N * S);
  mesh.faces.reserve(2 * N * S);

  for (std::size_t i = 0; i < N; ++i) {
    const double x = cp.points[i][0];
    const double r = cp.points[i][1];
    for (std::size_t j = 0; j < S; ++j) {
      const double psi = 2.0 * M_PI * static_cast<double>(j) / static_cast<double>(S);
      mesh.vertices.push_back({x, r * std::cos(psi), r * std::sin(psi)});
    }
  }
  auto idx = [&](std::size_t i, std::size_t j) {
    return static_cast<std::uint32_t>((i % N) * S + (j % S));
  };
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = 0; j < S; ++j) {
      mesh.faces.push_back({idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)});
      mesh.faces.push_back({idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)});
    }
  }
  return mesh;
}

// OBJ text: `v x y z` then 1-indexed `f i j k`, LF endings, 9 significant
// digits.
inline void write_obj(const TorusMesh& mesh, std::ostream& os) {
  char buf[128];
  for (const auto& v : mesh.vertices) {
    std::snprintf(buf, sizeof(buf), "v %.9g %.9g %.9g\n", v[0], v[1], v[2]);
    os << buf;
  }
  for (const auto& f : mesh.faces) {
    std::snprintf(buf, sizeof(buf), "f %u %u %u\n", f[0] + 1, f[1] + 1, f[2] + 1);
    os << buf;
  }
}

}  // namespace fminshoot
