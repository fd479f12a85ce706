#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "fminshoot/geometry.hpp"
#include "fminshoot/integrate.hpp"

using namespace fminshoot;

namespace {

ProblemParams self_shrinker(int n = 2) { return {n, WeightFunction::constant(1.0)}; }

// Synthetic half profile: unit semicircle centered at (xc, c), traversed
// clockwise from the top, x = xc + sin t, r = c + cos t, theta = -t for
// t in [0, pi]. Built from cubic Hermite dense segments so close_profile can
// resample it like a real trajectory.
Trajectory synthetic_semicircle(double c, double xc = 0.0, std::size_t nseg = 2000) {
  auto x_of = [&](double t) { return xc + std::sin(t); };
  auto r_of = [&](double t) { return c + std::cos(t); };

  Trajectory traj;
  const double t1 = M_PI;
  const double h = t1 / static_cast<double>(nseg);
  traj.states.push_back({0.0, x_of(0.0), r_of(0.0), 0.0});
  for (std::size_t k = 0; k < nseg; ++k) {
    const double t0 = h * static_cast<double>(k);
    const double ta = t0, tb = t0 + h;
    const double y0[3] = {x_of(ta), r_of(ta), -ta};
    const double y1[3] = {x_of(tb), r_of(tb), -tb};
    const double d0[3] = {std::cos(ta), -std::sin(ta), -1.0};
    const double d1[3] = {std::cos(tb), -std::sin(tb), -1.0};
    detail::DenseSegment seg;
    seg.t0 = t0;
    seg.h = h;
    for (int i = 0; i < 3; ++i) {
      const double delta = y1[i] - y0[i];
      seg.coef[i] = {y0[i], h * d0[i], 3.0 * delta - h * (2.0 * d0[i] + d1[i]),
                     -2.0 * delta + h * (d0[i] + d1[i]), 0.0};
    }
    traj.segments.push_back(seg);
    traj.states.push_back({tb, y1[0], y1[1], y1[2]});
  }
  traj.t_end = t1;
  traj.accepted_steps = nseg;
  traj.terminal = Event{EventKind::ThetaMinusPi, t1, {t1, x_of(t1), r_of(t1), -t1}};
  return traj;
}

}  // namespace

TEST_CASE("close_profile: reflection closure of a synthetic semicircle") {
  const std::size_t N = 1024;
  ClosedProfile cp = close_profile(synthetic_semicircle(3.0), N, 1e-6);

  CHECK(cp.points.size() == 2 * N - 2);
  CHECK(cp.thetas.size() == cp.points.size());
  CHECK(cp.dt == Catch::Approx(M_PI / static_cast<double>(N - 1)).epsilon(1e-12));

  // First point is the start of the half profile; thetas run 0 -> -2*pi.
  CHECK(cp.points[0][0] == Catch::Approx(0.0).margin(1e-10));
  CHECK(cp.points[0][1] == Catch::Approx(4.0).margin(1e-10));
  CHECK(cp.thetas.front() == 0.0);
  for (std::size_t i = 1; i < cp.thetas.size(); ++i) REQUIRE(cp.thetas[i] < cp.thetas[i - 1]);
  CHECK(cp.thetas.back() > -2.0 * M_PI);

  // Mirror symmetry x -> -x: point (M - i) % M matches point i reflected.
  const std::size_t M = cp.points.size();
  for (std::size_t i = 0; i < M; ++i) {
    const auto& a = cp.points[i];
    const auto& b = cp.points[(M - i) % M];
    REQUIRE(std::abs(b[0] + a[0]) <= 1e-8);
    REQUIRE(std::abs(b[1] - a[1]) <= 1e-8);
  }

  CHECK(std::abs(total_turning(cp) + 2.0 * M_PI) <= 1e-6);
  CHECK(check_embedded(cp).embedded);
}

TEST_CASE("close_profile: rejection cases") {
  // A sphere trajectory terminates at the axis (RZero), not at theta = -pi.
  IntegratorOptions io;
  Trajectory sphere = integrate({0, 0, 2.0, 0}, self_shrinker(),
                                {{EventKind::RZero, EventDirection::Decreasing, 0.0},
                                 {EventKind::ThetaMinusPi, EventDirection::Decreasing, 0.0}},
                                io);
  REQUIRE(sphere.ended_with(EventKind::RZero));
  CHECK_THROWS_AS(close_profile(sphere, 256), NotClosed);

  // Endpoint off the symmetry plane by 0.01 with a 1e-6 tolerance.
  CHECK_THROWS_AS(close_profile(synthetic_semicircle(3.0, 0.01), 256, 1e-6), NotClosed);
  // Same profile, loose tolerance: accepted.
  CHECK_NOTHROW(close_profile(synthetic_semicircle(3.0, 0.01), 256, 0.1));

  CHECK_THROWS_AS(close_profile(synthetic_semicircle(3.0), 3), std::invalid_argument);
}

TEST_CASE("theta_form_residuals: vanishes on an integrated solution and converges") {
  IntegratorOptions io;
  io.rel_tol = 1e-12;
  io.abs_tol = 1e-14;
  io.max_time = 2.0;
  Trajectory traj = integrate({0, 0, 3.0, 0}, self_shrinker(), {}, io);
  REQUIRE(traj.truncated() != nullptr);

  auto max_resid = [&](std::size_t M) {
    std::vector<std::array<double, 2>> pts(M);
    std::vector<double> ths(M);
    const double dt = traj.t_end / static_cast<double>(M - 1);
    for (std::size_t i = 0; i < M; ++i) {
      const ProfileState st = traj.at(dt * static_cast<double>(i));
      pts[i] = {st.x, st.r};
      ths[i] = st.theta;
    }
    return theta_form_residuals(pts, ths, dt, /*closed=*/false, self_shrinker()).max_resid;
  };

  const double r64 = max_resid(64);
  const double r256 = max_resid(256);
  const double r4096 = max_resid(4096);
  CHECK(r4096 <= 1e-6);
  // Fourth-order stencil: a 4x finer mesh cuts the residual by ~256; require
  // at least 10x, leaving headroom above the dense-output error floor.
  CHECK(r64 / r256 >= 10.0);
}

TEST_CASE("theta_form_residuals: cylinder segment has zero residual") {
  const std::size_t M = 64;
  std::vector<std::array<double, 2>> pts(M);
  std::vector<double> ths(M, 0.0);
  const double dt = 0.05;
  const double rad = std::sqrt(2.0);
  for (std::size_t i = 0; i < M; ++i) pts[i] = {dt * static_cast<double>(i), rad};
  ResidualReport rep = theta_form_residuals(pts, ths, dt, false, self_shrinker());
  CHECK(rep.max_resid <= 1e-14);
  CHECK(rep.per_point.size() == M);
  CHECK(rep.per_point.front() == 0.0);  // open ends are skipped
  CHECK(rep.per_point.back() == 0.0);

  // Fewer than 5 samples: trivially empty report.
  ResidualReport tiny = theta_form_residuals({pts.begin(), pts.begin() + 4},
                                             {ths.begin(), ths.begin() + 4}, dt, false,
                                             self_shrinker());
  CHECK(tiny.max_resid == 0.0);
}

TEST_CASE("check_embedded: self-intersection and axis contact are detected") {
  ClosedProfile bowtie;
  bowtie.points = {{0.0, 1.0}, {2.0, 2.0}, {2.0, 1.0}, {0.0, 2.0}};
  bowtie.thetas = {0.0, -1.0, -2.0, -3.0};
  bowtie.dt = 1.0;
  EmbeddednessReport rep = check_embedded(bowtie);
  CHECK_FALSE(rep.embedded);
  REQUIRE(rep.intersecting_segments.has_value());
  CHECK_FALSE(rep.reason.empty());

  ClosedProfile axis;
  axis.points = {{0.0, 1.0}, {1.0, 0.0}, {0.0, 1.5}, {-1.0, 2.0}};
  axis.thetas = {0.0, -1.0, -2.0, -3.0};
  axis.dt = 1.0;
  EmbeddednessReport rep2 = check_embedded(axis);
  CHECK_FALSE(rep2.embedded);
  CHECK_FALSE(rep2.intersecting_segments.has_value());
  CHECK(rep2.reason.find("axis") != std::string::npos);

  ClosedProfile degenerate;
  degenerate.points = {{0.0, 1.0}, {1.0, 1.0}, {0.0, 2.0}};
  degenerate.thetas = {0.0, -1.0, -2.0};
  CHECK_FALSE(check_embedded(degenerate).embedded);
}

TEST_CASE("revolve: torus mesh invariants") {
  const std::size_t N_half = 64;
  ClosedProfile cp = close_profile(synthetic_semicircle(3.0), N_half, 1e-6);
  const std::size_t N = cp.points.size();
  const std::size_t S = 16;
  TorusMesh mesh = revolve(cp, S);

  REQUIRE(mesh.vertices.size() == N * S);
  REQUIRE(mesh.faces.size() == 2 * N * S);

  // Closed orientable surface: V - E + F = 0 for a torus (E = 3F/2).
  const long long V = static_cast<long long>(mesh.vertices.size());
  const long long F = static_cast<long long>(mesh.faces.size());
  const long long E = 3 * F / 2;
  CHECK(V - E + F == 0);

  // Every vertex projects back onto its generating profile point.
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = 0; j < S; ++j) {
      const auto& v = mesh.vertices[i * S + j];
      REQUIRE(std::abs(v[0] - cp.points[i][0]) <= 1e-9);
      REQUIRE(std::abs(std::hypot(v[1], v[2]) - cp.points[i][1]) <= 1e-9);
    }
  }

  // Face indices are in range.
  for (const auto& f : mesh.faces)
    for (std::uint32_t k : f) REQUIRE(k < mesh.vertices.size());

  CHECK_THROWS_AS(revolve(cp, 7), std::invalid_argument);
  ClosedProfile cp3 = cp;
  cp3.meta.n = 3;
  CHECK_THROWS_AS(revolve(cp3, 16), DimensionUnsupported);
}

TEST_CASE("write_obj: format is v/f lines, LF endings, 1-indexed faces") {
  TorusMesh mesh;
  mesh.vertices = {{0.123456789123, -1.0, 2.5}, {1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}};
  mesh.faces = {{0, 1, 2}};
  std::ostringstream os;
  write_obj(mesh, os);
  const std::string text = os.str();

  CHECK(text.rfind("v ", 0) == 0);
  CHECK(text.find('\r') == std::string::npos);
  CHECK(text.back() == '\n');
  CHECK(text.find("v 0.123456789 -1 2.5\n") != std::string::npos);  // 9 significant digits
  CHECK(text.find("f 1 2 3\n") != std::string::npos);
}
