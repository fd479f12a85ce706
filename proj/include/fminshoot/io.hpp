// Deterministic text serialization: profile/trajectory CSV, sweep CSV, the
// SVG profile plot, and atomic file writes.

#pragma once

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fminshoot/geometry.hpp"

namespace fminshoot {

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string fmt6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// Lossless CSV of the accepted integration mesh.
inline std::string trajectory_csv(const Trajectory& traj) {
  std::string out = "t,x,r,theta\n";
  for (const auto& s : traj.states)
    out += fmt17(s.t) + "," + fmt17(s.x) + "," + fmt17(s.r) + "," + fmt17(s.theta) + "\n";
  return out;
}

// Lossless CSV of the closed profile; t is cumulative arc length.
inline std::string profile_csv(const ClosedProfile& cp) {
  std::string out = "t,x,r,theta\n";
  for (std::size_t i = 0; i < cp.points.size(); ++i) {
    const double t = cp.dt * static_cast<double>(i);
    out += fmt17(t) + "," + fmt17(cp.points[i][0]) + "," + fmt17(cp.points[i][1]) + "," +
           fmt17(cp.thetas[i]) + "\n";
  }
  return out;
}

inline std::string sweep_csv(const SweepTable& table) {
  std::string out =
      "R,classification,t1,x_t1,r_t1,theta_t1,theta_at_Rm1overR,g_at_Rm1overR,r_max_loc,g_max\n";
  for (const auto& row : table) {
    out += fmt17(row.R);
    out += ",";
    out += to_string(row.classification);
    for (double v : {row.t1, row.x_t1, row.r_t1, row.theta_t1, row.theta_at_level,
                     row.g_at_level, row.r_max_loc, row.g_max}) {
      out += ",";
      out += fmt17(v);
    }
    out += "\n";
  }
  return out;
}

inline std::string obj_text(const TorusMesh& mesh) {
  std::ostringstream os;
  write_obj(mesh, os);
  return os.str();
}

// SVG plot of the closed profile with the mirrored l-curve and, for the
// self-shrinker weight, the reference circle x^2 + r^2 = 2n.
inline std::string profile_svg(const ClosedProfile& cp, const ProblemParams& p) {
  double xmin = 0, xmax = 0, rmin = 0, rmax = 0;
  bool first = true;
  auto extend = [&](double x, double r) {
    if (first) {
      xmin = xmax = x;
      rmin = rmax = r;
      first = false;
    } else {
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      rmin = std::min(rmin, r);
      rmax = std::max(rmax, r);
    }
  };
  for (const auto& pt : cp.points) extend(pt[0], pt[1]);

  const double span_hint = std::max(xmax - xmin, rmax - rmin);
  std::vector<std::array<double, 2>> lcurve;
  const int lsamples = 128;
  for (int i = 0; i <= lsamples; ++i) {
    const double x = (xmax + 0.1 * span_hint) * static_cast<double>(i) / lsamples;
    const double l = l_curve_solve(x, p).l;
    lcurve.push_back({x, l});
    extend(x, l);
    extend(-x, l);
  }
  const bool draw_circle = p.weight.is_unit_constant();
  if (draw_circle) {
    const double rad = std::sqrt(2.0 * p.n);
    extend(rad, rad);
    extend(-rad, 0.0);
  }
  extend(xmin, 0.0);  // keep the axis in frame

  const double mx = 0.05 * (xmax - xmin);
  const double mr = 0.05 * (rmax - rmin);
  const double w = (xmax - xmin) + 2 * mx;
  const double h = (rmax - rmin) + 2 * mr;
  // SVG y grows downward; map r -> (rmax + mr) - r.
  auto X = [&](double x) { return fmt6(x - xmin + mx); };
  auto Y = [&](double r) { return fmt6(rmax + mr - r); };

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " + fmt6(w) + " " +
                    fmt6(h) + "\">\n";
  svg += "<line x1=\"" + X(xmin) + "\" y1=\"" + Y(0) + "\" x2=\"" + X(xmax) + "\" y2=\"" + Y(0) +
         "\" stroke=\"#999\" stroke-width=\"" + fmt6(0.004 * h) + "\"/>\n";

  auto polyline = [&](const std::vector<std::array<double, 2>>& pts, const std::string& color,
                      bool closed) {
    std::string path = closed ? "<polygon" : "<polyline";
    path += " fill=\"none\" stroke=\"" + color + "\" stroke-width=\"" + fmt6(0.006 * h) +
            "\" points=\"";
    for (const auto& pt : pts) path += X(pt[0]) + "," + Y(pt[1]) + " ";
    path += "\"/>\n";
    return path;
  };

  svg += polyline(cp.points, "#0055cc", true);

  std::vector<std::array<double, 2>> lfull;
  for (auto it = lcurve.rbegin(); it != lcurve.rend(); ++it) lfull.push_back({-(*it)[0], (*it)[1]});
  for (std::size_t i = 1; i < lcurve.size(); ++i) lfull.push_back(lcurve[i]);
  svg += polyline(lfull, "#cc7700", false);

  if (draw_circle) {
    std::vector<std::array<double, 2>> circ;
    const double rad = std::sqrt(2.0 * p.n);
    for (int i = 0; i <= 180; ++i) {
      const double a = M_PI * static_cast<double>(i) / 180.0;
      circ.push_back({rad * std::cos(a), rad * std::sin(a)});
    }
    svg += polyline(circ, "#118833", false);
  }
  svg += "</svg>\n";
  return svg;
}

// Writes via a temp file in the same directory plus rename.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    os << content;
    if (!os) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

inline void append_line(const std::filesystem::path& path, const std::string& line) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::app);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for appending");
  os << line << "\n";
}

}  // namespace fminshoot
