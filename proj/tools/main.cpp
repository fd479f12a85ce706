// fminshoot CLI: weight validation, single shots, torus solves, parameter
// sweeps, and the exact-solution / lemma oracle suites.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fminshoot/io.hpp"
#include "fminshoot/oracles.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace fminshoot;

namespace {

constexpr const char* kVersion = "0.1.0";

// Exit codes: 0 success, 1 mathematical failure, 2 usage/parse error,
// 3 internal numeric failure.
enum ExitCode { kOk = 0, kMathFailure = 1, kUsage = 2, kNumeric = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string command;
  int n = 2;
  std::string weight = "constant 1";
  std::string out = "out";
  double R = 0;
  std::vector<double> R_values;
  std::string R_list, R_range;
  double bracket_lo = 0, bracket_hi = 0;
  std::string bracket;
  double R_tol = 1e-10;
  double on_axis_tol = 1e-8;
  double rel_tol = 1e-11;
  double abs_tol = 1e-13;
  int jobs = 1;
  double smax = 100.0;
  std::size_t samples = 2001;
  std::size_t resample = 4096;
  std::size_t segments = 128;
  std::string suite = "all";
};

ShootingOptions make_shooting_options(const RunConfig& cfg) {
  ShootingOptions opts;
  opts.integ.rel_tol = cfg.rel_tol;
  opts.integ.abs_tol = cfg.abs_tol;
  opts.on_axis_tol = cfg.on_axis_tol;
  opts.R_tol = cfg.R_tol;
  if (cfg.bracket_lo > 0) opts.bracket_lo_hint = cfg.bracket_lo;
  if (cfg.bracket_hi > 0) opts.bracket_hi_hint = cfg.bracket_hi;
  return opts;
}

json config_json(const RunConfig& cfg) {
  json j;
  j["command"] = cfg.command;
  j["n"] = cfg.n;
  j["weight"] = cfg.weight;
  j["out"] = cfg.out;
  if (cfg.command == "shoot") j["R"] = cfg.R;
  if (cfg.command == "sweep") {
    j["R_values"] = cfg.R_values;
    j["jobs"] = cfg.jobs;
  }
  if (cfg.command == "find-torus") {
    j["bracket_lo"] = cfg.bracket_lo;
    j["bracket_hi"] = cfg.bracket_hi;
    j["resample"] = cfg.resample;
    j["segments"] = cfg.segments;
  }
  if (cfg.command == "validate-weight") {
    j["smax"] = cfg.smax;
    j["samples"] = cfg.samples;
  }
  if (cfg.command == "oracle") j["suite"] = cfg.suite;
  return j;
}

json tolerances_json(const RunConfig& cfg) {
  json j;
  j["rel_tol"] = cfg.rel_tol;
  j["abs_tol"] = cfg.abs_tol;
  j["on_axis_tol"] = cfg.on_axis_tol;
  j["R_tol"] = cfg.R_tol;
  return j;
}

json make_report(const RunConfig& cfg, json summary) {
  json rep;
  rep["config"] = config_json(cfg);
  rep["summary"] = std::move(summary);
  rep["tool_version"] = kVersion;
  rep["tolerances"] = tolerances_json(cfg);
  return rep;
}

std::string iso_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm{};
  gmtime_r(&tt, &tm);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// One RunReport per line, timestamp first, append-only.
void log_report(const fs::path& out_dir, const json& report) {
  json line;
  line["timestamp"] = iso_timestamp();
  line.update(report);
  append_line(out_dir / "results.jsonl", line.dump());
}

fs::path resolve_out(const RunConfig& cfg) {
  if (const char* env = std::getenv("FMIN_SHOOT_OUT"); env != nullptr && *env != '\0')
    return fs::path(env);
  return fs::path(cfg.out);
}

// Config-file values apply only where the flag was not passed; unknown keys
// are rejected.
void apply_config_file(const std::string& path, CLI::App* sub, RunConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw UsageError(std::string("config parse error: ") + e.what());
  }
  if (!j.is_object()) throw UsageError("config file must contain a JSON object");

  auto unset = [&](const std::string& flag) {
    const CLI::Option* opt = sub->get_option_no_throw(flag);
    return opt == nullptr || opt->count() == 0;
  };
  const std::set<std::string> known = {
      "n",         "weight",  "out",     "R",        "R_list",  "R_range",
      "bracket",   "R_tol",   "on_axis_tol", "rel_tol", "abs_tol", "jobs",
      "smax",      "samples", "resample", "segments", "suite"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw UsageError("config: unknown key \"" + key + "\"");
    try {
      if (key == "n" && unset("--n")) cfg.n = value.get<int>();
      else if (key == "weight" && unset("--weight")) cfg.weight = value.get<std::string>();
      else if (key == "out" && unset("--out")) cfg.out = value.get<std::string>();
      else if (key == "R" && unset("--R")) cfg.R = value.get<double>();
      else if (key == "R_list" && unset("--R-list")) cfg.R_list = value.get<std::string>();
      else if (key == "R_range" && unset("--R-range")) cfg.R_range = value.get<std::string>();
      else if (key == "bracket" && unset("--bracket")) cfg.bracket = value.get<std::string>();
      else if (key == "R_tol" && unset("--tol")) cfg.R_tol = value.get<double>();
      else if (key == "on_axis_tol" && unset("--on-axis-tol")) cfg.on_axis_tol = value.get<double>();
      else if (key == "rel_tol" && unset("--rel-tol")) cfg.rel_tol = value.get<double>();
      else if (key == "abs_tol" && unset("--abs-tol")) cfg.abs_tol = value.get<double>();
      else if (key == "jobs" && unset("--jobs")) cfg.jobs = value.get<int>();
      else if (key == "smax" && unset("--smax")) cfg.smax = value.get<double>();
      else if (key == "samples" && unset("--samples")) cfg.samples = value.get<std::size_t>();
      else if (key == "resample" && unset("--resample")) cfg.resample = value.get<std::size_t>();
      else if (key == "segments" && unset("--segments")) cfg.segments = value.get<std::size_t>();
      else if (key == "suite" && unset("--suite")) cfg.suite = value.get<std::string>();
    } catch (const json::exception& e) {
      throw UsageError("config: bad value for \"" + key + "\": " + e.what());
    }
  }
}

std::vector<double> parse_R_spec(const RunConfig& cfg) {
  std::vector<double> Rs;
  if (!cfg.R_list.empty() && !cfg.R_range.empty())
    throw UsageError("--R-list and --R-range are mutually exclusive");
  if (!cfg.R_list.empty()) {
    std::stringstream ss(cfg.R_list);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        std::size_t pos = 0;
        const double v = std::stod(item, &pos);
        if (pos != item.size()) throw std::invalid_argument(item);
        Rs.push_back(v);
      } catch (const std::exception&) {
        throw UsageError("--R-list: bad value \"" + item + "\"");
      }
    }
  } else if (!cfg.R_range.empty()) {
    // lo:hi:{geometric|linear}:k
    std::vector<std::string> parts;
    std::stringstream ss(cfg.R_range);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(item);
    if (parts.size() != 4) throw UsageError("--R-range: expected lo:hi:{geometric|linear}:k");
    double lo = 0, hi = 0;
    long k = 0;
    try {
      lo = std::stod(parts[0]);
      hi = std::stod(parts[1]);
      k = std::stol(parts[3]);
    } catch (const std::exception&) {
      throw UsageError("--R-range: bad numeric field in \"" + cfg.R_range + "\"");
    }
    if (k <= 0) throw UsageError("--R-range: point count must be positive");
    if (!(lo > 0) || !(hi >= lo)) throw UsageError("--R-range: need 0 < lo <= hi");
    if (parts[2] == "geometric") {
      for (long i = 0; i < k; ++i)
        Rs.push_back(k == 1 ? lo : lo * std::pow(hi / lo, double(i) / double(k - 1)));
    } else if (parts[2] == "linear") {
      for (long i = 0; i < k; ++i)
        Rs.push_back(k == 1 ? lo : lo + (hi - lo) * double(i) / double(k - 1));
    } else {
      throw UsageError("--R-range: spacing must be geometric or linear");
    }
  } else {
    throw UsageError("sweep requires --R-list or --R-range");
  }
  if (Rs.empty()) throw UsageError("empty R set");
  for (double R : Rs)
    if (!(R > 0)) throw UsageError("R values must be positive");
  return Rs;
}

json checks_json(const CheckList& checks) {
  json arr = json::array();
  for (const auto& c : checks) {
    json item;
    item["name"] = c.name;
    item["pass"] = c.pass;
    if (!c.detail.empty()) item["detail"] = c.detail;
    arr.push_back(std::move(item));
  }
  return arr;
}

void print_checks(const CheckList& checks) {
  for (const auto& c : checks)
    std::cout << (c.pass ? "PASS" : "FAIL") << ": " << c.name
              << (c.detail.empty() ? "" : " (" + c.detail + ")") << "\n";
}

int cmd_validate_weight(const RunConfig& cfg) {
  const WeightFunction wf = parse_weight_spec(cfg.weight);
  const ValidationReport rep = validate_weight(wf, cfg.smax, cfg.samples);
  json summary;
  summary["admissible"] = rep.admissible;
  summary["fprime_min"] = rep.fprime_min;
  summary["fprime_max"] = rep.fprime_max;
  summary["fsecond_min"] = rep.fsecond_min;
  summary["max_fd_inconsistency"] = rep.max_fd_inconsistency;
  summary["failures"] = rep.failures;
  const json report = make_report(cfg, std::move(summary));
  std::cout << report.dump(2) << "\n";
  return rep.admissible ? kOk : kMathFailure;
}

int cmd_shoot(const RunConfig& cfg) {
  if (!(cfg.R > 0)) throw UsageError("shoot: --R must be positive");
  ProblemParams p{cfg.n, parse_weight_spec(cfg.weight)};
  const ShootingOptions opts = make_shooting_options(cfg);
  const ShotOutcome sh = shoot(cfg.R, p, opts);

  const fs::path out_dir = resolve_out(cfg);
  atomic_write(out_dir / "trajectory.csv", trajectory_csv(sh.traj));

  json summary;
  summary["classification"] = to_string(sh.classification);
  summary["t1"] = sh.event_state.t;
  summary["x_t1"] = sh.event_state.x;
  summary["r_t1"] = sh.event_state.r;
  summary["theta_t1"] = sh.event_state.theta;
  summary["accepted_steps"] = sh.traj.accepted_steps;
  summary["rejected_steps"] = sh.traj.rejected_steps;
  if (!sh.note.empty()) summary["note"] = sh.note;
  const json report = make_report(cfg, std::move(summary));
  atomic_write(out_dir / "report.json", report.dump(2) + "\n");
  log_report(out_dir, report);
  std::cout << report.dump(2) << "\n";
  return kOk;
}

int cmd_find_torus(const RunConfig& cfg) {
  ProblemParams p{cfg.n, parse_weight_spec(cfg.weight)};
  ShootingOptions opts = make_shooting_options(cfg);
  if ((cfg.bracket_lo > 0) != (cfg.bracket_hi > 0))
    throw UsageError("--bracket requires both endpoints");

  TorusSolution sol = cfg.bracket_lo > 0
                          ? find_torus_in_bracket(p, cfg.bracket_lo, cfg.bracket_hi, opts)
                          : find_torus(p, opts);

  ClosedProfile cp = close_profile(sol.half_profile, cfg.resample, 100.0 * opts.on_axis_tol);
  cp.meta = {sol.R_star, cfg.n, p.weight.spec_string(), sol.closure_error};
  const ResidualReport resid = profile_residual(cp, p);
  const EmbeddednessReport emb = check_embedded(cp);

  const fs::path out_dir = resolve_out(cfg);
  atomic_write(out_dir / "profile.csv", profile_csv(cp));
  atomic_write(out_dir / "profile.svg", profile_svg(cp, p));
  if (cfg.n == 2) atomic_write(out_dir / "torus.obj", obj_text(revolve(cp, cfg.segments)));

  json summary;
  summary["R_star"] = sol.R_star;
  summary["closure_error"] = sol.closure_error;
  summary["bracket"] = {sol.bracket.first, sol.bracket.second};
  summary["max_residual"] = resid.max_resid;
  summary["embedded"] = emb.embedded;
  if (!emb.embedded) summary["embeddedness_failure"] = emb.reason;
  summary["total_turning"] = total_turning(cp);
  summary["profile_points"] = cp.points.size();
  const json report = make_report(cfg, std::move(summary));
  atomic_write(out_dir / "report.json", report.dump(2) + "\n");
  log_report(out_dir, report);
  std::cout << report.dump(2) << "\n";
  return emb.embedded ? kOk : kMathFailure;
}

int cmd_sweep(const RunConfig& cfg) {
  ProblemParams p{cfg.n, parse_weight_spec(cfg.weight)};
  const ShootingOptions opts = make_shooting_options(cfg);
  const SweepTable table = sweep(p, cfg.R_values, opts, cfg.jobs);

  const fs::path out_dir = resolve_out(cfg);
  atomic_write(out_dir / "sweep.csv", sweep_csv(table));

  json rows = json::array();
  for (const auto& row : table) {
    json r;
    r["R"] = row.R;
    r["classification"] = to_string(row.classification);
    r["t1"] = row.t1;
    r["r_t1"] = row.r_t1;
    if (!row.error.empty()) r["error"] = row.error;
    rows.push_back(std::move(r));
  }
  json summary;
  summary["rows"] = std::move(rows);
  const json report = make_report(cfg, std::move(summary));
  atomic_write(out_dir / "report.json", report.dump(2) + "\n");
  log_report(out_dir, report);
  std::cout << report.dump(2) << "\n";
  return kOk;
}

int cmd_oracle(const RunConfig& cfg) {
  if (cfg.suite != "sphere" && cfg.suite != "cylinder" && cfg.suite != "lemmas" &&
      cfg.suite != "all")
    throw UsageError("--suite must be one of sphere, cylinder, lemmas, all");

  const ShootingOptions opts = make_shooting_options(cfg);
  CheckList checks;
  auto extend = [&](CheckList more) {
    for (auto& c : more) checks.push_back(std::move(c));
  };
  if (cfg.suite == "sphere" || cfg.suite == "all") extend(sphere_oracle(cfg.n, opts));
  if (cfg.suite == "cylinder" || cfg.suite == "all") extend(cylinder_oracle(cfg.n, opts));
  if (cfg.suite == "lemmas" || cfg.suite == "all") {
    const std::vector<double> Rs = {10, 20, 40, 80};
    for (const char* spec : {"constant 1", "saturating 1 2 1"}) {
      ProblemParams p{cfg.n, parse_weight_spec(spec)};
      LemmaSweepSummary sweep_sum = lemma_sweep_suite(p, Rs, opts);
      for (auto& c : sweep_sum.checks) {
        c.name = std::string(spec) + ": " + c.name;
        checks.push_back(std::move(c));
      }
      CheckList lk = l_curve_suite(p);
      for (auto& c : lk) {
        c.name = std::string(spec) + ": " + c.name;
        checks.push_back(std::move(c));
      }
    }
  }

  print_checks(checks);
  const bool ok = all_pass(checks);
  json summary;
  summary["pass"] = ok;
  summary["checks"] = checks_json(checks);
  const json report = make_report(cfg, std::move(summary));
  const fs::path out_dir = resolve_out(cfg);
  atomic_write(out_dir / "report.json", report.dump(2) + "\n");
  log_report(out_dir, report);
  return ok ? kOk : kMathFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shooting-method construction of rotationally symmetric f-minimal tori"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  RunConfig cfg;
  std::string config_path;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--n", cfg.n, "hypersurface dimension (>= 2)");
    sub->add_option("--weight", cfg.weight, "weight spec, e.g. \"constant 1\"");
    sub->add_option("--out", cfg.out, "output directory");
    sub->add_option("--config", config_path, "JSON config file (flags take precedence)");
    sub->add_option("--rel-tol", cfg.rel_tol, "integrator relative tolerance");
    sub->add_option("--abs-tol", cfg.abs_tol, "integrator absolute tolerance");
    sub->add_option("--on-axis-tol", cfg.on_axis_tol, "closure tolerance on |x| at theta=-pi");
    return sub;
  };

  CLI::App* vw = add_common(app.add_subcommand("validate-weight", "check admissibility"));
  vw->add_option("--smax", cfg.smax, "upper end of the sampling grid");
  vw->add_option("--samples", cfg.samples, "grid size");

  CLI::App* sh = add_common(app.add_subcommand("shoot", "single shot from (0, R, 0)"));
  sh->add_option("--R", cfg.R, "initial radius")->required();

  CLI::App* ft = add_common(app.add_subcommand("find-torus", "solve for the torus radius R*"));
  ft->add_option("--bracket", cfg.bracket, "initial bracket lo,hi");
  ft->add_option("--tol", cfg.R_tol, "bisection tolerance on R");
  ft->add_option("--resample", cfg.resample, "half-profile resample count");
  ft->add_option("--segments", cfg.segments, "azimuthal mesh segments (n = 2)");

  CLI::App* sw = add_common(app.add_subcommand("sweep", "classify a set of radii"));
  sw->add_option("--R-list", cfg.R_list, "comma-separated radii");
  sw->add_option("--R-range", cfg.R_range, "lo:hi:{geometric|linear}:k");
  sw->add_option("--jobs", cfg.jobs, "parallel sweep rows");

  CLI::App* orc = add_common(app.add_subcommand("oracle", "exact-solution and lemma suites"));
  orc->add_option("--suite", cfg.suite, "sphere, cylinder, lemmas, or all");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  cfg.command = sub->get_name();

  try {
    if (!config_path.empty()) apply_config_file(config_path, sub, cfg);
    if (cfg.n < 2) throw UsageError("--n must be >= 2");
    if (cfg.jobs < 1) throw UsageError("--jobs must be >= 1");
    if (!cfg.bracket.empty()) {
      const auto comma = cfg.bracket.find(',');
      if (comma == std::string::npos) throw UsageError("--bracket: expected lo,hi");
      try {
        cfg.bracket_lo = std::stod(cfg.bracket.substr(0, comma));
        cfg.bracket_hi = std::stod(cfg.bracket.substr(comma + 1));
      } catch (const std::exception&) {
        throw UsageError("--bracket: bad numeric value in \"" + cfg.bracket + "\"");
      }
      if (!(cfg.bracket_lo > 0) || !(cfg.bracket_hi > cfg.bracket_lo))
        throw UsageError("--bracket: need 0 < lo < hi");
    }
    if (cfg.command == "sweep") cfg.R_values = parse_R_spec(cfg);

    if (cfg.command == "validate-weight") return cmd_validate_weight(cfg);
    if (cfg.command == "shoot") return cmd_shoot(cfg);
    if (cfg.command == "find-torus") return cmd_find_torus(cfg);
    if (cfg.command == "sweep") return cmd_sweep(cfg);
    if (cfg.command == "oracle") return cmd_oracle(cfg);
    throw UsageError("unknown command");
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const ParseError& e) {
    std::cerr << "parse error at offset " << e.offset() << ": " << e.what() << "\n";
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const BoundsError& e) {
    std::cerr << "inadmissible weight: " << e.what() << "\n";
    return kMathFailure;
  } catch (const BracketFailure& e) {
    std::cerr << "inadmissible weight: " << e.what() << "\n";
    return kMathFailure;
  } catch (const NoHorizontalPoint& e) {
    std::cerr << "no horizontal point: " << e.what() << "\n";
    return kMathFailure;
  } catch (const NoBracket& e) {
    std::cerr << "no bracket: " << e.what() << "\n";
    return kMathFailure;
  } catch (const BracketCollapsedOnAxisHit& e) {
    std::cerr << "bracket collapsed: " << e.what() << "\n";
    return kMathFailure;
  } catch (const NotConverged& e) {
    std::cerr << "not converged: " << e.what() << "\n";
    return kMathFailure;
  } catch (const NotClosed& e) {
    std::cerr << "profile not closed: " << e.what() << "\n";
    return kMathFailure;
  } catch (const DimensionUnsupported& e) {
    std::cerr << "unsupported: " << e.what() << "\n";
    return kMathFailure;
  } catch (const std::exception& e) {
    std::cerr << "internal numeric failure: " << e.what() << "\n";
    return kNumeric;
  }
}
