#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

const std::string kCli = FMINSHOOT_CLI_PATH;

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

fs::path fresh_dir(const std::string& tag) {
  static int counter = 0;
  fs::path dir = fs::temp_directory_path() /
                 ("fminshoot_cli_" + tag + "_" + std::to_string(::getpid()) + "_" +
                  std::to_string(counter++));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunResult run(const std::string& args, const std::string& env_prefix = "") {
  const fs::path dir = fresh_dir("io");
  const fs::path out_file = dir / "stdout.txt";
  const fs::path err_file = dir / "stderr.txt";
  const std::string cmd = env_prefix + kCli + " " + args + " > " + out_file.string() + " 2> " +
                          err_file.string();
  const int rc = std::system(cmd.c_str());
  RunResult res;
  res.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  res.out = slurp(out_file);
  res.err = slurp(err_file);
  return res;
}

json report_of(const RunResult& res) { return json::parse(res.out); }

// results.jsonl rows with the timestamp removed, for cross-run comparison.
std::vector<std::string> detimestamped_rows(const fs::path& jsonl) {
  std::vector<std::string> rows;
  std::ifstream in(jsonl);
  REQUIRE(in.good());
  std::string line;
  while (std::getline(in, line)) {
    json j = json::parse(line);
    REQUIRE(j.begin().key() == "timestamp");  // timestamp is the first key
    j.erase("timestamp");
    rows.push_back(j.dump());
  }
  return rows;
}

}  // namespace

TEST_CASE("cli: version and usage errors exit with the documented codes") {
  CHECK(run("--version").exit_code == 0);
  CHECK(run("").exit_code == 2);                 // missing subcommand
  CHECK(run("frobnicate").exit_code == 2);       // unknown subcommand
  CHECK(run("shoot").exit_code == 2);            // --R is required
  CHECK(run("shoot --R -1").exit_code == 2);     // nonpositive radius
  CHECK(run("shoot --R 2 --n 1").exit_code == 2);
  CHECK(run("sweep --R-list 10 --jobs 0").exit_code == 2);
}

TEST_CASE("cli: validate-weight verdicts and report shape") {
  RunResult ok = run("validate-weight --weight \"constant 1\"");
  CHECK(ok.exit_code == 0);
  json rep = report_of(ok);
  CHECK(rep["summary"]["admissible"] == true);
  // Report keys in order: config, summary, tool_version, tolerances.
  std::vector<std::string> keys;
  for (auto it = rep.begin(); it != rep.end(); ++it) keys.push_back(it.key());
  CHECK(keys == std::vector<std::string>{"config", "summary", "tool_version", "tolerances"});
  CHECK(rep["tool_version"].is_string());

  CHECK(run("validate-weight --weight \"saturating 1 2 1\" --smax 200").exit_code == 0);

  RunResult bad = run("validate-weight --weight \"expr \\\"exp(-s)\\\" m=0.1 M=1\"");
  CHECK(bad.exit_code == 1);
  CHECK(report_of(bad)["summary"]["admissible"] == false);

  CHECK(run("validate-weight --weight \"bogus 1\"").exit_code == 2);
  CHECK(run("validate-weight --weight \"constant -3\"").exit_code == 1);  // bounds, not syntax
}

TEST_CASE("cli: shoot writes trajectory.csv and a classified report") {
  const fs::path dir = fresh_dir("shoot");
  RunResult res = run("shoot --R 2 --out " + dir.string());
  REQUIRE(res.exit_code == 0);

  const std::string csv = slurp(dir / "trajectory.csv");
  CHECK(csv.rfind("t,x,r,theta\n", 0) == 0);
  CHECK(csv.find('\r') == std::string::npos);

  json rep = report_of(res);
  CHECK(rep["summary"]["classification"] == "axis_hit");
  CHECK(rep["config"]["R"] == 2.0);
  CHECK(slurp(dir / "report.json") == rep.dump(2) + "\n");

  RunResult far = run("shoot --R 10 --out " + fresh_dir("shoot10").string());
  CHECK(far.exit_code == 0);
  CHECK(report_of(far)["summary"]["classification"] == "crossed_axis_early");
}

TEST_CASE("cli: repeated runs are byte-identical; the log only gains rows") {
  const fs::path dir = fresh_dir("repeat");
  REQUIRE(run("shoot --R 3.5 --out " + dir.string()).exit_code == 0);
  const std::string csv1 = slurp(dir / "trajectory.csv");
  const std::string rep1 = slurp(dir / "report.json");

  REQUIRE(run("shoot --R 3.5 --out " + dir.string()).exit_code == 0);
  CHECK(slurp(dir / "trajectory.csv") == csv1);
  CHECK(slurp(dir / "report.json") == rep1);

  const auto rows = detimestamped_rows(dir / "results.jsonl");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == rows[1]);
}

TEST_CASE("cli: sweep output format and R-spec validation") {
  const fs::path dir = fresh_dir("sweep");
  REQUIRE(run("sweep --R-list 10,20 --out " + dir.string()).exit_code == 0);
  const std::string csv = slurp(dir / "sweep.csv");
  CHECK(csv.rfind("R,classification,t1,x_t1,r_t1,theta_t1,theta_at_Rm1overR,g_at_Rm1overR,"
                  "r_max_loc,g_max\n",
                  0) == 0);

  // Re-run is byte-identical.
  REQUIRE(run("sweep --R-list 10,20 --out " + dir.string()).exit_code == 0);
  CHECK(slurp(dir / "sweep.csv") == csv);

  // Geometric range runs; degenerate specs are usage errors.
  CHECK(run("sweep --R-range 10:40:geometric:3 --out " + fresh_dir("sweepr").string())
            .exit_code == 0);
  CHECK(run("sweep --R-range 0:0:linear:0").exit_code == 2);
  CHECK(run("sweep --R-range 10:40:cubic:3").exit_code == 2);
  CHECK(run("sweep --R-list 10,nope").exit_code == 2);
  CHECK(run("sweep --R-list 10 --R-range 10:40:linear:2").exit_code == 2);
  CHECK(run("sweep").exit_code == 2);
}

TEST_CASE("cli: find-torus artifacts for n = 2 and n = 3") {
  const fs::path d2 = fresh_dir("torus2");
  RunResult r2 = run("find-torus --bracket 3,4 --resample 512 --out " + d2.string());
  REQUIRE(r2.exit_code == 0);
  CHECK(fs::exists(d2 / "profile.csv"));
  CHECK(fs::exists(d2 / "profile.svg"));
  CHECK(fs::exists(d2 / "torus.obj"));
  CHECK(slurp(d2 / "profile.csv").rfind("t,x,r,theta\n", 0) == 0);
  const std::string obj = slurp(d2 / "torus.obj");
  CHECK(obj.rfind("v ", 0) == 0);
  CHECK(obj.find("\nf 1 ") != std::string::npos);

  json rep = report_of(r2);
  CHECK(rep["summary"]["embedded"] == true);
  CHECK(rep["summary"]["R_star"].get<double>() > 2.0);
  CHECK(rep["summary"]["closure_error"].get<double>() <= 1e-6);

  const fs::path d3 = fresh_dir("torus3");
  RunResult r3 = run("find-torus --n 3 --resample 512 --out " + d3.string());
  REQUIRE(r3.exit_code == 0);
  CHECK(fs::exists(d3 / "profile.csv"));
  CHECK_FALSE(fs::exists(d3 / "torus.obj"));  // meshes only for n = 2
}

TEST_CASE("cli: FMIN_SHOOT_OUT overrides --out") {
  const fs::path flag_dir = fresh_dir("flagout");
  const fs::path env_dir = fresh_dir("envout");
  fs::remove_all(env_dir);
  RunResult res = run("shoot --R 2 --out " + flag_dir.string(),
                      "FMIN_SHOOT_OUT=" + env_dir.string() + " ");
  REQUIRE(res.exit_code == 0);
  CHECK(fs::exists(env_dir / "trajectory.csv"));
  CHECK_FALSE(fs::exists(flag_dir / "trajectory.csv"));
}

TEST_CASE("cli: config file fills unset flags; flags win; unknown keys rejected") {
  const fs::path dir = fresh_dir("config");
  const fs::path cfg = dir / "run.json";
  {
    std::ofstream out(cfg);
    out << R"({"weight": "saturating 1 2 1", "smax": 50})";
  }

  // No --weight flag: the config value applies.
  RunResult a = run("validate-weight --config " + cfg.string());
  REQUIRE(a.exit_code == 0);
  json ra = report_of(a);
  CHECK(ra["config"]["weight"] == "saturating 1 2 1");
  CHECK(ra["config"]["smax"] == 50.0);

  // Explicit flag beats the config value.
  RunResult b = run("validate-weight --weight \"constant 1\" --config " + cfg.string());
  REQUIRE(b.exit_code == 0);
  CHECK(report_of(b)["config"]["weight"] == "constant 1");

  const fs::path bad = dir / "bad.json";
  {
    std::ofstream out(bad);
    out << R"({"wieght": "constant 1"})";
  }
  CHECK(run("validate-weight --config " + bad.string()).exit_code == 2);

  const fs::path notjson = dir / "not.json";
  {
    std::ofstream out(notjson);
    out << "nope";
  }
  CHECK(run("validate-weight --config " + notjson.string()).exit_code == 2);
  CHECK(run("validate-weight --config " + (dir / "missing.json").string()).exit_code == 2);
}
