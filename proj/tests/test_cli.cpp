#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "fixtures.hpp"
#include "superlab/report.hpp"

namespace fs = std::filesystem;
using superlab::Json;
using testing::fixture_path;

namespace {

struct Output {
  int status = -1;
  std::string out;
  std::string err;
};

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("superlab_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Output run(const std::string& args) {
  const fs::path err = fs::temp_directory_path() / "superlab_cli_test_stderr.txt";
  const std::string cmd = std::string(SUPERLAB_CLI) + " " + args + " 2>" + err.string();
  Output o;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe);
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) o.out.append(buf, n);
  const int raw = pclose(pipe);
  o.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  o.err = slurp(err);
  return o;
}

}  // namespace

TEST_CASE("cli: validate") {
  const Output o = run("validate --model " + fixture_path("fix1"));
  CHECK(o.status == 0);
  const Json j = Json::parse(o.out);
  CHECK(j["lambda1"].get<double>() == doctest::Approx(1.0));
  CHECK(j["ok"] == true);

  const fs::path dir = scratch("validate");
  std::ofstream(dir / "bad.json") << R"({"types": 2, "a": [-1, -1], "b": [0.5, 0.5], "eta": [[0.3, 0.5], [0.5, 0]]})";
  const Output bad = run("validate --model " + (dir / "bad.json").string());
  CHECK(bad.status == 1);
  CHECK(Json::parse(bad.out)["structural_ok"] == false);
}

TEST_CASE("cli: classify and predict") {
  Output o = run("classify --model " + fixture_path("fix4") + " --f \"1,-1\"");
  CHECK(o.status == 0);
  Json j = Json::parse(o.out);
  CHECK(j["classification"]["regime"] == "Large");
  CHECK(j["classification"]["epsilon"].get<double>() == doctest::Approx(0.5));

  o = run("classify --model " + fixture_path("fix2") + " --f \"1+0.5i,-1-0.5i\"");
  CHECK(o.status == 0);
  j = Json::parse(o.out);
  CHECK(j["classification"]["regime"] == "Small");
  CHECK(j["prediction"].is_null());

  o = run("predict --model " + fixture_path("fix2") + " --f 1,-1 --t-grid 5,10,20");
  CHECK(o.status == 0);
  j = Json::parse(o.out);
  CHECK(j["variance_asymptote"]["rows"].size() == 3);
  CHECK(j["prediction"]["limit"]["variance"].get<double>() == doctest::Approx(2.0).epsilon(1e-8));

  o = run("spectrum --model " + fixture_path("fix5"));
  CHECK(o.status == 0);
  CHECK(Json::parse(o.out)["blocks"].size() == 3);
}

TEST_CASE("cli: errors are reported as JSON with exit status 2") {
  Output o = run("");
  CHECK(o.status == 2);
  CHECK(Json::parse(o.err)["error"]["kind"] == "usage");

  o = run("classify --model " + fixture_path("fix2") + " --f 1,x");
  CHECK(o.status == 2);
  CHECK(Json::parse(o.err)["error"]["kind"] == "config");

  o = run("classify --model " + fixture_path("fix2") + " --f 1,2,3");
  CHECK(o.status == 2);

  o = run("validate --model /nonexistent.json");
  CHECK(o.status == 2);

  const fs::path dir = scratch("errors");
  std::ofstream(dir / "cfg.json") << R"({"model": ")" << fixture_path("fix1") << R"(", "colour": "red"})";
  o = run("validate --config " + (dir / "cfg.json").string());
  CHECK(o.status == 2);
  CHECK(o.err.find("colour") != std::string::npos);

  o = run("spectrum --model " + fixture_path("fix2") + " --bogus");
  CHECK(o.status == 2);

  o = run("verify --model " + fixture_path("fix1") + " --suite nope");
  CHECK(o.status == 2);
}

TEST_CASE("cli: flags override the config file") {
  const fs::path dir = scratch("precedence");
  std::ofstream(dir / "cfg.json") << R"({"model": ")" << fixture_path("fix3") << R"(", "f": [1, -1]})";
  // config alone: FIX-3 is critical
  Output o = run("classify --config " + (dir / "cfg.json").string());
  CHECK(o.status == 0);
  CHECK(Json::parse(o.out)["classification"]["regime"] == "Critical");
  // --model from the command line wins
  o = run("classify --config " + (dir / "cfg.json").string() + " --model " + fixture_path("fix4"));
  CHECK(Json::parse(o.out)["classification"]["regime"] == "Large");
}

TEST_CASE("cli: simulate writes the ensemble and a manifest") {
  const fs::path dir = scratch("simulate");
  const Output o = run("simulate --model " + fixture_path("fix2") + " --T 1 --record 0.5,1 --replicas 20 --seed 3 --out " +
                       dir.string());
  CHECK(o.status == 0);
  const std::string csv = slurp(dir / "ensemble.csv");
  CHECK(csv.rfind("replica,time,type_1,type_2,W\n", 0) == 0);
  // header + 20 replicas x 2 record times
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 41);
  const Json man = Json::parse(slurp(dir / "manifest.json"));
  CHECK(man["subcommand"] == "simulate");
  CHECK(man["master_seed"] == 3);
  CHECK(man.contains("model_hash"));
  CHECK(man.contains("wall_clock_seconds"));

  // replaying the manifest reproduces the ensemble byte for byte
  const fs::path again = scratch("simulate_again");
  const Output r = run("simulate --config " + (dir / "manifest.json").string() + " --workers 3 --out " + again.string());
  CHECK(r.status == 0);
  CHECK(slurp(again / "ensemble.csv") == csv);
}

TEST_CASE("cli: verify and report") {
  const fs::path dir = scratch("verify");
  Output o = run("verify --model " + fixture_path("fix2") + " --suite lln --replicas 400 --out " + dir.string());
  CHECK(o.status == 0);
  CHECK(fs::exists(dir / "lln.csv"));
  CHECK(fs::exists(dir / "lln.json"));
  CHECK(fs::exists(dir / "lln.manifest.json"));
  CHECK(o.out == slurp(dir / "lln.csv"));

  o = run("report " + dir.string());
  CHECK(o.status == 0);
  CHECK(o.out.rfind("experiment,quantity,time,empirical,stderr,predicted,pass\n", 0) == 0);
  CHECK(o.out.find("lln,l2_gap_final_over_initial") != std::string::npos);

  // a failing result file makes report fail
  superlab::ExperimentResult bad;
  bad.experiment = "demo";
  bad.rows.push_back({"x", 1.0, 0.0, 0.0, 0.0, superlab::Verdict::Fail, ""});
  std::ofstream(dir / "demo.json") << superlab::to_json(bad).dump();
  o = run("report " + dir.string());
  CHECK(o.status == 1);
  CHECK(o.out.find("demo,x,1,0,0,0,fail") != std::string::npos);
}

TEST_CASE("cli: fclt verification on FIX-1") {
  const fs::path dir = scratch("fclt");
  const Output o =
      run("verify --model " + fixture_path("fix1") + " --suite fclt --seed 42 --replicas 20000 --out " + dir.string());
  CHECK(o.out.find("fclt,corr_Y0_Y1,") != std::string::npos);
  CHECK(o.status == 0);
}
