#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "json.hpp"

namespace {

struct Run {
  int code = -1;
  std::string out;
};

std::filesystem::path scratch() {
  auto dir = std::filesystem::temp_directory_path() / "modlab_cli_test";
  std::filesystem::create_directories(dir);
  return dir;
}

Run run(const std::string& args) {
  auto out_path = scratch() / "stdout.txt";
  std::string cmd = std::string(MODLAB_CLI_PATH) + " " + args + " > " + out_path.string() + " 2>/dev/null";
  int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(out_path);
  std::stringstream ss;
  ss << in.rdbuf();
  r.out = ss.str();
  return r;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

using Json = nlohmann::ordered_json;

}  // namespace

TEST_CASE("build writes the approximation") {
  auto path = scratch() / "c3.json";
  auto r = run("build --space carpet --level 3 --out " + path.string());
  CHECK(r.code == 0);
  auto j = Json::parse(slurp(path));
  CHECK(j["cells"].size() == 512);
  CHECK(j["modlab_schema"] == 1);
  CHECK(j["config"]["level"] == 3);
}

TEST_CASE("build errors") {
  CHECK(run("build --space sponge --level 9").code == 2);
  CHECK(run("build --space moon --level 1").code == 2);
  CHECK(run("build --space carpet --level 1 --out /nonexistent/dir/x.json").code == 3);
}

TEST_CASE("build validation report") {
  auto r = run("build --space carpet --level 1 --validate");
  CHECK(r.code == 0);
  auto j = Json::parse(r.out);
  CHECK(j["kappa"] == 2.0);
  CHECK(j["validation"]["passed"] == true);
}

TEST_CASE("modulus command") {
  auto r = run("modulus --space square --level 2 --p 2 --tol 1e-6 --family left_right");
  CHECK(r.code == 0);
  auto j = Json::parse(r.out);
  CHECK(std::abs(j["result"]["upper"].get<double>() - 1.0) <= 1e-6);
  CHECK(std::abs(j["result"]["lower"].get<double>() - 1.0) <= 1e-6);
  CHECK(j["modlab_schema"] == 1);
  CHECK(j["config"]["p"] == 2.0);

  auto e = run("modulus --space square --level 2 --family d0=2");
  CHECK(e.code == 0);
  auto je = Json::parse(e.out);
  CHECK(je["result"]["upper"] == 0.0);
  CHECK(je["result"]["lower"] == 0.0);

  CHECK(run("modulus --space square --level 2 --tol 1").code == 2);
  CHECK(run("modulus --space square --level 2 --p 5").code == 2);
  auto bad = scratch() / "bad_family.json";
  std::ofstream(bad) << "{\"variant\": \"connect\", \"a\": ";
  CHECK(run("modulus --space square --level 2 --family " + bad.string()).code == 2);
  CHECK(run("modulus --space square --level 2 --family /nonexistent/family.json").code == 3);
}

TEST_CASE("config file precedence") {
  auto cfg = scratch() / "cfg.json";
  std::ofstream(cfg) << R"({"space": "carpet", "level": 1, "p": 3.0, "family": {"variant": "diam_at_least", "d0": 0.5}})";
  auto r = run("modulus --config " + cfg.string() + " --p 2");
  REQUIRE(r.code == 0);
  auto j = Json::parse(r.out);
  CHECK(j["config"]["p"] == 2.0);
  CHECK(j["config"]["space"] == "carpet");
  CHECK(j["config"]["level"] == 1);
  CHECK(j["config"]["family"]["variant"] == "diam_at_least");
}

TEST_CASE("worker count leaves output unchanged") {
  auto a = run("modulus --space carpet --level 2 --p 2 --tol 1e-5 --family d0=0.5 --workers 1");
  auto b = run("modulus --space carpet --level 2 --p 2 --tol 1e-5 --family d0=0.5 --workers 3");
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
}

TEST_CASE("series command writes CSV") {
  auto csv = scratch() / "series.csv";
  auto r = run("series --space carpet --p 2 --kmin 1 --kmax 3 --family d0=0.5 --csv " + csv.string());
  CHECK(r.code == 0);
  std::string text = slurp(csv);
  CHECK(std::count(text.begin(), text.end(), '\n') == 4);
  auto j = Json::parse(r.out);
  CHECK(j["result"].contains("sub_constant"));
}

TEST_CASE("qdim command") {
  auto r = run("qdim --space square --kmax 3 --plo 1.5 --phi 2.5 --tol 1e-5");
  CHECK(r.code == 0);
  auto j = Json::parse(r.out);
  double lo = j["result"]["bracket"][0], hi = j["result"]["bracket"][1];
  CHECK(lo <= 2.0);
  CHECK(hi >= 2.0);
}

TEST_CASE("clp command") {
  auto csv = scratch() / "clp.csv";
  auto r = run("clp --space square --p 2 --levels 2,3 --csv " + csv.string());
  CHECK(r.code == 0);
  auto j = Json::parse(r.out);
  CHECK(j["result"]["rows"].size() == 8);
}

TEST_CASE("check runs selected criteria deterministically") {
  auto a = run("check --suite acceptance --seed 7 --only 12,14");
  auto b = run("check --suite acceptance --seed 7 --only 12,14");
  CHECK(a.out == b.out);
  CHECK(a.out.find("12") != std::string::npos);
  CHECK(run("check --suite nightly").code == 2);
}
