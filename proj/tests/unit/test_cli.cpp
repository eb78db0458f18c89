#include <sys/wait.h>
#include <stdexcept>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(KT_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("kt_cli_" + name);
  fs::remove_all(p);
  return p;
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

}  // namespace

TEST_CASE("help and argument errors") {
  CHECK(run("--help") == 0);
  CHECK(run("simulate --bogus") == 2);
  CHECK(run("") == 2);
  CHECK(run("simulate --config /nonexistent.toml") == 2);
}

TEST_CASE("schema errors exit 2") {
  const fs::path dir = scratch("schema");
  fs::create_directories(dir);
  write(dir / "bad.toml", "[grid]\nbogus = 1\n");
  CHECK(run("simulate --config " + (dir / "bad.toml").string()) == 2);
  write(dir / "bad2.toml", "[kernel\n");
  CHECK(run("audit --config " + (dir / "bad2.toml").string()) == 2);
}

TEST_CASE("simulate writes diagnostics") {
  const fs::path dir = scratch("simulate");
  fs::create_directories(dir);
  write(dir / "c.toml",
        "[grid]\nn = 12\nL = 5.0\nn_angles = 16\ninterp_order = 1\nupsample = 1\n[time]\nt_end = 0.2\n"
        "[monitors]\nproduction_stride = 0\n");
  CHECK(run("simulate --config " + (dir / "c.toml").string() + " --out " + (dir / "out").string()) == 0);
  const std::string diag = slurp(dir / "out" / "diagnostics.csv");
  CHECK(diag.rfind("t,mass,", 0) == 0);
  CHECK(slurp(dir / "out" / "summary.csv").find("max_post_projection_drift") != std::string::npos);
}

TEST_CASE("constants are reproducible") {
  const fs::path dir = scratch("constants");
  CHECK(run("constants --out " + (dir / "a").string()) == 0);
  CHECK(run("constants --out " + (dir / "b").string()) == 0);
  const std::string a = slurp(dir / "a" / "constants.csv");
  CHECK(a.rfind("name,value", 0) == 0);
  CHECK(a == slurp(dir / "b" / "constants.csv"));
}

TEST_CASE("audit of a single section") {
  const fs::path dir = scratch("audit");
  fs::create_directories(dir);
  write(dir / "c.toml",
        "[kernel]\ngamma = 1.0\n[grid]\nn = 16\nL = 6.0\nn_angles = 16\n[datum]\nfamily = \"maxwellian\"\n"
        "[audit]\nsections = [\"collision\"]\n");
  CHECK(run("audit --config " + (dir / "c.toml").string() + " --out " + (dir / "out").string()) == 0);
  CHECK(slurp(dir / "out" / "audit.csv").find("audit_name,lhs,rhs,margin,pass") != std::string::npos);
}
