#include <cmath>
#include <stdexcept>
#include <filesystem>

#include "doctest.h"
#include "kinetic_tails/config.hpp"

using namespace kt;

TEST_CASE("TOML subset") {
  const auto j = parse_toml(R"(
a = 1            # comment
b = "x\ty"
c = [1.5, -2,
     3e2]
d = { p = 1, q = "s" }
e = inf
[t.u]
v = true
[[arr]]
w = 1
[[arr]]
w = 2
)");
  CHECK(j["a"].get<int>() == 1);
  CHECK(j["b"].get<std::string>() == "x\ty");
  CHECK(j["c"][2].get<double>() == 300.0);
  CHECK(j["d"]["q"].get<std::string>() == "s");
  CHECK(std::isinf(j["e"].get<double>()));
  CHECK(j["t"]["u"]["v"].get<bool>());
  CHECK(j["arr"].size() == 2);
  CHECK(j["arr"][1]["w"].get<int>() == 2);
}

TEST_CASE("TOML errors") {
  CHECK_THROWS_AS(parse_toml("a = 1\na = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_toml("a = \n"), ConfigError);
  CHECK_THROWS_AS(parse_toml("[x\n"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_toml("ok = 1\nb = \"open\n"), doctest::Contains("line 2"), ConfigError);
}

TEST_CASE("schema") {
  const BatteryInput in = config_from_text("seed = 9\n[grid]\nn = 20\n[datum]\nfamily = \"maxwellian\"\n");
  CHECK(in.seed == 9);
  CHECK(in.run.datum.seed == 9);
  CHECK(in.run.grid.n == 20);
  CHECK(in.run.grid.L == 8.0);
  CHECK(config_from_text("seed = 9\n[datum]\nseed = 4\n").run.datum.seed == 4);
  CHECK_THROWS_WITH_AS(config_from_text("[grid]\nbogus = 1\n"), doctest::Contains("grid.bogus"), ConfigError);
  CHECK_THROWS_AS(config_from_text("[grid]\nn = \"ten\"\n"), ConfigError);
  CHECK_THROWS_AS(config_from_text("[kernel]\ngamma = 3\n"), ConfigError);
  CHECK_THROWS_AS(config_from_text("[datum]\nfamily = \"nope\"\n"), ConfigError);
  CHECK_THROWS_AS(config_from_text("[spectrum]\nn = 80\n"), ConfigError);
  CHECK_THROWS_AS(config_from_text("[audit]\nsections = [\"bogus\"]\n"), ConfigError);
  // exponential weight overflowing the double range on the box
  CHECK_THROWS_AS(config_from_text("[monitors]\nnorms = [{ p = 1, r = 100, alpha = 2 }]\n"), ConfigError);
}

TEST_CASE("angular kernel strings") {
  KernelSpec k;
  parse_angular_spec("uniform:2", k);
  CHECK(k.kind == AngularKind::uniform);
  CHECK(k.params == std::vector<double>{2.0});
  parse_angular_spec("truncated:0.1,0.9", k);
  CHECK(k.kind == AngularKind::truncated_uniform);
  CHECK(k.params.size() == 2);
  CHECK_THROWS_AS(parse_angular_spec("wobbly", k), ConfigError);
}

TEST_CASE("shipped configs load") {
  int count = 0;
  for (const auto& e : std::filesystem::directory_iterator(KT_CONFIG_DIR)) {
    if (e.path().extension() != ".toml") continue;
    CAPTURE(e.path().string());
    CHECK_NOTHROW(load_config(e.path().string()));
    ++count;
  }
  CHECK(count >= 6);
}
