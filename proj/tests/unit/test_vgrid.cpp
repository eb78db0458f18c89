#include <cmath>
#include <stdexcept>
#include <cstdio>
#include <numbers>

#include "doctest.h"
#include "kinetic_tails/vgrid.hpp"

using namespace kt;

TEST_CASE("index and flat round trip") {
  for (int d : {2, 3}) {
    const VelocityGrid g = build_grid(d, 8, 2.0);
    CHECK(g.h == doctest::Approx(0.5));
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(g.flat(g.index(i)) == i);
  }
}

TEST_CASE("Maxwellian moments") {
  const VelocityGrid g = build_grid(2, 48, 8.0);
  const DistributionField M = maxwellian_field(g, 2.0, {0.3, -0.2, 0.0}, 0.8);
  const Moments m = moments(M);
  CHECK(m.mass == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(m.momentum[0] == doctest::Approx(0.6).epsilon(1e-10));
  CHECK(m.momentum[1] == doctest::Approx(-0.4).epsilon(1e-10));
  // int f |v|^2 = rho (d T + |mu|^2)
  CHECK(m.energy == doctest::Approx(2.0 * (2 * 0.8 + 0.13)).epsilon(1e-10));
}

TEST_CASE("sphere quadrature integrates polynomials") {
  for (int d : {2, 3}) {
    const SphereQuadrature s = build_sphere(d, 16);
    double area = 0.0, second = 0.0;
    for (std::size_t i = 0; i < s.weights.size(); ++i) {
      area += s.weights[i];
      second += s.weights[i] * s.polar[i] * s.polar[i];
    }
    const double full = d == 2 ? 2.0 * std::numbers::pi : 4.0 * std::numbers::pi;
    CHECK(area == doctest::Approx(full).epsilon(1e-12));
    CHECK(second == doctest::Approx(full / d).epsilon(1e-12));
  }
}

TEST_CASE("weighted norms") {
  const VelocityGrid g = build_grid(3, 24, 7.0);
  const DistributionField M = maxwellian_field(g, 1.0, {0, 0, 0}, 1.0);
  WeightSpec w;
  w.mu = 2.0;
  // int M <v>^2 = 1 + 3
  CHECK(weighted_norm(M, w) == doctest::Approx(4.0).epsilon(1e-8));
  w.p = INFINITY;
  w.mu = 0.0;
  CHECK(weighted_norm(M, w) <= std::pow(2.0 * std::numbers::pi, -1.5));
}

TEST_CASE("binary field round trip") {
  const VelocityGrid g = build_grid(2, 8, 3.0);
  const DistributionField M = maxwellian_field(g, 1.0, {0.1, 0, 0}, 1.3);
  const std::string path = "vgrid_roundtrip.bin";
  write_field_binary(M, path);
  const DistributionField back = read_field_binary(path);
  std::remove(path.c_str());
  CHECK(back.grid == g);
  CHECK(back.values == M.values);
}

TEST_CASE("entropy functionals of a Gaussian") {
  const VelocityGrid g = build_grid(2, 48, 9.0);
  const DistributionField M = maxwellian_field(g, 1.0, {0, 0, 0}, 1.0);
  // int M log M = -log(2 pi) - 1 in d = 2
  CHECK(entropy_functionals(M, 0.0).entropy == doctest::Approx(-std::log(2.0 * std::numbers::pi) - 1.0).epsilon(1e-9));
}
