#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "kinetic_tails/fracdiff.hpp"

using namespace kt;

TEST_CASE("Bessel potential of order zero is the identity") {
  const VelocityGrid g = build_grid(2, 32, 8.0);
  const DistributionField M = maxwellian_field(g, 1.0, {0, 0, 0}, 1.0);
  const BesselResult r = bessel_apply(M, 0.0);
  for (std::size_t i = 0; i < g.size(); i += 13) CHECK(r.field[i] == doctest::Approx(M[i]).epsilon(1e-12));
  CHECK(!r.boundary_warning);
}

TEST_CASE("Bessel potential of order two is 1 - Laplacian") {
  const VelocityGrid g = build_grid(2, 48, 10.0);
  const DistributionField M = maxwellian_field(g, 1.0, {0, 0, 0}, 1.0);
  const BesselResult r = bessel_apply(M, 2.0);
  for (std::size_t i = 0; i < g.size(); i += 31) {
    const Vec v = g.point(i);
    const double v2 = v[0] * v[0] + v[1] * v[1];
    CHECK(std::abs(r.field[i] - M[i] * (1.0 + 2.0 - v2)) < 1e-10);
  }
}

TEST_CASE("split power integral") {
  for (double a : {0.3, 0.7, 0.95})
    for (auto [A, B] : {std::pair{0.4, 1.0}, std::pair{0.0, 0.5}, std::pair{0.1, 2.0}})
      CHECK(split_power_quadrature(A, B, a) == doctest::Approx(split_power_integral(A, B, a)).epsilon(1e-9));
  // int_0^1 |t - 1/2|^{-1/2} dt
  CHECK(split_power_integral(0.5, 1.0, 0.5) == doctest::Approx(2.0 * std::sqrt(2.0)));
}

TEST_CASE("Bessel kernel is positive and decreasing") {
  double prev = INFINITY;
  for (double r : {0.1, 0.5, 1.0, 2.0, 4.0}) {
    const double k = bessel_kernel(r, 0.5, 2);
    CHECK(k > 0.0);
    CHECK(k < prev);
    CHECK(bessel_kernel_derivative(r, 0.5, 2) < 0.0);
    prev = k;
  }
  CHECK(std::isinf(bessel_gradient_mass(1.0, 2, 0.0, 1.0)));
  CHECK(std::isfinite(bessel_gradient_mass(0.5, 2, 0.1, 1.0)));
}

TEST_CASE("commutator with a constant potential vanishes") {
  const VelocityGrid g = build_grid(2, 24, 8.0);
  const DistributionField M = maxwellian_field(g, 1.0, {0.5, 0, 0}, 1.0);
  WeightSpec w;
  w.p = 2.0;
  w.r = 0.1;
  const LossCommutatorBound b = loss_commutator_bound(M, M, 0.0, 1.0, 0.5, w);
  CHECK(b.lhs <= 1e-12 * b.norms);
}
