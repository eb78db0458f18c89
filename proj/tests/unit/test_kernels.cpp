#include <cmath>
#include <stdexcept>
#include <numbers>

#include "doctest.h"
#include "kinetic_tails/kernels.hpp"

using namespace kt;
constexpr double pi = std::numbers::pi;

TEST_CASE("uniform profile mass in two and three dimensions") {
  // |S^{d-2}| int_0^1 (1 - s^2)^{(d-3)/2} ds
  CHECK(make_angular_kernel(AngularKind::uniform, {1.0}, 3, false).total_mass == doctest::Approx(2.0 * pi).epsilon(1e-12));
  CHECK(make_angular_kernel(AngularKind::uniform, {1.0}, 2, false).total_mass == doctest::Approx(pi).epsilon(1e-8));
  const AngularKernel b = make_angular_kernel(AngularKind::uniform, {3.0}, 3, true);
  CHECK(b.total_mass == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(surface_mass(b) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("truncated profile keeps the window") {
  const AngularKernel b = make_angular_kernel(AngularKind::truncated_uniform, {0.2, 0.7}, 3, false);
  CHECK(b.total_mass == doctest::Approx(2.0 * pi * 0.5).epsilon(1e-12));
  CHECK(b(0.1) == 0.0);
  CHECK(b(0.5) == 1.0);
  CHECK_THROWS_AS(make_angular_kernel(AngularKind::truncated_uniform, {0.7, 0.2}, 3, false), std::invalid_argument);
}

TEST_CASE("table profile is piecewise linear") {
  const AngularKernel b = make_angular_kernel(AngularKind::table, {0.0, 1.0, 1.0, 3.0}, 3, false);
  CHECK(b(0.5) == doctest::Approx(2.0));
  CHECK(b.total_mass == doctest::Approx(2.0 * pi * 2.0).epsilon(1e-12));
  CHECK_THROWS(make_angular_kernel(AngularKind::table, {0.5, 1.0, 0.2, 3.0}, 3, false));
}

TEST_CASE("epsilon split partitions the mass") {
  const AngularKernel b = make_angular_kernel(AngularKind::uniform, {1.0}, 3, true);
  const EpsilonSplit s = split_epsilon(b, 0.3);
  CHECK(s.b1.total_mass + s.b2.total_mass == doctest::Approx(1.0).epsilon(1e-10));
  // b2 lives on y > sqrt(1 - eps^2)
  CHECK(s.b2.total_mass == doctest::Approx(1.0 - std::sqrt(1.0 - 0.09)).epsilon(1e-8));
}

TEST_CASE("Young constant") {
  const AngularKernel b = make_angular_kernel(AngularKind::uniform, {1.0}, 2, true);
  // p = q = r = 1: 2^{k+gamma+3} times the total mass
  CHECK(young_constant(b, 1.0, 1.0, 1.0, 0.0, 1.0) == doctest::Approx(16.0).epsilon(1e-10));
  CHECK(young_constant(b, 1.0, 1.0, 1.0, 1.0, 0.0) == doctest::Approx(16.0).epsilon(1e-10));
  CHECK_THROWS_AS(young_constant(b, 2.0, 2.0, 2.0, 0.0, 1.0), std::invalid_argument);
  const double c = young_constant(b, 2.0, 1.0, 2.0, 0.0, 1.0);
  CHECK(std::isfinite(c));
  CHECK(young_constant(with_nodes(b, 512), 2.0, 1.0, 2.0, 0.0, 1.0) == doctest::Approx(c).epsilon(1e-10));
}

TEST_CASE("smooth ramp and nice/remainder split") {
  CHECK(smooth_ramp(-1.0) == 0.0);
  CHECK(smooth_ramp(2.0) == 1.0);
  CHECK(smooth_ramp(0.5) == doctest::Approx(0.5));
  CollisionKernel K = make_collision_kernel(1.0, make_angular_kernel(AngularKind::uniform, {1.0}, 3, true));
  const NiceRemainderSplit s = split_nice_remainder(K, 0.1, 0.1);
  for (double x : {0.01, 0.3, 1.0, 5.0})
    CHECK(s.phi_nice(x) + s.phi_rem(x) == doctest::Approx(std::pow(x, 1.0)).epsilon(1e-12));
  CHECK(s.b_nice.total_mass + s.b_rem.total_mass == doctest::Approx(1.0).epsilon(1e-8));
}
