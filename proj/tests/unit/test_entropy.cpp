#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "kinetic_tails/entropy.hpp"
#include "kinetic_tails/solver.hpp"

using namespace kt;

TEST_CASE("Lambert W") {
  CHECK(lambert_w(0.0) == 0.0);
  CHECK(lambert_w(std::exp(1.0)) == doctest::Approx(1.0).epsilon(1e-14));
  for (double x : {1e-8, 0.3, 5.0, 1e6}) {
    const double w = lambert_w(x);
    CHECK(w * std::exp(w) == doctest::Approx(x).epsilon(1e-13));
  }
  CHECK_THROWS(lambert_w(-1.0));
}

TEST_CASE("Maxwellian fit and relative entropy") {
  const VelocityGrid g = build_grid(2, 32, 8.0);
  const DistributionField M = maxwellian_field(g, 1.2, {0.2, 0, 0}, 0.9);
  const MaxwellianFit fit = maxwellian_fit(M);
  CHECK(fit.params.rho == doctest::Approx(1.2).epsilon(1e-10));
  CHECK(fit.params.T == doctest::Approx(0.9).epsilon(1e-10));
  CHECK(std::abs(relative_entropy(M).H) < 1e-12);
  DatumSpec ds;
  const DistributionField f = make_datum(ds, g);
  const RelativeEntropy re = relative_entropy(f);
  CHECK(re.H > 0.0);
  CHECK(re.ckp.pass);
}

TEST_CASE("entropy production is nonnegative and small at equilibrium") {
  const VelocityGrid g = build_grid(2, 24, 8.0);
  KernelSpec ks;
  const CollisionKernel K = build_kernel(ks, 2);
  const SphereQuadrature sp = build_sphere(2, 16);
  DatumSpec ds;
  const double D = entropy_production(make_datum(ds, g), K, sp, {3, 4});
  const double D0 = entropy_production(maxwellian_field(g, 1.0, {0, 0, 0}, 1.0), K, sp, {3, 4});
  CHECK(D > 0.0);
  CHECK(std::abs(D0) < 1e-3 * D);
}

TEST_CASE("dissipation exponent") {
  CHECK(dissipation_exponent(0.5, 1.0, INFINITY, 2) == doctest::Approx(1.5 * 1.5));
  CHECK(dissipation_exponent(0.5, 1.0, 2.0, 2) == doctest::Approx(3.0));
  CHECK(dissipation_exponent(0.2, 0.0, 3.0, 3) == doctest::Approx(1.2));
}

TEST_CASE("Gaussian floor lies below the state") {
  const VelocityGrid g = build_grid(2, 32, 8.0);
  DatumSpec ds;
  const DistributionField f = make_datum(ds, g);
  const GaussianFloor fl = gaussian_floor_fit(f);
  CHECK(fl.K_o > 0.0);
  CHECK(fl.A_o > 0.0);
  CHECK(fl.margin >= 0.0);
}
