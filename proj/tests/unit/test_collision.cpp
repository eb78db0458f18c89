#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "kinetic_tails/collision.hpp"
#include "kinetic_tails/solver.hpp"

using namespace kt;

namespace {
double l1(const DistributionField& f) {
  return grid_integral(f.grid, [&](std::size_t i) { return std::abs(f[i]); });
}
}  // namespace

TEST_CASE("collision frame conserves momentum and energy") {
  for (int d : {2, 3}) {
    const Vec v{0.3, -1.2, 0.5}, w{-0.7, 0.4, 2.0}, sigma{0.6, 0.8, 0.0};
    const CollisionFrame c = make_frame(v, w, sigma, d);
    double e0 = 0, e1 = 0;
    for (int k = 0; k < d; ++k) {
      CHECK(c.v_prime[k] + c.v_star_prime[k] == doctest::Approx(v[k] + w[k]));
      e0 += v[k] * v[k] + w[k] * w[k];
      e1 += c.v_prime[k] * c.v_prime[k] + c.v_star_prime[k] * c.v_star_prime[k];
    }
    CHECK(e1 == doctest::Approx(e0));
  }
}

TEST_CASE("Maxwell loss term is the mass times f") {
  const VelocityGrid g = build_grid(2, 16, 6.0);
  const DistributionField M = maxwellian_field(g, 1.5, {0, 0, 0}, 1.0);
  KernelSpec ks;
  ks.gamma = 0.0;
  const CollisionKernel K = build_kernel(ks, 2);
  const DistributionField L = q_minus(M, M, K);
  const double mass = moments(M).mass;
  for (std::size_t i = 0; i < g.size(); i += 17) CHECK(L[i] == doctest::Approx(mass * M[i]).epsilon(1e-12));
}

TEST_CASE("Q(M, M) vanishes to discretization accuracy and Q conserves mass") {
  const VelocityGrid g = build_grid(2, 24, 8.0);
  KernelSpec ks;
  const CollisionKernel K = build_kernel(ks, 2);
  const SphereQuadrature sp = build_sphere(2, 32);
  const DistributionField M = maxwellian_field(g, 1.0, {0, 0, 0}, 1.0);
  CHECK(l1(collision(M, K, sp, {3, 4})) < 1e-3 * l1(q_minus(M, M, K)));
  DatumSpec ds;
  const DistributionField f = make_datum(ds, g);
  const DistributionField Q = collision(f, K, sp, {3, 4});
  const double net = grid_integral(g, [&](std::size_t i) { return Q[i]; });
  CHECK(std::abs(net) < 1e-3 * l1(Q));
}

TEST_CASE("lower bound certificate is below the measured ratio") {
  const VelocityGrid g = build_grid(2, 32, 8.0);
  DatumSpec ds;
  const DistributionField f = make_datum(ds, g);
  for (double gamma : {0.5, 1.0}) {
    const LowerBoundCertificate c = lower_bound_certificate(f, gamma);
    CHECK(c.c_o > 0.0);
    CHECK(c.c_o <= lower_bound_ratio(f, gamma));
    CHECK(audit_lower_bound(f, gamma).pass);
  }
  CHECK(power_difference_constant(0.0) == doctest::Approx(1.0));
}

TEST_CASE("gain audit rows pass on a smooth state") {
  const VelocityGrid g = build_grid(2, 16, 6.0);
  KernelSpec ks;
  const CollisionKernel K = build_kernel(ks, 2);
  const SphereQuadrature sp = build_sphere(2, 16);
  DatumSpec ds;
  ds.family = "random_smooth";
  const DistributionField f = make_datum(ds, g);
  const AuditReport r = audit_gain_bounds(f, K, split_epsilon(K.angular, 0.2), WeightSpec{}, sp);
  CHECK(r.rows.size() > 0);
  CHECK(r.all_pass());
}
