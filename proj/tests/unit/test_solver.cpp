#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "kinetic_tails/entropy.hpp"
#include "kinetic_tails/solver.hpp"

using namespace kt;

TEST_CASE("projection restores conserved quantities") {
  const VelocityGrid g = build_grid(2, 24, 8.0);
  DatumSpec ds;
  const DistributionField f = make_datum(ds, g);
  const ConservedTargets t = conserved_of(f);
  DistributionField p = f;
  for (std::size_t i = 0; i < g.size(); ++i) p[i] *= 1.0 + 1e-4 * std::sin(0.37 * static_cast<double>(i));
  const ProjectionResult r = conserve_project(p, t);
  const ConservedTargets back = conserved_of(r.field);
  CHECK(back.mass == doctest::Approx(t.mass).epsilon(1e-13));
  CHECK(back.energy == doctest::Approx(t.energy).epsilon(1e-13));
  CHECK(std::abs(back.momentum[0] - t.momentum[0]) < 1e-13);
  CHECK(r.correction < 1e-3);
}

TEST_CASE("log-linear slope recovers an exponential rate") {
  std::vector<double> x, y;
  for (int i = 0; i < 10; ++i) {
    x.push_back(0.5 * i);
    y.push_back(3.0 * std::exp(-0.7 * 0.5 * i));
  }
  CHECK(log_linear_slope(x, y) == doctest::Approx(-0.7).epsilon(1e-12));
}

TEST_CASE("short run conserves and dissipates") {
  RunConfig rc;
  rc.grid.n = 16;
  rc.grid.L = 6.0;
  rc.grid.n_angles = 16;
  rc.grid.interp = {3, 1};
  rc.t_end = 0.3;
  rc.monitors.production_stride = 0;
  const SimulationResult r = run_simulation(rc);
  auto s = r.series.summary;
  CHECK(s["max_post_projection_drift"] <= 1e-12);
  CHECK(s["max_entropy_increase"] <= 1e-8);
  CHECK(relative_entropy(r.final_state).H < relative_entropy(r.initial).H);
  const std::string csv = to_csv(r.series);
  CHECK(csv.rfind("t,", 0) == 0);
}

TEST_CASE("dt above the stability bound is rejected") {
  RunConfig rc;
  rc.grid.n = 12;
  rc.dt = 100.0;
  CHECK_THROWS_AS(run_simulation(rc), std::invalid_argument);
}

TEST_CASE("BKW reference keeps its mass and energy") {
  const VelocityGrid g = build_grid(2, 48, 10.0);
  KernelSpec ks;
  ks.gamma = 0.0;
  const AngularKernel b = build_angular(ks, 2);
  for (double t : {0.0, 1.0, 5.0}) {
    const Moments m = moments(bkw_reference(t, g, b, 1.0, 0.6));
    CHECK(m.mass == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(m.energy == doctest::Approx(2.0).epsilon(1e-7));
  }
  CHECK(bkw_rate(b, 1.0) > 0.0);
}
