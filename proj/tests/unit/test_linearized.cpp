#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "kinetic_tails/linearized.hpp"
#include "kinetic_tails/solver.hpp"

using namespace kt;

TEST_CASE("small linearized operator") {
  KernelSpec ks;
  const CollisionKernel K = build_kernel(ks, 2);
  const VelocityGrid g = build_grid(2, 14, 5.0);
  LinearizedSystem sys = assemble_linearized(MaxwellianParams{}, K, g, build_sphere(2, 16), {3, 1});
  CHECK(sys.L.rows() == static_cast<Eigen::Index>(g.size()));
  CHECK(sys.equilibrium_residual < 5e-2);

  // projection is idempotent and fixes the invariants
  const std::vector<Eigen::VectorXd> hs = sample_perturbations(g, 2, 5);
  const Eigen::VectorXd p = kernel_projection(hs[0], sys);
  CHECK((kernel_projection(p, sys) - p).norm() <= 1e-10 * p.norm());
  const Eigen::VectorXd m = sys.basis.col(0);
  CHECK((kernel_projection(m, sys) - m).norm() <= 1e-10 * m.norm());

  const SpectralData sd = spectrum_and_gap(sys);
  CHECK(sd.gap > 0.0);
  CHECK(sd.near_zero == 4);
  CHECK(sd.self_adjoint_residual < 1e-8);
  CHECK(sd.eigenvalues.maxCoeff() <= 1e-6 * sd.gap);

  // matrix agrees with the matrix-free operator
  DistributionField h(g);
  for (std::size_t i = 0; i < g.size(); ++i) h[i] = hs[1][static_cast<Eigen::Index>(i)];
  const DistributionField direct = apply_linearized_direct(sys.M, h, K, sys.sphere, sys.interp);
  Eigen::VectorXd Lh = sys.L * hs[1];
  double err = 0.0, ref = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    err = std::max(err, std::abs(Lh[static_cast<Eigen::Index>(i)] - direct[i]));
    ref = std::max(ref, std::abs(direct[i]));
  }
  CHECK(err <= 1e-10 * ref);
}
