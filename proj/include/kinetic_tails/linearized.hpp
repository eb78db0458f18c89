#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kinetic_tails/collision.hpp"
#include "kinetic_tails/entropy.hpp"
#include "kinetic_tails/kernels.hpp"
#include "kinetic_tails/report.hpp"
#include "kinetic_tails/solver.hpp"
#include "kinetic_tails/vgrid.hpp"

namespace kt {

/// Largest n^d accepted by the dense assembly.
constexpr std::size_t kDenseLimit = 4096;

struct SpectralData {
  Eigen::VectorXd eigenvalues;  // ascending, compressed operator
  double gap = 0.0;             // -max of the non-kernel eigenvalues
  int near_zero = 0;            // |lambda| < kernel_tol * gap
  double kernel_tol = 1e-6;
  double kernel_angle = 0.0;    // sin of the largest principal angle, raw symmetrized operator
  double raw_asymmetry = 0.0;   // ||T - T^t||_F / ||T||_F before symmetrization
  double self_adjoint_residual = 0.0;  // random-pair check on the operator actually used
  double raw_kernel_residual = 0.0;    // max_k ||T q_k|| / ||T||_2 over the orthonormal invariants
  Eigen::VectorXd raw_eigenvalues;     // symmetrized, not compressed
  Eigen::MatrixXd compressed;          // symmetric operator in M^{-1/2} coordinates
};

struct LinearizedSystem {
  VelocityGrid grid;
  MaxwellianParams maxwellian;
  CollisionKernel kernel;
  Interpolation interp;
  SphereQuadrature sphere;
  DistributionField M;
  Eigen::MatrixXd L;        // acts on grid values
  Eigen::VectorXd weights;  // M^{-1} h^d
  Eigen::MatrixXd basis;    // d + 2 columns, orthonormal for the weighted product
  double equilibrium_residual = 0.0;  // ||L M||_1 / ||Q^-(M, M)||_1
  double momentum_residual = 0.0;     // ||L v_1 M||_1 / ||Q^-(M, v_1 M)||_1
  SpectralData spectrum;
  bool has_spectrum = false;

  std::size_t size() const { return grid.size(); }
};

/// Dense matrix of h -> Q(M, h) + Q(h, M) for a given potential and angular kernel.
Eigen::MatrixXd linearized_matrix(const DistributionField& M, const Potential& phi, const AngularKernel& b,
                                  const SphereQuadrature& sphere, const Interpolation& interp, bool with_frequency);

LinearizedSystem assemble_linearized(const MaxwellianParams& m, const CollisionKernel& kernel,
                                     const VelocityGrid& grid, const SphereQuadrature& sphere,
                                     const Interpolation& interp = {3, 1});

/// Q(M, h) + Q(h, M) through the collision module (no matrix).
DistributionField apply_linearized_direct(const DistributionField& M, const DistributionField& h,
                                          const CollisionKernel& kernel, const SphereQuadrature& sphere,
                                          const Interpolation& interp);

double weighted_inner(const LinearizedSystem& sys, const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Weighted-orthogonal projection onto span{M, v_i M, |v|^2 M}.
Eigen::VectorXd kernel_projection(const Eigen::VectorXd& h, const LinearizedSystem& sys);
DistributionField kernel_projection(const DistributionField& h, const LinearizedSystem& sys);

/// Symmetrize in M^{-1/2} coordinates, compress off the collision invariants, eigensolve.
/// Also stores the result in sys.spectrum.
SpectralData spectrum_and_gap(LinearizedSystem& sys, double kernel_tol = 1e-6, std::uint64_t seed = 7);

struct ABSplit {
  double delta = 0.05;
  double eps = 0.1;
  double k = 2.0;
  Eigen::MatrixXd A, B;
  double c_o = 0.0;          // grid min of |b| (M * |.|^gamma) / <v>^gamma
  double c_o_minus = 0.0;
  double perturbation = 0.0;  // worst relative column excess of B's off-multiplicative part
  int search_steps = 0;
};

/// A = L^o with (Phi_1, b_1), B = L - A. Halves (delta, eps) until B is dissipative in L^1_k.
ABSplit split_AB(const LinearizedSystem& sys, double delta = 0.05, double eps = 0.1, double k = 2.0,
                 int max_halvings = 6);

struct DecayAuditOptions {
  int samples = 50;
  double T = 2.0;
  int decay_samples = 4;
  std::uint64_t seed = 11;
};

/// Rows: sign audit on sampled h, integrated semigroup bound, A boundedness ratio.
AuditReport dissipativity_and_decay_audit(const ABSplit& split, const LinearizedSystem& sys,
                                          const DecayAuditOptions& opt = {});

/// Random smooth signed perturbations used by the audits.
std::vector<Eigen::VectorXd> sample_perturbations(const VelocityGrid& grid, int count, std::uint64_t seed);

struct RateFit {
  bool fitted = false;
  std::string status;
  double lambda_hat = 0.0;
  double t_begin = 0.0, t_end = 0.0;
  double decades = 0.0;
  std::vector<double> times;      // recorded output times
  std::vector<double> distance;   // ||f - M||_{L^1_k}
  std::vector<double> increment;  // ||f(t_{m+1}) - f(t_m)||_{L^1_k} / dt, at midpoints
  AuditRow comparison;
};

/// ||f - M||_{L^1_k} along the recorded states (M: the run's equilibrium).
std::vector<double> distance_series(const SimulationResult& run, double k);

/// Log-linear fit of the increment norm on its tail: the decaying window runs
/// from the first output below start_frac of the initial increment until it
/// falls under floor_rel of it; the fit uses the last tail_fraction of that
/// window in time. Needs recorded states.
RateFit convergence_rate_fit(const SimulationResult& run, double lambda_o, double k = 2.0, double factor = 0.8,
                             double tail_fraction = 0.5, double start_frac = 0.1, double floor_rel = 1e-8);

void write_matrix_binary(const Eigen::MatrixXd& A, const VelocityGrid& grid, const std::string& path);

}  // namespace kt
