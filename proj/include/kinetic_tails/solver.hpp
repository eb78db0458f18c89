#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "kinetic_tails/collision.hpp"
#include "kinetic_tails/entropy.hpp"
#include "kinetic_tails/kernels.hpp"
#include "kinetic_tails/vgrid.hpp"

namespace kt {

/// Thrown when an update produces NaN/Inf or the time step is unstable.
struct NumericalAbort : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct KernelSpec {
  double gamma = 1.0;
  AngularKind kind = AngularKind::uniform;
  std::vector<double> params{1.0};
  std::string table_path;
  bool normalize = true;
  int nodes = 256;
};

AngularKernel build_angular(const KernelSpec& k, int d);
CollisionKernel build_kernel(const KernelSpec& k, int d);

struct GridSpec {
  int d = 2;
  int n = 32;
  double L = 8.0;
  int n_angles = 32;
  Interpolation interp{3, 4};
};

/// Named initial-datum families.
struct DatumSpec {
  std::string family = "two_bump";  // maxwellian | two_bump | compact_bump | random_smooth | perturbed_maxwellian | bkw
  double rho = 1.0;
  double T = 1.0;
  double separation = 1.5;  // two_bump: centres at +-separation e_1
  double bump_T = 0.5;      // two_bump: temperature of each bump
  double radius = 3.0;      // compact_bump: support radius
  double amplitude = 1e-3;  // perturbed_maxwellian / random_smooth
  double K0 = 0.6;          // bkw: initial similarity parameter
  std::uint64_t seed = 1;
};

DistributionField make_datum(const DatumSpec& spec, const VelocityGrid& grid, const KernelSpec& kernel = {});

struct MonitorSpec {
  std::vector<WeightSpec> norms;
  /// exponential tail ladder r_j = tail_r0 / 2^j on ||f e^{r <v>^tail_alpha}||_p
  double tail_r0 = 0.0;
  int tail_levels = 4;
  double tail_alpha = 1.0;
  double tail_p = 1.0;
  /// creation ladder a_j = creation_a0 / 2^j on ||f e^{a min(1,t) <v>^gamma}||_p
  double creation_a0 = 0.0;
  int creation_levels = 4;
  double creation_p = 1.0;
  bool entropy = true;
  double entropic_s = NAN;
  bool lower_bound = false;
  bool sobolev = false;
  double sobolev_k = 1.0;
  double sobolev_r = 0.1;
  double sobolev_alpha = 1.0;
  /// entropy production every production_stride-th output row (0 disables)
  int production_stride = 10;
};

struct Tolerances {
  double equilibrium = 1e-3;
  double entropy_increase = 1e-8;
  double projection = 1e-12;
};

struct RunConfig {
  KernelSpec kernel;
  GridSpec grid;
  DatumSpec datum;
  double dt = 0.0;  // 0 selects the stability bound
  double t_end = 1.0;
  int stride = 1;           // output every stride steps
  int snapshot_stride = 0;  // 0: no snapshots
  MonitorSpec monitors;
  Tolerances tol;
};

constexpr double kCflSafety = 0.5;
/// Entropy-slope rows are compared with D only when D exceeds this multiple of D(equilibrium):
/// the equilibrium defect enters dH/dt linearly, so its relative effect is about sqrt(floor / D).
constexpr double kResolvedProduction = 1e4;

struct ConservedTargets {
  double mass = 0.0;
  Vec momentum{0.0, 0.0, 0.0};
  double energy = 0.0;
};

ConservedTargets conserved_of(const DistributionField& f);

struct ProjectionResult {
  DistributionField field;
  double correction = 0.0;  // ||f_out - f_in||_1 / mass
  int passes = 0;
};

/// Smallest correction of the form f * (l0 + l.v + l2 |v|^2) restoring the targets.
ProjectionResult conserve_project(const DistributionField& f, const ConservedTargets& targets, double tol = 1e-14);

struct StepResult {
  DistributionField field;
  double clamped_mass = 0.0;
};

/// One SSP-RK2 (Heun) step of f' = Q(f, f), negative values clamped to 0.
StepResult step(const DistributionField& f, double dt, const CollisionKernel& kernel, const SphereQuadrature& sphere,
                const Interpolation& interp = {});

/// cfl_safety / sup_v collision frequency
double stable_dt(const DistributionField& f, const CollisionKernel& kernel);

struct StepLog {
  double t = 0.0;
  double drift_mass = 0.0;      // relative, before projection
  double drift_momentum = 0.0;  // |dP| / (mass * sqrt(energy / mass))
  double drift_energy = 0.0;    // relative
  double post_drift = 0.0;      // max relative drift after projection
  double correction = 0.0;
  double clamped_mass = 0.0;
  double entropy_change = 0.0;  // H(t + dt) - H(t)
};

struct DiagnosticsSeries {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<StepLog> steps;
  std::map<std::string, double> summary;

  std::size_t column(const std::string& name) const;
  std::vector<double> series(const std::string& name) const;
};

std::string to_csv(const DiagnosticsSeries& s);
std::string summary_csv(const DiagnosticsSeries& s);

struct SimulationResult {
  DiagnosticsSeries series;
  DistributionField initial;
  DistributionField final_state;
  DistributionField equilibrium;
  std::vector<DistributionField> recorded;  // states at output rows
  double dt = 0.0;
};

/// Integrate to t_end. out_dir (optional) receives snapshots and an abort dump.
SimulationResult run_simulation(const RunConfig& cfg, const std::string& out_dir = "", bool keep_states = false);

/// Rate of the isotropic similarity solution for Maxwell molecules: (rho/4) int b(y)(1 - y^2) dsigma.
double bkw_rate(const AngularKernel& b, double rho);

/// Isotropic similarity solution with unit temperature; requires K0 >= d / (d + 2).
DistributionField bkw_reference(double t, const VelocityGrid& grid, const AngularKernel& b, double rho, double K0);

/// Least-squares slope of log(y) against x over the given window.
double log_linear_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace kt
