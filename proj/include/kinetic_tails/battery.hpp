#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kinetic_tails/linearized.hpp"
#include "kinetic_tails/report.hpp"
#include "kinetic_tails/solver.hpp"

namespace kt {

struct AuditConfig {
  std::vector<std::string> sections{"collision", "fracdiff", "entropy", "linearized"};
  /// datum families evaluated on the run grid (parameters from [datum], family replaced)
  std::vector<std::string> fixtures{"maxwellian"};
  double split_eps = 0.1;       // angular split of the gain L^inf lines
  double weight_mu = 0.0;       // moment order of the Young rows
  int elementary_samples = 100000;
  double commutator_s = 0.5;
  double commutator_r = 0.1;
  double commutator_alpha = 1.0;
  double dissipation_eps = 0.5;
  double dissipation_q = 2.0;
};

struct SpectrumConfig {
  int n = 28;
  double L = 6.0;
  int interp_order = 7;
  int n_angles = 32;
  int n_coarse = 24;  // second resolution for the gap stability row (0 disables)
  double kernel_tol = 1e-6;
  double angle_tol = 1e-3;
  double self_adjoint_tol = 1e-8;
  double gap_stability = 0.1;
  double delta = 0.05;
  double eps = 0.1;
  std::vector<double> k{2.0, 4.0};
  int samples = 50;
  int decay_samples = 4;
  double T = 2.0;
};

struct BatteryInput {
  RunConfig run;
  AuditConfig audit;
  SpectrumConfig spectrum;
  std::uint64_t seed = 1;
};

AuditReport collision_audits(const BatteryInput& in);
AuditReport fracdiff_audits(const BatteryInput& in);
AuditReport entropy_audits(const BatteryInput& in);

struct SpectrumOutcome {
  LinearizedSystem system;
  double coarse_gap = 0.0;
  AuditReport report;
};

/// Linearized pipeline: assembly, spectrum, optional coarse gap, A/B split audits.
SpectrumOutcome spectrum_pipeline(const BatteryInput& in);

/// Sections of in.audit in order; one report with all rows.
AuditReport run_battery(const BatteryInput& in);

/// name,value rows: kernel mass, Young constants, lower-bound certificate, dissipation constants.
std::string constants_csv(const BatteryInput& in);

}  // namespace kt
