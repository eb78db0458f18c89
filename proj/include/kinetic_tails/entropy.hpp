#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "kinetic_tails/collision.hpp"
#include "kinetic_tails/kernels.hpp"
#include "kinetic_tails/report.hpp"
#include "kinetic_tails/vgrid.hpp"

namespace kt {

struct MaxwellianParams {
  double rho = 1.0;
  Vec mu{0.0, 0.0, 0.0};
  double T = 1.0;
};

struct MaxwellianFit {
  MaxwellianParams params;
  DistributionField field;
};

/// Equilibrium with the mass, momentum and temperature of f.
MaxwellianFit maxwellian_fit(const DistributionField& f);

struct RelativeEntropy {
  double H = 0.0;
  double l1_distance = 0.0;
  AuditRow ckp;
};

/// H(f | M) against a given equilibrium, with the Csiszar-Kullback-Pinsker check
/// ||f - M||_1 <= sqrt(2 rho H).
RelativeEntropy relative_entropy(const DistributionField& f, const DistributionField& M, double tol = 1e-10);
RelativeEntropy relative_entropy(const DistributionField& f, double tol = 1e-10);

/// D(f) = (1/4) int int int (f'f'_* - f f_*) log(f'f'_* / (f f_*)) B.
double entropy_production(const DistributionField& f, const CollisionKernel& kernel, const SphereQuadrature& sphere,
                          const Interpolation& interp = {});

/// Principal branch of the inverse of w -> w e^w on [0, inf).
double lambert_w(double x);

struct GaussianFloor {
  double K_o = 0.0;
  double A_o = 0.0;
  double radius = 0.0;  // fitting region |v - mu| <= radius
  double margin = 0.0;  // min over the region of f - K_o exp(-A_o |v - mu|^2)
};

/// Lower envelope fit f >= K_o exp(-A_o |v - mu|^2) on the central part of the support.
GaussianFloor gaussian_floor_fit(const DistributionField& f);

struct DissipationConfig {
  double K_B = 0.0;
  double beta = 0.0;
  double q_o = 2.0;
  double K_o = 0.0;
  double A_o = 0.0;
  double epsilon = 0.5;
  double p = INFINITY;
  bool llogl = false;
  /// NaN: not available.
  double K_eps = NAN;
  /// Radius of the lower kernel split used by the split and small-velocity rows; NaN selects 1.
  double R = NAN;
};

/// inf over the sphere of the symmetrized angular profile (b(y) + b(-y)) / 2.
double symmetric_angular_floor(const AngularKernel& b);

/// D restricted to the lower kernel K_B R^gamma <u>^{-beta} with R = 1.
double lower_kernel_dissipation(const DistributionField& f, const DissipationConfig& cfg, double gamma,
                                const SphereQuadrature& sphere, const Interpolation& interp = {});

/// min over states of D_1(R=1) / H^{1+eps}.
double calibrate_k_eps(const std::vector<DistributionField>& states, const DissipationConfig& cfg, double gamma,
                       const SphereQuadrature& sphere, const Interpolation& interp = {});

/// Exponent (1 + eps)(1 + gamma p' / d) of the L^p branch.
double dissipation_exponent(double epsilon, double gamma, double p, int d);

AuditReport dissipation_audit(const DistributionField& f, const DissipationConfig& cfg, const CollisionKernel& kernel,
                              const SphereQuadrature& sphere, const Interpolation& interp = {});

}  // namespace kt
