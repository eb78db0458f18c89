#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "kinetic_tails/kernels.hpp"
#include "kinetic_tails/report.hpp"
#include "kinetic_tails/vgrid.hpp"

namespace kt {

/// Pre/post collisional velocities for one (v, v_*, sigma).
struct CollisionFrame {
  Vec v{}, v_star{}, u{}, u_hat{}, sigma{}, u_plus{}, u_minus{}, v_prime{}, v_star_prime{};
};

CollisionFrame make_frame(const Vec& v, const Vec& v_star, const Vec& sigma, int d);

/// Rotate a sphere node given in the pole frame so that the pole maps to u_hat.
Vec rotate_to(const Vec& node, const Vec& u_hat, int d);

/// Kinetic potential x -> Phi(x).
using Potential = std::function<double(double)>;

Potential power_potential(double gamma);

/// sum_{v_*} f(v_*) Phi(|v - v_*|) h^d
DistributionField convolve_potential(const DistributionField& f, const Potential& phi);
DistributionField convolve_power(const DistributionField& f, double gamma);

/// Q^-(f, g) = f * |b| * (g * |.|^gamma)
DistributionField q_minus(const DistributionField& f, const DistributionField& g, const CollisionKernel& kernel);

/// How f(v') and f(v'_*) are read off the lattice: tensor-product Lagrange
/// interpolation of the given order (1, 3, 5 or 7) on the field refined `upsample`
/// times by Fourier interpolation.
struct Interpolation {
  int order = 1;
  int upsample = 1;
};

/// Gain operator with an arbitrary potential and angular profile; f, g may be signed.
DistributionField q_plus_general(const DistributionField& f, const DistributionField& g, const Potential& phi,
                                 const AngularKernel& b, const SphereQuadrature& sphere,
                                 const Interpolation& interp = {});

DistributionField q_plus(const DistributionField& f, const DistributionField& g, const CollisionKernel& kernel,
                         const SphereQuadrature& sphere, const Interpolation& interp = {});

/// Dense N x N matrix (row-major) of h -> Q^+(m, h) + Q^+(h, m), discretized exactly as q_plus_general.
std::vector<double> gain_linearization(const DistributionField& m, const Potential& phi, const AngularKernel& b,
                                       const SphereQuadrature& sphere, const Interpolation& interp = {});

/// Per-velocity entropy-dissipation integrand
/// sum over (v_*, sigma) of (f'f'_* - f f_*) log(f'f'_* / (f f_*)) Phi b.
DistributionField dissipation_density(const DistributionField& f, const Potential& phi, const AngularKernel& b,
                                      const SphereQuadrature& sphere, const Interpolation& interp = {});

/// Q(f, f) = Q^+(f, f) - Q^-(f, f)
DistributionField collision(const DistributionField& f, const CollisionKernel& kernel,
                            const SphereQuadrature& sphere, const Interpolation& interp = {});

/// |b| (f * |.|^gamma)
DistributionField collision_frequency(const DistributionField& f, const CollisionKernel& kernel);

struct LowerBoundCertificate {
  double gamma = 0.0;
  double two_plus = 2.5;
  double c_lower = 0.0;
  double C_upper = 0.0;
  double B = 0.0;
  double r = 0.0;
  double R_of_r = 0.0;
  double r_star = 0.0;
  double c_gamma = 1.0;
  double c_o = 0.0;
};

/// Power-difference constant: |a - b|^gamma >= c_gamma |a|^gamma - |b|^gamma.
double power_difference_constant(double gamma);

/// Explicit constant with (f * |.|^gamma)(v) >= c_o <v>^gamma under
/// c <= mass, energy <= C, zero momentum and int f |v|^{two_plus} <= B.
/// r_probe <= 0 selects r = r_star.
LowerBoundCertificate lower_bound_constant(double c, double C, double B, double gamma, double two_plus = 2.5,
                                           double r_probe = -1.0);

/// Certificate with (c, C, B) measured from f; C also dominates int f |v|^gamma / c_gamma.
LowerBoundCertificate lower_bound_certificate(const DistributionField& f, double gamma, double two_plus = 2.5);

/// Grid minimum of (f * |.|^gamma)(v) / <v>^gamma.
double lower_bound_ratio(const DistributionField& f, double gamma);

AuditRow audit_lower_bound(const DistributionField& f, double gamma, double two_plus = 2.5);

struct YoungTriple {
  double p, q, r;
};

struct GainAuditOptions {
  std::vector<YoungTriple> triples{{INFINITY, 1.0, INFINITY}, {1.0, INFINITY, INFINITY}, {2.0, 2.0, INFINITY},
                                   {1.0, 1.0, 1.0},           {2.0, 1.0, 2.0},           {1.0, 2.0, 2.0}};
  const NiceRemainderSplit* nice = nullptr;
  double tol = 1e-12;
};

/// Upper-bound lines for the b1/b2 pieces, Young rows and (optionally) nice/remainder rows.
AuditReport audit_gain_bounds(const DistributionField& f, const CollisionKernel& kernel, const EpsilonSplit& split,
                              const WeightSpec& w, const SphereQuadrature& sphere,
                              const GainAuditOptions& opt = GainAuditOptions{});

}  // namespace kt
