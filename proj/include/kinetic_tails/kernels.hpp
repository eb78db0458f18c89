#pragma once

#include <functional>
#include <string>
#include <vector>

namespace kt {

/// Angular scattering profile b(y), y = cos(theta) in [0, 1], in dimension d.
struct AngularKernel {
  int d = 3;
  std::function<double(double)> profile;
  /// Sorted points in [0, 1] (always containing 0 and 1) between which the profile is smooth.
  std::vector<double> breaks{0.0, 1.0};
  /// Quadrature nodes per smooth piece.
  int nodes = 256;
  /// |S^{d-2}| * int_0^1 b(s) (1 - s^2)^{(d-3)/2} ds
  double total_mass = 0.0;
  /// Profile tabulated on Gauss-Legendre nodes of [0, 1].
  std::vector<double> table_y, table_b;

  double operator()(double y) const;
};

enum class AngularKind { uniform, truncated_uniform, table };

/// params: uniform {value}, truncated_uniform {y_lo, y_hi}, table {y0, b0, y1, b1, ...}.
AngularKernel make_angular_kernel(AngularKind kind, const std::vector<double>& params, int d, bool normalize,
                                  int nodes = 256);

/// Two-column text file (y, b(y)), linearly interpolated.
AngularKernel load_table_kernel(const std::string& path, int d, bool normalize, int nodes = 256);

/// Build a kernel from an arbitrary profile; extra_breaks lists interior kinks or jumps.
AngularKernel kernel_from_profile(std::function<double(double)> profile, int d, std::vector<double> extra_breaks,
                                  int nodes = 256);

/// Rescale so that total_mass = 1.
AngularKernel normalized(const AngularKernel& b);

/// Same profile, different node count (used for refinement checks).
AngularKernel with_nodes(const AngularKernel& b, int nodes);

/// Pointwise product b(y) * w(y).
AngularKernel multiply_profile(const AngularKernel& b, std::function<double(double)> w,
                               std::vector<double> extra_breaks = {});

/// int_0^1 ((1-s)/2)^{-a_minus} ((1+s)/2)^{-a_plus} (1-s^2)^{(d-3)/2} b(s) ds, +inf when divergent.
double angular_integral(const AngularKernel& b, double a_minus, double a_plus);

/// L^1(S^{d-1}) mass recomputed by quadrature.
double surface_mass(const AngularKernel& b);

struct CollisionKernel {
  double gamma = 0.0;
  AngularKernel angular;

  bool maxwell() const { return gamma == 0.0; }
  double operator()(double x, double y) const;
};

CollisionKernel make_collision_kernel(double gamma, AngularKernel angular);

struct EpsilonSplit {
  double epsilon = 0.0;
  AngularKernel b1, b2;
  double remainder_mass = 0.0;
};

/// b1 keeps y <= sqrt(1 - eps^2), b2 the complement.
EpsilonSplit split_epsilon(const AngularKernel& b, double epsilon);

/// Young constant of the gain operator for 1/p + 1/q = 1 + 1/r (use INFINITY for infinite exponents).
double young_constant(const AngularKernel& b, double p, double q, double r, double k, double gamma);

/// C-infinity ramp: 0 for t <= 0, 1 for t >= 1.
double smooth_ramp(double t);

struct NiceRemainderSplit {
  double delta = 0.0;
  double eps_angle = 0.0;
  double gamma = 0.0;
  std::function<double(double)> phi_nice, phi_rem;
  AngularKernel b_nice, b_rem;
  double rem_sup = 0.0;
  double rem_l2 = 0.0;
  double rem_mass = 0.0;
};

NiceRemainderSplit split_nice_remainder(const CollisionKernel& kernel, double delta, double eps_angle);

}  // namespace kt
