#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "kinetic_tails/collision.hpp"
#include "kinetic_tails/kernels.hpp"
#include "kinetic_tails/report.hpp"
#include "kinetic_tails/vgrid.hpp"

namespace kt {

/// Frequency lattice of the periodic extension of a cubic sample array.
struct SpectralGrid {
  int d = 2;
  int m = 32;            // samples per axis
  double spacing = 0.5;  // sample spacing
  std::vector<Vec> xi;   // one frequency per sample, FFT ordering

  double period() const { return m * spacing; }
  /// <xi>^s per sample
  std::vector<double> multiplier(double s) const;
};

SpectralGrid build_spectral(int d, int m, double spacing);

/// In-place multidimensional FFT of an m^d array (sign -1 forward, +1 backward, unnormalized).
void fft_nd(std::vector<std::complex<double>>& a, int d, int m, int sign);

enum class PadPolicy { automatic, never, always };

struct BesselResult {
  DistributionField field;
  bool boundary_warning = false;  // input not decayed to 1e-12 of its max at the boundary
  bool padded = false;
};

/// True when max |f| on the outermost layer is below 1e-12 max |f|.
bool decays_at_boundary(const DistributionField& f, double rel = 1e-12);

/// (1 - Delta)^{s/2} f through the discrete Fourier multiplier <xi>^s.
BesselResult bessel_apply(const DistributionField& f, double s, PadPolicy pad = PadPolicy::automatic);

/// || e^{r<v>^alpha} <v>^mu (1 - Delta)^{k/2} f ||_2
double sobolev_exp_norm(const DistributionField& f, const WeightSpec& w, bool* boundary_warning = nullptr);

/// Closed form of the kernel phi of (1 - Delta)^{(s-2)/2} and of its radial derivative.
double bessel_kernel(double r, double s, int d);
double bessel_kernel_derivative(double r, double s, int d);

/// || e^{r <x>^alpha} min(1, |x|)^eps grad phi ||_1 by radial quadrature of the closed form
/// (+inf when s - eps >= 1, where grad phi is not integrable at the origin).
double bessel_gradient_mass(double s, int d, double r, double alpha, double eps = 0.0);

/// Near-origin samples of grad phi from the inverse discrete transform of i xi <xi>^{s-2}
/// (smoothly filtered, oversampled), against the closed form.
struct BesselKernelTable {
  int d = 2;
  double s = 0.5;
  double h = 0.5;
  int oversample = 16;
  /// shells r_j = j h / 4, j = 1..4, along the first axis
  std::array<double, 4> shell_r{}, shell_grad{}, shell_grad_exact{};
  double slope = 0.0;
  double slope_expected = 0.0;
  /// max relative gap to the closed form over shells 2..4
  double closed_form_gap = 0.0;

  double gradient_mass(double r, double alpha) const { return bessel_gradient_mass(s, d, r, alpha); }
  bool slope_ok(double tol = 0.1) const { return std::abs(slope - slope_expected) <= tol; }
};

BesselKernelTable build_bessel_table(const VelocityGrid& grid, double s, int oversample = 16);

/// Commutator constants with no closed form, calibrated once (twice the worst ratio) and frozen.
struct FrozenConstants {
  static constexpr double loss_commutator = 4.9;
  static constexpr double gain_commutator = 0.66;
  static constexpr double weight_commutator = 0.048;
};

struct CommutatorCalibration {
  double loss = 0.0;  // worst lhs / norms over the family
  double gain = 0.0;
  double weight = 0.0;
};

/// Worst ratios over the calibration family (Gaussians, a shifted Gaussian and a two-bump state on an
/// n-point grid over [-8, 8]^2). The frozen constants are twice these values at n = 24.
CommutatorCalibration calibrate_commutators(int n, bool with_gain = true);

struct CommutatorResult {
  DistributionField spectral;  // LHS minus first term, through bessel_apply
  DistributionField direct;    // explicit integral formula
  double discrepancy = 0.0;    // ||spectral - direct||_2 / ||spectral||_2 (0 when both vanish)
  std::vector<AuditRow> rows;
};

/// Gradient of the multiplied function g used in the commutator [J^s, g].
using GradientFn = std::function<Vec(const Vec&)>;

/// Direct evaluation of -s int (int_0^1 grad g(v - theta x) dtheta) . grad phi(x) f(v - x) dx as a lattice
/// sum over x != 0 with the closed-form radial derivative of phi. With theta_nodes > 0 the segment average
/// uses Gauss-Legendre in theta; with theta_nodes = 0 it is taken exactly as
/// (g(v) - g(v - x)) . x / |x|^2, which only needs g on the lattice.
/// For s = 1 the singular part grad g(v) . (grad phi * f)(v) is evaluated spectrally.
struct CommutatorFunction {
  DistributionField values;  // g on the lattice
  GradientFn grad;           // grad g anywhere (required when theta_nodes > 0 or s = 1)
};
DistributionField commutator_direct(const DistributionField& f, const CommutatorFunction& g, double s,
                                    int theta_nodes = 32);

/// [J^s, tau_{v_*}|.|^gamma] f evaluated two ways.
CommutatorResult loss_commutator(const DistributionField& f, const Vec& v_star, double gamma, double s,
                                 const WeightSpec& w, int theta_nodes = 32,
                                 double frozen = FrozenConstants::loss_commutator);

/// I^-(f, g) = |b| ([J^s, g * |.|^gamma] f), its weighted L^2 norm and the norm product of the bound.
struct LossCommutatorBound {
  double lhs = 0.0;
  double norms = 0.0;  // |b| ||f e^{r<>^alpha}||_2 ||g||_{L^2_{(d-(1-gamma))/2}}
  DistributionField remainder;
};
LossCommutatorBound loss_commutator_bound(const DistributionField& f, const DistributionField& g, double gamma,
                                          double b_mass, double s, const WeightSpec& w);
AuditRow loss_commutator_row(const LossCommutatorBound& b, double frozen = FrozenConstants::loss_commutator);

/// Angular kernel b_s(y) = (2 / (1 + y))^{s/2} b(y).
AngularKernel transformed_kernel(const AngularKernel& b, double s);

struct GainCommutatorResult {
  DistributionField remainder;
  double lhs = 0.0;
  double norms = 0.0;
  AuditRow row;
};

GainCommutatorResult gain_commutator(const DistributionField& f, const DistributionField& g,
                                     const CollisionKernel& kernel, const SphereQuadrature& sphere, double s,
                                     const WeightSpec& w, const Interpolation& interp = {3, 2},
                                     double frozen = FrozenConstants::gain_commutator);

struct WeightCommutatorResult {
  DistributionField spectral;
  DistributionField direct;
  double discrepancy = 0.0;
  double lhs = 0.0;
  double norms = 0.0;  // ||e^{2r<>^alpha} grad phi||_1 ||e^{r<>^alpha} f||_2
  AuditRow row;
};

/// The bound uses C(r, phi) = ||e^{2r<>^alpha} grad phi||_1 for s < 1; at s = 1 the singular part is
/// bounded in L^2 by 1 and the rest by ||e^{2r<>^alpha} min(1, |.|) grad phi||_1.
WeightCommutatorResult weight_commutator(const DistributionField& f, double s, double r, double alpha,
                                         double frozen = FrozenConstants::weight_commutator);

/// int_0^1 |-A + theta B|^{-a} dtheta in closed form.
double split_power_integral(double A, double B, double a);
double split_power_quadrature(double A, double B, double a, int nodes = 64);

AuditReport elementary_bounds_check(int samples, double eps, double a, std::uint64_t seed);

struct ProbeReport {
  double mu = 0.0;
  double sobolev_order = 0.0;
  std::vector<ProbeRow> rows;
  double variation = 0.0;
  bool pass = false;
};

/// Ratio ||e^{r<>^a} Q+_nn(f, g)||_{H^{s+(d-1)/2}} / (||e^{r<>^a}<>^mu f||_{H^s} ||e^{2r<>^a}<>^mu g||_1)
/// across a refinement ladder of grids on [-L, L]^d.
ProbeReport gain_regularity_probe(const std::function<double(const Vec&)>& f,
                                  const std::function<double(const Vec&)>& g, const NiceRemainderSplit& split,
                                  double s, const WeightSpec& w, int d, double L, const std::vector<int>& levels,
                                  int n_angles = 32);

}  // namespace kt
