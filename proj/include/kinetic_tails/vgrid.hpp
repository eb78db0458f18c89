#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace kt {

using Vec = std::array<double, 3>;

/// Cell-centered uniform lattice on [-L, L]^d.
struct VelocityGrid {
  int d = 2;
  int n = 32;
  double L = 8.0;
  double h = 0.5;

  std::size_t size() const;
  double cell() const;  // h^d
  double coord(int i) const { return -L + (i + 0.5) * h; }
  Vec point(std::size_t idx) const;
  std::array<int, 3> index(std::size_t idx) const;
  std::size_t flat(const std::array<int, 3>& ix) const;
  bool operator==(const VelocityGrid& o) const { return d == o.d && n == o.n && L == o.L; }
};

VelocityGrid build_grid(int d, int n, double L);

/// Quadrature on S^{d-1} expressed in a frame whose first axis is the pole.
struct SphereQuadrature {
  int d = 2;
  std::vector<Vec> nodes;
  std::vector<double> weights;
  /// Cosine between each node and the pole (first component of the node).
  std::vector<double> polar;
};

SphereQuadrature build_sphere(int d, int n_angles);

struct DistributionField {
  VelocityGrid grid;
  std::vector<double> values;

  DistributionField() = default;
  explicit DistributionField(const VelocityGrid& g) : grid(g), values(g.size(), 0.0) {}
  DistributionField(const VelocityGrid& g, std::vector<double> v);
  std::size_t size() const { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
};

DistributionField sample(const VelocityGrid& g, const std::function<double(const Vec&)>& fn);
DistributionField maxwellian_field(const VelocityGrid& g, double rho, const Vec& mu, double T);

/// Weight <v>^mu exp(r <v>^alpha) and the exponents (p, k) defining a norm.
struct WeightSpec {
  double p = 1.0;  // INFINITY allowed
  double mu = 0.0;
  double r = 0.0;
  double alpha = 1.0;
  double k = 0.0;
};

double bracket(const Vec& v, int d);
double weight_value(const WeightSpec& w, const Vec& v, int d);

struct Moments {
  double mass = 0.0;
  Vec momentum{0.0, 0.0, 0.0};
  double energy = 0.0;  // int f |v|^2
  std::map<double, double> higher;  // order -> int f |v|^order
};

Moments moments(const DistributionField& f, const std::vector<double>& orders = {2.5});

double weighted_norm(const DistributionField& f, const WeightSpec& w);

/// Weighted norm of an arbitrary (possibly signed) array living on the grid.
double weighted_norm(const VelocityGrid& g, const std::vector<double>& values, const WeightSpec& w);

struct EntropyFunctionals {
  double entropy = 0.0;          // int f log f
  double abs_entropy = 0.0;      // int f |log f|
  double entropic_moment = 0.0;  // int f <v>^s |log f|
};

constexpr double kLogFloor = 1e-300;

EntropyFunctionals entropy_functionals(const DistributionField& f, double s);

/// Deterministic sum of a per-point functional times h^d.
double grid_integral(const VelocityGrid& g, const std::function<double(std::size_t)>& term);

void write_field_binary(const DistributionField& f, const std::string& path);
DistributionField read_field_binary(const std::string& path);
void write_field_csv(const DistributionField& f, const std::string& path);

}  // namespace kt
