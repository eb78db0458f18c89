#include "kinetic_tails/vgrid.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "kinetic_tails/parallel.hpp"
#include "kinetic_tails/quadrature.hpp"

namespace kt {

std::size_t VelocityGrid::size() const {
  std::size_t s = 1;
  for (int k = 0; k < d; ++k) s *= static_cast<std::size_t>(n);
  return s;
}

double VelocityGrid::cell() const { return std::pow(h, d); }

std::array<int, 3> VelocityGrid::index(std::size_t idx) const {
  std::array<int, 3> ix{0, 0, 0};
  for (int k = d - 1; k >= 0; --k) {
    ix[k] = static_cast<int>(idx % n);
    idx /= n;
  }
  return ix;
}

std::size_t VelocityGrid::flat(const std::array<int, 3>& ix) const {
  std::size_t idx = 0;
  for (int k = 0; k < d; ++k) idx = idx * n + ix[k];
  return idx;
}

Vec VelocityGrid::point(std::size_t idx) const {
  auto ix = index(idx);
  Vec v{0.0, 0.0, 0.0};
  for (int k = 0; k < d; ++k) v[k] = coord(ix[k]);
  return v;
}

VelocityGrid build_grid(int d, int n, double L) {
  if (d != 2 && d != 3) throw std::invalid_argument("build_grid: unsupported dimension");
  if (n < 8 || n % 2 != 0) throw std::invalid_argument("build_grid: n must be even and >= 8");
  if (!(L > 0.0)) throw std::invalid_argument("build_grid: L must be positive");
  return VelocityGrid{d, n, L, 2.0 * L / n};
}

SphereQuadrature build_sphere(int d, int n_angles) {
  if (n_angles < 8) throw std::invalid_argument("build_sphere: n_angles < 8");
  SphereQuadrature s;
  s.d = d;
  const double pi = std::numbers::pi;
  if (d == 2) {
    // trapezoid on the circle, offset by half a step so that the equator falls between nodes
    for (int m = 0; m < n_angles; ++m) {
      double th = 2.0 * pi * (m + 0.5) / n_angles;
      s.nodes.push_back({std::cos(th), std::sin(th), 0.0});
      s.weights.push_back(2.0 * pi / n_angles);
      s.polar.push_back(std::cos(th));
    }
  } else if (d == 3) {
    if (n_angles % 2 != 0) throw std::invalid_argument("build_sphere: d=3 needs even n_angles");
    Rule1D lo = gauss_legendre(n_angles / 2, -1.0, 0.0);
    Rule1D hi = gauss_legendre(n_angles / 2, 0.0, 1.0);
    std::vector<double> ys = lo.x, ws = lo.w;
    ys.insert(ys.end(), hi.x.begin(), hi.x.end());
    ws.insert(ws.end(), hi.w.begin(), hi.w.end());
    for (std::size_t i = 0; i < ys.size(); ++i) {
      double y = ys[i], st = std::sqrt(std::max(0.0, 1.0 - y * y));
      for (int j = 0; j < n_angles; ++j) {
        double ph = 2.0 * pi * (j + 0.5) / n_angles;
        s.nodes.push_back({y, st * std::cos(ph), st * std::sin(ph)});
        s.weights.push_back(ws[i] * 2.0 * pi / n_angles);
        s.polar.push_back(y);
      }
    }
  } else {
    throw std::invalid_argument("build_sphere: unsupported dimension");
  }
  return s;
}

DistributionField::DistributionField(const VelocityGrid& g, std::vector<double> v) : grid(g), values(std::move(v)) {
  if (values.size() != grid.size()) throw std::invalid_argument("DistributionField: size mismatch");
}

DistributionField sample(const VelocityGrid& g, const std::function<double(const Vec&)>& fn) {
  DistributionField f(g);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = fn(g.point(i));
  return f;
}

DistributionField maxwellian_field(const VelocityGrid& g, double rho, const Vec& mu, double T) {
  double norm = rho / std::pow(2.0 * std::numbers::pi * T, 0.5 * g.d);
  return sample(g, [&](const Vec& v) {
    double r2 = 0.0;
    for (int k = 0; k < g.d; ++k) r2 += (v[k] - mu[k]) * (v[k] - mu[k]);
    return norm * std::exp(-r2 / (2.0 * T));
  });
}

double bracket(const Vec& v, int d) {
  double r2 = 0.0;
  for (int k = 0; k < d; ++k) r2 += v[k] * v[k];
  return std::sqrt(1.0 + r2);
}

double weight_value(const WeightSpec& w, const Vec& v, int d) {
  double b = bracket(v, d);
  double out = 1.0;
  if (w.mu != 0.0) out *= std::pow(b, w.mu);
  if (w.r != 0.0) out *= std::exp(w.r * std::pow(b, w.alpha));
  return out;
}

double grid_integral(const VelocityGrid& g, const std::function<double(std::size_t)>& term) {
  std::vector<double> t(g.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = term(i);
  return pairwise_sum(t) * g.cell();
}

Moments moments(const DistributionField& f, const std::vector<double>& orders) {
  const auto& g = f.grid;
  Moments m;
  m.mass = grid_integral(g, [&](std::size_t i) { return f[i]; });
  for (int k = 0; k < g.d; ++k) m.momentum[k] = grid_integral(g, [&](std::size_t i) { return f[i] * g.point(i)[k]; });
  auto speed2 = [&](std::size_t i) {
    Vec v = g.point(i);
    double r2 = 0.0;
    for (int k = 0; k < g.d; ++k) r2 += v[k] * v[k];
    return r2;
  };
  m.energy = grid_integral(g, [&](std::size_t i) { return f[i] * speed2(i); });
  for (double o : orders)
    m.higher[o] = grid_integral(g, [&](std::size_t i) { return f[i] * std::pow(speed2(i), 0.5 * o); });
  return m;
}

double weighted_norm(const VelocityGrid& g, const std::vector<double>& values, const WeightSpec& w) {
  if (std::isinf(w.p)) {
    double mx = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i)
      mx = std::max(mx, std::abs(values[i]) * weight_value(w, g.point(i), g.d));
    return mx;
  }
  if (w.p < 1.0) throw std::invalid_argument("weighted_norm: p < 1");
  double s = grid_integral(g, [&](std::size_t i) {
    double a = std::abs(values[i]) * weight_value(w, g.point(i), g.d);
    return w.p == 1.0 ? a : (w.p == 2.0 ? a * a : std::pow(a, w.p));
  });
  return w.p == 1.0 ? s : std::pow(s, 1.0 / w.p);
}

double weighted_norm(const DistributionField& f, const WeightSpec& w) { return weighted_norm(f.grid, f.values, w); }

EntropyFunctionals entropy_functionals(const DistributionField& f, double s) {
  const auto& g = f.grid;
  EntropyFunctionals e;
  auto lg = [&](std::size_t i) { return std::log(std::max(f[i], kLogFloor)); };
  e.entropy = grid_integral(g, [&](std::size_t i) { return f[i] * lg(i); });
  e.abs_entropy = grid_integral(g, [&](std::size_t i) { return f[i] * std::abs(lg(i)); });
  if (s == 0.0) {
    e.entropic_moment = e.abs_entropy;
  } else {
    e.entropic_moment = grid_integral(
        g, [&](std::size_t i) { return f[i] * std::pow(bracket(g.point(i), g.d), s) * std::abs(lg(i)); });
  }
  return e;
}

namespace {

template <class T>
void put_le(std::ofstream& out, T v) {
  static_assert(std::endian::native == std::endian::little, "little-endian host expected");
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get_le(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("field file truncated");
  return v;
}

}  // namespace

void write_field_binary(const DistributionField& f, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  put_le<std::int32_t>(out, f.grid.d);
  put_le<std::int32_t>(out, f.grid.n);
  put_le<double>(out, f.grid.L);
  for (double v : f.values) put_le<double>(out, v);
}

DistributionField read_field_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  int d = get_le<std::int32_t>(in);
  int n = get_le<std::int32_t>(in);
  double L = get_le<double>(in);
  DistributionField f(build_grid(d, n, L));
  for (auto& v : f.values) v = get_le<double>(in);
  return f;
}

void write_field_csv(const DistributionField& f, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  const char* names[] = {"v1", "v2", "v3"};
  for (int k = 0; k < f.grid.d; ++k) out << names[k] << ",";
  out << "value\n";
  out.precision(17);
  for (std::size_t i = 0; i < f.size(); ++i) {
    Vec v = f.grid.point(i);
    for (int k = 0; k < f.grid.d; ++k) out << v[k] << ",";
    out << f[i] << "\n";
  }
}

}  // namespace kt
