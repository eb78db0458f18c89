#include "kinetic_tails/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "kinetic_tails/quadrature.hpp"

namespace kt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void tabulate(AngularKernel& b) {
  Rule1D r = gauss_legendre(b.nodes, 0.0, 1.0);
  b.table_y = r.x;
  b.table_b.resize(r.x.size());
  for (std::size_t i = 0; i < r.x.size(); ++i) b.table_b[i] = b(r.x[i]);
}

void finalize(AngularKernel& b) {
  if (b.d < 2) throw std::invalid_argument("angular kernel: d < 2");
  std::sort(b.breaks.begin(), b.breaks.end());
  b.breaks.erase(std::unique(b.breaks.begin(), b.breaks.end(),
                             [](double x, double y) { return std::abs(x - y) < 1e-15; }),
                 b.breaks.end());
  tabulate(b);
  for (double v : b.table_b)
    if (v < 0.0 || !std::isfinite(v)) throw std::invalid_argument("angular kernel: negative or non-finite profile");
  b.total_mass = surface_mass(b);
}

// Integrand in phi = theta/2 in [0, pi/4], y = cos(2 phi):
// 2^{d-1} sin^p(phi) cos^q(phi) b(cos 2 phi), p = d-2-2 a_minus, q = d-2-2 a_plus.
double piece_integral(const AngularKernel& b, double pa, double pb, double p, double q) {
  if (pb <= pa) return 0.0;
  double sum = 0.0;
  if (pa == 0.0) {
    // weight phi^p handled exactly by Gauss-Jacobi
    static thread_local int cached_n = -1;
    static thread_local double cached_p = std::nan("");
    static thread_local Rule1D cached;
    if (cached_n != b.nodes || cached_p != p) {
      cached = gauss_jacobi(b.nodes, 0.0, p);
      cached_n = b.nodes;
      cached_p = p;
    }
    double half = 0.5 * pb;
    for (std::size_t i = 0; i < cached.x.size(); ++i) {
      double phi = half * (1.0 + cached.x[i]);
      double sinc = phi > 0.0 ? std::sin(phi) / phi : 1.0;
      double g = std::pow(sinc, p) * std::pow(std::cos(phi), q) * b(std::cos(2.0 * phi));
      sum += cached.w[i] * g;
    }
    return sum * std::pow(half, p + 1.0);
  }
  Rule1D r = gauss_legendre(b.nodes, pa, pb);
  for (std::size_t i = 0; i < r.x.size(); ++i) {
    double phi = r.x[i];
    sum += r.w[i] * std::pow(std::sin(phi), p) * std::pow(std::cos(phi), q) * b(std::cos(2.0 * phi));
  }
  return sum;
}

}  // namespace

double AngularKernel::operator()(double y) const {
  if (y < 0.0 || y > 1.0) return 0.0;
  return profile ? profile(y) : 0.0;
}

double angular_integral(const AngularKernel& b, double a_minus, double a_plus) {
  const int d = b.d;
  double p = d - 2.0 - 2.0 * a_minus;
  double q = d - 2.0 - 2.0 * a_plus;
  // phi breakpoints, ascending
  std::vector<double> phis;
  for (double y : b.breaks) phis.push_back(0.5 * std::acos(std::clamp(y, 0.0, 1.0)));
  std::sort(phis.begin(), phis.end());
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < phis.size(); ++k) {
    double pa = phis[k], pb = phis[k + 1];
    if (pb - pa < 1e-300) continue;
    if (pa == 0.0 && p <= -1.0) {
      // profile near y = 1 decides divergence
      double probe = b(std::cos(2.0 * std::min(1e-9, 0.5 * pb)));
      if (probe > 0.0) return kInf;
      continue;
    }
    total += piece_integral(b, pa, pb, p, q);
  }
  return std::pow(2.0, d - 1.0) * total;
}

double surface_mass(const AngularKernel& b) { return sphere_area(b.d - 2) * angular_integral(b, 0.0, 0.0); }

AngularKernel kernel_from_profile(std::function<double(double)> profile, int d, std::vector<double> extra_breaks,
                                  int nodes) {
  AngularKernel b;
  b.d = d;
  b.nodes = nodes;
  b.profile = std::move(profile);
  b.breaks = {0.0, 1.0};
  for (double y : extra_breaks)
    if (y > 0.0 && y < 1.0) b.breaks.push_back(y);
  finalize(b);
  return b;
}

AngularKernel normalized(const AngularKernel& b) {
  if (!(b.total_mass > 0.0)) throw std::invalid_argument("normalize: zero mass kernel");
  if (std::abs(b.total_mass - 1.0) < 1e-15) return b;
  double c = 1.0 / b.total_mass;
  auto prof = b.profile;
  AngularKernel out = b;
  out.profile = [prof, c](double y) { return c * prof(y); };
  finalize(out);
  return out;
}

AngularKernel with_nodes(const AngularKernel& b, int nodes) {
  AngularKernel out = b;
  out.nodes = nodes;
  finalize(out);
  return out;
}

AngularKernel multiply_profile(const AngularKernel& b, std::function<double(double)> w,
                               std::vector<double> extra_breaks) {
  AngularKernel out = b;
  auto prof = b.profile;
  out.profile = [prof, w](double y) { return prof(y) * w(y); };
  for (double y : extra_breaks)
    if (y > 0.0 && y < 1.0) out.breaks.push_back(y);
  finalize(out);
  return out;
}

AngularKernel make_angular_kernel(AngularKind kind, const std::vector<double>& params, int d, bool normalize,
                                  int nodes) {
  if (d < 2) throw std::invalid_argument("make_angular_kernel: d < 2");
  AngularKernel b;
  switch (kind) {
    case AngularKind::uniform: {
      double c = params.empty() ? 1.0 : params[0];
      if (c < 0.0) throw std::invalid_argument("make_angular_kernel: negative profile");
      b = kernel_from_profile([c](double) { return c; }, d, {}, nodes);
      break;
    }
    case AngularKind::truncated_uniform: {
      if (params.size() < 2) throw std::invalid_argument("truncated_uniform needs {y_lo, y_hi}");
      double lo = params[0], hi = params[1], c = params.size() > 2 ? params[2] : 1.0;
      if (c < 0.0 || lo < 0.0 || hi > 1.0 || lo >= hi)
        throw std::invalid_argument("truncated_uniform: bad parameters");
      b = kernel_from_profile([lo, hi, c](double y) { return (y >= lo && y <= hi) ? c : 0.0; }, d, {lo, hi}, nodes);
      break;
    }
    case AngularKind::table: {
      if (params.size() < 4 || params.size() % 2 != 0) throw std::invalid_argument("table kernel: need (y, b) pairs");
      std::vector<double> ys, bs;
      for (std::size_t i = 0; i < params.size(); i += 2) {
        ys.push_back(params[i]);
        bs.push_back(params[i + 1]);
      }
      for (std::size_t i = 0; i < ys.size(); ++i) {
        if (bs[i] < 0.0) throw std::invalid_argument("table kernel: negative profile");
        if (ys[i] < 0.0 || ys[i] > 1.0) throw std::invalid_argument("table kernel: y outside [0,1]");
        if (i > 0 && ys[i] <= ys[i - 1]) throw std::invalid_argument("table kernel: y not increasing");
      }
      auto prof = [ys, bs](double y) {
        if (y < ys.front() || y > ys.back()) return 0.0;
        auto it = std::upper_bound(ys.begin(), ys.end(), y);
        if (it == ys.end()) return bs.back();
        std::size_t j = static_cast<std::size_t>(it - ys.begin());
        if (j == 0) return bs.front();
        double t = (y - ys[j - 1]) / (ys[j] - ys[j - 1]);
        return (1.0 - t) * bs[j - 1] + t * bs[j];
      };
      b = kernel_from_profile(prof, d, ys, nodes);
      break;
    }
  }
  return normalize ? normalized(b) : b;
}

AngularKernel load_table_kernel(const std::string& path, int d, bool normalize, int nodes) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open kernel table: " + path);
  std::vector<double> params;
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    double y, v;
    if (ls >> y >> v) {
      params.push_back(y);
      params.push_back(v);
    }
  }
  return make_angular_kernel(AngularKind::table, params, d, normalize, nodes);
}

double CollisionKernel::operator()(double x, double y) const {
  double kin = gamma == 0.0 ? 1.0 : std::pow(x, gamma);
  return kin * angular(y);
}

CollisionKernel make_collision_kernel(double gamma, AngularKernel angular) {
  if (!(gamma >= 0.0 && gamma <= 2.0)) throw std::invalid_argument("collision kernel: gamma outside [0,2]");
  return CollisionKernel{gamma, std::move(angular)};
}

EpsilonSplit split_epsilon(const AngularKernel& b, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("split_epsilon: epsilon outside (0,1)");
  double yc = std::sqrt(1.0 - epsilon * epsilon);
  EpsilonSplit s;
  s.epsilon = epsilon;
  s.b1 = multiply_profile(b, [yc](double y) { return y <= yc ? 1.0 : 0.0; }, {yc});
  s.b2 = multiply_profile(b, [yc](double y) { return y > yc ? 1.0 : 0.0; }, {yc});
  s.remainder_mass = s.b2.total_mass;
  return s;
}

double young_constant(const AngularKernel& b, double p, double q, double r, double k, double gamma) {
  auto inv = [](double x) { return std::isinf(x) ? 0.0 : 1.0 / x; };
  if (p < 1.0 || q < 1.0 || r < 1.0) throw std::invalid_argument("young_constant: exponent below 1");
  if (std::abs(inv(p) + inv(q) - 1.0 - inv(r)) > 1e-12)
    throw std::invalid_argument("young_constant: exponents violate 1/p + 1/q = 1 + 1/r");
  const double d = b.d;
  const double K = std::pow(2.0, k + gamma + 3.0) * sphere_area(b.d - 2);
  double ip_conj = 1.0 - inv(p);  // 1/p'
  double iq_conj = 1.0 - inv(q);  // 1/q'
  double ir_conj = 1.0 - inv(r);  // 1/r'
  if (p == 1.0) return K * angular_integral(b, 0.5 * d * iq_conj, 0.0);
  if (q == 1.0) return K * angular_integral(b, 0.0, 0.5 * d * ip_conj);
  // here r' is finite because p, q > 1 forces r > 1 unless r = 1 which needs p = q = 1
  double rc = 1.0 / ir_conj;
  double Im = angular_integral(b, 0.5 * d * ir_conj, 0.0);
  double Ip = angular_integral(b, 0.0, 0.5 * d * ir_conj);
  double em = rc * iq_conj, ep = rc * ip_conj;
  if (std::isinf(Im) && em > 0.0) return kInf;
  if (std::isinf(Ip) && ep > 0.0) return kInf;
  return K * std::pow(Im, em) * std::pow(Ip, ep);
}

double smooth_ramp(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  double a = std::exp(-1.0 / t), c = std::exp(-1.0 / (1.0 - t));
  return a / (a + c);
}

NiceRemainderSplit split_nice_remainder(const CollisionKernel& kernel, double delta, double eps_angle) {
  if (!(delta > 0.0 && delta < 0.5) || !(eps_angle > 0.0 && eps_angle < 0.5))
    throw std::invalid_argument("split_nice_remainder: delta, eps outside (0, 1/2)");
  NiceRemainderSplit s;
  s.delta = delta;
  s.eps_angle = eps_angle;
  s.gamma = kernel.gamma;
  const double g = kernel.gamma;
  auto power = [g](double x) { return g == 0.0 ? 1.0 : std::pow(x, g); };
  s.phi_nice = [power, delta](double x) { return x <= 0.0 ? 0.0 : power(x) * smooth_ramp((x - delta) / delta); };
  s.phi_rem = [power, delta](double x) {
    return x < 0.0 ? 0.0 : power(x) * (1.0 - smooth_ramp((x - delta) / delta));
  };
  // angular transition over [1 - 3 eps/2, 1 - eps] so that b_nice vanishes on (1 - eps, 1)
  const double y0 = 1.0 - 1.5 * eps_angle, y1 = 1.0 - eps_angle;
  auto rem_w = [y0, y1](double y) { return smooth_ramp((y - y0) / (y1 - y0)); };
  s.b_rem = multiply_profile(kernel.angular, rem_w, {y0, y1});
  s.b_nice = multiply_profile(kernel.angular, [rem_w](double y) { return 1.0 - rem_w(y); }, {y0, y1});
  s.rem_mass = s.b_rem.total_mass;
  double sup = 0.0;
  for (int i = 0; i <= 4000; ++i) sup = std::max(sup, s.phi_rem(2.0 * delta * i / 4000.0));
  s.rem_sup = sup;
  double l2 = 0.0;
  for (int piece = 0; piece < 2; ++piece) {
    Rule1D r = gauss_legendre(128, piece * delta, (piece + 1) * delta);
    for (std::size_t i = 0; i < r.x.size(); ++i) l2 += r.w[i] * std::pow(s.phi_rem(r.x[i]), 2);
  }
  s.rem_l2 = std::sqrt(l2);
  return s;
}

}  // namespace kt
