#include "kinetic_tails/fracdiff.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include <fftw3.h>

#include "kinetic_tails/parallel.hpp"
#include "kinetic_tails/quadrature.hpp"

namespace kt {

namespace {

std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

std::size_t ipow(int m, int d) {
  std::size_t r = 1;
  for (int k = 0; k < d; ++k) r *= static_cast<std::size_t>(m);
  return r;
}

int freq_of(int j, int m) { return j <= m / 2 - (m % 2 == 0 ? 1 : 0) ? j : j - m; }

double norm_d(const Vec& x, int d) {
  double s = 0.0;
  for (int k = 0; k < d; ++k) s += x[k] * x[k];
  return std::sqrt(s);
}

// Apply a real multiplier m(xi) to an m^d real array.
std::vector<double> apply_multiplier(const std::vector<double>& in, const SpectralGrid& sg,
                                     const std::vector<double>& mult) {
  std::vector<std::complex<double>> a(in.begin(), in.end());
  fft_nd(a, sg.d, sg.m, -1);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] *= mult[i];
  fft_nd(a, sg.d, sg.m, +1);
  const double scale = 1.0 / static_cast<double>(a.size());
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i].real() * scale;
  return out;
}

// Embed the n^d field into an m^d array (m >= n) at offset o per axis and back.
std::vector<double> embed(const DistributionField& f, int m, int o) {
  const auto& g = f.grid;
  std::vector<double> a(ipow(m, g.d), 0.0);
  for (std::size_t i = 0; i < f.size(); ++i) {
    auto ix = g.index(i);
    std::size_t j = 0;
    for (int k = 0; k < g.d; ++k) j = j * m + static_cast<std::size_t>(ix[k] + o);
    a[j] = f[i];
  }
  return a;
}

DistributionField restrict_to(const VelocityGrid& g, const std::vector<double>& a, int m, int o) {
  DistributionField out(g);
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto ix = g.index(i);
    std::size_t j = 0;
    for (int k = 0; k < g.d; ++k) j = j * m + static_cast<std::size_t>(ix[k] + o);
    out[i] = a[j];
  }
  return out;
}

// Spectral gradient component of J^{s-2} f, i.e. (d_axis phi * f).
DistributionField gradient_potential(const DistributionField& f, double s, int axis) {
  const auto& g = f.grid;
  const bool pad = !decays_at_boundary(f);
  const int m = pad ? 2 * g.n : g.n, o = pad ? g.n / 2 : 0;
  SpectralGrid sg = build_spectral(g.d, m, g.h);
  std::vector<std::complex<double>> a;
  {
    auto r = embed(f, m, o);
    a.assign(r.begin(), r.end());
  }
  fft_nd(a, g.d, m, -1);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Vec& xi = sg.xi[i];
    double b2 = 1.0;
    for (int k = 0; k < g.d; ++k) b2 += xi[k] * xi[k];
    // the Nyquist mode has no consistent sign for an odd multiplier
    bool nyq = (m % 2 == 0) && std::abs(std::abs(xi[axis]) * sg.spacing * m / (2.0 * std::numbers::pi) - m / 2.0) < 0.5;
    a[i] *= nyq ? std::complex<double>(0.0) : std::complex<double>(0.0, xi[axis]) * std::pow(b2, 0.5 * (s - 2.0));
  }
  fft_nd(a, g.d, m, +1);
  std::vector<double> re(a.size());
  const double scale = 1.0 / static_cast<double>(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) re[i] = a[i].real() * scale;
  return restrict_to(g, re, m, o);
}

double l2_norm(const VelocityGrid& g, const std::vector<double>& v) {
  WeightSpec w;
  w.p = 2.0;
  return weighted_norm(g, v, w);
}

// Double-exponential quadrature of fn(t) over t in (0, T), fn possibly singular at t = 0.
// fn receives the distance t from the singular end, so nothing is lost to cancellation.
double de_quadrature(const std::function<double(double)>& fn, double T) {
  if (T <= 0.0) return 0.0;
  const double pi = std::numbers::pi;
  auto sum_at = [&](double h, bool odd_only) {
    double acc = 0.0;
    const int K = static_cast<int>(std::ceil(4.5 / h));
    for (int k = -K; k <= K; ++k) {
      if (odd_only && (k % 2 == 0)) continue;
      const double u = k * h;
      const double e = pi * std::sinh(u);
      // t = T / (1 + e^{e}); dt/du = T pi cosh(u) e^{e} / (1 + e^{e})^2
      double t, jac;
      if (e > 0) {
        const double q = std::exp(-e);
        t = T * q / (1.0 + q);
        jac = T * pi * std::cosh(u) * q / ((1.0 + q) * (1.0 + q));
      } else {
        const double q = std::exp(e);
        t = T / (1.0 + q);
        jac = T * pi * std::cosh(u) * q / ((1.0 + q) * (1.0 + q));
      }
      if (!(t > 0.0) || jac == 0.0) continue;
      acc += fn(t) * jac;
    }
    return acc;
  };
  double h = 0.5;
  double I = sum_at(h, false) * h;
  for (int level = 0; level < 10; ++level) {
    const double add = sum_at(h / 2.0, true);
    const double next = 0.5 * I + add * (h / 2.0);
    h /= 2.0;
    const bool done = std::abs(next - I) <= 1e-14 * std::abs(next);
    I = next;
    if (done && level >= 2) break;
  }
  return I;
}

// int_0^T fn for fn ~ C t^p near 0 (p > -1): tanh-sinh on [t0, T], the piece below t0 from the local
// power law fitted at t0 and t0 / 2.
double endpoint_power_quadrature(const std::function<double(double)>& fn, double T) {
  if (T <= 0.0) return 0.0;
  const double t0 = 1e-10 * T;
  const double body = de_quadrature([&](double x) { return fn(t0 + x); }, T - t0);
  const double f0 = fn(t0);
  const double p = std::log(f0 / fn(0.5 * t0)) / std::log(2.0);
  return body + f0 * t0 / (p + 1.0);
}

Vec random_vector(std::mt19937_64& rng, int d) {
  std::normal_distribution<double> nd(0.0, 1.0);
  std::uniform_real_distribution<double> lu(-3.0, 3.0);
  Vec x{0.0, 0.0, 0.0};
  double n2 = 0.0;
  for (int k = 0; k < d; ++k) {
    x[k] = nd(rng);
    n2 += x[k] * x[k];
  }
  const double scale = std::pow(10.0, lu(rng)) / std::sqrt(n2);
  for (int k = 0; k < d; ++k) x[k] *= scale;
  return x;
}

std::string json_constants(std::initializer_list<std::pair<const char*, double>> kv) {
  std::ostringstream os;
  os << "{";
  bool first = true;
  for (auto& [k, v] : kv) {
    os << (first ? "" : ",") << "\"" << k << "\":" << fmt_double(v);
    first = false;
  }
  os << "}";
  return os.str();
}

}  // namespace

std::vector<double> SpectralGrid::multiplier(double s) const {
  std::vector<double> m(xi.size());
  for (std::size_t i = 0; i < xi.size(); ++i) {
    double b2 = 1.0;
    for (int k = 0; k < d; ++k) b2 += xi[i][k] * xi[i][k];
    m[i] = s == 0.0 ? 1.0 : std::pow(b2, 0.5 * s);
  }
  return m;
}

SpectralGrid build_spectral(int d, int m, double spacing) {
  if (d < 2 || d > 3 || m < 2 || !(spacing > 0.0)) throw std::invalid_argument("build_spectral: bad arguments");
  SpectralGrid sg;
  sg.d = d;
  sg.m = m;
  sg.spacing = spacing;
  const double dk = 2.0 * std::numbers::pi / (m * spacing);
  const std::size_t N = ipow(m, d);
  sg.xi.resize(N);
  for (std::size_t i = 0; i < N; ++i) {
    std::size_t rem = i;
    Vec xi{0.0, 0.0, 0.0};
    for (int k = d - 1; k >= 0; --k) {
      xi[k] = dk * freq_of(static_cast<int>(rem % m), m);
      rem /= m;
    }
    sg.xi[i] = xi;
  }
  return sg;
}

void fft_nd(std::vector<std::complex<double>>& a, int d, int m, int sign) {
  if (a.size() != ipow(m, d)) throw std::invalid_argument("fft_nd: size mismatch");
  std::vector<int> dims(d, m);
  auto* p = reinterpret_cast<fftw_complex*>(a.data());
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(plan_mutex());
    plan = fftw_plan_dft(d, dims.data(), p, p, sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  }
  fftw_execute(plan);
  std::lock_guard<std::mutex> lock(plan_mutex());
  fftw_destroy_plan(plan);
}

bool decays_at_boundary(const DistributionField& f, double rel) {
  const auto& g = f.grid;
  double mx = 0.0, edge = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double a = std::abs(f[i]);
    mx = std::max(mx, a);
    auto ix = g.index(i);
    for (int k = 0; k < g.d; ++k)
      if (ix[k] == 0 || ix[k] == g.n - 1) edge = std::max(edge, a);
  }
  return edge <= rel * mx;
}

BesselResult bessel_apply(const DistributionField& f, double s, PadPolicy pad) {
  const auto& g = f.grid;
  BesselResult r;
  r.boundary_warning = !decays_at_boundary(f);
  r.padded = pad == PadPolicy::always || (pad == PadPolicy::automatic && r.boundary_warning);
  const int m = r.padded ? 2 * g.n : g.n, o = r.padded ? g.n / 2 : 0;
  SpectralGrid sg = build_spectral(g.d, m, g.h);
  r.field = restrict_to(g, apply_multiplier(embed(f, m, o), sg, sg.multiplier(s)), m, o);
  return r;
}

double sobolev_exp_norm(const DistributionField& f, const WeightSpec& w, bool* boundary_warning) {
  BesselResult b = bessel_apply(f, w.k);
  if (boundary_warning) *boundary_warning = b.boundary_warning;
  WeightSpec w2 = w;
  w2.p = 2.0;
  w2.k = 0.0;
  return weighted_norm(b.field, w2);
}

double bessel_kernel(double r, double s, int d) {
  const double alpha = 2.0 - s, nu = 0.5 * (d - alpha);
  const double c = 1.0 / (std::pow(2.0 * std::numbers::pi, 0.5 * d) * std::pow(2.0, 0.5 * alpha - 1.0) *
                          std::tgamma(0.5 * alpha));
  return c * std::pow(r, -nu) * std::cyl_bessel_k(std::abs(nu), r);
}

double bessel_kernel_derivative(double r, double s, int d) {
  const double alpha = 2.0 - s, nu = 0.5 * (d - alpha);
  const double c = 1.0 / (std::pow(2.0 * std::numbers::pi, 0.5 * d) * std::pow(2.0, 0.5 * alpha - 1.0) *
                          std::tgamma(0.5 * alpha));
  return -c * std::pow(r, -nu) * std::cyl_bessel_k(nu + 1.0, r);
}

double bessel_gradient_mass(double s, int d, double r, double alpha, double eps) {
  if (!(s > 0.0 && s <= 1.0)) throw std::invalid_argument("bessel_gradient_mass: s outside (0, 1]");
  if (eps < 0.0 || eps > 1.0) throw std::invalid_argument("bessel_gradient_mass: eps outside [0, 1]");
  if (s - eps >= 1.0) return INFINITY;
  if (alpha > 1.0 && r > 0.0) return INFINITY;
  if (alpha == 1.0 && r >= 1.0) return INFINITY;
  auto weight = [&](double rho) { return r == 0.0 ? 1.0 : std::exp(r * std::pow(1.0 + rho * rho, 0.5 * alpha)); };
  auto integrand = [&](double rho) {
    return weight(rho) * std::abs(bessel_kernel_derivative(rho, s, d)) * std::pow(rho, d - 1);
  };
  // [0, 1]: Gauss-Jacobi with weight rho^{-s} absorbs the origin behaviour
  // min(rho, 1)^eps is rho^eps on this piece
  const double e = s - eps;
  Rule1D gj = gauss_jacobi(64, 0.0, -e);
  double inner = 0.0;
  for (std::size_t i = 0; i < gj.x.size(); ++i) {
    const double rho = 0.5 * (1.0 + gj.x[i]);
    inner += gj.w[i] * std::pow(0.5, 1.0 - e) * integrand(rho) * std::pow(rho, s);
  }
  const double decay = alpha == 1.0 ? 1.0 - r : 1.0;
  const double rho_max = 1.0 + 45.0 / decay;
  double outer = 0.0;
  const Rule1D gl = gauss_legendre(20, 0.0, 1.0);
  for (double a = 1.0; a < rho_max; a += 1.0) {
    for (std::size_t i = 0; i < gl.x.size(); ++i) outer += gl.w[i] * integrand(a + gl.x[i]);
  }
  return sphere_area(d - 1) * (inner + outer);
}

BesselKernelTable build_bessel_table(const VelocityGrid& grid, double s, int oversample) {
  if (!(s > 0.0 && s <= 1.0)) throw std::invalid_argument("build_bessel_table: s outside (0, 1]");
  if (oversample < 1) throw std::invalid_argument("build_bessel_table: oversample < 1");
  BesselKernelTable t;
  const int d = grid.d;
  t.d = d;
  t.s = s;
  t.h = grid.h;
  t.oversample = oversample;
  const double delta = grid.h / 4.0, dp = delta / oversample;
  // periodic images sit at least `period` away; beyond a few units they are negligible
  const double period = d == 2 ? 8.0 : 4.0;
  const int m = 2 * static_cast<int>(std::ceil(period / (2.0 * dp)));
  const double dk = 2.0 * std::numbers::pi / (m * dp), knyq = std::numbers::pi / dp;
  auto filtered = [&](double k2) {
    const double eta = std::sqrt(k2) / knyq;
    return std::pow(1.0 + k2, 0.5 * (s - 2.0)) * std::exp(-36.0 * std::pow(eta, 8));
  };
  // radial multiplicities of the transverse frequencies
  std::vector<double> count;
  const int half = m / 2;
  if (d == 2) {
    count.assign(static_cast<std::size_t>(half) * half + 1, 0.0);
    for (int b = -half; b < half; ++b) count[static_cast<std::size_t>(b) * b] += 1.0;
  } else {
    count.assign(2 * static_cast<std::size_t>(half) * half + 1, 0.0);
    for (int b = -half; b < half; ++b)
      for (int c = -half; c < half; ++c) count[static_cast<std::size_t>(b) * b + static_cast<std::size_t>(c) * c] += 1.0;
  }
  std::vector<double> marginal(half + 1, 0.0);
  parallel_for(marginal.size(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t a = lo; a < hi; ++a) {
      const double k1 = dk * static_cast<double>(a);
      double acc = 0.0;
      for (std::size_t q = 0; q < count.size(); ++q)
        if (count[q] > 0.0) acc += count[q] * filtered(k1 * k1 + dk * dk * static_cast<double>(q));
      marginal[a] = acc;
    }
  });
  const double scale = 1.0 / std::pow(m * dp, d);
  std::vector<double> lx, ly;
  for (int j = 1; j <= 4; ++j) {
    const double x = j * delta;
    // d_1 phi(x, 0, ...) = sum over k1 of i k1 e^{i k1 x} marginal(|k1|); the Nyquist column is dropped
    double g = 0.0;
    for (int a = half - 1; a >= 1; --a) g += -2.0 * dk * a * std::sin(dk * a * x) * marginal[a];
    g *= scale;
    t.shell_r[j - 1] = x;
    t.shell_grad[j - 1] = g;
    t.shell_grad_exact[j - 1] = bessel_kernel_derivative(x, s, d);
    if (j >= 2)
      t.closed_form_gap = std::max(t.closed_form_gap, std::abs(g / t.shell_grad_exact[j - 1] - 1.0));
    lx.push_back(std::log(x));
    ly.push_back(std::log(x * std::abs(g)));
  }
  double mx = 0.0, my = 0.0;
  for (int j = 0; j < 4; ++j) {
    mx += lx[j] / 4.0;
    my += ly[j] / 4.0;
  }
  double sxy = 0.0, sxx = 0.0;
  for (int j = 0; j < 4; ++j) {
    sxy += (lx[j] - mx) * (ly[j] - my);
    sxx += (lx[j] - mx) * (lx[j] - mx);
  }
  t.slope = sxy / sxx;
  t.slope_expected = (2.0 - s) - d;
  return t;
}

DistributionField commutator_direct(const DistributionField& f, const CommutatorFunction& gfun, double s,
                                    int theta_nodes) {
  const auto& G = f.grid;
  const int d = G.d, n = G.n;
  if (!(s > 0.0 && s <= 1.0)) throw std::invalid_argument("commutator_direct: s outside (0, 1]");
  if (!(gfun.values.grid == G)) throw std::invalid_argument("commutator_direct: grid mismatch");
  const bool split = s == 1.0;
  if ((theta_nodes > 0 || split) && !gfun.grad) throw std::invalid_argument("commutator_direct: gradient required");
  const int span = 2 * n - 1;
  const std::size_t K = ipow(span, d);
  // phi'(|x|) / |x| at every lattice offset
  std::vector<double> radial(K, 0.0);
  std::vector<Vec> offs(K);
  for (std::size_t idx = 0; idx < K; ++idx) {
    std::size_t rem = idx;
    Vec x{0.0, 0.0, 0.0};
    for (int a = d - 1; a >= 0; --a) {
      x[a] = (static_cast<int>(rem % span) - (n - 1)) * G.h;
      rem /= span;
    }
    offs[idx] = x;
    const double r = norm_d(x, d);
    if (r > 0.0) radial[idx] = bessel_kernel_derivative(r, s, d) / r;
  }
  Rule1D th;
  if (theta_nodes > 0) th = gauss_legendre(theta_nodes, 0.0, 1.0);
  DistributionField out(G);
  const double cell = G.cell();
  parallel_for(G.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const auto ix = G.index(i);
      const Vec v = G.point(i);
      Vec gv{0.0, 0.0, 0.0};
      if (split) gv = gfun.grad(v);
      double acc = 0.0;
      for (std::size_t j = 0; j < G.size(); ++j) {
        if (j == i || f[j] == 0.0) continue;
        const auto jx = G.index(j);
        std::array<int, 3> k{0, 0, 0};
        for (int a = 0; a < d; ++a) k[a] = ix[a] - jx[a];
        std::size_t idx = 0;
        for (int a = 0; a < d; ++a) idx = idx * span + static_cast<std::size_t>(k[a] + n - 1);
        const Vec& x = offs[idx];
        double line;  // (int_0^1 grad g(v - theta x) dtheta) . x
        if (theta_nodes > 0) {
          line = 0.0;
          for (std::size_t q = 0; q < th.x.size(); ++q) {
            Vec y{0.0, 0.0, 0.0};
            for (int a = 0; a < d; ++a) y[a] = v[a] - th.x[q] * x[a];
            const Vec gg = gfun.grad(y);
            double dot = 0.0;
            for (int a = 0; a < d; ++a) dot += gg[a] * x[a];
            line += th.w[q] * dot;
          }
        } else {
          line = gfun.values[i] - gfun.values[j];
        }
        if (split) {
          for (int a = 0; a < d; ++a) line -= gv[a] * x[a];
        }
        acc += radial[idx] * line * f[j];
      }
      out[i] = -s * acc * cell;
    }
  });
  if (split) {
    for (int a = 0; a < d; ++a) {
      DistributionField gp = gradient_potential(f, s, a);
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += -s * gfun.grad(G.point(i))[a] * gp[i];
    }
  }
  return out;
}

namespace {

// J^s(f g) - g J^s f on the lattice.
DistributionField commutator_spectral(const DistributionField& f, const DistributionField& g, double s) {
  DistributionField fg(f.grid);
  for (std::size_t i = 0; i < f.size(); ++i) fg[i] = f[i] * g[i];
  DistributionField a = bessel_apply(fg, s).field;
  DistributionField b = bessel_apply(f, s).field;
  for (std::size_t i = 0; i < a.size(); ++i) a[i] -= g[i] * b[i];
  return a;
}

double relative_gap(const DistributionField& a, const DistributionField& b) {
  std::vector<double> diff(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
  const double na = l2_norm(a.grid, a.values), nd = l2_norm(a.grid, diff);
  if (na == 0.0) return nd;
  return nd / na;
}

}  // namespace

CommutatorResult loss_commutator(const DistributionField& f, const Vec& v_star, double gamma, double s,
                                 const WeightSpec& w, int theta_nodes, double frozen) {
  if (!(s > 0.0 && s <= 1.0)) throw std::invalid_argument("loss_commutator: s outside (0, 1]");
  if (w.r >= 0.5) throw std::invalid_argument("loss_commutator: r >= 1/2");
  if (gamma < 0.0 || gamma > 2.0) throw std::invalid_argument("loss_commutator: gamma outside [0, 2]");
  const auto& G = f.grid;
  const int d = G.d;
  CommutatorFunction gf;
  gf.values = sample(G, [&](const Vec& v) {
    Vec u{v[0] - v_star[0], v[1] - v_star[1], v[2] - v_star[2]};
    return gamma == 0.0 ? 1.0 : std::pow(norm_d(u, d), gamma);
  });
  gf.grad = [gamma, v_star, d](const Vec& v) {
    Vec u{0.0, 0.0, 0.0};
    for (int a = 0; a < d; ++a) u[a] = v[a] - v_star[a];
    const double r = norm_d(u, d);
    Vec out{0.0, 0.0, 0.0};
    if (gamma == 0.0 || r == 0.0) return out;
    const double c = gamma * std::pow(r, gamma - 2.0);
    for (int a = 0; a < d; ++a) out[a] = c * u[a];
    return out;
  };
  CommutatorResult res;
  res.spectral = commutator_spectral(f, gf.values, s);
  res.direct = commutator_direct(f, gf, s, theta_nodes);
  res.discrepancy = relative_gap(res.spectral, res.direct);
  LossCommutatorBound lb = loss_commutator_bound(f, f, gamma, 1.0, s, w);
  res.rows.push_back(loss_commutator_row(lb, frozen));
  return res;
}

LossCommutatorBound loss_commutator_bound(const DistributionField& f, const DistributionField& g, double gamma,
                                          double b_mass, double s, const WeightSpec& w) {
  if (w.r >= 0.5) throw std::invalid_argument("loss_commutator_bound: r >= 1/2");
  const auto& G = f.grid;
  const int d = G.d;
  DistributionField conv = convolve_power(g, gamma);
  LossCommutatorBound out;
  out.remainder = commutator_spectral(f, conv, s);
  for (auto& x : out.remainder.values) x *= b_mass;
  WeightSpec we;
  we.p = 2.0;
  we.r = w.r;
  we.alpha = w.alpha;
  out.lhs = weighted_norm(out.remainder, we);
  WeightSpec wg;
  wg.p = 2.0;
  wg.mu = 0.5 * (d - (1.0 - gamma));
  out.norms = b_mass * weighted_norm(f, we) * weighted_norm(g, wg);
  return out;
}

AuditRow loss_commutator_row(const LossCommutatorBound& b, double frozen) {
  return make_row("loss_commutator_weighted", b.lhs, frozen * b.norms, 0.0,
                  "weighted L2 norm of the loss remainder against the frozen constant times the norm product",
                  json_constants({{"C", frozen}, {"norms", b.norms}}));
}

AngularKernel transformed_kernel(const AngularKernel& b, double s) {
  return multiply_profile(b, [s](double y) { return std::pow(2.0 / (1.0 + y), 0.5 * s); });
}

GainCommutatorResult gain_commutator(const DistributionField& f, const DistributionField& g,
                                     const CollisionKernel& kernel, const SphereQuadrature& sphere, double s,
                                     const WeightSpec& w, const Interpolation& interp, double frozen) {
  if (w.r >= 0.25) throw std::invalid_argument("gain_commutator: r >= 1/4");
  if (s < 0.0 || s > 1.0) throw std::invalid_argument("gain_commutator: s outside [0, 1]");
  const int d = f.grid.d;
  const Potential phi = power_potential(kernel.gamma);
  const AngularKernel bs = transformed_kernel(kernel.angular, s);
  DistributionField left = bessel_apply(q_plus_general(f, g, phi, kernel.angular, sphere, interp), s).field;
  DistributionField Jf = bessel_apply(f, s).field;
  DistributionField right = q_plus_general(Jf, g, phi, bs, sphere, interp);
  GainCommutatorResult out;
  out.remainder = DistributionField(f.grid);
  for (std::size_t i = 0; i < left.size(); ++i) out.remainder[i] = left[i] - right[i];
  WeightSpec we;
  we.p = 2.0;
  we.r = w.r;
  we.alpha = w.alpha;
  out.lhs = weighted_norm(out.remainder, we);
  WeightSpec wf = we, wg = we;
  wf.mu = kernel.gamma;
  wg.mu = kernel.gamma + 0.5 * (d + 0.5);
  out.norms = kernel.angular.total_mass * weighted_norm(f, wf) * weighted_norm(g, wg);
  out.row = make_row("gain_commutator_weighted", out.lhs, frozen * out.norms, 0.0,
                     "weighted L2 norm of the gain remainder against the frozen constant times the norm product",
                     json_constants({{"C", frozen}, {"norms", out.norms}, {"s", s}}));
  return out;
}

WeightCommutatorResult weight_commutator(const DistributionField& f, double s, double r, double alpha,
                                         double frozen) {
  if (!(s > 0.0 && s <= 1.0)) throw std::invalid_argument("weight_commutator: s outside (0, 1]");
  if (r < 0.0 || r >= 0.25) throw std::invalid_argument("weight_commutator: r outside [0, 1/4)");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("weight_commutator: alpha outside (0, 1]");
  const auto& G = f.grid;
  const int d = G.d;
  CommutatorFunction gf;
  gf.values = sample(G, [&](const Vec& v) { return std::exp(r * std::pow(bracket(v, d), alpha)); });
  gf.grad = [r, alpha, d](const Vec& v) {
    const double b = bracket(v, d);
    const double c = r * alpha * std::pow(b, alpha - 2.0) * std::exp(r * std::pow(b, alpha));
    Vec out{0.0, 0.0, 0.0};
    for (int a = 0; a < d; ++a) out[a] = c * v[a];
    return out;
  };
  WeightCommutatorResult out;
  out.spectral = commutator_spectral(f, gf.values, s);
  if (r == 0.0) {
    out.direct = DistributionField(G);
  } else {
    out.direct = commutator_direct(f, gf, s, 0);
  }
  out.discrepancy = relative_gap(out.spectral, out.direct);
  out.lhs = l2_norm(G, out.spectral.values);
  WeightSpec we;
  we.p = 2.0;
  we.r = r;
  we.alpha = alpha;
  const double mass = s < 1.0 ? bessel_gradient_mass(s, d, 2.0 * r, alpha)
                               : 1.0 + bessel_gradient_mass(s, d, 2.0 * r, alpha, 1.0);
  out.norms = mass * weighted_norm(f, we);
  out.row = make_row("weight_commutator", out.lhs, frozen * out.norms, 0.0,
                     "L2 norm of the weight commutator against the frozen factor times the kernel mass bound",
                     json_constants({{"C", frozen}, {"grad_phi_mass", mass}, {"r", r}, {"alpha", alpha}}));
  return out;
}

CommutatorCalibration calibrate_commutators(int n, bool with_gain) {
  const int d = 2;
  const VelocityGrid G = build_grid(d, n, 8.0);
  std::vector<DistributionField> fam;
  for (double T : {0.5, 1.0, 2.0}) fam.push_back(maxwellian_field(G, 1.0, {0.0, 0.0, 0.0}, T));
  fam.push_back(maxwellian_field(G, 1.0, {1.0, -0.5, 0.0}, 0.8));
  {
    DistributionField a = maxwellian_field(G, 0.5, {1.5, 0.0, 0.0}, 0.5);
    DistributionField b = maxwellian_field(G, 0.5, {-1.5, 0.0, 0.0}, 0.5);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    fam.push_back(a);
  }
  const SphereQuadrature sphere = build_sphere(d, 32);
  CommutatorCalibration c;
  for (std::size_t a = 0; a < fam.size(); ++a) {
    for (double s : {0.25, 0.5, 1.0}) {
      for (double gam : {0.5, 1.0, 1.5})
        for (double r : {0.0, 0.2, 0.4}) {
          WeightSpec w;
          w.r = r;
          LossCommutatorBound lb = loss_commutator_bound(fam[a], fam[(a + 1) % fam.size()], gam, 1.0, s, w);
          c.loss = std::max(c.loss, lb.lhs / lb.norms);
        }
      for (double r : {0.05, 0.1, 0.2})
        for (double al : {0.5, 1.0}) {
          WeightCommutatorResult wc = weight_commutator(fam[a], s, r, al, 1.0);
          c.weight = std::max(c.weight, wc.lhs / wc.norms);
        }
      if (!with_gain) continue;
      for (double gam : {0.0, 1.0})
        for (double r : {0.0, 0.2}) {
          WeightSpec w;
          w.r = r;
          const CollisionKernel K =
              make_collision_kernel(gam, make_angular_kernel(AngularKind::uniform, {1.0}, d, true));
          GainCommutatorResult gc = gain_commutator(fam[a], fam[(a + 2) % fam.size()], K, sphere, s, w,
                                                    Interpolation{3, 2}, 1.0);
          c.gain = std::max(c.gain, gc.lhs / gc.norms);
        }
    }
  }
  return c;
}

double split_power_integral(double A, double B, double a) {
  if (!(A >= 0.0 && A < B) || !(a > 0.0 && a < 1.0)) throw std::invalid_argument("split_power_integral: range");
  return (std::pow(A, 1.0 - a) + std::pow(B - A, 1.0 - a)) / ((1.0 - a) * B);
}

double split_power_quadrature(double A, double B, double a, int) {
  if (!(A >= 0.0 && A < B) || !(a > 0.0 && a < 1.0)) throw std::invalid_argument("split_power_quadrature: range");
  const double c = A / B;
  // |B (theta - c)|^{-a} with t = |theta - c| on either side of the zero
  auto fn = [B, a](double t) { return std::pow(B * t, -a); };
  return endpoint_power_quadrature(fn, c) + endpoint_power_quadrature(fn, 1.0 - c);
}

AuditReport elementary_bounds_check(int samples, double eps, double a_max, std::uint64_t seed) {
  if (!(eps > 0.0 && eps <= 1.0) || a_max < 0.0) throw std::invalid_argument("elementary_bounds_check: ranges");
  AuditReport rep;
  rep.title = "elementary_bounds";
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  // closed form of the split power integral against quadrature
  double worst = 0.0;
  const int n_closed = 1000;
  for (int k = 0; k < n_closed; ++k) {
    const double B = std::pow(10.0, -2.0 + 4.0 * u01(rng));
    const double A = k % 10 == 0 ? 0.0 : B * u01(rng);
    const double a = 0.02 + 0.96 * u01(rng);
    const double exact = split_power_integral(A, B, a);
    const double quad = split_power_quadrature(A, B, a);
    worst = std::max(worst, std::abs(exact - quad) / exact);
  }
  rep.rows.push_back(make_row("split_power_closed_form", worst, 1e-8, 0.0,
                              "max relative gap between closed form and quadrature",
                              json_constants({{"cases", n_closed}})));

  // vector power difference inequality
  int violations = 0;
  double worst_ratio = 0.0;
  for (int k = 0; k < samples; ++k) {
    const int d = 2 + static_cast<int>(k % 2);
    const double e = eps * (1.0 - u01(rng)) + 1e-300;
    const double a = a_max * u01(rng);
    Vec x = random_vector(rng, d), y;
    switch (k % 4) {
      case 0:
        y = x;
        break;
      case 1: {
        Vec p = random_vector(rng, d);
        const double t = std::pow(10.0, -6.0 * u01(rng)) * norm_d(x, d) / norm_d(p, d);
        for (int c = 0; c < d; ++c) y[c] = x[c] + t * p[c];
        break;
      }
      default:
        y = random_vector(rng, d);
    }
    const double nx = norm_d(x, d), ny = norm_d(y, d);
    Vec diff{0.0, 0.0, 0.0};
    for (int c = 0; c < d; ++c) diff[c] = x[c] / std::pow(nx, 1.0 + a) - y[c] / std::pow(ny, 1.0 + a);
    Vec xy{0.0, 0.0, 0.0};
    for (int c = 0; c < d; ++c) xy[c] = x[c] - y[c];
    const double lhs = norm_d(diff, d);
    const double rhs = 2.0 * (1.0 + a) * std::pow(norm_d(xy, d), e) * (std::pow(nx, -a - e) + std::pow(ny, -a - e));
    if (lhs > rhs * (1.0 + 1e-12)) ++violations;
    if (rhs > 0.0) worst_ratio = std::max(worst_ratio, lhs / rhs);
  }
  rep.rows.push_back(make_row("vector_power_difference_violations", violations, 0.0, 0.0,
                              "sampled violations of the vector power difference inequality",
                              json_constants({{"samples", samples}, {"max_ratio", worst_ratio}})));

  // segment integral chain
  int chain_violations = 0;
  for (int k = 0; k < samples / 10; ++k) {
    const int d = 2 + static_cast<int>(k % 2);
    const double gamma = 0.05 + 0.95 * u01(rng);
    Vec w = random_vector(rng, d), x = random_vector(rng, d);
    double xx = 0.0, wx = 0.0;
    for (int c = 0; c < d; ++c) {
      xx += x[c] * x[c];
      wx += w[c] * x[c];
    }
    const double ts = std::clamp(-wx / xx, 0.0, 1.0);
    auto seg = [&](double th) {
      Vec p{0.0, 0.0, 0.0};
      for (int c = 0; c < d; ++c) p[c] = w[c] + th * x[c];
      return std::pow(norm_d(p, d), -(1.0 - gamma));
    };
    const double integral = de_quadrature([&](double t) { return seg(ts - t); }, ts) +
                            de_quadrature([&](double t) { return seg(ts + t); }, 1.0 - ts);
    Vec wx1{0.0, 0.0, 0.0};
    for (int c = 0; c < d; ++c) wx1[c] = w[c] + x[c];
    const double nw = norm_d(w, d), nwx = norm_d(wx1, d);
    const double mid = (std::pow(nw, gamma) + std::pow(nwx, gamma)) / (nw + nwx);
    const double top = 3.0 * std::pow(nw, -(1.0 - gamma));
    if (gamma * integral > mid * (1.0 + 1e-9) || mid > top * (1.0 + 1e-12)) ++chain_violations;
  }
  rep.rows.push_back(make_row("segment_integral_chain_violations", chain_violations, 0.0, 0.0,
                              "sampled violations of the segment integral chain",
                              json_constants({{"samples", samples / 10}})));
  return rep;
}

ProbeReport gain_regularity_probe(const std::function<double(const Vec&)>& f,
                                  const std::function<double(const Vec&)>& g, const NiceRemainderSplit& split,
                                  double s, const WeightSpec& w, int d, double L, const std::vector<int>& levels,
                                  int n_angles) {
  if (!split.phi_nice || !split.b_nice.profile) throw std::invalid_argument("gain_regularity_probe: not a nice piece");
  if (levels.empty()) throw std::invalid_argument("gain_regularity_probe: empty ladder");
  ProbeReport rep;
  const double s_plus = s + 0.5;
  rep.mu = s_plus + split.gamma + 1.5;
  rep.sobolev_order = s + 0.5 * (d - 1);
  SphereQuadrature sphere = build_sphere(d, n_angles);
  for (std::size_t lv = 0; lv < levels.size(); ++lv) {
    const VelocityGrid G = build_grid(d, levels[lv], L);
    DistributionField F = sample(G, f), Gf = sample(G, g);
    DistributionField Q = q_plus_general(F, Gf, split.phi_nice, split.b_nice, sphere, Interpolation{3, 4});
    DistributionField eQ(G), ef(G), eg(G);
    for (std::size_t i = 0; i < G.size(); ++i) {
      const Vec v = G.point(i);
      const double br = bracket(v, d);
      const double e1 = std::exp(w.r * std::pow(br, w.alpha));
      eQ[i] = e1 * Q[i];
      ef[i] = e1 * std::pow(br, rep.mu) * F[i];
      eg[i] = e1 * e1 * std::pow(br, rep.mu) * Gf[i];
    }
    WeightSpec h1;
    h1.p = 2.0;
    h1.k = rep.sobolev_order;
    WeightSpec hs = h1;
    hs.k = s;
    WeightSpec l1;
    l1.p = 1.0;
    ProbeRow row;
    row.level = static_cast<int>(lv);
    row.h = G.h;
    row.lhs = sobolev_exp_norm(eQ, h1);
    row.rhs = sobolev_exp_norm(ef, hs) * weighted_norm(eg, l1);
    row.ratio = row.rhs > 0.0 ? row.lhs / row.rhs : 0.0;
    rep.rows.push_back(row);
  }
  if (rep.rows.size() >= 2) {
    const double a = rep.rows[rep.rows.size() - 2].ratio, b = rep.rows.back().ratio;
    rep.variation = std::abs(a - b) / std::max(std::abs(a), std::abs(b));
  }
  rep.pass = std::isfinite(rep.rows.back().ratio) && rep.variation < 0.2;
  return rep;
}

}  // namespace kt
