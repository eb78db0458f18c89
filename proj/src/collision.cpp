#include "kinetic_tails/collision.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <stdexcept>

#include <fftw3.h>

#include "kinetic_tails/parallel.hpp"
#include "kinetic_tails/quadrature.hpp"

namespace kt {

namespace {

// Band-limited refinement of a periodic array with odd period P by an integer factor U.
std::vector<double> fourier_refine(const std::vector<double>& coarse, int d, int P, int U) {
  const int Q = P * U;
  std::size_t nc = 1, nf = 1;
  for (int k = 0; k < d; ++k) {
    nc *= static_cast<std::size_t>(P);
    nf *= static_cast<std::size_t>(Q);
  }
  std::vector<fftw_complex> spec(nc), big(nf);
  std::vector<int> dims_c(d, P), dims_f(d, Q);
  for (std::size_t i = 0; i < nc; ++i) {
    spec[i][0] = coarse[i];
    spec[i][1] = 0.0;
  }
  static std::mutex plan_mutex;
  fftw_plan fwd, bwd;
  {
    std::lock_guard<std::mutex> lock(plan_mutex);
    fwd = fftw_plan_dft(d, dims_c.data(), spec.data(), spec.data(), FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    bwd = fftw_plan_dft(d, dims_f.data(), big.data(), big.data(), FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  }
  fftw_execute(fwd);
  for (auto& z : big) z[0] = z[1] = 0.0;
  const int half = P / 2;
  for (std::size_t i = 0; i < nc; ++i) {
    std::size_t rem = i, j = 0;
    std::array<int, 3> m{};
    for (int k = d - 1; k >= 0; --k) {
      m[k] = static_cast<int>(rem % P);
      rem /= P;
    }
    for (int k = 0; k < d; ++k) {
      int freq = m[k] <= half ? m[k] : m[k] - P;
      j = j * Q + static_cast<std::size_t>(freq >= 0 ? freq : freq + Q);
    }
    big[j][0] = spec[i][0];
    big[j][1] = spec[i][1];
  }
  fftw_execute(bwd);
  {
    std::lock_guard<std::mutex> lock(plan_mutex);
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
  }
  std::vector<double> out(nf);
  const double scale = 1.0 / static_cast<double>(nc);
  for (std::size_t i = 0; i < nf; ++i) out[i] = big[i][0] * scale;
  return out;
}

double norm_d(const Vec& x, int d) {
  double s = 0.0;
  for (int k = 0; k < d; ++k) s += x[k] * x[k];
  return std::sqrt(s);
}

// Zero-padded (and optionally Fourier-refined) copy so that interpolation
// stencils never need bounds checks.
struct Sampler {
  int n = 0, pad = 0, P = 0, U = 1, d = 2, order = 1;
  long fine = 0;  // points per axis
  std::vector<double> data;

  Sampler(const DistributionField& f, const Interpolation& in)
      : n(f.grid.n), pad(f.grid.n + 3 + in.order / 2), U(in.upsample), d(f.grid.d), order(in.order) {
    if (order != 1 && order != 3 && order != 5 && order != 7)
      throw std::invalid_argument("interpolation order must be 1, 3, 5 or 7");
    if (std::pow(order + 1, d) > 64) throw std::invalid_argument("interpolation stencil too large for this dimension");
    if (U < 1) throw std::invalid_argument("upsample factor must be >= 1");
    P = n + 2 * pad + 1;  // odd, so the refined spectrum has no Nyquist bin
    fine = static_cast<long>(P) * U;
    std::size_t coarse_total = 1, total = 1;
    for (int k = 0; k < d; ++k) {
      coarse_total *= static_cast<std::size_t>(P);
      total *= static_cast<std::size_t>(fine);
    }
    std::vector<double> coarse(coarse_total, 0.0);
    for (std::size_t i = 0; i < f.size(); ++i) {
      auto ix = f.grid.index(i);
      std::size_t idx = 0;
      for (int k = 0; k < d; ++k) idx = idx * P + static_cast<std::size_t>(ix[k] + pad);
      coarse[idx] = f[i];
    }
    if (U == 1) {
      data = std::move(coarse);
      return;
    }
    data = fourier_refine(coarse, d, P, U);
  }

  long stride(int axis) const {
    long s = 1;
    for (int k = d - 1; k > axis; --k) s *= fine;
    return s;
  }
  // flat index of the fine point sitting on coarse lattice index ix
  long at(const std::array<int, 3>& ix) const {
    long idx = 0;
    for (int k = 0; k < d; ++k) idx = idx * fine + static_cast<long>(ix[k] + pad) * U;
    return idx;
  }
};

struct Stencil {
  int taps = 2;
  int count = 4;
  std::array<long, 64> offset{};
  std::array<double, 64> weight{};
};

// Lagrange weights on nodes -(order-1)/2 .. (order+1)/2 around the cell [0, 1).
void lagrange_weights(double t, int order, double* w) {
  if (order == 1) {
    w[0] = 1.0 - t;
    w[1] = t;
    return;
  }
  const int taps = order + 1, first = -(order - 1) / 2;
  for (int a = 0; a < taps; ++a) {
    double num = 1.0, den = 1.0;
    for (int b = 0; b < taps; ++b) {
      if (b == a) continue;
      num *= t - (first + b);
      den *= double(a - b);
    }
    w[a] = num / den;
  }
}

// pos is a displacement in coarse index units.
Stencil make_stencil(const Vec& pos, const Sampler& s) {
  Stencil st;
  st.taps = s.order + 1;
  double w1[3][8];
  long base = 0;
  for (int k = 0; k < s.d; ++k) {
    double X = pos[k] * s.U;
    double fl = std::floor(X);
    lagrange_weights(X - fl, s.order, w1[k]);
    base += (static_cast<long>(fl) - (s.order - 1) / 2) * s.stride(k);
  }
  st.count = 1;
  for (int k = 0; k < s.d; ++k) st.count *= st.taps;
  for (int c = 0; c < st.count; ++c) {
    int rem = c;
    long off = base;
    double w = 1.0;
    for (int k = s.d - 1; k >= 0; --k) {
      int q = rem % st.taps;
      rem /= st.taps;
      off += q * s.stride(k);
      w *= w1[k][q];
    }
    st.offset[c] = off;
    st.weight[c] = w;
  }
  return st;
}

}  // namespace

Vec rotate_to(const Vec& node, const Vec& u_hat, int d) {
  if (d == 2) {
    Vec perp{-u_hat[1], u_hat[0], 0.0};
    return {node[0] * u_hat[0] + node[1] * perp[0], node[0] * u_hat[1] + node[1] * perp[1], 0.0};
  }
  int axis = 0;
  for (int k = 1; k < 3; ++k)
    if (std::abs(u_hat[k]) < std::abs(u_hat[axis])) axis = k;
  Vec e1{0.0, 0.0, 0.0};
  e1[axis] = 1.0;
  double dot = u_hat[axis];
  for (int k = 0; k < 3; ++k) e1[k] -= dot * u_hat[k];
  double n1 = norm_d(e1, 3);
  for (int k = 0; k < 3; ++k) e1[k] /= n1;
  Vec e2{u_hat[1] * e1[2] - u_hat[2] * e1[1], u_hat[2] * e1[0] - u_hat[0] * e1[2],
         u_hat[0] * e1[1] - u_hat[1] * e1[0]};
  Vec out{};
  for (int k = 0; k < 3; ++k) out[k] = node[0] * u_hat[k] + node[1] * e1[k] + node[2] * e2[k];
  return out;
}

CollisionFrame make_frame(const Vec& v, const Vec& v_star, const Vec& sigma, int d) {
  CollisionFrame c;
  c.v = v;
  c.v_star = v_star;
  c.sigma = sigma;
  for (int k = 0; k < d; ++k) c.u[k] = v[k] - v_star[k];
  double un = norm_d(c.u, d);
  for (int k = 0; k < d; ++k) {
    c.u_hat[k] = un > 0.0 ? c.u[k] / un : (k == 0 ? 1.0 : 0.0);
    c.u_plus[k] = 0.5 * (c.u[k] + un * sigma[k]);
    c.u_minus[k] = 0.5 * (c.u[k] - un * sigma[k]);
    c.v_prime[k] = v[k] - c.u_minus[k];
    c.v_star_prime[k] = v_star[k] + c.u_minus[k];
  }
  return c;
}

Potential power_potential(double gamma) {
  if (gamma == 0.0) return [](double) { return 1.0; };
  return [gamma](double x) { return x <= 0.0 ? 0.0 : std::pow(x, gamma); };
}

DistributionField convolve_potential(const DistributionField& f, const Potential& phi) {
  const auto& g = f.grid;
  const int n = g.n, d = g.d;
  const int span = 2 * n - 1;
  std::size_t tsize = 1;
  for (int k = 0; k < d; ++k) tsize *= span;
  std::vector<double> table(tsize);
  for (std::size_t t = 0; t < tsize; ++t) {
    std::size_t rem = t;
    double r2 = 0.0;
    for (int k = d - 1; k >= 0; --k) {
      int o = static_cast<int>(rem % span) - (n - 1);
      rem /= span;
      r2 += double(o) * o;
    }
    table[t] = phi(g.h * std::sqrt(r2));
  }
  DistributionField out(g);
  const double cell = g.cell();
  parallel_for(g.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      auto ii = g.index(i);
      double acc = 0.0;
      for (std::size_t j = 0; j < g.size(); ++j) {
        double fj = f[j];
        if (fj == 0.0) continue;
        auto jj = g.index(j);
        std::size_t t = 0;
        for (int k = 0; k < d; ++k) t = t * span + static_cast<std::size_t>(ii[k] - jj[k] + n - 1);
        acc += fj * table[t];
      }
      out[i] = acc * cell;
    }
  });
  return out;
}

DistributionField convolve_power(const DistributionField& f, double gamma) {
  if (!(gamma >= 0.0 && gamma <= 2.0)) throw std::invalid_argument("convolve_power: gamma outside [0,2]");
  return convolve_potential(f, power_potential(gamma));
}

DistributionField collision_frequency(const DistributionField& f, const CollisionKernel& kernel) {
  DistributionField c = convolve_power(f, kernel.gamma);
  for (auto& v : c.values) v *= kernel.angular.total_mass;
  return c;
}

DistributionField q_minus(const DistributionField& f, const DistributionField& g, const CollisionKernel& kernel) {
  if (!(f.grid == g.grid)) throw std::invalid_argument("q_minus: mismatched grids");
  DistributionField c = collision_frequency(g, kernel);
  for (std::size_t i = 0; i < c.size(); ++i) c[i] *= f[i];
  return c;
}

namespace {

enum class Gather { gain, dissipation };

// Sum over lattice offsets k = i - j and sphere nodes of Phi(h|k|) b w h^d times
// f(v') g(v'_*) (gain) or (x - y) log(x / y) with x = f'f'_*, y = f f_* (dissipation).
template <Gather mode>
DistributionField gather(const DistributionField& f, const DistributionField& g, const Potential& phi,
                         const AngularKernel& b, const SphereQuadrature& sphere, const Interpolation& interp) {
  if (!(f.grid == g.grid)) throw std::invalid_argument("q_plus: mismatched grids");
  if (sphere.d != f.grid.d) throw std::invalid_argument("q_plus: sphere dimension mismatch");
  const auto& grid = f.grid;
  const int n = grid.n, d = grid.d;
  Sampler F(f, interp), G(g, interp);
  const double cell = grid.cell();

  struct Node {
    Vec x;
    double wb;
  };
  std::vector<Node> active;
  for (std::size_t m = 0; m < sphere.nodes.size(); ++m) {
    double wb = b(sphere.polar[m]) * sphere.weights[m];
    if (wb != 0.0) active.push_back({sphere.nodes[m], wb});
  }

  DistributionField out(grid);
  const long last = F.stride(d - 1) * F.U;  // fine step between neighbouring outputs on the last axis

  parallel_for(static_cast<std::size_t>(n), [&](std::size_t rb, std::size_t re) {
    const int row_b = static_cast<int>(rb), row_e = static_cast<int>(re);
    std::array<int, 3> k{0, 0, 0};
    const int span = 2 * n - 1;
    std::size_t n_off = 1;
    for (int a = 0; a < d; ++a) n_off *= span;
    for (std::size_t t = 0; t < n_off; ++t) {
      std::size_t rem = t;
      for (int a = d - 1; a >= 0; --a) {
        k[a] = static_cast<int>(rem % span) - (n - 1);
        rem /= span;
      }
      double klen2 = 0.0;
      for (int a = 0; a < d; ++a) klen2 += double(k[a]) * k[a];
      double klen = std::sqrt(klen2);
      double pot = phi(grid.h * klen);
      if (pot == 0.0) continue;
      Vec u_hat{1.0, 0.0, 0.0};
      if (klen > 0.0)
        for (int a = 0; a < d; ++a) u_hat[a] = k[a] / klen;
      int lo[3], hi[3];
      for (int a = 0; a < 3; ++a) {
        lo[a] = a < d ? std::max(0, k[a]) : 0;
        hi[a] = a < d ? std::min(n, n + k[a]) : 1;
      }
      long koff = 0;
      for (int a = 0; a < d; ++a) koff = koff * n + k[a];
      lo[0] = std::max(lo[0], row_b);
      hi[0] = std::min(hi[0], row_e);
      if (lo[0] >= hi[0]) continue;
      for (const auto& node : active) {
        Vec s = rotate_to(node.x, u_hat, d);
        Vec a1{}, a2{};
        for (int a = 0; a < d; ++a) {
          double am = 0.5 * (klen * s[a] - k[a]);  // -u^-/h in index units
          a1[a] = am;
          a2[a] = -k[a] - am;
        }
        const Stencil s1 = make_stencil(a1, F), s2 = make_stencil(a2, G);
        const double W = pot * node.wb * cell;
        const int nc = s1.count;
        auto row = [&](const std::array<int, 3>& first, std::size_t out_idx, int len) {
          const long base = F.at(first);
          const double* fp = F.data.data() + base;
          const double* gp = G.data.data() + base;
          double* o = out.values.data() + out_idx;
          for (int c = 0; c < len; ++c) {
            const long shift = c * last;
            double fv = 0.0, gv = 0.0;
            for (int q = 0; q < nc; ++q) {
              fv += s1.weight[q] * fp[shift + s1.offset[q]];
              gv += s2.weight[q] * gp[shift + s2.offset[q]];
            }
            if constexpr (mode == Gather::gain) {
              o[c] += W * fv * gv;
            } else {
              const double x = std::max(fv * gv, 0.0);
              const double y = f.values[out_idx + c] * f.values[out_idx + c - koff];
              if (x != y) o[c] += W * (x - y) * (std::log(std::max(x, kLogFloor)) - std::log(std::max(y, kLogFloor)));
            }
          }
        };
        if (d == 2) {
          for (int ix = lo[0]; ix < hi[0]; ++ix) row({ix, lo[1], 0}, static_cast<std::size_t>(ix) * n + lo[1], hi[1] - lo[1]);
        } else {
          for (int ix = lo[0]; ix < hi[0]; ++ix)
            for (int iy = lo[1]; iy < hi[1]; ++iy)
              row({ix, iy, lo[2]}, (static_cast<std::size_t>(ix) * n + iy) * n + lo[2], hi[2] - lo[2]);
        }
      }
    }
  });
  return out;
}

}  // namespace

DistributionField q_plus_general(const DistributionField& f, const DistributionField& g, const Potential& phi,
                                 const AngularKernel& b, const SphereQuadrature& sphere, const Interpolation& interp) {
  return gather<Gather::gain>(f, g, phi, b, sphere, interp);
}

DistributionField dissipation_density(const DistributionField& f, const Potential& phi, const AngularKernel& b,
                                      const SphereQuadrature& sphere, const Interpolation& interp) {
  return gather<Gather::dissipation>(f, f, phi, b, sphere, interp);
}

DistributionField q_plus(const DistributionField& f, const DistributionField& g, const CollisionKernel& kernel,
                         const SphereQuadrature& sphere, const Interpolation& interp) {
  return q_plus_general(f, g, power_potential(kernel.gamma), kernel.angular, sphere, interp);
}

DistributionField collision(const DistributionField& f, const CollisionKernel& kernel,
                            const SphereQuadrature& sphere, const Interpolation& interp) {
  DistributionField qp = q_plus(f, f, kernel, sphere, interp);
  DistributionField qm = q_minus(f, f, kernel);
  for (std::size_t i = 0; i < qp.size(); ++i) qp[i] -= qm[i];
  return qp;
}

namespace {

// Periodic band-limited interpolation kernel of odd period P.
double dirichlet(double x, int P) {
  double r = std::remainder(x, static_cast<double>(P));
  if (std::abs(r) < 1e-12) return 1.0;
  double nearest = std::round(r);
  if (std::abs(r - nearest) < 1e-12) return 0.0;
  return std::sin(M_PI * r) / (P * std::sin(M_PI * r / P));
}

}  // namespace

std::vector<double> gain_linearization(const DistributionField& m, const Potential& phi, const AngularKernel& b,
                                       const SphereQuadrature& sphere, const Interpolation& interp) {
  if (sphere.d != m.grid.d) throw std::invalid_argument("gain_linearization: sphere dimension mismatch");
  const auto& grid = m.grid;
  const int n = grid.n, d = grid.d;
  const std::size_t N = grid.size();
  Sampler M(m, interp);
  const double cell = grid.cell();

  struct Entry {
    std::array<int, 3> k;
    Vec a1, a2;
    double W;
  };
  std::vector<Entry> entries;
  {
    const int span = 2 * n - 1;
    std::size_t n_off = 1;
    for (int a = 0; a < d; ++a) n_off *= span;
    for (std::size_t t = 0; t < n_off; ++t) {
      std::array<int, 3> k{0, 0, 0};
      std::size_t rem = t;
      for (int a = d - 1; a >= 0; --a) {
        k[a] = static_cast<int>(rem % span) - (n - 1);
        rem /= span;
      }
      double klen2 = 0.0;
      for (int a = 0; a < d; ++a) klen2 += double(k[a]) * k[a];
      double klen = std::sqrt(klen2);
      double pot = phi(grid.h * klen);
      if (pot == 0.0) continue;
      Vec u_hat{1.0, 0.0, 0.0};
      if (klen > 0.0)
        for (int a = 0; a < d; ++a) u_hat[a] = k[a] / klen;
      for (std::size_t q = 0; q < sphere.nodes.size(); ++q) {
        double wb = b(sphere.polar[q]) * sphere.weights[q];
        if (wb == 0.0) continue;
        Vec s = rotate_to(sphere.nodes[q], u_hat, d);
        Entry e{k, {}, {}, pot * wb * cell};
        for (int a = 0; a < d; ++a) {
          double am = 0.5 * (klen * s[a] - k[a]);
          e.a1[a] = am;
          e.a2[a] = -k[a] - am;
        }
        entries.push_back(e);
      }
    }
  }

  const long fine = M.fine;
  std::size_t fine_total = 1;
  for (int a = 0; a < d; ++a) fine_total *= static_cast<std::size_t>(fine);
  // transpose of the refinement restricted to interior coarse indices
  std::vector<double> R;
  if (M.U > 1) {
    R.assign(static_cast<std::size_t>(fine) * n, 0.0);
    for (long p = 0; p < fine; ++p)
      for (int j = 0; j < n; ++j) R[p * n + j] = dirichlet(double(p) / M.U - (j + M.pad), M.P);
  }

  std::vector<double> out(N * N, 0.0);
  parallel_for(N, [&](std::size_t rb, std::size_t re) {
    std::vector<double> buf(fine_total, 0.0), tmp1, tmp2;
    for (std::size_t i = rb; i < re; ++i) {
      auto ix = grid.index(i);
      const long base = M.at(ix);
      for (const auto& e : entries) {
        bool inside = true;
        for (int a = 0; a < d; ++a) {
          int js = ix[a] - e.k[a];
          if (js < 0 || js >= n) inside = false;
        }
        if (!inside) continue;
        const Stencil s1 = make_stencil(e.a1, M), s2 = make_stencil(e.a2, M);
        double m1 = 0.0, m2 = 0.0;
        for (int q = 0; q < s1.count; ++q) {
          m1 += s1.weight[q] * M.data[base + s1.offset[q]];
          m2 += s2.weight[q] * M.data[base + s2.offset[q]];
        }
        // Q+(m, h): h read at v'_*;  Q+(h, m): h read at v'
        for (int q = 0; q < s2.count; ++q) buf[base + s2.offset[q]] += e.W * m1 * s2.weight[q];
        for (int q = 0; q < s1.count; ++q) buf[base + s1.offset[q]] += e.W * m2 * s1.weight[q];
      }
      double* row = out.data() + i * N;
      if (M.U == 1) {
        for (std::size_t j = 0; j < N; ++j) row[j] = buf[M.at(grid.index(j))];
      } else if (d == 2) {
        tmp1.assign(static_cast<std::size_t>(fine) * n, 0.0);
        for (long p0 = 0; p0 < fine; ++p0) {
          const double* bp = buf.data() + p0 * fine;
          for (long p1 = 0; p1 < fine; ++p1) {
            double v = bp[p1];
            if (v == 0.0) continue;
            const double* rp = R.data() + p1 * n;
            for (int j1 = 0; j1 < n; ++j1) tmp1[p0 * n + j1] += v * rp[j1];
          }
        }
        for (long p0 = 0; p0 < fine; ++p0)
          for (int j0 = 0; j0 < n; ++j0) {
            double r = R[p0 * n + j0];
            for (int j1 = 0; j1 < n; ++j1) row[j0 * n + j1] += r * tmp1[p0 * n + j1];
          }
      } else {
        const std::size_t ff = static_cast<std::size_t>(fine);
        tmp1.assign(ff * ff * n, 0.0);
        for (std::size_t p = 0; p < ff * ff; ++p) {
          const double* bp = buf.data() + p * ff;
          for (std::size_t p2 = 0; p2 < ff; ++p2) {
            double v = bp[p2];
            if (v == 0.0) continue;
            const double* rp = R.data() + p2 * n;
            for (int j2 = 0; j2 < n; ++j2) tmp1[p * n + j2] += v * rp[j2];
          }
        }
        tmp2.assign(ff * n * n, 0.0);
        for (std::size_t p0 = 0; p0 < ff; ++p0)
          for (std::size_t p1 = 0; p1 < ff; ++p1)
            for (int j1 = 0; j1 < n; ++j1) {
              double r = R[p1 * n + j1];
              if (r == 0.0) continue;
              for (int j2 = 0; j2 < n; ++j2) tmp2[(p0 * n + j1) * n + j2] += r * tmp1[(p0 * ff + p1) * n + j2];
            }
        for (std::size_t p0 = 0; p0 < ff; ++p0)
          for (int j0 = 0; j0 < n; ++j0) {
            double r = R[p0 * n + j0];
            if (r == 0.0) continue;
            for (int j = 0; j < n * n; ++j) row[j0 * n * n + j] += r * tmp2[p0 * n * n + j];
          }
      }
      std::fill(buf.begin(), buf.end(), 0.0);
    }
  });
  return out;
}

double power_difference_constant(double gamma) { return gamma <= 1.0 ? 1.0 : std::pow(2.0, 1.0 - gamma); }

LowerBoundCertificate lower_bound_constant(double c, double C, double B, double gamma, double two_plus,
                                           double r_probe) {
  if (!(c > 0.0)) throw std::invalid_argument("lower_bound_constant: degenerate data (c <= 0)");
  if (!(two_plus > 2.0)) throw std::invalid_argument("lower_bound_constant: moment order must exceed 2");
  LowerBoundCertificate cert;
  cert.gamma = gamma;
  cert.two_plus = two_plus;
  cert.c_lower = c;
  cert.C_upper = C;
  cert.B = B;
  cert.c_gamma = power_difference_constant(gamma);
  if (gamma == 0.0) {
    cert.c_o = c;
    return cert;
  }
  cert.r_star = std::pow(2.0 * C / c, 1.0 / gamma);
  double r = r_probe > cert.r_star ? r_probe : cert.r_star;
  cert.r = r;
  double br = std::sqrt(1.0 + r * r);
  // smallest R with 2^{2+ - 1} max{C,B} <r>^{2+} / R^{2+ - 2} <= c/2
  cert.R_of_r = std::pow(std::pow(2.0, two_plus) * std::max(C, B) * std::pow(br, two_plus) / c, 1.0 / (two_plus - 2.0));
  double inner = c / (2.0 * std::pow(cert.R_of_r, 2.0 - gamma) * std::pow(br, gamma));
  double outer = 0.5 * cert.c_gamma * c * std::pow(r / br, gamma);
  cert.c_o = std::min(inner, outer);
  return cert;
}

LowerBoundCertificate lower_bound_certificate(const DistributionField& f, double gamma, double two_plus) {
  Moments m = moments(f, {two_plus, gamma});
  double pn = norm_d(m.momentum, f.grid.d);
  double c = std::min(m.mass, m.energy) - pn;
  double cg = power_difference_constant(gamma);
  double C = std::max({m.mass, m.energy, m.higher[gamma] / cg});
  return lower_bound_constant(c, C, m.higher[two_plus], gamma, two_plus);
}

double lower_bound_ratio(const DistributionField& f, double gamma) {
  DistributionField c = convolve_power(f, gamma);
  double mn = INFINITY;
  for (std::size_t i = 0; i < c.size(); ++i)
    mn = std::min(mn, c[i] / std::pow(bracket(f.grid.point(i), f.grid.d), gamma));
  return mn;
}

AuditRow audit_lower_bound(const DistributionField& f, double gamma, double two_plus) {
  LowerBoundCertificate cert = lower_bound_certificate(f, gamma, two_plus);
  double ratio = lower_bound_ratio(f, gamma);
  // lhs <= rhs form: c_o <= min ratio; at gamma = 0 both equal the mass
  return make_row("collision_frequency_lower_bound", cert.c_o, ratio, 1e-12 * std::abs(ratio));
}

namespace {

DistributionField weighted_copy(const DistributionField& f, double mu) {
  DistributionField out = f;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= std::pow(bracket(f.grid.point(i), f.grid.d), mu);
  return out;
}

double norm_of(const DistributionField& f, double p, double mu) {
  WeightSpec w;
  w.p = p;
  w.mu = mu;
  return weighted_norm(f, w);
}

std::string triple_name(const YoungTriple& t) {
  auto s = [](double x) { return std::isinf(x) ? std::string("inf") : fmt_double(x); };
  return "(" + s(t.p) + ";" + s(t.q) + ";" + s(t.r) + ")";
}

}  // namespace

AuditReport audit_gain_bounds(const DistributionField& f, const CollisionKernel& kernel, const EpsilonSplit& split,
                              const WeightSpec& w, const SphereQuadrature& sphere, const GainAuditOptions& opt) {
  AuditReport rep;
  rep.title = "gain_bounds";
  const int d = f.grid.d;
  const double gamma = kernel.gamma;
  const double eps = split.epsilon;
  const double K0 = 8.0 * sphere_area(d - 2);
  Potential one = power_potential(0.0);
  DistributionField fg = weighted_copy(f, gamma);

  // first line: b1 piece, L^2 x L^2 -> L^inf
  {
    DistributionField q = q_plus_general(f, fg, one, split.b1, sphere);
    double lhs = norm_of(q, INFINITY, 0.0);
    double norms = norm_of(f, 2.0, 0.0) * norm_of(fg, 2.0, 0.0);
    double cb1 = young_constant(split.b1, 2.0, 2.0, INFINITY, 0.0, 0.0);
    rep.rows.push_back(make_row("gain_linf_b1_young", lhs, cb1 * norms, opt.tol));
    double explicit_c = std::pow(eps, -0.5 * d) * std::pow(2.0, 0.5 * d) * K0 * kernel.angular.total_mass;
    rep.rows.push_back(make_row("gain_linf_b1_eps_power", lhs, explicit_c * norms, opt.tol));
    rep.rows.push_back(make_row("young_b1_below_eps_power", cb1, explicit_c, 0.0));
  }
  // second line: b2 piece, L^inf x L^1 -> L^inf
  {
    DistributionField q = q_plus_general(f, fg, one, split.b2, sphere);
    double lhs = norm_of(q, INFINITY, 0.0);
    double m2 = young_constant(split.b2, INFINITY, 1.0, INFINITY, 0.0, 0.0);
    rep.rows.push_back(make_row("gain_linf_b2_small_mass", lhs, m2 * norm_of(f, INFINITY, 0.0) * norm_of(fg, 1.0, 0.0),
                                opt.tol));
  }
  // Young rows on the full operator
  DistributionField qfull;
  bool have_full = false;
  for (const auto& t : opt.triples) {
    const double k = w.mu;
    double C = young_constant(kernel.angular, t.p, t.q, t.r, k, gamma);
    const AngularKernel* bk = &kernel.angular;
    std::string tag = "young_b";
    if (std::isinf(C)) {
      C = young_constant(split.b1, t.p, t.q, t.r, k, gamma);
      bk = &split.b1;
      tag = "young_b1";
    }
    DistributionField q;
    if (bk == &kernel.angular) {
      if (!have_full) {
        qfull = q_plus(f, f, kernel, sphere);
        have_full = true;
      }
      q = qfull;
    } else {
      q = q_plus_general(f, f, power_potential(gamma), *bk, sphere);
    }
    double lhs = norm_of(q, t.r, k);
    double rhs = C * norm_of(f, t.p, k + gamma) * norm_of(f, t.q, k + gamma);
    rep.rows.push_back(make_row(tag + triple_name(t), lhs, rhs, opt.tol));
  }
  if (opt.nice) {
    const auto& ns = *opt.nice;
    double delta = ns.delta;
    double fa = norm_of(f, 2.0, 0.5 * gamma), gb = norm_of(f, 1.0, gamma);
    double m_r = young_constant(ns.b_rem, 2.0, 1.0, 2.0, 0.0, gamma);
    auto lhs_of = [&](const Potential& phi, const AngularKernel& b) {
      DistributionField q = q_plus_general(f, f, phi, b, sphere);
      return norm_of(q, 2.0, -0.5 * gamma);
    };
    rep.rows.push_back(make_row("remainder_nr", lhs_of(ns.phi_nice, ns.b_rem), m_r * fa * gb, opt.tol));
    rep.rows.push_back(make_row("remainder_rr", lhs_of(ns.phi_rem, ns.b_rem), m_r * fa * gb, opt.tol));
    if (gamma > 0.0) {
      double Cb = std::pow(2.0, gamma) * young_constant(ns.b_nice, 2.0, 1.0, 2.0, 0.0, 0.0);
      rep.rows.push_back(make_row("remainder_rn", lhs_of(ns.phi_rem, ns.b_nice), Cb * std::pow(delta, gamma) * fa * gb,
                                  opt.tol));
    } else {
      DistributionField q = q_plus_general(f, f, ns.phi_rem, ns.b_nice, sphere);
      double Cbe = ns.b_nice.total_mass * std::sqrt(sphere_area(d - 1) / d) * std::pow(2.0, 0.5 * d);
      double f2 = norm_of(f, 2.0, 0.0);
      rep.rows.push_back(make_row("remainder_rn_maxwell", norm_of(q, 2.0, 0.0), Cbe * std::sqrt(delta) * f2 * f2,
                                  opt.tol));
    }
    rep.rows.push_back(make_row("remainder_potential_sup", ns.rem_sup, std::pow(2.0 * delta, gamma), 1e-14));
    rep.rows.push_back(make_row("remainder_potential_l2", ns.rem_l2, std::pow(2.0 * delta, gamma + 0.5), 1e-14));
  }
  return rep;
}

}  // namespace kt
