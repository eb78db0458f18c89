#include "kinetic_tails/linearized.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

#include "kinetic_tails/parallel.hpp"

namespace kt {

namespace {

Eigen::VectorXd to_vec(const DistributionField& f) {
  return Eigen::Map<const Eigen::VectorXd>(f.values.data(), static_cast<Eigen::Index>(f.size()));
}

DistributionField to_field(const VelocityGrid& g, const Eigen::VectorXd& v) {
  return DistributionField(g, std::vector<double>(v.data(), v.data() + v.size()));
}

double norm_sq(const Vec& v, int d) {
  double s = 0.0;
  for (int k = 0; k < d; ++k) s += v[k] * v[k];
  return s;
}

// (1 + |v|^k) per grid point
Eigen::VectorXd moment_weight(const VelocityGrid& g, double k) {
  Eigen::VectorXd w(static_cast<Eigen::Index>(g.size()));
  for (std::size_t i = 0; i < g.size(); ++i) w[i] = 1.0 + std::pow(std::sqrt(norm_sq(g.point(i), g.d)), k);
  return w;
}

Eigen::VectorXd bracket_weight(const VelocityGrid& g, double k) {
  Eigen::VectorXd w(static_cast<Eigen::Index>(g.size()));
  for (std::size_t i = 0; i < g.size(); ++i) w[i] = std::pow(bracket(g.point(i), g.d), k);
  return w;
}

double weighted_l1(const Eigen::VectorXd& h, const Eigen::VectorXd& w, double cell) {
  return (h.cwiseAbs().cwiseProduct(w)).sum() * cell;
}

// M, v_a M, |v|^2 M as columns
Eigen::MatrixXd invariant_fields(const DistributionField& M) {
  const auto& g = M.grid;
  Eigen::MatrixXd K(static_cast<Eigen::Index>(g.size()), g.d + 2);
  for (std::size_t i = 0; i < g.size(); ++i) {
    Vec v = g.point(i);
    K(i, 0) = M[i];
    for (int a = 0; a < g.d; ++a) K(i, 1 + a) = v[a] * M[i];
    K(i, g.d + 1) = norm_sq(v, g.d) * M[i];
  }
  return K;
}

}  // namespace

Eigen::MatrixXd linearized_matrix(const DistributionField& M, const Potential& phi, const AngularKernel& b,
                                  const SphereQuadrature& sphere, const Interpolation& interp, bool with_frequency) {
  const auto& g = M.grid;
  const std::size_t N = g.size();
  if (N > kDenseLimit) throw std::invalid_argument("dense assembly limited to n^d <= 4096");
  std::vector<double> gain = gain_linearization(M, phi, b, sphere, interp);
  Eigen::MatrixXd L = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      gain.data(), static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
  const int n = g.n, d = g.d, span = 2 * n - 1;
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
  const double mass_b = b.total_mass, cell = g.cell();
  // nonlocal loss -M(v) |b| (h * Phi)(v)
  parallel_for(N, [&](std::size_t rb, std::size_t re) {
    for (std::size_t i = rb; i < re; ++i) {
      auto ii = g.index(i);
      for (std::size_t j = 0; j < N; ++j) {
        auto jj = g.index(j);
        std::size_t t = 0;
        for (int k = 0; k < d; ++k) t = t * span + static_cast<std::size_t>(ii[k] - jj[k] + n - 1);
        L(i, j) -= M[i] * mass_b * table[t] * cell;
      }
    }
  });
  if (with_frequency) {
    DistributionField nu = convolve_potential(M, phi);
    for (std::size_t i = 0; i < N; ++i) L(i, i) -= mass_b * nu[i];
  }
  return L;
}

DistributionField apply_linearized_direct(const DistributionField& M, const DistributionField& h,
                                          const CollisionKernel& kernel, const SphereQuadrature& sphere,
                                          const Interpolation& interp) {
  DistributionField a = q_plus(M, h, kernel, sphere, interp);
  DistributionField b = q_plus(h, M, kernel, sphere, interp);
  DistributionField c = q_minus(M, h, kernel);
  DistributionField e = q_minus(h, M, kernel);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = a[i] + b[i] - c[i] - e[i];
  return a;
}

double weighted_inner(const LinearizedSystem& sys, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a.cwiseProduct(b).cwiseProduct(sys.weights)).sum();
}

LinearizedSystem assemble_linearized(const MaxwellianParams& m, const CollisionKernel& kernel,
                                     const VelocityGrid& grid, const SphereQuadrature& sphere,
                                     const Interpolation& interp) {
  if (grid.size() > kDenseLimit)
    throw std::invalid_argument("assemble_linearized: grid has " + std::to_string(grid.size()) +
                                " points, dense limit is 4096");
  LinearizedSystem sys;
  sys.grid = grid;
  sys.maxwellian = m;
  sys.kernel = kernel;
  sys.interp = interp;
  sys.sphere = sphere;
  sys.M = maxwellian_field(grid, m.rho, m.mu, m.T);
  const std::size_t N = grid.size();
  for (std::size_t i = 0; i < N; ++i)
    if (!(sys.M[i] > 0.0)) throw std::invalid_argument("assemble_linearized: Maxwellian underflows on the grid");
  sys.L = linearized_matrix(sys.M, power_potential(kernel.gamma), kernel.angular, sphere, interp, true);
  sys.weights.resize(static_cast<Eigen::Index>(N));
  for (std::size_t i = 0; i < N; ++i) sys.weights[i] = grid.cell() / sys.M[i];

  // weighted Gram-Schmidt, two passes
  Eigen::MatrixXd K = invariant_fields(sys.M);
  for (int c = 0; c < K.cols(); ++c) {
    for (int pass = 0; pass < 2; ++pass)
      for (int p = 0; p < c; ++p) K.col(c) -= weighted_inner(sys, K.col(c), K.col(p)) * K.col(p);
    K.col(c) /= std::sqrt(weighted_inner(sys, K.col(c), K.col(c)));
  }
  sys.basis = K;

  Eigen::VectorXd Mv = to_vec(sys.M);
  DistributionField nu = collision_frequency(sys.M, kernel);
  Eigen::VectorXd loss = Mv.cwiseProduct(to_vec(nu));
  sys.equilibrium_residual = (sys.L * Mv).cwiseAbs().sum() / loss.cwiseAbs().sum();
  Eigen::VectorXd v1M = invariant_fields(sys.M).col(1);
  sys.momentum_residual = (sys.L * v1M).cwiseAbs().sum() / v1M.cwiseProduct(to_vec(nu)).cwiseAbs().sum();
  return sys;
}

Eigen::VectorXd kernel_projection(const Eigen::VectorXd& h, const LinearizedSystem& sys) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(h.size());
  for (int c = 0; c < sys.basis.cols(); ++c) out += weighted_inner(sys, h, sys.basis.col(c)) * sys.basis.col(c);
  return out;
}

DistributionField kernel_projection(const DistributionField& h, const LinearizedSystem& sys) {
  return to_field(sys.grid, kernel_projection(to_vec(h), sys));
}

SpectralData spectrum_and_gap(LinearizedSystem& sys, double kernel_tol, std::uint64_t seed) {
  SpectralData sd;
  sd.kernel_tol = kernel_tol;
  const Eigen::Index N = sys.L.rows();
  const int dim_k = static_cast<int>(sys.basis.cols());
  Eigen::VectorXd s = to_vec(sys.M).cwiseSqrt();  // M^{1/2}
  // T = M^{-1/2} L M^{1/2}
  Eigen::MatrixXd T = s.cwiseInverse().asDiagonal() * sys.L * s.asDiagonal();
  sd.raw_asymmetry = (T - T.transpose()).norm() / T.norm();
  Eigen::MatrixXd S = 0.5 * (T + T.transpose());

  // invariants in the same coordinates, Euclidean-orthonormal
  Eigen::MatrixXd Kt = s.cwiseInverse().asDiagonal() * sys.basis;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(Kt);
  Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(N, dim_k);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> raw(S);
  if (raw.info() != Eigen::Success) throw std::runtime_error("spectrum_and_gap: eigensolver failed");
  sd.raw_eigenvalues = raw.eigenvalues();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(N));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return std::abs(sd.raw_eigenvalues[a]) < std::abs(sd.raw_eigenvalues[b]);
  });
  Eigen::MatrixXd V(N, dim_k);
  for (int c = 0; c < dim_k; ++c) V.col(c) = raw.eigenvectors().col(order[c]);
  Eigen::MatrixXd off = V - Q * (Q.transpose() * V);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(off);
  sd.kernel_angle = svd.singularValues()(0);
  const double s_norm = sd.raw_eigenvalues.cwiseAbs().maxCoeff();
  for (int c = 0; c < dim_k; ++c) sd.raw_kernel_residual = std::max(sd.raw_kernel_residual, (S * Q.col(c)).norm() / s_norm);

  Eigen::MatrixXd P = Eigen::MatrixXd::Identity(N, N) - Q * Q.transpose();
  Eigen::MatrixXd C = P * S * P;
  C = 0.5 * (C + C.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
  if (es.info() != Eigen::Success) throw std::runtime_error("spectrum_and_gap: eigensolver failed");
  sd.eigenvalues = es.eigenvalues();
  std::vector<double> ev(sd.eigenvalues.data(), sd.eigenvalues.data() + N);
  std::vector<std::size_t> idx(ev.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return std::abs(ev[a]) < std::abs(ev[b]); });
  double top = -INFINITY;
  for (std::size_t r = static_cast<std::size_t>(dim_k); r < idx.size(); ++r) top = std::max(top, ev[idx[r]]);
  sd.gap = -top;
  sd.near_zero = 0;
  for (double e : ev)
    if (std::abs(e) < kernel_tol * std::abs(sd.gap)) ++sd.near_zero;

  // <L a, b>_w versus <a, L b>_w for the operator in grid coordinates
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  const Eigen::VectorXd Ms = to_vec(sys.M);
  auto apply_used = [&](const Eigen::VectorXd& h) -> Eigen::VectorXd {
    Eigen::VectorXd y = C * (s.cwiseInverse().cwiseProduct(h));
    return s.cwiseProduct(y);
  };
  for (int trial = 0; trial < 4; ++trial) {
    Eigen::VectorXd a(N), b(N);
    for (Eigen::Index i = 0; i < N; ++i) {
      a[i] = nd(rng) * Ms[i];
      b[i] = nd(rng) * Ms[i];
    }
    Eigen::VectorXd La = apply_used(a), Lb = apply_used(b);
    double lhs = weighted_inner(sys, La, b), rhs = weighted_inner(sys, a, Lb);
    double scale = std::sqrt(weighted_inner(sys, La, La) * weighted_inner(sys, b, b));
    sd.self_adjoint_residual = std::max(sd.self_adjoint_residual, std::abs(lhs - rhs) / scale);
  }
  sd.compressed = std::move(C);
  sys.spectrum = sd;
  sys.has_spectrum = true;
  return sd;
}

ABSplit split_AB(const LinearizedSystem& sys, double delta, double eps, double k, int max_halvings) {
  if (!(delta > 0.0 && delta < 1.0 && eps > 0.0 && eps < 1.0))
    throw std::invalid_argument("split_AB: delta and eps must lie in (0, 1)");
  const auto& g = sys.grid;
  const std::size_t N = g.size();
  const double gamma = sys.kernel.gamma;

  DistributionField nu = collision_frequency(sys.M, sys.kernel);
  double c_o = INFINITY;
  for (std::size_t i = 0; i < N; ++i) c_o = std::min(c_o, nu[i] / std::pow(bracket(g.point(i), g.d), gamma));
  const Eigen::VectorXd w = moment_weight(g, k);

  for (int step = 0; step <= max_halvings; ++step) {
    ABSplit sp;
    sp.delta = delta;
    sp.eps = eps;
    sp.k = k;
    sp.c_o = c_o;
    sp.search_steps = step;
    const double lo = delta, hi = 1.0 / delta;
    Potential phi1 = [gamma, lo, hi](double x) {
      if (x < lo || x > hi) return 0.0;
      return gamma == 0.0 ? 1.0 : std::pow(x, gamma);
    };
    EpsilonSplit es = split_epsilon(sys.kernel.angular, eps);
    sp.A = linearized_matrix(sys.M, phi1, es.b1, sys.sphere, sys.interp, false);
    sp.B = sys.L - sp.A;
    // d/dt sum w|h| <= -sum_j |h_j| w_j rho_j with rho_j from the columns of B
    double worst = 0.0;
    for (std::size_t j = 0; j < N; ++j) {
      double excess = 0.0;
      for (std::size_t i = 0; i < N; ++i)
        if (i != j) excess += std::abs(sp.B(i, j)) * w[i];
      double rho = -sp.B(j, j) - excess / w[j];
      worst = std::max(worst, 1.0 - rho / nu[j]);
    }
    sp.perturbation = worst;
    sp.c_o_minus = c_o * (1.0 - worst);
    if (worst < 1.0) return sp;
    delta *= 0.5;
    eps *= 0.5;
  }
  throw std::runtime_error("split_AB: no admissible (delta, eps) in the search range");
}

std::vector<Eigen::VectorXd> sample_perturbations(const VelocityGrid& grid, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<Eigen::VectorXd> out;
  const double box = std::min(2.0, 0.4 * grid.L);
  for (int s = 0; s < count; ++s) {
    struct Bump {
      Vec c;
      double width, amp;
    };
    std::vector<Bump> bumps(3);
    for (auto& b : bumps) {
      for (int a = 0; a < 3; ++a) b.c[a] = a < grid.d ? box * (2.0 * U(rng) - 1.0) : 0.0;
      b.width = 0.5 + 0.5 * U(rng);
      b.amp = (U(rng) < 0.5 ? -1.0 : 1.0) * (0.5 + 0.5 * U(rng));
    }
    Eigen::VectorXd h(static_cast<Eigen::Index>(grid.size()));
    for (std::size_t i = 0; i < grid.size(); ++i) {
      Vec v = grid.point(i);
      double acc = 0.0;
      for (const auto& b : bumps) {
        double r2 = 0.0;
        for (int a = 0; a < grid.d; ++a) r2 += (v[a] - b.c[a]) * (v[a] - b.c[a]);
        acc += b.amp * std::exp(-0.5 * r2 / (b.width * b.width));
      }
      h[i] = acc;
    }
    out.push_back(h);
  }
  return out;
}

AuditReport dissipativity_and_decay_audit(const ABSplit& split, const LinearizedSystem& sys,
                                          const DecayAuditOptions& opt) {
  AuditReport rep;
  rep.title = "dissipativity_and_decay";
  const auto& g = sys.grid;
  const double cell = g.cell(), k = split.k;
  const std::string tag = "_k" + fmt_double(k);
  rep.notes.push_back("delta=" + fmt_double(split.delta) + " eps=" + fmt_double(split.eps) + " k=" + fmt_double(k) +
                      " c_o=" + fmt_double(split.c_o) + " c_o_minus=" + fmt_double(split.c_o_minus) +
                      " perturbation=" + fmt_double(split.perturbation));

  const double id_err = (split.A + split.B - sys.L).cwiseAbs().maxCoeff() / sys.L.cwiseAbs().maxCoeff();
  rep.rows.push_back(make_row("ab_sum_identity", id_err, 1e-10));
  rep.rows.push_back(make_row("c_o_minus_below_frequency_floor" + tag, split.c_o_minus, split.c_o));
  rep.rows.push_back(make_row("c_o_minus_positive" + tag, -split.c_o_minus, 0.0, 0.0));

  std::vector<Eigen::VectorXd> hs = sample_perturbations(g, opt.samples, opt.seed);
  // collision invariants times a smooth cutoff
  {
    Eigen::MatrixXd K = invariant_fields(sys.M);
    const double R = 0.5 * g.L;
    for (int c = 0; c < K.cols(); ++c) {
      Eigen::VectorXd h = K.col(c);
      for (std::size_t i = 0; i < g.size(); ++i) {
        double r = std::sqrt(norm_sq(g.point(i), g.d));
        h[i] *= 1.0 - smooth_ramp((r - R) / 1.0);
      }
      hs.push_back(h);
    }
  }
  const Eigen::VectorXd w = moment_weight(g, k);
  const Eigen::VectorXd wk = bracket_weight(g, k);

  // int sgn(h)(1 + |v|^k) B h <= 0
  {
    std::vector<double> vals(hs.size());
    parallel_for(hs.size(), [&](std::size_t b, std::size_t e) {
      for (std::size_t s = b; s < e; ++s) {
        const auto& h = hs[s];
        Eigen::VectorXd Bh = split.B * h;
        double acc = 0.0;
        for (Eigen::Index i = 0; i < h.size(); ++i) {
          double sg = h[i] > 0.0 ? 1.0 : (h[i] < 0.0 ? -1.0 : 0.0);
          acc += sg * w[i] * Bh[i];
        }
        double nrm = weighted_l1(h, w, cell);
        vals[s] = nrm > 0.0 ? acc * cell / nrm : 0.0;
      }
    });
    double worst = *std::max_element(vals.begin(), vals.end());
    rep.rows.push_back(make_row("dissipativity_sign" + tag, worst, 0.0, 0.0,
                                "max over samples of int sgn(h)(1+|v|^k) B h / ||(1+|v|^k) h||_1"));
  }

  // ||e^{tB} h||_{L^1_k} <= 2^{k/2-1} e^{-c t} ||h||_{L^1_k}
  {
    const double prefactor = std::pow(2.0, 0.5 * k - 1.0);
    const double rate_bound = split.B.cwiseAbs().colwise().sum().maxCoeff();
    const double spec = std::max(rate_bound, split.B.cwiseAbs().rowwise().sum().maxCoeff());
    int steps = std::max(20, static_cast<int>(std::ceil(opt.T * spec / 0.5)));
    const double dt = opt.T / steps;
    const int ns = std::min<int>(opt.decay_samples, static_cast<int>(hs.size()));
    std::vector<double> worst(ns, 0.0);
    parallel_for(static_cast<std::size_t>(ns), [&](std::size_t b, std::size_t e) {
      for (std::size_t s = b; s < e; ++s) {
        Eigen::VectorXd h = hs[s];
        const double n0 = weighted_l1(h, wk, cell);
        double wst = 1.0;
        for (int st = 1; st <= steps; ++st) {
          Eigen::VectorXd k1 = split.B * h;
          Eigen::VectorXd k2 = split.B * (h + 0.5 * dt * k1);
          Eigen::VectorXd k3 = split.B * (h + 0.5 * dt * k2);
          Eigen::VectorXd k4 = split.B * (h + dt * k3);
          h += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
          const double t = st * dt;
          wst = std::max(wst, weighted_l1(h, wk, cell) / n0 * std::exp(split.c_o_minus * t));
        }
        worst[s] = wst;
      }
    });
    double lhs = ns > 0 ? *std::max_element(worst.begin(), worst.end()) : 0.0;
    rep.rows.push_back(make_row("semigroup_decay" + tag, lhs, prefactor, 1e-9,
                                "max over t <= T of ||e^{tB}h||_{L^1_k} e^{c_o^- t} / ||h||_{L^1_k} vs 2^{k/2-1}"));
  }

  // ||A h||_{L^2(M^{-1/2})} / ||h||_{L^1_k}, h >= 0
  {
    const Eigen::VectorXd& wt = sys.weights;  // M^{-1} h^d
    std::vector<double> ratios;
    for (int s = 0; s < opt.samples; ++s) {
      Eigen::VectorXd h = hs[static_cast<std::size_t>(s)].cwiseAbs();
      Eigen::VectorXd Ah = split.A * h;
      double num = std::sqrt((Ah.cwiseProduct(Ah).cwiseProduct(wt)).sum());
      ratios.push_back(num / weighted_l1(h, wk, cell));
    }
    // operator norm L^1_k -> L^2(M^{-1/2}): worst column
    double op = 0.0;
    for (Eigen::Index j = 0; j < split.A.cols(); ++j) {
      Eigen::VectorXd c = split.A.col(j);
      op = std::max(op, std::sqrt((c.cwiseProduct(c).cwiseProduct(wt)).sum()) / (wk[j] * cell));
    }
    double mx = *std::max_element(ratios.begin(), ratios.end());
    double mn = *std::min_element(ratios.begin(), ratios.end());
    double half = *std::max_element(ratios.begin(), ratios.begin() + (ratios.size() + 1) / 2);
    rep.notes.push_back("a_ratio_min=" + fmt_double(mn) + " a_ratio_max=" + fmt_double(mx));
    rep.rows.push_back(make_row("a_bounded" + tag, mx, op, 0.0, "max sampled ratio vs operator norm"));
    rep.rows.push_back(make_row("a_ratio_stable" + tag, mx / half, 2.0, 0.0,
                                "sup estimate over all samples / over the first half"));
  }
  return rep;
}

std::vector<double> distance_series(const SimulationResult& run, double k) {
  if (run.recorded.empty()) throw std::invalid_argument("distance_series: run has no recorded states");
  const auto& g = run.equilibrium.grid;
  Eigen::VectorXd wk = bracket_weight(g, k), M = to_vec(run.equilibrium);
  std::vector<double> out;
  for (const auto& f : run.recorded) out.push_back(weighted_l1(to_vec(f) - M, wk, g.cell()));
  return out;
}

RateFit convergence_rate_fit(const SimulationResult& run, double lambda_o, double k, double factor,
                             double tail_fraction, double start_frac, double floor_rel) {
  RateFit fit;
  fit.times = run.series.series("t");
  fit.distance = distance_series(run, k);
  const auto& g = run.equilibrium.grid;
  Eigen::VectorXd wk = bracket_weight(g, k);
  std::vector<double> tm;
  for (std::size_t m = 0; m + 1 < run.recorded.size(); ++m) {
    double dt = fit.times[m + 1] - fit.times[m];
    fit.increment.push_back(weighted_l1(to_vec(run.recorded[m + 1]) - to_vec(run.recorded[m]), wk, g.cell()) / dt);
    tm.push_back(0.5 * (fit.times[m] + fit.times[m + 1]));
  }
  auto skipped = [&](const std::string& why) {
    fit.status = why;
    fit.comparison = make_row("convergence_rate_vs_gap", factor * lambda_o, NAN, 0.0, why);
    fit.comparison.pass = false;
    return fit;
  };
  if (fit.increment.size() < 4) return skipped("too few recorded states");
  const double scale = weighted_l1(to_vec(run.equilibrium), wk, g.cell());
  const double i0 = fit.increment.front();
  if (fit.distance.front() < 1e-10 * scale || i0 < 1e-10 * scale) {
    fit.status = "at_floor";
    fit.comparison = make_row("convergence_rate_vs_gap", 0.0, 0.0, 0.0, "datum at equilibrium, fit skipped");
    return fit;
  }
  std::size_t b = 0;
  while (b < fit.increment.size() && fit.increment[b] > start_frac * i0) ++b;
  std::size_t e = b;
  while (e < fit.increment.size() && fit.increment[e] > floor_rel * i0) ++e;
  if (e < b + 4) return skipped("no decaying window found");
  const double t_cut = tm[e - 1] - tail_fraction * (tm[e - 1] - tm[b]);
  while (b + 4 < e && tm[b] < t_cut) ++b;
  std::vector<double> x(tm.begin() + b, tm.begin() + e), y(fit.increment.begin() + b, fit.increment.begin() + e);
  fit.lambda_hat = -log_linear_slope(x, y);
  fit.t_begin = x.front();
  fit.t_end = x.back();
  fit.decades = std::log10(y.front() / y.back());
  fit.fitted = true;
  fit.status = "fitted";
  fit.comparison = make_row("convergence_rate_vs_gap", factor * lambda_o, fit.lambda_hat, 0.0,
                            "factor * lambda_o <= lambda_hat");
  return fit;
}

void write_matrix_binary(const Eigen::MatrixXd& A, const VelocityGrid& grid, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  auto put = [&](auto v) { out.write(reinterpret_cast<const char*>(&v), sizeof(v)); };
  put(static_cast<std::int32_t>(grid.d));
  put(static_cast<std::int32_t>(grid.n));
  put(grid.L);
  put(static_cast<std::int64_t>(A.rows()));
  put(static_cast<std::int64_t>(A.cols()));
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j) put(A(i, j));
}

}  // namespace kt
