#include "kinetic_tails/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "json.hpp"

#include "kinetic_tails/quadrature.hpp"

namespace kt {

MaxwellianFit maxwellian_fit(const DistributionField& f) {
  const int d = f.grid.d;
  Moments m = moments(f, {});
  if (!(m.mass > 0.0)) throw std::invalid_argument("maxwellian_fit: nonpositive mass");
  MaxwellianParams p;
  p.rho = m.mass;
  double mu2 = 0.0;
  for (int k = 0; k < d; ++k) {
    p.mu[k] = m.momentum[k] / m.mass;
    mu2 += p.mu[k] * p.mu[k];
  }
  p.T = (m.energy - m.mass * mu2) / (d * m.mass);
  if (!(p.T > 0.0)) throw std::invalid_argument("maxwellian_fit: nonpositive temperature");
  return {p, maxwellian_field(f.grid, p.rho, p.mu, p.T)};
}

RelativeEntropy relative_entropy(const DistributionField& f, const DistributionField& M, double tol) {
  RelativeEntropy r;
  const auto& g = f.grid;
  r.H = grid_integral(g, [&](std::size_t i) {
    if (f[i] <= 0.0) return 0.0;
    return f[i] * (std::log(f[i]) - std::log(std::max(M[i], kLogFloor)));
  });
  r.l1_distance = grid_integral(g, [&](std::size_t i) { return std::abs(f[i] - M[i]); });
  double rho = grid_integral(g, [&](std::size_t i) { return f[i]; });
  r.ckp = make_row("csiszar_kullback_pinsker", r.l1_distance, std::sqrt(2.0 * rho * std::max(r.H, 0.0)), tol,
                   "L1 distance to equilibrium bounded by sqrt(2 rho H)");
  return r;
}

RelativeEntropy relative_entropy(const DistributionField& f, double tol) {
  return relative_entropy(f, maxwellian_fit(f).field, tol);
}

double entropy_production(const DistributionField& f, const CollisionKernel& kernel, const SphereQuadrature& sphere,
                          const Interpolation& interp) {
  DistributionField dens = dissipation_density(f, power_potential(kernel.gamma), kernel.angular, sphere, interp);
  return 0.25 * grid_integral(f.grid, [&](std::size_t i) { return dens[i]; });
}

double lambert_w(double x) {
  if (!(x >= 0.0)) throw std::domain_error("lambert_w: negative argument");
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return x;
  double w = std::log1p(x);
  if (x > 3.0) w -= std::log(w);
  for (int it = 0; it < 100; ++it) {
    double ew = std::exp(w);
    double fw = w * ew - x;
    double step = fw / (ew * (w + 1.0) - (w + 2.0) * fw / (2.0 * w + 2.0));
    w -= step;
    if (std::abs(step) <= 1e-16 * (1.0 + std::abs(w))) break;
  }
  return w;
}

GaussianFloor gaussian_floor_fit(const DistributionField& f) {
  const auto& g = f.grid;
  const int d = g.d;
  MaxwellianFit fit = maxwellian_fit(f);
  const Vec mu = fit.params.mu;
  auto r2_of = [&](std::size_t i) {
    Vec v = g.point(i);
    double s = 0.0;
    for (int k = 0; k < d; ++k) s += (v[k] - mu[k]) * (v[k] - mu[k]);
    return s;
  };
  double fmax = *std::max_element(f.values.begin(), f.values.end());
  double rs2 = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (f[i] > 1e-10 * fmax) rs2 = std::max(rs2, r2_of(i));
  GaussianFloor out;
  out.radius = 0.8 * std::sqrt(rs2);
  const double rad2 = out.radius * out.radius;
  const int shells = std::max(8, g.n / 2);
  std::vector<double> env(shells, INFINITY), env_r2(shells, 0.0);
  for (std::size_t i = 0; i < f.size(); ++i) {
    double r2 = r2_of(i);
    if (r2 > rad2) continue;
    if (!(f[i] > 0.0)) throw std::invalid_argument("gaussian_floor_fit: f vanishes inside the fitting region");
    int s = std::min(shells - 1, static_cast<int>(shells * r2 / rad2));
    double lf = std::log(f[i]);
    if (lf < env[s]) {
      env[s] = lf;
      env_r2[s] = r2;
    }
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (int s = 0; s < shells; ++s) {
    if (std::isinf(env[s])) continue;
    sx += env_r2[s];
    sy += env[s];
    sxx += env_r2[s] * env_r2[s];
    sxy += env_r2[s] * env[s];
    ++cnt;
  }
  if (cnt < 2) throw std::invalid_argument("gaussian_floor_fit: fitting region too small");
  double slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
  double A = std::max(-slope, 1e-12);
  double a = (sy + A * sx) / cnt;
  double excess = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    double r2 = r2_of(i);
    if (r2 > rad2) continue;
    excess = std::max(excess, a - A * r2 - std::log(f[i]));
  }
  out.A_o = A;
  out.K_o = std::exp(a - excess);
  double margin = INFINITY;
  for (std::size_t i = 0; i < f.size(); ++i) {
    double r2 = r2_of(i);
    if (r2 <= rad2) margin = std::min(margin, f[i] - out.K_o * std::exp(-out.A_o * r2));
  }
  out.margin = margin;
  return out;
}

double symmetric_angular_floor(const AngularKernel& b) {
  double mn = INFINITY;
  const int samples = 4096;
  for (int i = 0; i <= samples; ++i) {
    double y = static_cast<double>(i) / samples;
    mn = std::min(mn, 0.5 * (b(y) + b(-y)));
  }
  return mn;
}

namespace {

AngularKernel constant_profile(double value, int d) {
  return kernel_from_profile([value](double) { return value; }, d, {}, 64);
}

double dissipation_with(const DistributionField& f, const Potential& phi, const AngularKernel& b,
                        const SphereQuadrature& sphere, const Interpolation& interp) {
  DistributionField dens = dissipation_density(f, phi, b, sphere, interp);
  return 0.25 * grid_integral(f.grid, [&](std::size_t i) { return dens[i]; });
}

// full-sphere density K_B equals half-sphere density 2 K_B for a sigma-symmetric integrand
Potential lower_potential(double R, double gamma, double beta) {
  return [R, gamma, beta](double x) { return std::pow(R, gamma) * std::pow(1.0 + x * x, -0.5 * beta); };
}

std::string json_of(const std::vector<std::pair<std::string, double>>& kv) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [k, v] : kv) j[k] = v;
  return j.dump();
}

}  // namespace

double lower_kernel_dissipation(const DistributionField& f, const DissipationConfig& cfg, double gamma,
                                const SphereQuadrature& sphere, const Interpolation& interp) {
  return dissipation_with(f, lower_potential(1.0, gamma, cfg.beta), constant_profile(2.0 * cfg.K_B, f.grid.d), sphere,
                          interp);
}

double calibrate_k_eps(const std::vector<DistributionField>& states, const DissipationConfig& cfg, double gamma,
                       const SphereQuadrature& sphere, const Interpolation& interp) {
  double k = INFINITY;
  for (const auto& s : states) {
    double H = relative_entropy(s).H;
    if (!(H > 1e-12)) continue;
    double D1 = lower_kernel_dissipation(s, cfg, gamma, sphere, interp);
    k = std::min(k, D1 / std::pow(H, 1.0 + cfg.epsilon));
  }
  if (std::isinf(k)) throw std::invalid_argument("calibrate_k_eps: no state away from equilibrium");
  return k;
}

double dissipation_exponent(double epsilon, double gamma, double p, int d) {
  double pprime = std::isinf(p) ? 1.0 : p / (p - 1.0);
  return (1.0 + epsilon) * (1.0 + gamma * pprime / d);
}

AuditReport dissipation_audit(const DistributionField& f, const DissipationConfig& cfg, const CollisionKernel& kernel,
                              const SphereQuadrature& sphere, const Interpolation& interp) {
  if (!(cfg.K_B > 0.0) || !(cfg.K_o > 0.0) || !(cfg.A_o > 0.0) || !(cfg.q_o >= 2.0) || !(cfg.epsilon > 0.0) ||
      !(cfg.epsilon < 1.0))
    throw std::invalid_argument("dissipation_audit: invalid configuration");
  const auto& g = f.grid;
  const int d = g.d;
  const double gamma = kernel.gamma;
  const double S = sphere_area(d - 1);
  AuditReport rep;
  rep.title = "entropy_dissipation";

  const double H = std::max(relative_entropy(f).H, 0.0);
  const double D = entropy_production(f, kernel, sphere, interp);
  const double R = std::isnan(cfg.R) ? 1.0 : cfg.R;
  const AngularKernel flat = constant_profile(2.0 * cfg.K_B, d);
  const double D1 = dissipation_with(f, lower_potential(R, gamma, cfg.beta), flat, sphere, interp);
  const double D2 = dissipation_with(
      f, [R, gamma](double x) { return x <= R ? std::pow(R, gamma) : 0.0; }, flat, sphere, interp);
  const double tol = 1e-12 * (std::abs(D) + std::abs(D1) + std::abs(D2)) + 1e-300;
  rep.rows.push_back(make_row("dissipation_kernel_split", D1 - D2, D, tol,
                              "D >= D1 - D2 for the lower kernel split at radius R",
                              json_of({{"R", R}, {"K_B", cfg.K_B}, {"D", D}, {"D1", D1}, {"D2", D2}})));

  // explicit right side for D2
  DistributionField ball = convolve_potential(f, [R](double x) { return x <= R ? 1.0 : 0.0; });
  const double I_log = grid_integral(g, [&](std::size_t i) {
    return f[i] > 0.0 ? f[i] * std::log(f[i]) * ball[i] : 0.0;
  });
  const double I_q = grid_integral(g, [&](std::size_t i) {
    return std::pow(bracket(g.point(i), d), cfg.q_o) * f[i] * ball[i];
  });
  const double c_floor = std::pow(2.0, 0.5 * cfg.q_o + 1.0) * (std::log(1.0 / cfg.K_o) + cfg.A_o);
  const double rhs3 = 2.0 * cfg.K_B * S * std::pow(R, gamma) * (4.0 * I_log + c_floor * I_q);
  rep.rows.push_back(make_row("dissipation_small_relative_velocity", D2, rhs3, tol,
                              "D2 bounded through the Gaussian floor of f",
                              json_of({{"R", R}, {"I_log", I_log}, {"I_q", I_q}, {"floor_factor", c_floor}})));

  const EntropyFunctionals ef = entropy_functionals(f, 0.0);
  WeightSpec wq;
  wq.p = 1.0;
  wq.mu = cfg.q_o;
  const double mq = weighted_norm(f, wq);
  const double common = 2.0 * cfg.K_B * S * std::max(4.0, c_floor) * (ef.abs_entropy + mq);
  const double pprime = std::isinf(cfg.p) ? 1.0 : cfg.p / (cfg.p - 1.0);
  const double exponent = dissipation_exponent(cfg.epsilon, gamma, cfg.llogl ? INFINITY : cfg.p, d);
  rep.notes.push_back("exponent=" + fmt_double(exponent));

  if (!cfg.llogl) {
    WeightSpec wp;
    wp.p = cfg.p;
    const double fp = weighted_norm(f, wp);
    const double Kt = common * std::pow(S / d, 1.0 / pprime) * fp;
    rep.rows.push_back(make_row("dissipation_lp_remainder", D2, std::pow(R, gamma + d / pprime) * Kt, tol,
                                "D2 <= R^(gamma+d/p') Ktilde_p",
                                json_of({{"R", R}, {"Ktilde_p", Kt}, {"p", cfg.p}, {"norm_p", fp}})));
    if (!std::isnan(cfg.K_eps)) {
      const double e = gamma * pprime / d;
      const double A = std::pow(cfg.K_eps, 1.0 + e) / (std::pow(2.0, 1.0 + e) * std::pow(Kt, e));
      const double Rp = std::pow(cfg.K_eps * std::pow(H, 1.0 + cfg.epsilon) / (2.0 * Kt), pprime / d);
      rep.rows.push_back(make_row(
          "dissipation_lower_bound_lp", A * std::pow(H, exponent), D, tol, "D >= A_{eps,p} H^{(1+eps)(1+gamma p'/d)}",
          json_of({{"A_eps_p", A}, {"exponent", exponent}, {"K_eps", cfg.K_eps}, {"R_choice", Rp}, {"H", H}})));
    }
  } else {
    const double Kt = common * ef.abs_entropy;
    const double ball_vol = S * std::pow(R, d) / d;
    const double Wv = lambert_w(ef.abs_entropy / ball_vol);
    rep.rows.push_back(make_row("dissipation_llogl_remainder", D2, std::pow(R, gamma) * Kt / Wv, tol,
                                "D2 <= R^gamma Ktilde_LlogL / W(int f|log f| / |B_R|)",
                                json_of({{"R", R}, {"Ktilde_LlogL", Kt}, {"W", Wv}})));
    if (!std::isnan(cfg.K_eps)) {
      double lhs = 0.0, A = 0.0, Rl = 0.0;
      if (H > 0.0) {
        const double w = 2.0 * Kt / (cfg.K_eps * std::pow(H, 1.0 + cfg.epsilon));
        const double gd = gamma / d;
        A = std::pow(cfg.K_eps, 1.0 + gd) / std::pow(2.0, 1.0 + gd) * std::pow(d * ef.abs_entropy / (S * Kt), gd);
        lhs = A * std::pow(H, exponent) * std::exp(-gd * w);
        Rl = std::pow(d * ef.abs_entropy / (S * w) * std::exp(-w), 1.0 / d);
      }
      rep.rows.push_back(make_row("dissipation_lower_bound_llogl", lhs, D, tol,
                                  "D >= A_{eps,LlogL} H^{(1+eps)(1+gamma/d)} exp(-2 gamma Ktilde/(d K_eps H^{1+eps}))",
                                  json_of({{"A_eps_LlogL", A}, {"exponent", exponent}, {"K_eps", cfg.K_eps},
                                           {"R_choice", Rl}, {"H", H}})));
    }
  }
  return rep;
}

}  // namespace kt
