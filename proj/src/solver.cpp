#include "kinetic_tails/solver.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <sstream>

#include "kinetic_tails/fracdiff.hpp"
#include "kinetic_tails/parallel.hpp"
#include "kinetic_tails/report.hpp"

namespace kt {

AngularKernel build_angular(const KernelSpec& k, int d) {
  if (k.kind == AngularKind::table) return load_table_kernel(k.table_path, d, k.normalize, k.nodes);
  return make_angular_kernel(k.kind, k.params, d, k.normalize, k.nodes);
}

CollisionKernel build_kernel(const KernelSpec& k, int d) { return make_collision_kernel(k.gamma, build_angular(k, d)); }

namespace {

double norm_d(const Vec& x, int d) {
  double s = 0.0;
  for (int k = 0; k < d; ++k) s += x[k] * x[k];
  return std::sqrt(s);
}

DistributionField scaled_to_mass(DistributionField f, double rho) {
  const double m = grid_integral(f.grid, [&](std::size_t i) { return f[i]; });
  if (!(m > 0.0)) throw std::invalid_argument("make_datum: datum has no mass on the grid");
  for (auto& x : f.values) x *= rho / m;
  return f;
}

bool finite_field(const DistributionField& f) {
  for (double x : f.values)
    if (!std::isfinite(x)) return false;
  return true;
}

// One SSP-RK2 step without the clamp.
DistributionField heun(const DistributionField& f, double dt, const CollisionKernel& kernel,
                       const SphereQuadrature& sphere, const Interpolation& interp) {
  DistributionField q1 = collision(f, kernel, sphere, interp);
  DistributionField f1 = f;
  for (std::size_t i = 0; i < f.size(); ++i) f1[i] += dt * q1[i];
  DistributionField q2 = collision(f1, kernel, sphere, interp);
  DistributionField out(f.grid);
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = 0.5 * f[i] + 0.5 * (f1[i] + dt * q2[i]);
  if (!finite_field(out)) throw NumericalAbort("step: non-finite value in update");
  return out;
}

double clamp_negative(DistributionField& f) {
  double neg = 0.0;
  for (auto& x : f.values)
    if (x < 0.0) {
      neg -= x;
      x = 0.0;
    }
  return neg * f.grid.cell();
}

struct Drift {
  double mass = 0.0, momentum = 0.0, energy = 0.0;
  double max() const { return std::max({mass, momentum, energy}); }
};

Drift drift_of(const ConservedTargets& now, const ConservedTargets& ref, int d) {
  Drift r;
  r.mass = std::abs(now.mass - ref.mass) / ref.mass;
  double dp = 0.0;
  for (int k = 0; k < d; ++k) dp += std::pow(now.momentum[k] - ref.momentum[k], 2);
  r.momentum = std::sqrt(dp) / (ref.mass * std::sqrt(ref.energy / ref.mass));
  r.energy = std::abs(now.energy - ref.energy) / ref.energy;
  return r;
}

std::string label(double x) {
  std::string s = fmt_double(x);
  std::replace(s.begin(), s.end(), '.', 'p');
  std::replace(s.begin(), s.end(), '-', 'm');
  return s;
}

double weighted_exp_norm(const DistributionField& f, double p, double r, double alpha) {
  WeightSpec w;
  w.p = p;
  w.r = r;
  w.alpha = alpha;
  return weighted_norm(f, w);
}

}  // namespace

DistributionField make_datum(const DatumSpec& spec, const VelocityGrid& grid, const KernelSpec& kernel) {
  const int d = grid.d;
  const std::string& fam = spec.family;
  if (!(spec.rho > 0.0)) throw std::invalid_argument("make_datum: rho must be positive");
  if (fam == "maxwellian") return maxwellian_field(grid, spec.rho, {0.0, 0.0, 0.0}, spec.T);
  if (fam == "two_bump") {
    DistributionField a = maxwellian_field(grid, 0.5 * spec.rho, {spec.separation, 0.0, 0.0}, spec.bump_T);
    DistributionField b = maxwellian_field(grid, 0.5 * spec.rho, {-spec.separation, 0.0, 0.0}, spec.bump_T);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    return a;
  }
  if (fam == "compact_bump") {
    const double R = spec.radius;
    if (!(R > 0.0 && R < grid.L)) throw std::invalid_argument("make_datum: compact_bump radius outside (0, L)");
    DistributionField f = sample(grid, [&](const Vec& v) {
      const double q = 1.0 - std::pow(norm_d(v, d) / R, 2);
      return q > 0.0 ? std::exp(-1.0 / q) : 0.0;
    });
    return scaled_to_mass(f, spec.rho);
  }
  if (fam == "random_smooth") {
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    struct Bump {
      Vec c;
      double T, w;
    };
    std::vector<Bump> bumps(4);
    for (auto& b : bumps) {
      b.c = {0.0, 0.0, 0.0};
      for (int k = 0; k < d; ++k) b.c[k] = 3.0 * u(rng) - 1.5;
      b.T = 0.4 + 0.6 * u(rng);
      b.w = 0.5 + u(rng);
    }
    DistributionField f = sample(grid, [&](const Vec& v) {
      double acc = 0.0;
      for (const auto& b : bumps) {
        double r2 = 0.0;
        for (int k = 0; k < d; ++k) r2 += std::pow(v[k] - b.c[k], 2);
        acc += b.w * std::pow(2.0 * std::numbers::pi * b.T, -0.5 * d) * std::exp(-r2 / (2.0 * b.T));
      }
      return acc;
    });
    return scaled_to_mass(f, spec.rho);
  }
  if (fam == "perturbed_maxwellian") {
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double c1 = u(rng), c2 = u(rng), c3 = u(rng);
    DistributionField f = sample(grid, [&](const Vec& v) {
      double v2 = 0.0;
      for (int k = 0; k < d; ++k) v2 += v[k] * v[k];
      const double m = spec.rho * std::pow(2.0 * std::numbers::pi * spec.T, -0.5 * d) * std::exp(-v2 / (2.0 * spec.T));
      const double p = c1 * v[0] * v[1] + c2 * (v[0] * v[0] - v[1] * v[1]) + c3 * (v2 * v2 - d * (d + 2.0)) / 8.0;
      return m * (1.0 + spec.amplitude * p * std::exp(-v2 / 16.0));
    });
    for (double x : f.values)
      if (x < 0.0) throw std::invalid_argument("make_datum: perturbation amplitude too large");
    return f;
  }
  if (fam == "bkw") {
    if (kernel.gamma != 0.0) throw std::invalid_argument("make_datum: bkw requires gamma = 0");
    return bkw_reference(0.0, grid, build_angular(kernel, d), spec.rho, spec.K0);
  }
  throw std::invalid_argument("make_datum: unknown family '" + fam + "'");
}

ConservedTargets conserved_of(const DistributionField& f) {
  Moments m = moments(f, {});
  return {m.mass, m.momentum, m.energy};
}

ProjectionResult conserve_project(const DistributionField& f, const ConservedTargets& targets, double tol) {
  const auto& G = f.grid;
  const int d = G.d, nb = d + 2;
  ProjectionResult res;
  res.field = f;
  auto basis = [&](std::size_t i, int a) {
    const Vec v = G.point(i);
    if (a == 0) return 1.0;
    if (a <= d) return v[a - 1];
    double v2 = 0.0;
    for (int k = 0; k < d; ++k) v2 += v[k] * v[k];
    return v2;
  };
  auto residual = [&](const DistributionField& g) {
    ConservedTargets c = conserved_of(g);
    Eigen::VectorXd r(nb);
    r[0] = targets.mass - c.mass;
    for (int k = 0; k < d; ++k) r[1 + k] = targets.momentum[k] - c.momentum[k];
    r[d + 1] = targets.energy - c.energy;
    return r;
  };
  auto scale_ok = [&](const Eigen::VectorXd& r) {
    const double vth = std::sqrt(targets.energy / targets.mass);
    double worst = std::abs(r[0]) / targets.mass;
    for (int k = 0; k < d; ++k) worst = std::max(worst, std::abs(r[1 + k]) / (targets.mass * vth));
    return std::max(worst, std::abs(r[d + 1]) / targets.energy) <= tol;
  };
  for (int pass = 0; pass < 5; ++pass) {
    Eigen::VectorXd r = residual(res.field);
    if (scale_ok(r)) break;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nb, nb);
    for (int a = 0; a < nb; ++a)
      for (int b = a; b < nb; ++b) {
        A(a, b) = grid_integral(G, [&](std::size_t i) { return res.field[i] * basis(i, a) * basis(i, b); });
        A(b, a) = A(a, b);
      }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
    if (ldlt.info() != Eigen::Success || !(ldlt.rcond() > 1e-14))
      throw std::runtime_error("conserve_project: singular correction system");
    Eigen::VectorXd lam = ldlt.solve(r);
    double step = 1.0;
    DistributionField trial(G);
    for (int attempt = 0; attempt < 60; ++attempt) {
      bool ok = true;
      for (std::size_t i = 0; i < G.size(); ++i) {
        double m = 1.0;
        for (int a = 0; a < nb; ++a) m += step * lam[a] * basis(i, a);
        if (m < 0.0 && res.field[i] > 0.0) ok = false;
        trial[i] = res.field[i] * m;
      }
      if (ok) break;
      step *= 0.5;
    }
    res.field = trial;
    res.passes = pass + 1;
  }
  const double m = targets.mass;
  res.correction = grid_integral(G, [&](std::size_t i) { return std::abs(res.field[i] - f[i]); }) / m;
  return res;
}

StepResult step(const DistributionField& f, double dt, const CollisionKernel& kernel, const SphereQuadrature& sphere,
                const Interpolation& interp) {
  StepResult r;
  r.field = heun(f, dt, kernel, sphere, interp);
  r.clamped_mass = clamp_negative(r.field);
  return r;
}

double stable_dt(const DistributionField& f, const CollisionKernel& kernel) {
  DistributionField nu = collision_frequency(f, kernel);
  double mx = 0.0;
  for (double x : nu.values) mx = std::max(mx, x);
  if (!(mx > 0.0)) return INFINITY;
  return kCflSafety / mx;
}

std::size_t DiagnosticsSeries::column(const std::string& name) const {
  auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw std::out_of_range("DiagnosticsSeries: no column '" + name + "'");
  return static_cast<std::size_t>(it - columns.begin());
}

std::vector<double> DiagnosticsSeries::series(const std::string& name) const {
  const std::size_t c = column(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[c]);
  return out;
}

std::string to_csv(const DiagnosticsSeries& s) {
  std::ostringstream os;
  for (std::size_t c = 0; c < s.columns.size(); ++c) os << (c ? "," : "") << s.columns[c];
  os << "\n";
  for (const auto& r : s.rows) {
    for (std::size_t c = 0; c < r.size(); ++c) os << (c ? "," : "") << fmt_double(r[c]);
    os << "\n";
  }
  return os.str();
}

std::string summary_csv(const DiagnosticsSeries& s) {
  std::ostringstream os;
  os << "key,value\n";
  for (const auto& [k, v] : s.summary) os << k << "," << fmt_double(v) << "\n";
  return os.str();
}

SimulationResult run_simulation(const RunConfig& cfg, const std::string& out_dir, bool keep_states) {
  const GridSpec& gs = cfg.grid;
  const VelocityGrid G = build_grid(gs.d, gs.n, gs.L);
  const int d = G.d;
  const CollisionKernel kernel = build_kernel(cfg.kernel, d);
  const SphereQuadrature sphere = build_sphere(d, gs.n_angles);
  const MonitorSpec& mon = cfg.monitors;
  if (!(cfg.t_end > 0.0)) throw std::invalid_argument("run_simulation: t_end must be positive");
  if (cfg.stride < 1) throw std::invalid_argument("run_simulation: stride must be >= 1");

  SimulationResult res;
  res.initial = make_datum(cfg.datum, G, cfg.kernel);
  const ConservedTargets targets = conserved_of(res.initial);
  res.equilibrium = maxwellian_fit(res.initial).field;

  const double dt_max = stable_dt(res.initial, kernel);
  double dt = cfg.dt > 0.0 ? cfg.dt : dt_max;
  if (dt > dt_max * (1.0 + 1e-12))
    throw std::invalid_argument("run_simulation: dt " + fmt_double(dt) + " exceeds the stability bound " +
                                fmt_double(dt_max));
  const long nsteps = std::max<long>(1, static_cast<long>(std::ceil(cfg.t_end / dt - 1e-9)));
  dt = cfg.t_end / static_cast<double>(nsteps);
  res.dt = dt;

  DiagnosticsSeries& S = res.series;
  S.columns = {"t", "mass"};
  for (int k = 0; k < d; ++k) S.columns.push_back("momentum_" + std::to_string(k + 1));
  S.columns.push_back("energy");
  if (mon.entropy) {
    S.columns.push_back("entropy");
    S.columns.push_back("relative_entropy");
    S.columns.push_back("entropy_production");
    S.columns.push_back("entropy_slope");
  }
  for (std::size_t j = 0; j < mon.norms.size(); ++j) S.columns.push_back("norm_" + std::to_string(j));
  std::vector<double> tail_r, creation_a;
  if (mon.tail_r0 > 0.0)
    for (int j = 0; j < mon.tail_levels; ++j) {
      tail_r.push_back(mon.tail_r0 / std::pow(2.0, j));
      S.columns.push_back("tail_r" + label(tail_r.back()));
    }
  if (mon.creation_a0 > 0.0)
    for (int j = 0; j < mon.creation_levels; ++j) {
      creation_a.push_back(mon.creation_a0 / std::pow(2.0, j));
      S.columns.push_back("creation_a" + label(creation_a.back()));
    }
  const bool entropic = std::isfinite(mon.entropic_s);
  if (entropic) S.columns.push_back("entropic_moment");
  if (mon.lower_bound) {
    S.columns.push_back("lower_bound_ratio");
    S.columns.push_back("lower_bound_certificate");
    S.columns.push_back("lower_bound_margin");
  }
  if (mon.sobolev) S.columns.push_back("sobolev_exp_norm");

  auto rel_entropy = [&](const DistributionField& f) { return relative_entropy(f, res.equilibrium).H; };

  // entropy production rows compare -D with a centered difference of H; pending rows wait for H(t + dt)
  struct PendingSlope {
    std::size_t row;
    double H_prev;
  };
  std::vector<PendingSlope> pending;
  double worst_slope_gap = 0.0;
  int slope_checks = 0, slope_skipped = 0;
  // D of the discrete equilibrium
  const double production_floor =
      mon.entropy && mon.production_stride > 0 ? entropy_production(res.equilibrium, kernel, sphere, gs.interp) : 0.0;

  auto record = [&](const DistributionField& f, double t, long step_index, double H_prev_step) {
    std::vector<double> row;
    ConservedTargets c = conserved_of(f);
    row.push_back(t);
    row.push_back(c.mass);
    for (int k = 0; k < d; ++k) row.push_back(c.momentum[k]);
    row.push_back(c.energy);
    if (mon.entropy) {
      EntropyFunctionals ef = entropy_functionals(f, 0.0);
      row.push_back(ef.entropy);
      row.push_back(rel_entropy(f));
      const long out_index = step_index / cfg.stride;
      const bool audit = mon.production_stride > 0 && out_index % mon.production_stride == 0 && step_index > 0 &&
                         step_index < nsteps;
      if (audit) {
        row.push_back(entropy_production(f, kernel, sphere, gs.interp));
        pending.push_back({S.rows.size(), H_prev_step});
      } else {
        row.push_back(NAN);
      }
      row.push_back(NAN);
    }
    for (const auto& w : mon.norms) row.push_back(weighted_norm(f, w));
    for (double r : tail_r) row.push_back(weighted_exp_norm(f, mon.tail_p, r, mon.tail_alpha));
    for (double a : creation_a) {
      WeightSpec w;
      w.p = mon.creation_p;
      w.r = a * std::min(1.0, t);
      w.alpha = kernel.gamma > 0.0 ? kernel.gamma : 1.0;
      row.push_back(weighted_norm(f, w));
    }
    if (entropic) row.push_back(entropy_functionals(f, mon.entropic_s).entropic_moment);
    if (mon.lower_bound) {
      const double ratio = lower_bound_ratio(f, kernel.gamma);
      const double c_o = lower_bound_certificate(f, kernel.gamma).c_o;
      row.push_back(ratio);
      row.push_back(c_o);
      row.push_back(ratio - c_o);
    }
    if (mon.sobolev) {
      WeightSpec w;
      w.p = 2.0;
      w.k = mon.sobolev_k;
      w.r = mon.sobolev_r;
      w.alpha = mon.sobolev_alpha;
      row.push_back(sobolev_exp_norm(f, w));
    }
    S.rows.push_back(std::move(row));
    if (keep_states) res.recorded.push_back(f);
  };

  auto snapshot = [&](const DistributionField& f, long k) {
    if (out_dir.empty() || cfg.snapshot_stride <= 0 || k % cfg.snapshot_stride != 0) return;
    std::filesystem::create_directories(out_dir);
    std::ostringstream name;
    name << out_dir << "/snapshot_" << k << ".bin";
    write_field_binary(f, name.str());
  };

  DistributionField f = res.initial;
  double H = mon.entropy ? rel_entropy(f) : 0.0;
  double H_prev = NAN;
  record(f, 0.0, 0, H_prev);
  snapshot(f, 0);
  double max_increase = -INFINITY;
  double total_correction = 0.0, max_clamped = 0.0;
  Drift worst_raw, worst_post;
  const std::size_t scol = mon.entropy ? S.column("entropy_slope") : 0;
  const std::size_t dcol = mon.entropy ? S.column("entropy_production") : 0;

  for (long k = 1; k <= nsteps; ++k) {
    const double t = k * dt;
    StepLog log;
    log.t = t;
    DistributionField next;
    try {
      next = heun(f, dt, kernel, sphere, gs.interp);
    } catch (const NumericalAbort&) {
      if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        write_field_binary(f, out_dir + "/abort_state.bin");
      }
      throw;
    }
    Drift raw = drift_of(conserved_of(next), targets, d);
    log.drift_mass = raw.mass;
    log.drift_momentum = raw.momentum;
    log.drift_energy = raw.energy;
    log.clamped_mass = clamp_negative(next);
    ProjectionResult pr = conserve_project(next, targets);
    log.correction = pr.correction;
    Drift post = drift_of(conserved_of(pr.field), targets, d);
    log.post_drift = post.max();
    f = std::move(pr.field);
    if (mon.entropy) {
      const double Hn = rel_entropy(f);
      log.entropy_change = Hn - H;
      max_increase = std::max(max_increase, log.entropy_change);
      H_prev = H;
      H = Hn;
      for (auto it = pending.begin(); it != pending.end();) {
        // rows record the state after step k-1; H(t+dt) arrives now
        if (it->row + 1 == S.rows.size() && std::isfinite(it->H_prev)) {
          const double slope = (Hn - it->H_prev) / (2.0 * dt);
          S.rows[it->row][scol] = slope;
          const double D = S.rows[it->row][dcol];
          if (D > kResolvedProduction * std::abs(production_floor)) {
            worst_slope_gap = std::max(worst_slope_gap, std::abs(slope + D) / D);
            ++slope_checks;
          } else {
            ++slope_skipped;
          }
          it = pending.erase(it);
        } else {
          ++it;
        }
      }
    }
    worst_raw.mass = std::max(worst_raw.mass, raw.mass);
    worst_raw.momentum = std::max(worst_raw.momentum, raw.momentum);
    worst_raw.energy = std::max(worst_raw.energy, raw.energy);
    worst_post.mass = std::max(worst_post.mass, post.max());
    total_correction += log.correction;
    max_clamped = std::max(max_clamped, log.clamped_mass);
    S.steps.push_back(log);
    if (k % cfg.stride == 0 || k == nsteps) {
      // rows must be pending-complete before a new one is appended
      pending.erase(std::remove_if(pending.begin(), pending.end(),
                                   [&](const PendingSlope& p) { return p.row + 1 != S.rows.size(); }),
                    pending.end());
      record(f, t, k, H_prev);
    }
    snapshot(f, k);
  }
  res.final_state = f;

  auto& sum = S.summary;
  sum["steps"] = static_cast<double>(nsteps);
  sum["dt"] = dt;
  sum["dt_max"] = dt_max;
  sum["max_raw_drift_mass"] = worst_raw.mass;
  sum["max_raw_drift_momentum"] = worst_raw.momentum;
  sum["max_raw_drift_energy"] = worst_raw.energy;
  sum["max_post_projection_drift"] = worst_post.mass;
  sum["total_correction"] = total_correction;
  sum["max_clamped_mass"] = max_clamped;
  if (mon.entropy) {
    sum["max_entropy_increase"] = max_increase;
    sum["entropy_slope_checks"] = slope_checks;
    sum["entropy_slope_unresolved"] = slope_skipped;
    sum["entropy_production_floor"] = production_floor;
    sum["entropy_slope_max_rel_gap"] = slope_checks > 0 ? worst_slope_gap : NAN;
    std::vector<double> ts = S.series("t"), hs = S.series("relative_entropy");
    std::vector<double> x, y;
    for (std::size_t i = 0; i < ts.size(); ++i)
      if (hs[i] > 1e-9 * hs.front() && hs[i] > 1e-13) {
        x.push_back(ts[i]);
        y.push_back(hs[i]);
      }
    sum["relative_entropy_decay_rate"] = x.size() >= 2 ? -log_linear_slope(x, y) : NAN;
  }
  for (std::size_t j = 0; j < mon.norms.size(); ++j) {
    auto s = S.series("norm_" + std::to_string(j));
    sum["sup_norm_" + std::to_string(j)] = *std::max_element(s.begin(), s.end());
  }
  if (!tail_r.empty()) {
    double fitted = 0.0;
    for (double r : tail_r) {
      auto s = S.series("tail_r" + label(r));
      const double sup = *std::max_element(s.begin(), s.end());
      sum["sup_tail_r" + label(r)] = sup;
      if (std::isfinite(sup) && sup <= 3.0 * s.front()) fitted = std::max(fitted, r);
    }
    sum["tail_fitted_a"] = fitted;
  }
  if (!creation_a.empty()) {
    double fitted = 0.0;
    const double ag = kernel.gamma > 0.0 ? kernel.gamma : 1.0;
    for (double a : creation_a) {
      auto s = S.series("creation_a" + label(a));
      const double sup = *std::max_element(s.begin(), s.end());
      WeightSpec w;
      w.p = mon.creation_p;
      w.r = a;
      w.alpha = ag;
      const double scale = std::max(s.front(), weighted_norm(res.equilibrium, w));
      sum["sup_creation_a" + label(a)] = sup;
      if (std::isfinite(sup) && sup <= 3.0 * scale) fitted = std::max(fitted, a);
    }
    sum["creation_fitted_a"] = fitted;
  }
  if (entropic) {
    auto ts = S.series("t");
    auto s = S.series("entropic_moment");
    double sup = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
      if (ts[i] >= 0.1) sup = std::max(sup, s[i]);
    sum["sup_entropic_moment_after_0p1"] = sup;
  }
  if (mon.lower_bound) {
    auto s = S.series("lower_bound_margin");
    sum["min_lower_bound_margin"] = *std::min_element(s.begin(), s.end());
  }
  if (mon.sobolev) {
    auto s = S.series("sobolev_exp_norm");
    sum["sup_sobolev_exp_norm"] = *std::max_element(s.begin(), s.end());
  }
  return res;
}

double bkw_rate(const AngularKernel& b, double rho) {
  return 0.25 * rho * surface_mass(multiply_profile(b, [](double y) { return 1.0 - y * y; }));
}

DistributionField bkw_reference(double t, const VelocityGrid& grid, const AngularKernel& b, double rho, double K0) {
  const int d = grid.d;
  if (K0 < static_cast<double>(d) / (d + 2) || K0 > 1.0)
    throw std::invalid_argument("bkw_reference: K0 outside [d/(d+2), 1]");
  const double lambda = bkw_rate(b, rho);
  const double K = 1.0 - (1.0 - K0) * std::exp(-lambda * t);
  const double A = ((d + 2.0) * K - d) / (2.0 * K), B = (1.0 - K) / (2.0 * K * K);
  return sample(grid, [&](const Vec& v) {
    double v2 = 0.0;
    for (int k = 0; k < d; ++k) v2 += v[k] * v[k];
    return rho * std::pow(2.0 * std::numbers::pi * K, -0.5 * d) * std::exp(-v2 / (2.0 * K)) * (A + B * v2);
  });
}

double log_linear_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("log_linear_slope: need two points");
  double mx = 0.0, my = 0.0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += std::log(y[i]) / n;
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (std::log(y[i]) - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace kt
