// Acceptance battery: one PASS/FAIL line per criterion. Optional arguments select criteria by number.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "kinetic_tails/battery.hpp"
#include "kinetic_tails/collision.hpp"
#include "kinetic_tails/config.hpp"
#include "kinetic_tails/entropy.hpp"
#include "kinetic_tails/fracdiff.hpp"
#include "kinetic_tails/kernels.hpp"
#include "kinetic_tails/linearized.hpp"
#include "kinetic_tails/parallel.hpp"
#include "kinetic_tails/solver.hpp"

using namespace kt;

namespace {

// pinned tolerances
constexpr double kRawDrift = 1e-6;
constexpr double kPostDrift = 1e-12;
constexpr double kTotalCorrection = 1e-3;
constexpr double kEntropyIncrease = 1e-8;
constexpr double kSlopeGap = 0.05;
constexpr double kRoundoff = 1e-12;
constexpr double kEquilibriumRatio = 1e-3;
constexpr double kConstantConvergence = 1e-8;
constexpr double kBkwError = 1e-3;
constexpr double kBkwOrder = 1.5;
constexpr double kCommutatorOrder = 1.0;
constexpr double kClosedForm = 1e-8;
constexpr double kAngle = 1e-3;
constexpr double kSelfAdjoint = 1e-8;
constexpr double kGapStability = 0.1;
constexpr double kRateFactor = 0.8;
constexpr double kLinearRate = 0.1;

const std::string kConfigs = KT_CONFIG_DIR;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

std::string g6(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

double l1_of(const DistributionField& f) {
  return grid_integral(f.grid, [&](std::size_t i) { return std::abs(f[i]); });
}

double fitted_order(const std::vector<double>& h, const std::vector<double>& err) {
  std::vector<double> x, y;
  for (std::size_t i = 0; i < h.size(); ++i) {
    x.push_back(std::log(h[i]));
    y.push_back(err[i]);
  }
  return log_linear_slope(x, y);
}

// Shared runs, computed once.
struct Shared {
  std::optional<SimulationResult> hard;
  std::optional<BatteryInput> hard_cfg;
  std::map<std::string, SimulationResult> fixtures;
  std::map<std::string, RunConfig> fixture_cfg;
  std::optional<SpectrumOutcome> spectrum;

  const SimulationResult& hard_run() {
    if (!hard) {
      hard_cfg = load_config(kConfigs + "/two_bump_hard.toml");
      hard = run_simulation(hard_cfg->run, "", true);
    }
    return *hard;
  }
  const SpectrumOutcome& hard_spectrum() {
    if (!spectrum) {
      hard_run();
      spectrum = spectrum_pipeline(*hard_cfg);
    }
    return *spectrum;
  }
  const std::map<std::string, SimulationResult>& fixture_runs() {
    if (fixtures.empty()) {
      const BatteryInput base = load_config(kConfigs + "/h_theorem.toml");
      for (const std::string fam :
           {"maxwellian", "two_bump", "random_smooth", "perturbed_maxwellian", "compact_bump", "bkw"}) {
        RunConfig rc = base.run;
        rc.datum.family = fam;
        if (fam == "bkw") {
          // Maxwell molecules: larger steps, so record every step
          rc.kernel.gamma = 0.0;
          rc.stride = 1;
          rc.t_end = 2.0;
        }
        // D(f0) is infinite for compact support; the front stays unresolved
        if (fam == "compact_bump") rc.monitors.production_stride = 0;
        fixture_cfg[fam] = rc;
        fixtures.emplace(fam, run_simulation(rc, "", true));
      }
    }
    return fixtures;
  }
};

Shared shared;

Outcome c01_conservation() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const SimulationResult& r = shared.hard_run();
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  auto s = r.series.summary;
  const double raw = std::max({s["max_raw_drift_mass"], s["max_raw_drift_momentum"], s["max_raw_drift_energy"]});
  o.detail << "raw drift " << g6(raw) << ", post " << g6(s["max_post_projection_drift"]) << ", correction "
           << g6(s["total_correction"]) << ", steps " << s["steps"] << ", " << g6(secs) << " s";
  o.require(raw < kRawDrift, "raw drift");
  o.require(s["max_post_projection_drift"] <= kPostDrift, "post-projection drift");
  o.require(s["total_correction"] < kTotalCorrection, "total correction");
  o.require(secs < 600.0, "runtime");
  return o;
}

Outcome c02_h_theorem() {
  Outcome o;
  for (const auto& [fam, r] : shared.fixture_runs()) {
    auto s = r.series.summary;
    const double inc = s["max_entropy_increase"];
    const double checks = s["entropy_slope_checks"];
    const double gap = checks > 0 ? s["entropy_slope_max_rel_gap"] : 0.0;
    o.detail << fam << ": max dH " << g6(inc) << ", slope checks " << checks << " gap " << g6(gap) << "; ";
    o.require(inc <= kEntropyIncrease, fam + " entropy increase");
    o.require(gap <= kSlopeGap, fam + " dH/dt vs -D");
  }
  return o;
}

Outcome c03_equilibrium() {
  Outcome o;
  KernelSpec ks;
  const CollisionKernel K = build_kernel(ks, 2);
  const SphereQuadrature sp = build_sphere(2, 32);
  double prev = INFINITY;
  for (int n : {32, 48, 64}) {
    const VelocityGrid g = build_grid(2, n, 8.0);
    const DistributionField M = maxwellian_field(g, 1.0, {0.0, 0.0, 0.0}, 1.0);
    const double ratio = l1_of(collision(M, K, sp, {3, 4})) / l1_of(q_minus(M, M, K));
    o.detail << "n=" << n << ": " << g6(ratio) << " ";
    if (n == 32) o.require(ratio < kEquilibriumRatio, "ratio at n=32");
    o.require(ratio < prev, "decrease at n=" + std::to_string(n));
    prev = ratio;
  }
  return o;
}

Outcome c04_lower_bound() {
  Outcome o;
  auto check = [&](const std::string& name, const SimulationResult& r) {
    const auto margin = r.series.series("lower_bound_margin");
    const auto ratio = r.series.series("lower_bound_ratio");
    int viol = 0;
    for (std::size_t i = 0; i < margin.size(); ++i) viol += !(margin[i] >= -kRoundoff * ratio[i]);
    const double mn = *std::min_element(margin.begin(), margin.end());
    o.detail << name << ": min margin " << g6(mn) << " over " << margin.size() << " states; ";
    o.require(viol == 0, name + " violations");
  };
  check("two_bump_hard", shared.hard_run());
  for (const auto& [fam, r] : shared.fixture_runs()) check(fam, r);
  return o;
}

Outcome c05_gain_bounds() {
  Outcome o;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const VelocityGrid g = build_grid(2, 24, 8.0);
  const SphereQuadrature sp = build_sphere(2, 32);
  const std::vector<YoungTriple> triples = GainAuditOptions{}.triples;
  int audits = 0, failed_rows = 0, rows = 0;
  double worst = INFINITY;
  for (int k = 0; k < 100; ++k) {
    KernelSpec ks;
    ks.gamma = (k % 3 == 0) ? 0.0 : 2.0 * u(rng);
    if (k % 2) {
      const double lo = 0.3 * u(rng);
      ks.kind = AngularKind::truncated_uniform;
      ks.params = {lo, lo + 0.3 + 0.4 * u(rng)};
    }
    const CollisionKernel K = build_kernel(ks, 2);
    DatumSpec ds;
    ds.family = "random_smooth";
    ds.seed = 100 + k;
    const DistributionField f = make_datum(ds, g, ks);
    const double eps = 0.05 + 0.45 * u(rng);
    GainAuditOptions opt;
    opt.triples = {triples[static_cast<std::size_t>(u(rng) * triples.size()) % triples.size()]};
    WeightSpec w;
    w.mu = 2.0 * u(rng);
    const AuditReport rep = audit_gain_bounds(f, K, split_epsilon(K.angular, eps), w, sp, opt);
    ++audits;
    for (const auto& row : rep.rows) {
      ++rows;
      failed_rows += !row.pass;
      worst = std::min(worst, row.margin);
    }
  }
  o.detail << audits << " audits, " << rows << " rows, failures " << failed_rows << ", min margin " << g6(worst);
  o.require(failed_rows == 0, "gain audit rows");

  double drift = 0.0;
  for (double gamma : {0.0, 1.0}) {
    KernelSpec a, b;
    a.gamma = b.gamma = gamma;
    a.nodes = 256;
    b.nodes = 512;
    const AngularKernel ba = build_angular(a, 2), bb = build_angular(b, 2);
    for (const auto& t : triples) {
      const double ca = young_constant(ba, t.p, t.q, t.r, 1.0, gamma), cb = young_constant(bb, t.p, t.q, t.r, 1.0, gamma);
      if (std::isinf(ca) && std::isinf(cb)) continue;
      drift = std::max(drift, std::abs(ca - cb) / std::abs(cb));
    }
    drift = std::max(drift, std::abs(ba.total_mass - bb.total_mass));
  }
  o.detail << "; node doubling change " << g6(drift);
  o.require(drift <= kConstantConvergence, "constant convergence");
  return o;
}

Outcome c06_tails() {
  Outcome o;
  // a fitted exponent is the largest ladder rung whose sup stays within 3x its starting value
  auto show = [&](const std::string& name, const SimulationResult& r, bool creation) {
    auto s = r.series.summary;
    o.detail << name << ": a=" << g6(s["tail_fitted_a"]);
    o.require(s["tail_fitted_a"] > 0.0, name + " propagation ladder");
    if (creation) {
      o.detail << " creation a=" << g6(s["creation_fitted_a"]);
      o.require(s["creation_fitted_a"] > 0.0, name + " creation ladder");
    }
    o.detail << "; ";
  };
  show("two_bump_hard", shared.hard_run(), true);
  for (const auto& [fam, r] : shared.fixture_runs()) show(fam, r, fam == "compact_bump");
  return o;
}

Outcome c07_bkw() {
  Outcome o;
  const BatteryInput in = load_config(kConfigs + "/bkw_maxwell.toml");
  auto error_at = [&](int n) {
    RunConfig rc = in.run;
    rc.grid.n = n;
    const SimulationResult r = run_simulation(rc);
    const VelocityGrid g = build_grid(rc.grid.d, n, rc.grid.L);
    const DistributionField ref =
        bkw_reference(rc.t_end, g, build_angular(rc.kernel, rc.grid.d), rc.datum.rho, rc.datum.K0);
    return grid_integral(g, [&](std::size_t i) { return std::abs(r.final_state[i] - ref[i]); });
  };
  const double e48 = error_at(in.run.grid.n);
  std::vector<double> hs, es;
  for (int n : {16, 24, 32}) {
    hs.push_back(2.0 * in.run.grid.L / n);
    es.push_back(error_at(n));
  }
  const double order = fitted_order(hs, es);
  o.detail << "L1 error at n=" << in.run.grid.n << ": " << g6(e48) << "; errors n=16,24,32: " << g6(es[0]) << ", "
           << g6(es[1]) << ", " << g6(es[2]) << "; order " << g6(order);
  o.require(e48 <= kBkwError, "L1 agreement");
  o.require(order >= kBkwOrder, "refinement order");
  return o;
}

Outcome c08_commutators() {
  Outcome o;
  const double L = 8.0;
  const double s = 0.5;
  WeightSpec w;
  w.p = 2.0;
  w.r = 0.1;
  w.alpha = 1.0;
  std::vector<double> hs, loss, weight, weight1;
  bool bounds = true;
  double zero_loss = 0.0, zero_gain = 0.0;
  for (int n : {16, 24, 32, 48}) {
    const VelocityGrid g = build_grid(2, n, L);
    DatumSpec ds;
    ds.separation = 1.0;
    const DistributionField f = make_datum(ds, g);
    hs.push_back(2.0 * L / n);
    const CommutatorResult lc = loss_commutator(f, {0.5, 0.25, 0.0}, 1.0, s, w);
    const WeightCommutatorResult wc = weight_commutator(f, s, w.r, w.alpha);
    const WeightCommutatorResult wc1 = weight_commutator(f, 1.0, w.r, w.alpha);
    loss.push_back(lc.discrepancy);
    weight.push_back(wc.discrepancy);
    weight1.push_back(wc1.discrepancy);
    for (const auto& row : lc.rows) bounds &= row.pass;
    bounds &= wc.row.pass && wc1.row.pass;
    if (n == 32) {
      KernelSpec ks;
      const CollisionKernel K = build_kernel(ks, 2);
      const SphereQuadrature sp = build_sphere(2, 32);
      const LossCommutatorBound flat = loss_commutator_bound(f, f, 0.0, K.angular.total_mass, s, w);
      zero_loss = flat.lhs / flat.norms;
      const GainCommutatorResult g0 = gain_commutator(f, f, K, sp, 0.0, w);
      zero_gain = g0.lhs / g0.norms;
      bounds &= gain_commutator(f, f, K, sp, s, w).row.pass;
      bounds &= loss_commutator_row(loss_commutator_bound(f, f, 1.0, K.angular.total_mass, s, w)).pass;
    }
  }
  const double ol = fitted_order(hs, loss), ow = fitted_order(hs, weight), ow1 = fitted_order(hs, weight1);
  bool decreasing = true;
  for (std::size_t i = 1; i < hs.size(); ++i) decreasing &= loss[i] < loss[i - 1] && weight[i] < weight[i - 1];
  o.detail << "order loss " << g6(ol) << ", weight " << g6(ow) << " (s=1: " << g6(ow1) << ", not gated)"
           << "; gamma=0 loss remainder " << g6(zero_loss) << ", s=0 gain remainder " << g6(zero_gain);
  o.require(decreasing, "monotone refinement");
  o.require(ol >= kCommutatorOrder && ow >= kCommutatorOrder, "order");
  o.require(zero_loss <= 1e-12 && zero_gain <= 1e-12, "vanishing remainders");
  o.require(bounds, "weighted-norm bounds");
  return o;
}

Outcome c09_elementary() {
  Outcome o;
  const AuditReport rep = elementary_bounds_check(100000, 1.0, 1.0, 99);
  for (const auto& row : rep.rows) {
    o.detail << row.name << " " << g6(row.lhs) << "; ";
    o.require(row.pass, row.name);
  }
  o.require(rep.rows.size() >= 2 && rep.rows[0].rhs == kClosedForm, "closed-form tolerance");
  return o;
}

Outcome c10_dissipation() {
  Outcome o;
  const SphereQuadrature sp = build_sphere(2, 32);
  constexpr double eps = 0.5;
  int audited = 0, held = 0, failures = 0;
  bool exponents = true;
  for (const auto& [fam, r] : shared.fixture_runs()) {
    const RunConfig& rc = shared.fixture_cfg.at(fam);
    const CollisionKernel K = build_kernel(rc.kernel, rc.grid.d);
    const int d = rc.grid.d;
    auto config_for = [&](const DistributionField& f, bool llogl, double p) -> std::optional<DissipationConfig> {
      GaussianFloor fl;
      try {
        fl = gaussian_floor_fit(f);
      } catch (const std::invalid_argument&) {
        return std::nullopt;
      }
      DissipationConfig c;
      c.K_B = symmetric_angular_floor(K.angular);
      c.K_o = fl.K_o;
      c.A_o = fl.A_o;
      c.epsilon = eps;
      c.p = p;
      c.llogl = llogl;
      return c;
    };
    // calibrate on even outputs, audit the lower bound on odd ones
    std::vector<DistributionField> calib, holdout;
    for (std::size_t i = 0; i < r.recorded.size(); ++i) {
      if (relative_entropy(r.recorded[i]).H <= 1e-8) continue;
      (i % 2 ? holdout : calib).push_back(r.recorded[i]);
    }
    double K_eps = NAN;
    if (!calib.empty()) {
      auto c = config_for(calib.front(), false, INFINITY);
      if (c) K_eps = calibrate_k_eps(calib, *c, K.gamma, sp, rc.grid.interp);
    }
    for (std::size_t i = 0; i < r.recorded.size(); ++i) {
      const DistributionField& f = r.recorded[i];
      const bool is_held = i % 2 == 1 && relative_entropy(f).H > 1e-8;
      for (const auto& [llogl, p] : {std::pair<bool, double>{false, INFINITY}, {false, 2.0}, {true, INFINITY}}) {
        auto c = config_for(f, llogl, p);
        if (!c) continue;
        if (is_held && std::isfinite(K_eps)) c->K_eps = K_eps;
        const AuditReport rep = dissipation_audit(f, *c, K, sp, rc.grid.interp);
        ++audited;
        held += is_held && std::isfinite(K_eps);
        for (const auto& row : rep.rows) {
          if (!row.pass) {
            ++failures;
            if (failures <= 5) o.detail << "[" << fam << " " << row.name << " margin " << g6(row.margin) << "] ";
          }
        }
        const double pprime = llogl || std::isinf(p) ? 1.0 : p / (p - 1.0);
        const double want = (1.0 + eps) * (1.0 + K.gamma * pprime / d);
        exponents &= rep.notes.size() == 1 && rep.notes[0] == "exponent=" + fmt_double(want);
      }
    }
  }
  o.detail << audited << " audits (" << held << " with calibrated K_eps on held-out states), failing rows "
           << failures;
  o.require(failures == 0, "dissipation rows");
  o.require(held > 0, "held-out lower-bound rows");
  o.require(exponents, "reported exponents");
  return o;
}

Outcome c11_spectrum() {
  Outcome o;
  const SpectrumOutcome& so = shared.hard_spectrum();
  const SpectralData& sp = so.system.spectrum;
  const int d = so.system.grid.d;
  const double stab = std::abs(sp.gap - so.coarse_gap) / sp.gap;
  o.detail << "near-zero " << sp.near_zero << ", angle " << g6(sp.kernel_angle) << ", gap " << g6(sp.gap)
           << " (coarse " << g6(so.coarse_gap) << "), self-adjoint " << g6(sp.self_adjoint_residual) << ", raw asym "
           << g6(sp.raw_asymmetry);
  o.require(sp.near_zero == d + 2, "kernel dimension");
  o.require(sp.kernel_angle < kAngle, "kernel angle");
  o.require(sp.gap > 0.0 && stab <= kGapStability, "gap stability");
  o.require(sp.self_adjoint_residual < kSelfAdjoint, "self-adjointness");
  return o;
}

Outcome c12_decomposition() {
  Outcome o;
  const SpectrumOutcome& so = shared.hard_spectrum();
  std::set<std::string> seen;
  for (const auto& row : so.report.rows) {
    const bool ours = row.name.rfind("dissipativity_sign", 0) == 0 || row.name.rfind("semigroup_decay", 0) == 0 ||
                      row.name.rfind("a_ratio_stable", 0) == 0 || row.name.rfind("a_bounded", 0) == 0 ||
                      row.name.rfind("ab_sum", 0) == 0 || row.name.rfind("c_o_minus", 0) == 0;
    if (!ours) continue;
    seen.insert(row.name);
    o.detail << row.name << " " << g6(row.lhs) << "<=" << g6(row.rhs) << "; ";
    o.require(row.pass, row.name);
  }
  for (const char* need : {"dissipativity_sign_k2", "dissipativity_sign_k4", "semigroup_decay_k2", "semigroup_decay_k4",
                           "a_ratio_stable_k2", "a_ratio_stable_k4"})
    o.require(seen.count(need) > 0, std::string("missing ") + need);
  return o;
}

Outcome c13_convergence() {
  Outcome o;
  const double lam_hard = shared.hard_spectrum().system.spectrum.gap;
  const RateFit hard = convergence_rate_fit(shared.hard_run(), lam_hard, 2.0, kRateFactor);
  o.detail << "two-bump: lambda_hat " << g6(hard.lambda_hat) << " vs gap " << g6(lam_hard) << " (" << hard.status
           << ", window " << g6(hard.t_begin) << "-" << g6(hard.t_end) << ")";
  o.require(hard.fitted && hard.lambda_hat > 0.0 && hard.comparison.pass, "two-bump rate");

  BatteryInput tiny = load_config(kConfigs + "/tiny_perturbation.toml");
  tiny.spectrum.n_coarse = 0;
  tiny.spectrum.k.clear();
  const double lam = spectrum_pipeline(tiny).system.spectrum.gap;
  const SimulationResult run = run_simulation(tiny.run, "", true);
  const RateFit fit = convergence_rate_fit(run, lam, 2.0, kRateFactor);
  const double rel = std::abs(fit.lambda_hat - lam) / lam;
  o.detail << "; tiny: lambda_hat " << g6(fit.lambda_hat) << " vs gap " << g6(lam) << " (rel " << g6(rel) << ")";
  o.require(fit.fitted && rel <= kLinearRate, "linear-regime rate");
  return o;
}

Outcome c14_determinism() {
  Outcome o;
  const BatteryInput in = load_config(kConfigs + "/audit_maxwellian.toml");
  std::vector<std::string> out;
  for (unsigned w : {1u, 4u, 8u}) {
    set_worker_count(w);
    out.push_back(to_csv(run_battery(in)) + constants_csv(in));
  }
  set_worker_count(0);
  o.detail << "workers 1/4/8, " << out[0].size() << " bytes";
  o.require(out[0] == out[1] && out[0] == out[2], "byte identity");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"conservation", c01_conservation},        {"h_theorem", c02_h_theorem},
      {"equilibrium_fixed_point", c03_equilibrium}, {"lower_bound", c04_lower_bound},
      {"gain_bounds", c05_gain_bounds},          {"tails", c06_tails},
      {"maxwell_similarity_oracle", c07_bkw},    {"commutators", c08_commutators},
      {"elementary_bounds", c09_elementary},     {"entropy_dissipation", c10_dissipation},
      {"linearized_spectrum", c11_spectrum},     {"ab_decomposition", c12_decomposition},
      {"exponential_convergence", c13_convergence}, {"determinism", c14_determinism}};
  std::set<int> pick;
  for (int i = 1; i < argc; ++i) pick.insert(std::stoi(argv[i]));
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!pick.empty() && !pick.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::printf("%s C%02d %s | %s | %.1f s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(),
                o.detail.str().c_str(), secs);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
