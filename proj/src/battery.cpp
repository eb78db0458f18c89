#include "kinetic_tails/battery.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "kinetic_tails/collision.hpp"
#include "kinetic_tails/entropy.hpp"
#include "kinetic_tails/fracdiff.hpp"
#include "kinetic_tails/kernels.hpp"

namespace kt {

namespace {

VelocityGrid run_grid(const RunConfig& run) { return build_grid(run.grid.d, run.grid.n, run.grid.L); }

DistributionField fixture_field(const BatteryInput& in, const std::string& family, const VelocityGrid& g) {
  DatumSpec spec = in.run.datum;
  spec.family = family;
  spec.seed = in.seed;
  return make_datum(spec, g, in.run.kernel);
}

void add_prefixed(AuditReport& rep, const std::string& prefix, const AuditReport& part) {
  for (auto row : part.rows) {
    row.name = prefix + "/" + row.name;
    rep.rows.push_back(row);
  }
  for (const auto& n : part.notes) rep.notes.push_back(prefix + ": " + n);
}

void add_row(AuditReport& rep, const std::string& prefix, AuditRow row) {
  row.name = prefix + "/" + row.name;
  rep.rows.push_back(std::move(row));
}

double l1(const DistributionField& f) {
  return grid_integral(f.grid, [&](std::size_t i) { return std::abs(f[i]); });
}

}  // namespace

AuditReport collision_audits(const BatteryInput& in) {
  AuditReport rep;
  rep.title = "collision";
  const VelocityGrid g = run_grid(in.run);
  const int d = g.d;
  const CollisionKernel kernel = build_kernel(in.run.kernel, d);
  const SphereQuadrature sphere = build_sphere(d, in.run.grid.n_angles);
  const EpsilonSplit split = split_epsilon(kernel.angular, in.audit.split_eps);
  const NiceRemainderSplit nice = split_nice_remainder(kernel, in.spectrum.delta, in.audit.split_eps);
  for (const auto& fam : in.audit.fixtures) {
    const DistributionField f = fixture_field(in, fam, g);
    const DistributionField M = maxwellian_fit(f).field;
    const double loss = l1(q_minus(M, M, kernel));
    const double q = l1(collision(M, kernel, sphere, in.run.grid.interp));
    add_row(rep, fam,
            make_row("equilibrium_fixed_point", q / loss, in.run.tol.equilibrium, 0.0,
                     "||Q(M, M)||_1 / ||Q^-(M, M)||_1 for the Maxwellian of the fixture"));
    add_row(rep, fam, audit_lower_bound(f, kernel.gamma));
    WeightSpec w;
    w.mu = in.audit.weight_mu;
    GainAuditOptions opt;
    opt.nice = &nice;
    add_prefixed(rep, fam, audit_gain_bounds(f, kernel, split, w, sphere, opt));
  }
  return rep;
}

AuditReport fracdiff_audits(const BatteryInput& in) {
  AuditReport rep;
  rep.title = "fracdiff";
  add_prefixed(rep, "elementary", elementary_bounds_check(in.audit.elementary_samples, 1.0, 1.0, in.seed));

  const VelocityGrid g = run_grid(in.run);
  const int d = g.d;
  const CollisionKernel kernel = build_kernel(in.run.kernel, d);
  const SphereQuadrature sphere = build_sphere(d, in.run.grid.n_angles);
  const double s = in.audit.commutator_s;
  WeightSpec w;
  w.p = 2.0;
  w.r = in.audit.commutator_r;
  w.alpha = in.audit.commutator_alpha;
  const double bmass = kernel.angular.total_mass;

  for (const auto& fam : in.audit.fixtures) {
    const DistributionField f = fixture_field(in, fam, g);
    // constant potential: the commutator vanishes identically
    LossCommutatorBound flat = loss_commutator_bound(f, f, 0.0, bmass, s, w);
    add_row(rep, fam,
            make_row("loss_remainder_constant_potential", flat.lhs, 1e-12 * flat.norms, 0.0,
                     "loss remainder with gamma = 0 against roundoff"));
    add_row(rep, fam, loss_commutator_row(loss_commutator_bound(f, f, kernel.gamma, bmass, s, w)));
    GainCommutatorResult g0 = gain_commutator(f, f, kernel, sphere, 0.0, w, in.run.grid.interp);
    add_row(rep, fam,
            make_row("gain_remainder_order_zero", g0.lhs, 1e-12 * g0.norms, 0.0,
                     "gain remainder with s = 0 against roundoff"));
    add_row(rep, fam, gain_commutator(f, f, kernel, sphere, s, w, in.run.grid.interp).row);
    add_row(rep, fam, weight_commutator(f, s, in.audit.commutator_r, in.audit.commutator_alpha).row);
  }

  // slope of the discrete kernel gradient near the origin (needs h <= 1/2)
  const BesselKernelTable t = build_bessel_table(build_grid(d, 32, 8.0), s);
  rep.rows.push_back(make_row("bessel_gradient_slope", std::abs(t.slope - t.slope_expected), 0.1, 0.0,
                              "log-log slope of grad phi near the origin against s - d - 1"));
  return rep;
}

AuditReport entropy_audits(const BatteryInput& in) {
  AuditReport rep;
  rep.title = "entropy";
  const VelocityGrid g = run_grid(in.run);
  const int d = g.d;
  const CollisionKernel kernel = build_kernel(in.run.kernel, d);
  const SphereQuadrature sphere = build_sphere(d, in.run.grid.n_angles);
  for (const auto& fam : in.audit.fixtures) {
    const DistributionField f = fixture_field(in, fam, g);
    add_row(rep, fam, relative_entropy(f).ckp);
    GaussianFloor floor;
    try {
      floor = gaussian_floor_fit(f);
    } catch (const std::invalid_argument&) {
      rep.notes.push_back(fam + ": dissipation audit skipped, no Gaussian floor (f vanishes)");
      continue;
    }
    DissipationConfig cfg;
    cfg.K_B = symmetric_angular_floor(kernel.angular);
    cfg.beta = 0.0;
    cfg.q_o = in.audit.dissipation_q;
    cfg.K_o = floor.K_o;
    cfg.A_o = floor.A_o;
    cfg.epsilon = in.audit.dissipation_eps;
    if (!(cfg.K_B > 0.0)) {
      rep.notes.push_back(fam + ": dissipation audit skipped, angular kernel has no positive floor");
      continue;
    }
    cfg.p = INFINITY;
    add_prefixed(rep, fam + "/p_inf", dissipation_audit(f, cfg, kernel, sphere, in.run.grid.interp));
    cfg.llogl = true;
    add_prefixed(rep, fam + "/llogl", dissipation_audit(f, cfg, kernel, sphere, in.run.grid.interp));
  }
  return rep;
}

SpectrumOutcome spectrum_pipeline(const BatteryInput& in) {
  const SpectrumConfig& sc = in.spectrum;
  const int d = in.run.grid.d;
  SpectrumOutcome out;
  AuditReport& rep = out.report;
  rep.title = "linearized";
  const CollisionKernel kernel = build_kernel(in.run.kernel, d);
  const SphereQuadrature sphere = build_sphere(d, sc.n_angles);
  // equilibrium of the run's datum, recentred (the spectrum is Galilean invariant); L in thermal units
  MaxwellianParams mp = maxwellian_fit(make_datum(in.run.datum, run_grid(in.run), in.run.kernel)).params;
  mp.mu = {0.0, 0.0, 0.0};
  const double L = sc.L * std::sqrt(mp.T);
  const Interpolation interp{sc.interp_order, 1};

  out.system = assemble_linearized(mp, kernel, build_grid(d, sc.n, L), sphere, interp);
  LinearizedSystem& sys = out.system;
  const SpectralData& sp = spectrum_and_gap(sys, sc.kernel_tol, in.seed);

  rep.rows.push_back(make_row("linearized_equilibrium_residual", sys.equilibrium_residual, in.run.tol.equilibrium,
                              0.0, "||L M||_1 relative to the loss term"));
  rep.rows.push_back(make_row("linearized_momentum_residual", sys.momentum_residual, in.run.tol.equilibrium, 0.0,
                              "||L v_1 M||_1 relative to the loss term"));
  rep.rows.push_back(make_row("near_zero_eigenvalue_count", std::abs(sp.near_zero - (d + 2)), 0.0, 0.0,
                              "|#{|lambda| < tol gap} - (d + 2)|"));
  rep.rows.push_back(make_row("kernel_subspace_angle", sp.kernel_angle, sc.angle_tol, 0.0,
                              "sine of the largest angle between the numerical kernel and the invariants"));
  rep.rows.push_back(make_row("weighted_self_adjointness", sp.self_adjoint_residual, sc.self_adjoint_tol, 0.0,
                              "random-pair residual of the weighted symmetry"));
  rep.rows.push_back(make_row("spectral_gap_positive", sc.kernel_tol * sp.gap, sp.gap, 0.0,
                              "all non-kernel eigenvalues strictly negative"));
  rep.notes.push_back("rho=" + fmt_double(mp.rho) + " T=" + fmt_double(mp.T) + " gap=" + fmt_double(sp.gap));
  rep.notes.push_back("raw_asymmetry=" + fmt_double(sp.raw_asymmetry));

  if (sc.n_coarse > 0) {
    LinearizedSystem coarse = assemble_linearized(mp, kernel, build_grid(d, sc.n_coarse, L), sphere, interp);
    out.coarse_gap = spectrum_and_gap(coarse, sc.kernel_tol, in.seed).gap;
    rep.rows.push_back(make_row("spectral_gap_refinement", std::abs(sp.gap - out.coarse_gap) / sp.gap,
                                sc.gap_stability, 0.0, "relative gap change between two resolutions"));
    rep.notes.push_back("coarse_gap=" + fmt_double(out.coarse_gap));
  }

  for (double k : sc.k) {
    ABSplit split = split_AB(sys, sc.delta, sc.eps, k);
    DecayAuditOptions opt;
    opt.samples = sc.samples;
    opt.T = sc.T;
    opt.decay_samples = sc.decay_samples;
    opt.seed = in.seed + 10;
    rep.append(dissipativity_and_decay_audit(split, sys, opt));
  }
  return out;
}

AuditReport run_battery(const BatteryInput& in) {
  AuditReport rep;
  rep.title = "audit_battery";
  for (const auto& sec : in.audit.sections) {
    if (sec == "collision")
      rep.append(collision_audits(in));
    else if (sec == "fracdiff")
      rep.append(fracdiff_audits(in));
    else if (sec == "entropy")
      rep.append(entropy_audits(in));
    else if (sec == "linearized")
      rep.append(spectrum_pipeline(in).report);
    else
      throw std::invalid_argument("unknown audit section: " + sec);
  }
  return rep;
}

std::string constants_csv(const BatteryInput& in) {
  const int d = in.run.grid.d;
  const CollisionKernel kernel = build_kernel(in.run.kernel, d);
  const AngularKernel& b = kernel.angular;
  const double gamma = kernel.gamma;
  std::ostringstream os;
  os << "name,value\n";
  auto put = [&](const std::string& name, double v) { os << name << ',' << fmt_double(v) << '\n'; };
  put("total_mass", b.total_mass);
  put("gamma", gamma);
  put("surface_mass", surface_mass(b));
  const EpsilonSplit split = split_epsilon(b, in.audit.split_eps);
  put("split_remainder_mass", split.remainder_mass);
  for (const YoungTriple& t : GainAuditOptions{}.triples) {
    std::ostringstream nm;
    nm << "young_p" << fmt_double(t.p) << "_q" << fmt_double(t.q) << "_r" << fmt_double(t.r);
    put(nm.str(), young_constant(b, t.p, t.q, t.r, in.audit.weight_mu, gamma));
  }

  const DistributionField f = make_datum(in.run.datum, run_grid(in.run), in.run.kernel);
  const LowerBoundCertificate cert = lower_bound_certificate(f, gamma);
  put("lower_bound_c_o", cert.c_o);
  put("lower_bound_r_star", cert.r_star);
  put("lower_bound_ratio", lower_bound_ratio(f, gamma));
  put("K_B", symmetric_angular_floor(b));
  try {
    const GaussianFloor fl = gaussian_floor_fit(f);
    put("gaussian_floor_K_o", fl.K_o);
    put("gaussian_floor_A_o", fl.A_o);
  } catch (const std::invalid_argument&) {
  }
  put("dissipation_exponent_p_inf", dissipation_exponent(in.audit.dissipation_eps, gamma, INFINITY, d));
  put("dissipation_exponent_p_2", dissipation_exponent(in.audit.dissipation_eps, gamma, 2.0, d));
  put("maxwell_similarity_rate", bkw_rate(b, in.run.datum.rho));
  put("frozen_loss_commutator", FrozenConstants::loss_commutator);
  put("frozen_gain_commutator", FrozenConstants::gain_commutator);
  put("frozen_weight_commutator", FrozenConstants::weight_commutator);
  return os.str();
}

}  // namespace kt
