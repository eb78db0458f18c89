#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "kinetic_tails/battery.hpp"
#include "kinetic_tails/config.hpp"
#include "kinetic_tails/linearized.hpp"
#include "kinetic_tails/parallel.hpp"
#include "kinetic_tails/report.hpp"
#include "kinetic_tails/solver.hpp"

namespace {

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  int verbosity = 0;
  std::string dump_matrix;
};

kt::BatteryInput load(const Options& o) {
  kt::BatteryInput in = o.config.empty() ? kt::config_from_text("") : kt::load_config(o.config);
  if (o.seed) {
    in.seed = *o.seed;
    in.run.datum.seed = *o.seed;
  }
  return in;
}

void write_file(const std::string& dir, const std::string& name, const std::string& content) {
  std::filesystem::create_directories(dir);
  std::ofstream os(dir + "/" + name, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + dir + "/" + name);
  os << content;
}

// into out/name when --out is given, else to stdout
void emit(const Options& o, const std::string& name, const std::string& content) {
  if (o.out.empty())
    std::cout << content;
  else
    write_file(o.out, name, content);
}

class Timer {
 public:
  Timer(const Options& o, std::string what) : on_(o.verbosity > 0), what_(std::move(what)) {
    if (on_) std::cerr << "[kt] " << what_ << " (workers=" << kt::worker_count() << ")\n";
  }
  ~Timer() {
    if (!on_) return;
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    std::cerr << "[kt] " << what_ << " done in " << s << " s\n";
  }

 private:
  bool on_;
  std::string what_;
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

int summary_line(const kt::AuditReport& r) {
  std::cout << (r.all_pass() ? "PASS " : "FAIL ") << r.passed() << "/" << r.rows.size() << "\n";
  return r.all_pass() ? 0 : 1;
}

int simulate(const Options& o) {
  const kt::BatteryInput in = load(o);
  Timer t(o, "simulate");
  const kt::SimulationResult res = kt::run_simulation(in.run, o.out);
  if (o.out.empty()) {
    std::cout << kt::to_csv(res.series);
  } else {
    write_file(o.out, "diagnostics.csv", kt::to_csv(res.series));
    write_file(o.out, "summary.csv", kt::summary_csv(res.series));
  }
  return 0;
}

int audit(const Options& o) {
  const kt::BatteryInput in = load(o);
  Timer t(o, "audit");
  const kt::AuditReport rep = kt::run_battery(in);
  emit(o, "audit.csv", kt::to_csv(rep));
  return summary_line(rep);
}

int spectrum(const Options& o) {
  const kt::BatteryInput in = load(o);
  Timer t(o, "spectrum");
  const kt::SpectrumOutcome out = kt::spectrum_pipeline(in);
  std::string eig = "index,eigenvalue\n";
  const auto& ev = out.system.spectrum.eigenvalues;
  for (Eigen::Index i = 0; i < ev.size(); ++i) eig += std::to_string(i) + "," + kt::fmt_double(ev[i]) + "\n";
  if (o.out.empty()) {
    std::cout << eig << kt::to_csv(out.report);
  } else {
    write_file(o.out, "eigenvalues.csv", eig);
    write_file(o.out, "spectrum_audit.csv", kt::to_csv(out.report));
  }
  if (!o.dump_matrix.empty()) kt::write_matrix_binary(out.system.L, out.system.grid, o.dump_matrix);
  return summary_line(out.report);
}

int constants(const Options& o) {
  const kt::BatteryInput in = load(o);
  emit(o, "constants.csv", kt::constants_csv(in));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic solver and inequality audits for the spatially homogeneous Boltzmann equation"};
  app.require_subcommand(1);
  Options o;
  auto common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config, "run config (TOML subset); defaults when omitted")->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output directory (stdout when omitted)");
    sub->add_option("--seed", o.seed, "override the config seed");
    sub->add_flag("-v,--verbose", o.verbosity, "progress and timings on stderr");
  };
  CLI::App* sim = app.add_subcommand("simulate", "integrate the configured run");
  CLI::App* aud = app.add_subcommand("audit", "run the configured audit battery");
  CLI::App* spec = app.add_subcommand("spectrum", "linearized operator: spectrum, gap and A/B split audits");
  CLI::App* con = app.add_subcommand("constants", "kernel, lower-bound and dissipation constants as CSV");
  for (CLI::App* s : {sim, aud, spec, con}) common(s);
  spec->add_option("--dump-matrix", o.dump_matrix, "write the dense operator (binary, shape header)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*sim) return simulate(o);
    if (*aud) return audit(o);
    if (*spec) return spectrum(o);
    if (*con) return constants(o);
  } catch (const kt::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const kt::NumericalAbort& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 2;
}
