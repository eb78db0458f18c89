#include "kinetic_tails/config.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace kt {

using json = nlohmann::ordered_json;

namespace {

class TomlParser {
 public:
  explicit TomlParser(const std::string& text) : s_(text) {}

  json parse() {
    json root = json::object();
    json* table = &root;
    while (true) {
      skip_blank_lines();
      if (eof()) break;
      if (peek() == '[') {
        table = header(root);
      } else {
        key_value(*table);
      }
      end_of_line();
    }
    return root;
  }

 private:
  const std::string& s_;
  std::size_t pos_ = 0;
  int line_ = 1;
  std::set<const json*> inline_tables_;

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("config line " + std::to_string(line_) + ": " + what);
  }
  bool eof() const { return pos_ >= s_.size(); }
  char peek() const { return eof() ? '\0' : s_[pos_]; }
  char get() {
    char c = s_[pos_++];
    if (c == '\n') ++line_;
    return c;
  }

  void skip_ws() {
    while (!eof() && (peek() == ' ' || peek() == '\t')) ++pos_;
  }
  void skip_comment() {
    if (peek() == '#')
      while (!eof() && peek() != '\n') ++pos_;
  }
  void skip_blank_lines() {
    while (true) {
      skip_ws();
      skip_comment();
      if (!eof() && (peek() == '\n' || peek() == '\r')) {
        get();
        continue;
      }
      break;
    }
  }
  // whitespace, comments and newlines inside arrays
  void skip_all() {
    while (true) {
      skip_ws();
      skip_comment();
      if (!eof() && (peek() == '\n' || peek() == '\r')) {
        get();
        continue;
      }
      break;
    }
  }
  void end_of_line() {
    skip_ws();
    skip_comment();
    if (eof()) return;
    if (peek() == '\r') ++pos_;
    if (eof()) return;
    if (peek() != '\n') fail("unexpected trailing characters");
    get();
  }

  std::string bare_key() {
    skip_ws();
    if (peek() == '"') return quoted();
    std::string k;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-'))
      k += s_[pos_++];
    if (k.empty()) fail("expected a key");
    return k;
  }

  std::vector<std::string> dotted_key() {
    std::vector<std::string> parts{bare_key()};
    skip_ws();
    while (peek() == '.') {
      ++pos_;
      parts.push_back(bare_key());
      skip_ws();
    }
    return parts;
  }

  json* descend(json& root, const std::vector<std::string>& parts, std::size_t count) {
    json* t = &root;
    for (std::size_t i = 0; i < count; ++i) {
      json& next = (*t)[parts[i]];
      if (next.is_null()) next = json::object();
      if (next.is_array() && !next.empty() && next.back().is_object()) {
        t = &next.back();
        continue;
      }
      if (!next.is_object() || inline_tables_.count(&next)) fail("key '" + parts[i] + "' is not a table");
      t = &next;
    }
    return t;
  }

  json* header(json& root) {
    ++pos_;
    const bool array = peek() == '[';
    if (array) ++pos_;
    std::vector<std::string> parts = dotted_key();
    if (get() != ']') fail("expected ']'");
    if (array && (eof() || get() != ']')) fail("expected ']]'");
    json* parent = descend(root, parts, parts.size() - 1);
    json& slot = (*parent)[parts.back()];
    if (array) {
      if (slot.is_null()) slot = json::array();
      if (!slot.is_array()) fail("'" + parts.back() + "' is not an array of tables");
      slot.push_back(json::object());
      return &slot.back();
    }
    if (slot.is_null()) {
      slot = json::object();
      return &slot;
    }
    if (slot.is_object() && slot.empty()) return &slot;
    fail("table '" + parts.back() + "' defined twice");
  }

  void key_value(json& table) {
    std::vector<std::string> parts = dotted_key();
    skip_ws();
    if (get() != '=') fail("expected '='");
    skip_ws();
    json* t = descend(table, parts, parts.size() - 1);
    if (t->contains(parts.back())) fail("duplicate key '" + parts.back() + "'");
    (*t)[parts.back()] = value();
  }

  std::string quoted() {
    get();
    std::string out;
    while (true) {
      if (eof() || peek() == '\n') fail("unterminated string");
      char c = get();
      if (c == '"') break;
      if (c == '\\') {
        if (eof()) fail("unterminated string");
        char e = get();
        switch (e) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          default: fail(std::string("unknown escape \\") + e);
        }
      } else {
        out += c;
      }
    }
    return out;
  }

  json number_or_word() {
    std::string tok;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '+' || peek() == '-' ||
                      peek() == '.' || peek() == '_'))
      tok += s_[pos_++];
    if (tok == "true") return true;
    if (tok == "false") return false;
    std::string t;
    for (char c : tok)
      if (c != '_') t += c;
    const std::string body = (!t.empty() && (t[0] == '+' || t[0] == '-')) ? t.substr(1) : t;
    const double sign = (!t.empty() && t[0] == '-') ? -1.0 : 1.0;
    if (body == "inf") return sign * std::numeric_limits<double>::infinity();
    if (body == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (body.empty()) fail("expected a value");
    const bool is_float = body.find_first_of(".eE") != std::string::npos;
    try {
      std::size_t used = 0;
      if (is_float) {
        double v = std::stod(t, &used);
        if (used == t.size()) return v;
      } else {
        long long v = std::stoll(t, &used);
        if (used == t.size()) return v;
      }
    } catch (const std::exception&) {
    }
    fail("invalid value '" + tok + "'");
  }

  json value() {
    skip_ws();
    if (eof()) fail("missing value");
    const char c = peek();
    if (c == '"') return quoted();
    if (c == '[') {
      ++pos_;
      json arr = json::array();
      while (true) {
        skip_all();
        if (peek() == ']') {
          ++pos_;
          break;
        }
        arr.push_back(value());
        skip_all();
        if (peek() == ',') {
          ++pos_;
          continue;
        }
        if (peek() == ']') {
          ++pos_;
          break;
        }
        fail("expected ',' or ']' in array");
      }
      return arr;
    }
    if (c == '{') {
      ++pos_;
      json tab = json::object();
      skip_ws();
      if (peek() == '}') {
        ++pos_;
        return tab;
      }
      while (true) {
        key_value(tab);
        skip_ws();
        char e = eof() ? '\0' : get();
        if (e == ',') continue;
        if (e == '}') break;
        fail("expected ',' or '}' in inline table");
      }
      return tab;
    }
    return number_or_word();
  }
};

// Reads keys from one table and rejects anything it did not consume.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected a table");
  }

  bool has(const char* key) const { return j_.contains(key); }

  void get(const char* key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) type_error(key, "number");
      out = v->get<double>();
    }
  }
  void get(const char* key, int& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) type_error(key, "integer");
      long long x = v->get<long long>();
      if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) type_error(key, "int32");
      out = static_cast<int>(x);
    }
  }
  void get(const char* key, std::uint64_t& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer() || v->get<long long>() < 0) type_error(key, "nonnegative integer");
      out = v->get<std::uint64_t>();
    }
  }
  void get(const char* key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) type_error(key, "boolean");
      out = v->get<bool>();
    }
  }
  void get(const char* key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) type_error(key, "string");
      out = v->get<std::string>();
    }
  }
  void get(const char* key, std::vector<double>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array()) type_error(key, "array of numbers");
      out.clear();
      for (const auto& x : *v) {
        if (!x.is_number()) type_error(key, "array of numbers");
        out.push_back(x.get<double>());
      }
    }
  }
  void get(const char* key, std::vector<std::string>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array()) type_error(key, "array of strings");
      out.clear();
      for (const auto& x : *v) {
        if (!x.is_string()) type_error(key, "array of strings");
        out.push_back(x.get<std::string>());
      }
    }
  }
  const json* sub(const char* key) { return find(key); }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!used_.count(k)) throw ConfigError("unknown key '" + qualified(k) + "'");
  }
  std::string qualified(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;

  const json* find(const char* key) {
    if (!j_.contains(key)) return nullptr;
    used_.insert(key);
    return &j_.at(key);
  }
  [[noreturn]] void type_error(const char* key, const char* want) const {
    throw ConfigError("key '" + qualified(key) + "' must be a " + want);
  }
};

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

void read_kernel(const json& j, KernelSpec& k) {
  Section s(j, "kernel");
  s.get("gamma", k.gamma);
  std::string b = "uniform";
  s.get("b", b);
  s.get("normalize", k.normalize);
  s.get("nodes", k.nodes);
  s.finish();
  parse_angular_spec(b, k);
  require(k.gamma >= 0.0 && k.gamma <= 2.0, "kernel.gamma must lie in [0, 2]");
  require(k.nodes >= 8, "kernel.nodes must be >= 8");
}

void read_grid(const json& j, GridSpec& g) {
  Section s(j, "grid");
  s.get("d", g.d);
  s.get("n", g.n);
  s.get("L", g.L);
  s.get("n_angles", g.n_angles);
  s.get("interp_order", g.interp.order);
  s.get("upsample", g.interp.upsample);
  s.finish();
  require(g.d == 2 || g.d == 3, "grid.d must be 2 or 3");
  require(g.n >= 4, "grid.n must be >= 4");
  require(g.L > 0.0, "grid.L must be positive");
  require(g.n_angles >= 4, "grid.n_angles must be >= 4");
  require(g.interp.order == 1 || g.interp.order == 3, "grid.interp_order must be 1 or 3");
  require(g.interp.upsample >= 1, "grid.upsample must be >= 1");
}

void read_datum(const json& j, DatumSpec& dt) {
  Section s(j, "datum");
  s.get("family", dt.family);
  s.get("rho", dt.rho);
  s.get("T", dt.T);
  s.get("separation", dt.separation);
  s.get("bump_T", dt.bump_T);
  s.get("radius", dt.radius);
  s.get("amplitude", dt.amplitude);
  s.get("K0", dt.K0);
  s.get("seed", dt.seed);
  s.finish();
  static const std::set<std::string> families{"maxwellian",   "two_bump",    "compact_bump", "random_smooth",
                                              "perturbed_maxwellian", "bkw"};
  require(families.count(dt.family) > 0, "datum.family '" + dt.family + "' is not a known family");
  require(dt.rho > 0.0 && dt.T > 0.0, "datum.rho and datum.T must be positive");
}

void read_time(const json& j, RunConfig& rc) {
  Section s(j, "time");
  s.get("dt", rc.dt);
  s.get("t_end", rc.t_end);
  s.get("stride", rc.stride);
  s.get("snapshot_stride", rc.snapshot_stride);
  s.finish();
  require(rc.dt >= 0.0, "time.dt must be >= 0 (0 selects the stability bound)");
  require(rc.t_end > 0.0, "time.t_end must be positive");
  require(rc.stride >= 1, "time.stride must be >= 1");
  require(rc.snapshot_stride >= 0, "time.snapshot_stride must be >= 0");
}

WeightSpec read_weight(const json& j, const std::string& path) {
  Section s(j, path);
  WeightSpec w;
  s.get("p", w.p);
  s.get("mu", w.mu);
  s.get("r", w.r);
  s.get("alpha", w.alpha);
  s.get("k", w.k);
  s.finish();
  require(w.p >= 1.0, path + ".p must be >= 1");
  require(w.r >= 0.0, path + ".r must be >= 0");
  return w;
}

void read_monitors(const json& j, MonitorSpec& m) {
  Section s(j, "monitors");
  if (const json* norms = s.sub("norms")) {
    if (!norms->is_array()) throw ConfigError("key 'monitors.norms' must be an array of tables");
    m.norms.clear();
    for (std::size_t i = 0; i < norms->size(); ++i)
      m.norms.push_back(read_weight((*norms)[i], "monitors.norms[" + std::to_string(i) + "]"));
  }
  s.get("tail_r0", m.tail_r0);
  s.get("tail_levels", m.tail_levels);
  s.get("tail_alpha", m.tail_alpha);
  s.get("tail_p", m.tail_p);
  s.get("creation_a0", m.creation_a0);
  s.get("creation_levels", m.creation_levels);
  s.get("creation_p", m.creation_p);
  s.get("entropy", m.entropy);
  s.get("entropic_s", m.entropic_s);
  s.get("lower_bound", m.lower_bound);
  s.get("sobolev", m.sobolev);
  s.get("sobolev_k", m.sobolev_k);
  s.get("sobolev_r", m.sobolev_r);
  s.get("sobolev_alpha", m.sobolev_alpha);
  s.get("production_stride", m.production_stride);
  s.finish();
  require(m.tail_levels >= 1 && m.creation_levels >= 1, "monitor ladders need at least one level");
  require(m.production_stride >= 0, "monitors.production_stride must be >= 0");
}

void read_tolerances(const json& j, Tolerances& t) {
  Section s(j, "tolerances");
  s.get("equilibrium", t.equilibrium);
  s.get("entropy_increase", t.entropy_increase);
  s.get("projection", t.projection);
  s.finish();
}

void read_audit(const json& j, AuditConfig& a) {
  Section s(j, "audit");
  s.get("sections", a.sections);
  s.get("fixtures", a.fixtures);
  s.get("split_eps", a.split_eps);
  s.get("weight_mu", a.weight_mu);
  s.get("elementary_samples", a.elementary_samples);
  s.get("commutator_s", a.commutator_s);
  s.get("commutator_r", a.commutator_r);
  s.get("commutator_alpha", a.commutator_alpha);
  s.get("dissipation_eps", a.dissipation_eps);
  s.get("dissipation_q", a.dissipation_q);
  s.finish();
  static const std::set<std::string> known{"collision", "fracdiff", "entropy", "linearized"};
  for (const auto& sec : a.sections) require(known.count(sec) > 0, "audit.sections: unknown section '" + sec + "'");
  require(a.split_eps > 0.0 && a.split_eps < 1.0, "audit.split_eps must lie in (0, 1)");
  require(a.elementary_samples >= 1, "audit.elementary_samples must be >= 1");
  require(a.commutator_s > 0.0 && a.commutator_s <= 1.0, "audit.commutator_s must lie in (0, 1]");
  require(a.commutator_r >= 0.0 && a.commutator_r < 0.25, "audit.commutator_r must lie in [0, 1/4)");
  require(a.commutator_alpha > 0.0 && a.commutator_alpha <= 1.0, "audit.commutator_alpha must lie in (0, 1]");
  require(a.dissipation_eps > 0.0 && a.dissipation_eps < 1.0, "audit.dissipation_eps must lie in (0, 1)");
  require(a.dissipation_q >= 2.0, "audit.dissipation_q must be >= 2");
}

void read_spectrum(const json& j, SpectrumConfig& sc) {
  Section s(j, "spectrum");
  s.get("n", sc.n);
  s.get("L", sc.L);
  s.get("interp_order", sc.interp_order);
  s.get("n_angles", sc.n_angles);
  s.get("n_coarse", sc.n_coarse);
  s.get("kernel_tol", sc.kernel_tol);
  s.get("angle_tol", sc.angle_tol);
  s.get("self_adjoint_tol", sc.self_adjoint_tol);
  s.get("gap_stability", sc.gap_stability);
  s.get("delta", sc.delta);
  s.get("eps", sc.eps);
  s.get("k", sc.k);
  s.get("samples", sc.samples);
  s.get("decay_samples", sc.decay_samples);
  s.get("T", sc.T);
  s.finish();
  require(sc.interp_order == 1 || sc.interp_order == 3 || sc.interp_order == 5 || sc.interp_order == 7,
          "spectrum.interp_order must be 1, 3, 5 or 7");
  require(sc.n >= 4 && sc.L > 0.0 && sc.n_coarse >= 0, "spectrum grid must be nonempty");
  require(sc.samples >= 1 && sc.decay_samples >= 0 && sc.T > 0.0, "spectrum sampling must be positive");
  for (double k : sc.k) require(k >= 0.0, "spectrum.k must be nonnegative");
}

}  // namespace

json parse_toml(const std::string& text) { return TomlParser(text).parse(); }

void parse_angular_spec(const std::string& b, KernelSpec& k) {
  const auto colon = b.find(':');
  const std::string head = b.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : b.substr(colon + 1);
  auto numbers = [&](const std::string& list) {
    std::vector<double> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        std::size_t used = 0;
        out.push_back(std::stod(item, &used));
        if (used != item.size()) throw std::invalid_argument(item);
      } catch (const std::exception&) {
        throw ConfigError("kernel.b: bad number '" + item + "'");
      }
    }
    return out;
  };
  if (head == "uniform") {
    k.kind = AngularKind::uniform;
    k.params = rest.empty() ? std::vector<double>{1.0} : numbers(rest);
    require(k.params.size() == 1, "kernel.b: uniform takes one value");
  } else if (head == "truncated") {
    k.kind = AngularKind::truncated_uniform;
    k.params = numbers(rest);
    require(k.params.size() == 2 || k.params.size() == 3, "kernel.b: truncated needs lo,hi[,c]");
  } else if (head == "table") {
    require(!rest.empty(), "kernel.b: table needs a path");
    k.kind = AngularKind::table;
    k.table_path = rest;
    k.params.clear();
  } else {
    throw ConfigError("kernel.b: unknown profile '" + b + "'");
  }
}

void validate_weights(const RunConfig& run) {
  const double reach = std::sqrt(1.0 + run.grid.L * run.grid.L * run.grid.d);
  auto check = [&](double r, double alpha, const std::string& what) {
    if (r > 0.0 && !(r * std::pow(reach, alpha) < 600.0))
      throw ConfigError(what + ": r <L sqrt(d)>^alpha must stay below 600");
  };
  for (const auto& w : run.monitors.norms) check(w.r, w.alpha, "monitors.norms");
  check(run.monitors.tail_r0, run.monitors.tail_alpha, "monitors.tail_r0");
  check(run.monitors.creation_a0, run.kernel.gamma, "monitors.creation_a0");
  if (run.monitors.sobolev) check(run.monitors.sobolev_r, run.monitors.sobolev_alpha, "monitors.sobolev_r");
}

BatteryInput config_from_json(const json& j) {
  BatteryInput in;
  Section top(j, "");
  top.get("seed", in.seed);
  bool datum_seed = false;
  if (const json* v = top.sub("kernel")) read_kernel(*v, in.run.kernel);
  if (const json* v = top.sub("grid")) read_grid(*v, in.run.grid);
  if (const json* v = top.sub("datum")) {
    datum_seed = v->is_object() && v->contains("seed");
    read_datum(*v, in.run.datum);
  }
  if (const json* v = top.sub("time")) read_time(*v, in.run);
  if (const json* v = top.sub("monitors")) read_monitors(*v, in.run.monitors);
  if (const json* v = top.sub("tolerances")) read_tolerances(*v, in.run.tol);
  if (const json* v = top.sub("audit")) read_audit(*v, in.audit);
  if (const json* v = top.sub("spectrum")) read_spectrum(*v, in.spectrum);
  top.finish();
  if (!datum_seed) in.run.datum.seed = in.seed;
  const std::size_t n = in.spectrum.n;
  require(std::pow(static_cast<double>(n), in.run.grid.d) <= kDenseLimit, "spectrum.n too large for dense assembly");
  validate_weights(in.run);
  return in;
}

BatteryInput config_from_text(const std::string& text) { return config_from_json(parse_toml(text)); }

BatteryInput load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return config_from_text(ss.str());
}

}  // namespace kt
