#include "kinetic_tails/report.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace kt {

std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

AuditRow make_row(const std::string& name, double lhs, double rhs, double tol, const std::string& description,
                  const std::string& constants_json) {
  AuditRow r;
  r.name = name;
  r.lhs = lhs;
  r.rhs = rhs;
  r.margin = rhs - lhs;
  r.pass = std::isfinite(lhs) && !std::isnan(rhs) && r.margin >= -tol;
  r.description = description;
  r.constants_json = constants_json;
  return r;
}

bool AuditReport::all_pass() const {
  for (const auto& r : rows)
    if (!r.pass) return false;
  return true;
}

std::size_t AuditReport::passed() const {
  std::size_t k = 0;
  for (const auto& r : rows) k += r.pass ? 1 : 0;
  return k;
}

void AuditReport::append(const AuditReport& other) {
  notes.insert(notes.end(), other.notes.begin(), other.notes.end());
  rows.insert(rows.end(), other.rows.begin(), other.rows.end());
}

namespace {
std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}
}  // namespace

std::string to_csv(const AuditReport& r) {
  std::ostringstream os;
  for (const auto& n : r.notes) os << "# " << n << "\n";
  os << "audit_name,lhs,rhs,margin,pass\n";
  for (const auto& row : r.rows)
    os << quote(row.name) << "," << fmt_double(row.lhs) << "," << fmt_double(row.rhs) << ","
       << fmt_double(row.margin) << "," << (row.pass ? "true" : "false") << "\n";
  return os.str();
}

std::string to_dissipation_csv(const AuditReport& r) {
  std::ostringstream os;
  for (const auto& n : r.notes) os << "# " << n << "\n";
  os << "row,description,lhs,rhs,margin,constants_json,pass\n";
  for (const auto& row : r.rows)
    os << quote(row.name) << "," << quote(row.description) << "," << fmt_double(row.lhs) << ","
       << fmt_double(row.rhs) << "," << fmt_double(row.margin) << "," << quote(row.constants_json) << ","
       << (row.pass ? "true" : "false") << "\n";
  return os.str();
}

std::string to_probe_csv(const std::vector<ProbeRow>& rows) {
  std::ostringstream os;
  os << "level,h,lhs,rhs,ratio\n";
  for (const auto& r : rows)
    os << r.level << "," << fmt_double(r.h) << "," << fmt_double(r.lhs) << "," << fmt_double(r.rhs) << ","
       << fmt_double(r.ratio) << "\n";
  return os.str();
}

}  // namespace kt
