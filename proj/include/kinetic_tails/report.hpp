#pragma once

#include <string>
#include <vector>

namespace kt {

/// One audited inequality lhs <= rhs.
struct AuditRow {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;
  bool pass = false;
  std::string description;
  std::string constants_json = "{}";
};

AuditRow make_row(const std::string& name, double lhs, double rhs, double tol = 0.0,
                  const std::string& description = "", const std::string& constants_json = "{}");

struct AuditReport {
  std::string title;
  /// Frozen or derived constants worth recording in the report header.
  std::vector<std::string> notes;
  std::vector<AuditRow> rows;

  bool all_pass() const;
  std::size_t passed() const;
  void append(const AuditReport& other);
};

/// Columns: audit_name, lhs, rhs, margin, pass (notes as leading '#' lines).
std::string to_csv(const AuditReport& r);
/// Columns: row, description, lhs, rhs, margin, constants_json, pass.
std::string to_dissipation_csv(const AuditReport& r);

struct ProbeRow {
  int level = 0;
  double h = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
};

/// Columns: level, h, lhs, rhs, ratio.
std::string to_probe_csv(const std::vector<ProbeRow>& rows);

/// Shortest round-trip decimal representation.
std::string fmt_double(double v);

}  // namespace kt
