#pragma once

#include <stdexcept>
#include <string>

#include "json.hpp"

#include "kinetic_tails/battery.hpp"

namespace kt {

/// Malformed config text or a schema violation.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Parser for the TOML subset used by run configs: comments, [table] and [[array.of.tables]] headers,
/// dotted table names, bare keys, strings, integers, floats (inf, nan), booleans, (multiline) arrays
/// and inline tables.
nlohmann::ordered_json parse_toml(const std::string& text);

/// Schema-checked conversion; unknown keys and wrong types throw ConfigError.
BatteryInput config_from_json(const nlohmann::ordered_json& j);
BatteryInput config_from_text(const std::string& text);
BatteryInput load_config(const std::string& path);

/// Parses the kernel "b" field: "uniform", "uniform:c", "truncated:lo,hi[,c]" or "table:path".
void parse_angular_spec(const std::string& b, KernelSpec& k);

/// Rejects exponential weights with r <L sqrt(d)>^alpha >= 600.
void validate_weights(const RunConfig& run);

}  // namespace kt
