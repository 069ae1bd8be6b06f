#pragma once

// Configuration file (YAML, two-level sections) for the navtrace tool.

#include "navtrace/harness.hpp"

#include <string>
#include <vector>

namespace navtrace::cli {

/// Tool-level settings on top of the harness configuration.
struct CliConfig {
    harness::Config run = harness::Config::defaults();
    std::vector<int> levels{0, 1, 2};      ///< mesh and solve levels
    std::vector<double> solve_T{1.0};      ///< solve horizons
    std::string solve_data = "eigenmode";  ///< zero | eigenmode | forcing | wave
    int workers = 0;                       ///< 0 = available parallelism
};

extern const std::vector<std::string> kSolveData;

/// Parses YAML text. Unknown keys, wrong types and out-of-range values throw InputError with
/// "<source>:<line>:<col>: <field>: <reason>". Missing keys keep their defaults.
CliConfig parse_config(const std::string& text, const std::string& source = "<config>");
CliConfig load_config(const std::string& path);

/// Canonical YAML of every value that affects results (workers and output location excluded).
std::string canonical_yaml(const CliConfig& config);
/// SHA-256 (hex) of canonical_yaml.
std::string config_hash(const CliConfig& config);
std::string sha256_hex(const std::string& bytes);

/// Worker count actually used: config value, else hardware concurrency (at least 1).
int effective_workers(int requested);

}  // namespace navtrace::cli
