#pragma once

#include "cli_config.hpp"
#include "cli_output.hpp"

#include <filesystem>
#include <iosfwd>

namespace navtrace::cli {

enum ExitCode { kExitPass = 0, kExitFailure = 1, kExitConfig = 2 };

struct RunContext {
    CliConfig config;  ///< run.workers already resolved
    Provenance provenance;
    std::filesystem::path out;
    std::ostream* log = nullptr;  ///< progress lines (may be null)
};

/// Builds the context from a parsed config and command-line overrides (negative = unset).
RunContext make_context(CliConfig config, long long seed_override, int workers_override, bool serial,
                        const std::string& out_override);

int cmd_mesh(const RunContext& ctx);
int cmd_solve(const RunContext& ctx);
/// Boundary identities and the multiplier identity.
int cmd_identities(const RunContext& ctx);
/// Trace and energy estimates plus the transposition identity.
int cmd_estimates(const RunContext& ctx);
/// Interpolation-scale (time-scaling) estimates.
int cmd_interp(const RunContext& ctx);
/// Writes report.md into `dir` and prints it to `os`.
int cmd_report(const std::filesystem::path& dir, std::ostream& os);

}  // namespace navtrace::cli
