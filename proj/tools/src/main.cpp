// navtrace command-line tool. Exit codes: 0 pass, 1 runtime failure or failed checks,
// 2 invalid configuration or usage.

#include "cli_commands.hpp"

#include "navtrace/common.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <functional>
#include <iostream>

using namespace navtrace;
using namespace navtrace::cli;

namespace {

void structured_error(const char* kind, const std::string& message) {
    std::cerr << nlohmann::json{{"error", {{"kind", kind}, {"message", message}}}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Trace-regularity experiments for the mixed elastodynamics problem"};
    app.set_version_flag("--version", tool_version());
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path, out;
    long long seed = -1;
    int workers = -1;
    bool serial = false;
    app.add_option("--config", config_path, "YAML configuration file (defaults apply when omitted)");
    app.add_option("--seed", seed, "Base seed (overrides ensembles.seed)")->check(CLI::NonNegativeNumber);
    app.add_option("--workers", workers, "Worker threads (0 = available parallelism)")->check(CLI::NonNegativeNumber);
    app.add_option("--out", out, "Output directory (overrides output.directory)");
    app.add_flag("--serial", serial, "Single worker; defines the reference output");

    std::string report_dir;
    const std::vector<std::pair<const char*, const char*>> subs = {
        {"mesh", "Write meshes for domain.levels"},
        {"solve", "Single forward solves with norm reports"},
        {"identities", "Boundary identities and the multiplier identity"},
        {"estimates", "Trace/energy estimate sweeps and the transposition identity"},
        {"interp", "Time-scaling estimates in the interpolation scale"},
        {"report", "Markdown summary of the bundles in a directory"},
    };
    for (const auto& [name, help] : subs) {
        auto* sub = app.add_subcommand(name, help);
        if (std::string(name) == "report") sub->add_option("dir", report_dir, "Bundle directory (default: --out)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitPass : kExitConfig;
    }
    const std::string cmd = app.get_subcommands().front()->get_name();

    RunContext ctx;
    try {
        CliConfig cfg = config_path.empty() ? CliConfig{} : load_config(config_path);
        ctx = make_context(std::move(cfg), seed, workers, serial, out);
        ctx.log = &std::cerr;
    } catch (const InputError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    }

    const std::map<std::string, std::function<int()>> commands = {
        {"mesh", [&] { return cmd_mesh(ctx); }},
        {"solve", [&] { return cmd_solve(ctx); }},
        {"identities", [&] { return cmd_identities(ctx); }},
        {"estimates", [&] { return cmd_estimates(ctx); }},
        {"interp", [&] { return cmd_interp(ctx); }},
        {"report", [&] { return cmd_report(report_dir.empty() ? ctx.out : std::filesystem::path(report_dir), std::cout); }},
    };
    try {
        return commands.at(cmd)();
    } catch (const InputError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const NumericalError& e) {
        structured_error("numerical", e.what());
    } catch (const std::exception& e) {
        structured_error("runtime", e.what());
    }
    return kExitFailure;
}
