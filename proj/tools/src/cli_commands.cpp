#include "cli_commands.hpp"

#include "navtrace/dynamics.hpp"
#include "navtrace/geometry.hpp"
#include "navtrace/harness.hpp"
#include "navtrace/spaces.hpp"
#include "navtrace/traces.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace navtrace::cli {

namespace fs = std::filesystem;
using harness::TheoremId;

RunContext make_context(CliConfig config, long long seed_override, int workers_override, bool serial,
                        const std::string& out_override) {
    if (seed_override >= 0) config.run.seed = static_cast<std::uint64_t>(seed_override);
    if (workers_override >= 0) config.workers = workers_override;
    if (serial) config.workers = 1;
    config.run.workers = effective_workers(config.workers);
    if (!out_override.empty()) config.run.output_dir = out_override;
    RunContext ctx;
    ctx.provenance = {config_hash(config), tool_version(), config.run.seed};
    ctx.out = config.run.output_dir;
    ctx.config = std::move(config);
    return ctx;
}

namespace {

bool wants(const RunContext& ctx, const std::string& format) {
    const auto& f = ctx.config.run.formats;
    return std::find(f.begin(), f.end(), format) != f.end();
}

void emit(const RunContext& ctx, const std::string& name, const std::string& content) {
    const fs::path p = ctx.out / name;
    write_atomic(p, content);
    if (ctx.log) *ctx.log << "navtrace: wrote " << p.string() << '\n';
}

std::string stamped(const RunContext& ctx, const std::string& body) {
    return ctx.provenance.comment_line() + "\n" + body;
}

std::string number(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

int run_bundle(const RunContext& ctx, const std::string& name, const std::vector<TheoremId>& ids) {
    harness::Config cfg = ctx.config.run;
    cfg.enabled.clear();
    for (TheoremId id : ids)
        if (std::count(ctx.config.run.enabled.begin(), ctx.config.run.enabled.end(), id)) cfg.enabled.push_back(id);
    if (cfg.enabled.empty()) throw InputError(name + ": none of its experiments is enabled");
    if (ctx.log) {
        *ctx.log << "navtrace: " << name << " config_hash=" << ctx.provenance.config_hash
                 << " seed=" << ctx.provenance.seed << " workers=" << cfg.workers << " experiments=";
        for (std::size_t i = 0; i < cfg.enabled.size(); ++i)
            *ctx.log << (i ? "," : "") << harness::theorem_name(cfg.enabled[i]);
        *ctx.log << '\n';
    }
    harness::Bundle b = harness::run_all(cfg);
    b.meta["config_hash"] = ctx.provenance.config_hash;
    b.meta["command"] = name;
    if (wants(ctx, "json")) emit(ctx, name + ".json", b.to_json());
    if (wants(ctx, "csv"))
        for (const auto& r : b.reports) {
            emit(ctx, name + "_" + r.theorem + "_records.csv", stamped(ctx, r.records_csv()));
            for (const auto& [table, csv] : r.tables) emit(ctx, name + "_" + r.theorem + "_" + table + ".csv", stamped(ctx, csv));
        }
    for (const auto& e : b.errors) {
        nlohmann::json j{{"error", {{"theorem", e.theorem}, {"kind", e.kind}, {"message", e.message}}}};
        std::cerr << j.dump() << '\n';
    }
    if (b.passed()) return kExitPass;
    if (ctx.log)
        for (const auto& r : b.reports)
            for (const auto& [flag, ok] : r.flags)
                if (!ok) *ctx.log << "navtrace: FAIL " << r.theorem << ' ' << flag << '\n';
    return kExitFailure;
}

}  // namespace

int cmd_mesh(const RunContext& ctx) {
    const auto& d = ctx.config.run.domain;
    std::ostringstream summary;
    summary << std::setprecision(17) << "level,nodes,cells,boundary_facets,gamma0_measure,h_max\n";
    for (int level : ctx.config.levels) {
        const geometry::Mesh m = geometry::build_mesh({d.dimension, d.inner_radius, d.outer_radius, level});
        std::ostringstream body;
        geometry::write_mesh(body, m);
        emit(ctx, "mesh_L" + std::to_string(level) + ".txt", stamped(ctx, body.str()));
        summary << level << ',' << m.nodes.size() << ',' << m.cells.size() << ',' << m.facets.size() << ','
                << m.boundary_measure(geometry::BoundaryTag::Gamma0) << ',' << m.max_element_diameter() << '\n';
    }
    emit(ctx, "mesh_summary.csv", stamped(ctx, summary.str()));
    return kExitPass;
}

int cmd_solve(const RunContext& ctx) {
    const auto& c = ctx.config;
    const auto& r = c.run;
    const int dim = r.domain.dimension;
    if (ctx.log)
        *ctx.log << "navtrace: solve config_hash=" << ctx.provenance.config_hash << " seed=" << r.seed
                 << " data=" << c.solve_data << '\n';
    for (int level : c.levels) {
        const geometry::Mesh mesh =
            geometry::build_mesh({dim, r.domain.inner_radius, r.domain.outer_radius, level});
        const spaces::FeSpace V(mesh, r.degree);
        const auto forms = spaces::assemble_forms(V, r.lame);
        const traces::BoundaryQuadrature quad(V, geometry::BoundaryTag::Gamma0, 4);
        double omega1 = 0.0;
        Vector mode;
        if (c.solve_data == "eigenmode" || c.solve_data == "forcing") {
            const auto em = dynamics::compute_eigenmodes(V, forms, 1);
            omega1 = em.omega.at(0);
            mode = em.modes.at(0);
        }
        for (double T : c.solve_T) {
            const long base = std::max(1L, std::lround(r.steps_per_unit * T));
            const dynamics::TimeGrid grid{T, static_cast<int>(base << level)};
            const dynamics::ElastodynamicsSolver S(V, forms, grid, r.lift);
            dynamics::ProblemData data;
            const std::uint64_t seed = harness::member_seed(r.seed, 0);
            if (c.solve_data == "eigenmode") {
                data.u0_coeffs = mode;
                data.compatible = false;
            } else if (c.solve_data == "forcing") {
                data.F = harness::forcing_member(dim, seed, omega1, r.smoothness).function();
            } else if (c.solve_data == "wave") {
                // standing waves vanish at t = 0, so they are compatible with zero initial data
                data.g = harness::wave_member(dim, seed, r.smoothness, true).field().as_function();
            }
            const auto tr = S.solve_forward(data);
            auto rep = traces::trajectory_report(tr, forms, r.lame, quad);
            rep.set_meta("config_hash", ctx.provenance.config_hash);
            rep.set_meta("version", ctx.provenance.version);
            rep.set_meta("seed", std::to_string(r.seed));
            rep.set_meta("data", c.solve_data);
            rep.set_meta("level", std::to_string(level));
            rep.set_meta("T", number(T));
            rep.set_meta("steps", std::to_string(grid.N));
            const std::string stem = "solve_L" + std::to_string(level) + "_T" + number(T);
            if (wants(ctx, "json")) emit(ctx, stem + "_norms.json", rep.to_json() + "\n");
            if (wants(ctx, "csv")) {
                emit(ctx, stem + "_norms.csv", stamped(ctx, rep.to_csv()));
                std::ostringstream energy;
                dynamics::write_energy_csv(energy, tr, forms);
                emit(ctx, stem + "_energy.csv", stamped(ctx, energy.str()));
            }
        }
    }
    return kExitPass;
}

int cmd_identities(const RunContext& ctx) {
    return run_bundle(ctx, "identities", {TheoremId::AppA, TheoremId::MultId});
}

int cmd_estimates(const RunContext& ctx) {
    return run_bundle(ctx, "estimates",
                      {TheoremId::T31, TheoremId::T34, TheoremId::T35, TheoremId::L37, TheoremId::T38,
                       TheoremId::T39k1, TheoremId::T310, TheoremId::Transpose});
}

int cmd_interp(const RunContext& ctx) { return run_bundle(ctx, "interp", {TheoremId::AppB}); }

int cmd_report(const fs::path& dir, std::ostream& os) {
    const std::string md = markdown_report(dir);
    write_atomic(dir / "report.md", md);
    os << md;
    return kExitPass;
}

}  // namespace navtrace::cli
