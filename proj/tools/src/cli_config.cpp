#include "cli_config.hpp"

#include <openssl/evp.h>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <functional>
#include <iomanip>
#include <set>
#include <sstream>
#include <thread>

namespace navtrace::cli {

const std::vector<std::string> kSolveData = {"zero", "eigenmode", "forcing", "wave"};

namespace {

class Parser {
public:
    explicit Parser(std::string source) : source_(std::move(source)) {}

    [[noreturn]] void fail(const YAML::Node& at, const std::string& field, const std::string& reason) const {
        std::ostringstream os;
        os << source_;
        const YAML::Mark m = at.Mark();
        if (!m.is_null()) os << ':' << m.line + 1 << ':' << m.column + 1;
        os << ": " << field << ": " << reason;
        throw InputError(os.str());
    }

    const YAML::Node& section(const YAML::Node& n, const std::string& path, const std::set<std::string>& keys) const {
        if (!n.IsMap()) fail(n, path, "expected a mapping");
        for (const auto& kv : n) {
            const std::string key = kv.first.as<std::string>();
            if (!keys.count(key)) fail(kv.first, path.empty() ? key : path + "." + key, "unknown key");
        }
        return n;
    }

    template <class T>
    bool get(const YAML::Node& n, const std::string& key, const std::string& path, T& out) const {
        const YAML::Node v = n[key];
        if (!v) return false;
        try {
            if (!v.IsScalar()) throw YAML::BadConversion(v.Mark());
            out = v.as<T>();
        } catch (const YAML::BadConversion&) {
            fail(v, path + "." + key, std::string("expected ") + type_name<T>());
        }
        return true;
    }

    template <class T>
    bool get_list(const YAML::Node& n, const std::string& key, const std::string& path, std::vector<T>& out) const {
        const YAML::Node v = n[key];
        if (!v) return false;
        if (!v.IsSequence()) fail(v, path + "." + key, "expected a list");
        out.clear();
        for (const auto& e : v) {
            try {
                if (!e.IsScalar()) throw YAML::BadConversion(e.Mark());
                out.push_back(e.as<T>());
            } catch (const YAML::BadConversion&) {
                fail(e, path + "." + key, std::string("expected a list of ") + type_name<T>());
            }
        }
        return true;
    }

    void require(bool ok, const YAML::Node& n, const std::string& key, const std::string& path,
                 const std::string& reason) const {
        if (!ok) fail(n[key] ? n[key] : n, path + "." + key, reason);
    }

private:
    template <class T>
    static const char* type_name() {
        if constexpr (std::is_same_v<T, std::string>) return "a string";
        else if constexpr (std::is_same_v<T, bool>) return "a boolean";
        else if constexpr (std::is_integral_v<T>) return "an integer";
        else return "a number";
    }
    std::string source_;
};

template <class T>
bool strictly_increasing(const std::vector<T>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] > v[i - 1])) return false;
    return true;
}

bool valid_levels(const std::vector<int>& v) {
    if (v.empty() || !strictly_increasing(v)) return false;
    return std::all_of(v.begin(), v.end(), [](int l) { return l >= 0 && l <= 6; });
}

bool valid_T(const std::vector<double>& v) {
    if (v.empty() || !strictly_increasing(v)) return false;
    return std::all_of(v.begin(), v.end(), [](double t) { return t > 0.0 && std::isfinite(t); });
}

const std::vector<std::pair<const char*, double harness::Thresholds::*>>& threshold_fields() {
    using T = harness::Thresholds;
    static const std::vector<std::pair<const char*, double T::*>> f = {
        {"slope_max", &T::slope_max},
        {"band_max", &T::band_max},
        {"cauchy_tol", &T::cauchy_tol},
        {"route_tol", &T::route_tol},
        {"exponent_lo", &T::exponent_lo},
        {"exponent_hi", &T::exponent_hi},
        {"identity_tol", &T::identity_tol},
        {"energy_tol", &T::energy_tol},
        {"multiplier_decrease", &T::multiplier_decrease},
        {"transpose_decrease", &T::transpose_decrease},
        {"alpha_tol", &T::alpha_tol},
        {"isometry_tol", &T::isometry_tol},
    };
    return f;
}

void parse_experiments(const Parser& P, const YAML::Node& n, CliConfig& c,
                       std::map<harness::TheoremId, YAML::Node>& plan_nodes) {
    const std::string path = "experiments";
    P.section(n, path, {"enabled", "thresholds", "ratio_max", "plans"});
    std::vector<std::string> enabled;
    if (P.get_list(n, "enabled", path, enabled)) {
        c.run.enabled.clear();
        for (std::size_t i = 0; i < enabled.size(); ++i) {
            harness::TheoremId id;
            try {
                id = harness::parse_theorem(enabled[i]);
            } catch (const InputError&) {
                P.fail(n["enabled"][i], path + ".enabled", "unknown experiment '" + enabled[i] + "'");
            }
            if (std::count(c.run.enabled.begin(), c.run.enabled.end(), id))
                P.fail(n["enabled"][i], path + ".enabled", "duplicate experiment '" + enabled[i] + "'");
            c.run.enabled.push_back(id);
        }
    }
    if (const YAML::Node th = n["thresholds"]) {
        std::set<std::string> keys;
        for (const auto& [name, _] : threshold_fields()) keys.insert(name);
        P.section(th, path + ".thresholds", keys);
        for (const auto& [name, member] : threshold_fields()) {
            double v = 0.0;
            if (!P.get(th, name, path + ".thresholds", v)) continue;
            P.require(v > 0.0 && std::isfinite(v), th, name, path + ".thresholds", "must be positive");
            c.run.thresholds.*member = v;
        }
        P.require(c.run.thresholds.exponent_lo < c.run.thresholds.exponent_hi, th, "exponent_hi",
                  path + ".thresholds", "must exceed exponent_lo");
    }
    if (const YAML::Node rm = n["ratio_max"]) {
        if (!rm.IsMap()) P.fail(rm, path + ".ratio_max", "expected a mapping");
        for (const auto& kv : rm) {
            const std::string key = kv.first.as<std::string>();
            if (!harness::Config::defaults().thresholds.ratio_max.count(key))
                P.fail(kv.first, path + ".ratio_max." + key, "unknown key");
            double v = 0.0;
            P.get(rm, key, path + ".ratio_max", v);
            P.require(v > 0.0 && std::isfinite(v), rm, key, path + ".ratio_max", "must be positive");
            c.run.thresholds.ratio_max[key] = v;  // merged over the defaults
        }
    }
    if (const YAML::Node plans = n["plans"]) {
        if (!plans.IsMap()) P.fail(plans, path + ".plans", "expected a mapping");
        for (const auto& kv : plans) {
            const std::string name = kv.first.as<std::string>();
            harness::TheoremId id;
            try {
                id = harness::parse_theorem(name);
            } catch (const InputError&) {
                P.fail(kv.first, path + ".plans", "unknown experiment '" + name + "'");
            }
            const std::string pp = path + ".plans." + name;
            const YAML::Node pn = kv.second;
            P.section(pn, pp, {"T_list", "levels", "members"});
            auto& plan = c.run.plans[id];
            if (P.get_list(pn, "T_list", pp, plan.T_list))
                P.require(valid_T(plan.T_list), pn, "T_list", pp, "must be positive and strictly increasing");
            if (P.get_list(pn, "levels", pp, plan.levels))
                P.require(valid_levels(plan.levels), pn, "levels", pp, "must be strictly increasing in [0, 6]");
            if (P.get(pn, "members", pp, plan.members))
                P.require(plan.members >= 1, pn, "members", pp, "must be >= 1");
            plan_nodes[id] = pn;
        }
    }
}

}  // namespace

CliConfig parse_config(const std::string& text, const std::string& source) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        std::ostringstream os;
        os << source << ':' << e.mark.line + 1 << ':' << e.mark.column + 1 << ": syntax error: " << e.msg;
        throw InputError(os.str());
    }
    CliConfig c;
    c.run.workers = 1;
    if (root.IsNull()) return c;
    const Parser P(source);
    P.section(root, "", {"domain", "discretization", "physics", "ensembles", "solve", "experiments", "output",
                         "runtime"});
    std::map<harness::TheoremId, YAML::Node> plan_nodes;

    if (const YAML::Node n = root["domain"]) {
        const std::string p = "domain";
        P.section(n, p, {"dimension", "inner_radius", "outer_radius", "levels"});
        auto& d = c.run.domain;
        if (P.get(n, "dimension", p, d.dimension))
            P.require(d.dimension == 2 || d.dimension == 3, n, "dimension", p, "must be 2 or 3");
        if (P.get(n, "inner_radius", p, d.inner_radius))
            P.require(d.inner_radius > 0.0, n, "inner_radius", p, "must be positive");
        if (P.get(n, "outer_radius", p, d.outer_radius) || n["inner_radius"])
            P.require(d.outer_radius > d.inner_radius, n, "outer_radius", p, "must exceed inner_radius");
        if (P.get_list(n, "levels", p, c.levels))
            P.require(valid_levels(c.levels), n, "levels", p, "must be strictly increasing in [0, 6]");
    }
    if (const YAML::Node n = root["discretization"]) {
        const std::string p = "discretization";
        P.section(n, p, {"degree", "steps_per_unit", "lift"});
        if (P.get(n, "degree", p, c.run.degree))
            P.require(c.run.degree == 1 || c.run.degree == 2, n, "degree", p, "must be 1 or 2");
        if (P.get(n, "steps_per_unit", p, c.run.steps_per_unit))
            P.require(c.run.steps_per_unit >= 1, n, "steps_per_unit", p, "must be >= 1");
        std::string lift;
        if (P.get(n, "lift", p, lift)) {
            if (lift == "harmonic") c.run.lift = elliptic::LiftKind::Harmonic;
            else if (lift == "elasticity") c.run.lift = elliptic::LiftKind::Elasticity;
            else P.fail(n["lift"], p + ".lift", "must be 'harmonic' or 'elasticity'");
        }
    }
    if (const YAML::Node n = root["physics"]) {
        const std::string p = "physics";
        P.section(n, p, {"mu", "lambda"});
        if (P.get(n, "mu", p, c.run.lame.mu))
            P.require(c.run.lame.mu > 0.0 && std::isfinite(c.run.lame.mu), n, "mu", p, "must be positive");
        if (P.get(n, "lambda", p, c.run.lame.lambda))
            P.require(c.run.lame.lambda > 0.0 && std::isfinite(c.run.lame.lambda), n, "lambda", p,
                      "must be positive");
    }
    if (const YAML::Node n = root["ensembles"]) {
        const std::string p = "ensembles";
        P.section(n, p, {"seed", "smoothness", "route_members"});
        P.get(n, "seed", p, c.run.seed);
        if (P.get(n, "smoothness", p, c.run.smoothness))
            P.require(c.run.smoothness >= 0, n, "smoothness", p, "must be >= 0");
        if (P.get(n, "route_members", p, c.run.route_members))
            P.require(c.run.route_members >= 1, n, "route_members", p, "must be >= 1");
    }
    if (const YAML::Node n = root["solve"]) {
        const std::string p = "solve";
        P.section(n, p, {"T_list", "data"});
        if (P.get_list(n, "T_list", p, c.solve_T))
            P.require(valid_T(c.solve_T), n, "T_list", p, "must be positive and strictly increasing");
        if (P.get(n, "data", p, c.solve_data))
            P.require(std::count(kSolveData.begin(), kSolveData.end(), c.solve_data) == 1, n, "data", p,
                      "must be one of zero, eigenmode, forcing, wave");
    }
    if (const YAML::Node n = root["experiments"]) parse_experiments(P, n, c, plan_nodes);
    if (const YAML::Node n = root["output"]) {
        const std::string p = "output";
        P.section(n, p, {"directory", "formats"});
        if (P.get(n, "directory", p, c.run.output_dir))
            P.require(!c.run.output_dir.empty(), n, "directory", p, "must not be empty");
        if (P.get_list(n, "formats", p, c.run.formats)) {
            P.require(!c.run.formats.empty(), n, "formats", p, "must not be empty");
            for (const auto& f : c.run.formats)
                P.require(f == "json" || f == "csv", n, "formats", p, "entries must be 'json' or 'csv'");
        }
    }
    if (const YAML::Node n = root["runtime"]) {
        const std::string p = "runtime";
        P.section(n, p, {"workers"});
        if (P.get(n, "workers", p, c.workers)) P.require(c.workers >= 0, n, "workers", p, "must be >= 0");
    }

    // Cross-field checks, attributed to the plan that fails them where possible.
    for (harness::TheoremId id : c.run.enabled) {
        try {
            harness::make_spec(c.run, id).validate();
        } catch (const InputError& e) {
            const auto it = plan_nodes.find(id);
            if (it != plan_nodes.end())
                P.fail(it->second, std::string("experiments.plans.") + harness::theorem_name(id), e.what());
            throw InputError(source + ": " + e.what());
        }
    }
    try {
        c.run.validate();
    } catch (const InputError& e) {
        throw InputError(source + ": " + e.what());
    }
    return c;
}

CliConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError(path + ": cannot open config file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

std::string canonical_yaml(const CliConfig& c) {
    YAML::Emitter e;
    e.SetDoublePrecision(17);
    const auto& r = c.run;
    e << YAML::BeginMap;
    e << YAML::Key << "domain" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "dimension" << YAML::Value << r.domain.dimension;
    e << YAML::Key << "inner_radius" << YAML::Value << r.domain.inner_radius;
    e << YAML::Key << "outer_radius" << YAML::Value << r.domain.outer_radius;
    e << YAML::Key << "levels" << YAML::Value << YAML::Flow << c.levels;
    e << YAML::EndMap;
    e << YAML::Key << "discretization" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "degree" << YAML::Value << r.degree;
    e << YAML::Key << "steps_per_unit" << YAML::Value << r.steps_per_unit;
    e << YAML::Key << "lift" << YAML::Value << elliptic::lift_name(r.lift);
    e << YAML::EndMap;
    e << YAML::Key << "physics" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "mu" << YAML::Value << r.lame.mu;
    e << YAML::Key << "lambda" << YAML::Value << r.lame.lambda;
    e << YAML::EndMap;
    e << YAML::Key << "ensembles" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "seed" << YAML::Value << r.seed;
    e << YAML::Key << "smoothness" << YAML::Value << r.smoothness;
    e << YAML::Key << "route_members" << YAML::Value << r.route_members;
    e << YAML::EndMap;
    e << YAML::Key << "solve" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "T_list" << YAML::Value << YAML::Flow << c.solve_T;
    e << YAML::Key << "data" << YAML::Value << c.solve_data;
    e << YAML::EndMap;
    e << YAML::Key << "experiments" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "enabled" << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (auto id : r.enabled) e << harness::theorem_name(id);
    e << YAML::EndSeq;
    e << YAML::Key << "thresholds" << YAML::Value << YAML::BeginMap;
    for (const auto& [name, member] : threshold_fields()) e << YAML::Key << name << YAML::Value << r.thresholds.*member;
    e << YAML::EndMap;
    e << YAML::Key << "ratio_max" << YAML::Value << YAML::BeginMap;
    for (const auto& [k, v] : r.thresholds.ratio_max) e << YAML::Key << YAML::DoubleQuoted << k << YAML::Value << v;
    e << YAML::EndMap;
    e << YAML::Key << "plans" << YAML::Value << YAML::BeginMap;
    for (auto id : harness::all_theorems()) {
        const auto it = r.plans.find(id);
        if (it == r.plans.end()) continue;
        e << YAML::Key << YAML::DoubleQuoted << harness::theorem_name(id) << YAML::Value << YAML::Flow << YAML::BeginMap;
        e << YAML::Key << "T_list" << YAML::Value << it->second.T_list;
        e << YAML::Key << "levels" << YAML::Value << it->second.levels;
        e << YAML::Key << "members" << YAML::Value << it->second.members;
        e << YAML::EndMap;
    }
    e << YAML::EndMap;
    e << YAML::EndMap;
    e << YAML::Key << "output" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "formats" << YAML::Value << YAML::Flow << r.formats;
    e << YAML::EndMap;
    e << YAML::EndMap;
    return std::string(e.c_str()) + "\n";
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256 failed");
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
    return os.str();
}

std::string config_hash(const CliConfig& config) { return sha256_hex(canonical_yaml(config)); }

int effective_workers(int requested) {
    if (requested > 0) return requested;
    return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace navtrace::cli
