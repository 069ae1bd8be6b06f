// Configuration defaults, exact-domain quadrature, analytic data norms and ensembles.

#include "navtrace/harness.hpp"
#include "navtrace/quadrature.hpp"
#include "navtrace/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace navtrace::harness {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

const std::vector<TheoremId>& all_theorems() {
    static const std::vector<TheoremId> ids = {TheoremId::T31,  TheoremId::T34,  TheoremId::T35,   TheoremId::L37,
                                               TheoremId::T38,  TheoremId::T39k1, TheoremId::T310, TheoremId::AppA,
                                               TheoremId::AppB, TheoremId::MultId, TheoremId::Transpose};
    return ids;
}

const char* theorem_name(TheoremId id) {
    switch (id) {
        case TheoremId::T31: return "T3.1";
        case TheoremId::T34: return "T3.4";
        case TheoremId::T35: return "T3.5";
        case TheoremId::L37: return "L3.7";
        case TheoremId::T38: return "T3.8";
        case TheoremId::T39k1: return "T3.9k1";
        case TheoremId::T310: return "T3.10";
        case TheoremId::AppA: return "AppA";
        case TheoremId::AppB: return "AppB";
        case TheoremId::MultId: return "MULT-ID";
        case TheoremId::Transpose: return "TRANSPOSE";
    }
    return "?";
}

TheoremId parse_theorem(const std::string& name) {
    for (TheoremId id : all_theorems())
        if (name == theorem_name(id)) return id;
    throw InputError("unknown theorem id '" + name + "'");
}

double c_of_T(double T) { return std::max(1.0, T * T) * (1.0 + T) / T; }

std::uint64_t member_seed(std::uint64_t base, int i) { return derive_seed(base, static_cast<std::uint64_t>(i)); }

double Thresholds::ratio_limit(const std::string& theorem) const {
    const auto it = ratio_max.find(theorem);
    return it == ratio_max.end() ? std::numeric_limits<double>::infinity() : it->second;
}

Config Config::defaults() {
    Config c;
    c.domain = {2, 1.0, 2.0, 0};
    c.enabled = all_theorems();
    c.plans[TheoremId::T31] = {{1, 2, 4, 8}, {1}, 8};
    c.plans[TheoremId::T34] = {{1, 2, 4, 8}, {1}, 8};
    c.plans[TheoremId::T35] = {{1, 2, 4, 8}, {0, 1}, 8};
    c.plans[TheoremId::L37] = {{1}, {0, 1, 2}, 2};
    c.plans[TheoremId::T38] = {{1}, {0, 1, 2}, 2};
    c.plans[TheoremId::T39k1] = {{1}, {0, 1, 2}, 2};
    c.plans[TheoremId::T310] = {{1, 2, 4, 8, 16}, {1}, 4};
    c.plans[TheoremId::AppA] = {{1}, {0}, 100};
    c.plans[TheoremId::AppB] = {{0.25, 1, 4, 16}, {0}, 24};
    c.plans[TheoremId::MultId] = {{1}, {0, 1, 2}, 2};
    c.plans[TheoremId::Transpose] = {{1}, {0, 1, 2}, 2};
    // Calibrated once at 1.5x the largest ratio of the first default run (seed 1), then frozen.
    c.thresholds.ratio_max = {
        {"T3.1", 1.8},         {"T3.1:energy", 2.6},     {"T3.4", 2.4},       {"T3.5", 0.8},
        {"L3.7", 0.3},         {"T3.8", 0.5},            {"T3.9k1", 0.7},     {"T3.10", 0.6},
        {"T3.10:eigenmode", 11.0}, {"T3.10:t38", 1.5},   {"AppB:B4s", 1.3},   {"AppB:B5", 1.0},
        {"AppB:B7", 1.5},      {"AppB:B8", 6.0},         {"AppB:B8c", 1.5},
    };
    return c;
}

void Config::validate() const {
    domain.validate();
    if (degree != 1 && degree != 2) throw InputError("discretization.degree must be 1 or 2");
    if (steps_per_unit < 1) throw InputError("discretization.steps_per_unit must be >= 1");
    lame.validate();
    if (smoothness < 0) throw InputError("ensembles.smoothness must be >= 0");
    if (route_members < 1) throw InputError("ensembles.route_members must be >= 1");
    if (workers < 1) throw InputError("workers must be >= 1");
    for (TheoremId id : enabled) {
        if (!plans.count(id)) throw InputError(std::string("experiments: no plan for ") + theorem_name(id));
        make_spec(*this, id).validate();
    }
}

int ExperimentSpec::steps(double T, int level) const {
    const long base = std::max(1L, std::lround(steps_per_unit * T));
    return static_cast<int>(base << level);
}

void ExperimentSpec::validate() const {
    const std::string name = theorem_name(theorem);
    domain.validate();
    if (T_list.empty()) throw InputError(name + ": empty T list");
    for (std::size_t i = 0; i < T_list.size(); ++i) {
        if (!(T_list[i] > 0.0)) throw InputError(name + ": T values must be positive");
        if (i > 0 && !(T_list[i] > T_list[i - 1])) throw InputError(name + ": T list must be strictly increasing");
    }
    if (levels.empty()) throw InputError(name + ": empty level list");
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (levels[i] < 0 || levels[i] > 6) throw InputError(name + ": levels must lie in [0, 6]");
        if (i > 0 && levels[i] <= levels[i - 1]) throw InputError(name + ": level list must be strictly increasing");
    }
    if (seeds.empty()) throw InputError(name + ": no ensemble members");
}

ExperimentSpec make_spec(const Config& config, TheoremId id) {
    const auto it = config.plans.find(id);
    if (it == config.plans.end()) throw InputError(std::string("no plan for ") + theorem_name(id));
    ExperimentSpec s;
    s.theorem = id;
    s.domain = config.domain;
    s.degree = config.degree;
    s.steps_per_unit = config.steps_per_unit;
    s.lift = config.lift;
    s.lame = config.lame;
    s.smoothness = config.smoothness;
    s.route_members = config.route_members;
    s.T_list = it->second.T_list;
    s.levels = it->second.levels;
    for (int i = 0; i < it->second.members; ++i) s.seeds.push_back(member_seed(config.seed, i));
    s.thresholds = config.thresholds;
    s.workers = config.workers;
    return s;
}

// ---------------------------------------------------------------------------
// Quadrature on the exact domain
// ---------------------------------------------------------------------------

double PointRule::sum(const std::function<double(const Vec3&)>& f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * f(x[i]);
    return s;
}

PointRule sphere_rule(int dim, double R, int n) {
    PointRule r;
    if (dim == 2) {
        for (int j = 0; j < n; ++j) {
            const double a = 2.0 * kPi * j / n;
            r.x.emplace_back(R * std::cos(a), R * std::sin(a), 0.0);
            r.w.push_back(2.0 * kPi * R / n);
        }
        return r;
    }
    const auto gl = quadrature::gauss_legendre(n);
    const int nphi = 2 * n;
    for (int i = 0; i < n; ++i) {
        const double z = 2.0 * gl.x[i] - 1.0, s = std::sqrt(std::max(0.0, 1.0 - z * z));
        for (int j = 0; j < nphi; ++j) {
            const double a = 2.0 * kPi * j / nphi;
            r.x.emplace_back(R * s * std::cos(a), R * s * std::sin(a), R * z);
            r.w.push_back(R * R * 2.0 * gl.w[i] * 2.0 * kPi / nphi);
        }
    }
    return r;
}

PointRule shell_rule(int dim, double r0, double r1, int nr, int n) {
    const PointRule unit = sphere_rule(dim, 1.0, n);
    const auto gl = quadrature::gauss_legendre(nr);
    PointRule r;
    for (int i = 0; i < nr; ++i) {
        const double rad = r0 + (r1 - r0) * gl.x[i];
        const double wr = (r1 - r0) * gl.w[i] * std::pow(rad, dim - 1);
        for (std::size_t j = 0; j < unit.x.size(); ++j) {
            r.x.push_back(rad * unit.x[j]);
            r.w.push_back(wr * unit.w[j]);
        }
    }
    return r;
}

PointRule time_rule(double T) {
    const int panels = std::max(1, static_cast<int>(std::ceil(2.0 * T)));
    const auto gl = quadrature::gauss_legendre(6);
    const double h = T / panels;
    PointRule r;
    for (int p = 0; p < panels; ++p)
        for (std::size_t q = 0; q < gl.x.size(); ++q) {
            r.x.emplace_back((p + gl.x[q]) * h, 0.0, 0.0);
            r.w.push_back(gl.w[q] * h);
        }
    return r;
}

// ---------------------------------------------------------------------------
// Analytic norms
// ---------------------------------------------------------------------------

namespace {

struct Rules {
    PointRule shell, sphere, time;
};

Rules data_rules(int dim, double r0, double r1, double T) {
    return {shell_rule(dim, r0, r1, 6, dim == 2 ? 48 : 12), sphere_rule(dim, r0, dim == 2 ? 96 : 16), time_rule(T)};
}

Vec3 force_of(const JetVec& u, int d, const spaces::LameParameters& lame) {
    Vec3 F = Vec3::Zero();
    for (int i = 0; i < d; ++i) {
        double lap = 0.0, graddiv = 0.0;
        for (int j = 0; j < d; ++j) {
            lap += u[i].h(j, j);
            graddiv += u[j].h(j, i);
        }
        F(i) = u[i].h(3, 3) - lame.mu * lap - (lame.lambda + lame.mu) * graddiv;
    }
    return F;
}

}  // namespace

SurfaceNormsSq surface_norms_sq(const analytic::AnalyticField& u, double t, const PointRule& sphere, double R) {
    const int d = u.dim();
    SurfaceNormsSq s;
    for (std::size_t p = 0; p < sphere.x.size(); ++p) {
        const Vec3& x = sphere.x[p];
        const JetVec J = u.eval(x, t);
        const Vec3 nu = x / x.norm();
        Mat3 P = Mat3::Zero();
        P.topLeftCorner(d, d) = Eigen::MatrixXd::Identity(d, d) - nu.head(d) * nu.head(d).transpose();
        double v2 = 0.0, g2 = 0.0, h2 = 0.0;
        for (int i = 0; i < d; ++i) {
            Vec3 g = Vec3::Zero();
            Mat3 H = Mat3::Zero();
            g.head(d) = J[i].g.head(d);
            H.topLeftCorner(d, d) = J[i].h.topLeftCorner(d, d);
            v2 += J[i].v * J[i].v;
            g2 += (P * g).squaredNorm();
            h2 += (P * H * P - (nu.dot(g) / R) * P).squaredNorm();
        }
        const double w = sphere.w[p];
        s.l2 += w * v2;
        s.h1 += w * (v2 + g2);
        s.h2 += w * (v2 + g2 + h2);
    }
    return s;
}

DataNorms manufactured_data_norms(const analytic::AnalyticField& u, const spaces::LameParameters& lame, double r0,
                                  double r1, double T) {
    const int d = u.dim();
    const Rules R = data_rules(d, r0, r1, T);
    const double dx = 1e-4, dtf = 1e-4;
    // ||F(t)||^2, ||grad F(t)||^2, ||F_t(t)||^2
    auto force_sq = [&](double t) {
        std::array<double, 3> s{};
        for (std::size_t p = 0; p < R.shell.x.size(); ++p) {
            const Vec3& x = R.shell.x[p];
            const Vec3 F = force_of(u.eval(x, t), d, lame);
            double gs = 0.0;
            for (int j = 0; j < d; ++j) {
                Vec3 e = Vec3::Zero();
                e(j) = dx;
                const Vec3 dF = (force_of(u.eval(x + e, t), d, lame) - force_of(u.eval(x - e, t), d, lame)) / (2 * dx);
                gs += dF.squaredNorm();
            }
            const Vec3 Ft =
                (force_of(u.eval(x, t + dtf), d, lame) - force_of(u.eval(x, t - dtf), d, lame)) / (2 * dtf);
            s[0] += R.shell.w[p] * F.squaredNorm();
            s[1] += R.shell.w[p] * gs;
            s[2] += R.shell.w[p] * Ft.squaredNorm();
        }
        return s;
    };
    DataNorms n;
    double F_L2H1_sq = 0.0, F_H1L2_sq = 0.0;
    double gL2_sq = 0.0, gH1t_sq = 0.0, gH1s_sq = 0.0, gH2s_sq = 0.0, gH2t_sq = 0.0;
    for (std::size_t q = 0; q < R.time.x.size(); ++q) {
        const double t = R.time.x[q](0), w = R.time.w[q];
        const auto f = force_sq(t);
        n.F_L1L2 += w * std::sqrt(f[0]);
        n.F_L1H1 += w * std::sqrt(f[0] + f[1]);
        n.Ft_L1L2 += w * std::sqrt(f[2]);
        F_L2H1_sq += w * (f[0] + f[1]);
        F_H1L2_sq += w * (f[0] + f[2]);
        const SurfaceNormsSq s = surface_norms_sq(u, t, R.sphere, r0);
        double v2 = 0.0, a2 = 0.0;
        for (std::size_t p = 0; p < R.sphere.x.size(); ++p) {
            const JetVec J = u.eval(R.sphere.x[p], t);
            for (int i = 0; i < d; ++i) {
                v2 += R.sphere.w[p] * J[i].g(3) * J[i].g(3);
                a2 += R.sphere.w[p] * J[i].h(3, 3) * J[i].h(3, 3);
            }
        }
        gL2_sq += w * s.l2;
        gH1t_sq += w * (s.l2 + v2);
        gH2t_sq += w * (s.l2 + v2 + a2);
        gH1s_sq += w * s.h1;
        gH2s_sq += w * s.h2;
    }
    n.F_L2H1 = std::sqrt(F_L2H1_sq);
    n.F_H1L2 = std::sqrt(F_H1L2_sq);
    const auto f0 = force_sq(0.0);
    n.F0_Hhalf = std::sqrt(std::sqrt(f0[0]) * std::sqrt(f0[0] + f0[1]));
    double u0l2 = 0, u0h1 = 0, u0h2 = 0, u1l2 = 0, u1h1 = 0;
    for (std::size_t p = 0; p < R.shell.x.size(); ++p) {
        const JetVec J = u.eval(R.shell.x[p], 0.0);
        const double w = R.shell.w[p];
        for (int i = 0; i < d; ++i) {
            u0l2 += w * J[i].v * J[i].v;
            u0h1 += w * J[i].g.head(d).squaredNorm();
            u0h2 += w * J[i].h.topLeftCorner(d, d).squaredNorm();
            u1l2 += w * J[i].g(3) * J[i].g(3);
            u1h1 += w * J[i].h.col(3).head(d).squaredNorm();
        }
    }
    n.u0_H1 = std::sqrt(u0l2 + u0h1);
    n.u0_H2 = std::sqrt(u0l2 + u0h1 + u0h2);
    n.u1_L2 = std::sqrt(u1l2);
    n.u1_H1 = std::sqrt(u1l2 + u1h1);
    n.g_L2L2 = std::sqrt(gL2_sq);
    n.g_H1L2 = std::sqrt(gH1t_sq);
    n.g_L2H1 = std::sqrt(gH1s_sq);
    n.g_L2H2 = std::sqrt(gH2s_sq);
    n.g_H2L2 = std::sqrt(gH2t_sq);
    return n;
}

BoundaryDataNorms boundary_data_norms(const analytic::AnalyticField& g, double r0, double T) {
    const int d = g.dim();
    const PointRule sphere = sphere_rule(d, r0, d == 2 ? 96 : 16);
    const PointRule time = time_rule(T);
    double l2 = 0.0, h1t = 0.0, h1s = 0.0;
    for (std::size_t q = 0; q < time.x.size(); ++q) {
        const double t = time.x[q](0), w = time.w[q];
        const SurfaceNormsSq s = surface_norms_sq(g, t, sphere, r0);
        double v2 = 0.0;
        for (std::size_t p = 0; p < sphere.x.size(); ++p) {
            const JetVec J = g.eval(sphere.x[p], t);
            for (int i = 0; i < d; ++i) v2 += sphere.w[p] * J[i].g(3) * J[i].g(3);
        }
        l2 += w * s.l2;
        h1t += w * (s.l2 + v2);
        h1s += w * s.h1;
    }
    return {std::sqrt(l2), std::sqrt(h1t), std::sqrt(h1s)};
}

// ---------------------------------------------------------------------------
// Ensembles
// ---------------------------------------------------------------------------

namespace {

Vec3 random_unit(Rng& rng, int d) {
    Vec3 v = Vec3::Zero();
    do {
        for (int i = 0; i < d; ++i) v(i) = rng.normal();
    } while (v.norm() < 1e-3);
    return v / v.norm();
}

Jet dot_x(const Vec3& a, const JetPoint& p, int d) {
    Jet s(0.0);
    for (int i = 0; i < d; ++i) s += a(i) * p[i];
    return s;
}

Jet radius(const JetPoint& p, int d) {
    Jet s = p[0] * p[0] + p[1] * p[1];
    if (d == 3) s += p[2] * p[2];
    return sqrt(s);
}

// Angular coordinate used by the boundary families: theta in 2D, pi x^.axis in 3D.
Jet angular(const JetPoint& p, int d, const Vec3& axis) {
    if (d == 2) return atan2(p[1], p[0]);
    return kPi * dot_x(axis, p, d) / radius(p, d);
}

}  // namespace

analytic::AnalyticField ManufacturedSolution::field() const {
    const ManufacturedSolution self = *this;
    return analytic::AnalyticField(dim, [self](const JetPoint& p) {
        const int d = self.dim;
        const Jet s = (self.r1 - radius(p, d)) / (self.r1 - self.r0);
        const Jet rad = s * s;
        JetVec u{Jet(0.0), Jet(0.0), Jet(0.0)};
        for (const auto& m : self.modes) {
            const Jet a = m.amplitude * cos(m.omega * p[3] + m.phase);
            const Jet shape = (1.0 + 0.5 * sin(dot_x(m.wave, p, d) + m.wave_phase)) * rad;
            const Jet as = a * shape;
            for (int i = 0; i < d; ++i) u[i] += m.direction(i) * as;
        }
        return u;
    });
}

ManufacturedSolution ManufacturedSolution::differentiated() const {
    ManufacturedSolution out = *this;
    for (auto& m : out.modes) {
        m.amplitude *= m.omega;
        m.phase += 0.5 * kPi;
    }
    return out;
}

ManufacturedSolution manufactured_member(int dim, double r0, double r1, std::uint64_t seed, int smoothness) {
    Rng rng(derive_seed(seed, 101));
    ManufacturedSolution s{dim, r0, r1, {}};
    for (int q = 0; q < 3; ++q) {
        ManufacturedMode m;
        m.amplitude = (0.5 + std::abs(rng.normal())) * std::pow(1.0 + q, -smoothness);
        m.omega = rng.uniform(0.5, 2.5);
        m.phase = rng.uniform(0.0, 2.0 * kPi);
        m.direction = random_unit(rng, dim);
        m.wave = (1.0 + q) * rng.uniform(0.5, 1.0) * random_unit(rng, dim);
        m.wave_phase = rng.uniform(0.0, 2.0 * kPi);
        s.modes.push_back(m);
    }
    return s;
}

analytic::AnalyticField BoundaryWave::field() const {
    const BoundaryWave self = *this;
    return analytic::AnalyticField(dim, [self](const JetPoint& p) {
        JetVec g{Jet(0.0), Jet(0.0), Jet(0.0)};
        for (std::size_t q = 0; q < self.amplitude.size(); ++q) {
            const Jet s = angular(p, self.dim, self.axis[q]);
            const Jet v = self.standing
                              ? self.amplitude[q] * sin(self.omega[q] * p[3]) * cos(self.k[q] * s + self.phase[q])
                              : self.amplitude[q] * cos(self.k[q] * s - self.omega[q] * p[3] + self.phase[q]);
            for (int i = 0; i < self.dim; ++i) g[i] += self.direction[q](i) * v;
        }
        return g;
    });
}

BoundaryWave wave_member(int dim, std::uint64_t seed, int smoothness, bool standing) {
    Rng rng(derive_seed(seed, 202));
    BoundaryWave w;
    w.dim = dim;
    w.standing = standing;
    // q = 0: the pure travelling wave.
    w.amplitude.push_back(1.0);
    w.k.push_back(1.0);
    w.omega.push_back(1.0);
    w.phase.push_back(0.0);
    w.direction.push_back(Vec3::UnitX());
    w.axis.push_back(Vec3::UnitZ());
    for (int q = 1; q < 3; ++q) {
        const int k = rng.integer(1, 4);
        w.amplitude.push_back(rng.normal() * std::pow(1.0 + k, -smoothness));
        w.k.push_back(k);
        w.omega.push_back(rng.uniform(0.5, 2.0));
        w.phase.push_back(rng.uniform(0.0, 2.0 * kPi));
        w.direction.push_back(random_unit(rng, dim));
        w.axis.push_back(random_unit(rng, 3));
    }
    return w;
}

analytic::AnalyticField RoughDatum::field() const {
    const RoughDatum self = *this;
    return analytic::AnalyticField(dim, [self](const JetPoint& p) {
        const Jet v = cos(self.k * angular(p, self.dim, self.axis)) * cos(self.omega * p[3]);
        return JetVec{self.direction(0) * v, self.direction(1) * v, self.direction(2) * v};
    });
}

RoughDatum rough_member(int dim, std::uint64_t seed) {
    static const int ks[] = {1, 2, 3, 4, 6, 8};
    Rng rng(derive_seed(seed, 303));
    RoughDatum r;
    r.dim = dim;
    r.k = ks[rng.integer(0, 5)];
    r.omega = rng.uniform(1.0, 4.0);
    r.direction = random_unit(rng, dim);
    r.axis = random_unit(rng, 3);
    return r;
}

SpaceTimeFn StationaryForcing::function() const {
    const StationaryForcing self = *this;
    return [self](const Vec3& x, double t) {
        Vec3 F = Vec3::Zero();
        for (std::size_t q = 0; q < self.amplitude.size(); ++q) {
            const double s = 1.0 + 0.5 * std::cos(self.wave[q].dot(x) + self.wave_phase[q]);
            F += self.amplitude[q] * s * std::cos(self.nu[q] * t + self.phase[q]) * self.direction[q];
        }
        return F;
    };
}

StationaryForcing forcing_member(int dim, std::uint64_t seed, double omega_ref, int smoothness) {
    Rng rng(derive_seed(seed, 404));
    StationaryForcing f;
    f.dim = dim;
    for (int q = 0; q < 3; ++q) {
        f.amplitude.push_back((0.5 + std::abs(rng.normal())) * std::pow(1.0 + q, -smoothness));
        f.nu.push_back(rng.uniform(0.2, 0.6) * omega_ref);
        f.phase.push_back(rng.uniform(0.0, 2.0 * kPi));
        f.wave_phase.push_back(rng.uniform(0.0, 2.0 * kPi));
        f.direction.push_back(random_unit(rng, dim));
        f.wave.push_back((1.0 + q) * random_unit(rng, dim));
    }
    return f;
}

std::vector<double> mode_amplitudes(std::uint64_t seed, int count, int smoothness) {
    Rng rng(seed);
    std::vector<double> a(count);
    for (int k = 0; k < count; ++k) a[k] = rng.normal() * std::pow(1.0 + k, -smoothness);
    return a;
}

}  // namespace navtrace::harness
