#include "navtrace/harness.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>

using namespace navtrace;
using namespace navtrace::harness;

namespace {

constexpr double kPi = std::numbers::pi;

analytic::AnalyticField field(analytic::JetFieldFn fn, int dim = 2) { return analytic::AnalyticField(dim, std::move(fn)); }

ExperimentSpec small_spec(TheoremId id) {
    Config c = Config::defaults();
    c.workers = 1;
    ExperimentSpec s = make_spec(c, id);
    s.seeds.resize(1);
    return s;
}

}  // namespace

TEST(Harness, CofT) {
    EXPECT_DOUBLE_EQ(c_of_T(1.0), 2.0);
    EXPECT_DOUBLE_EQ(c_of_T(2.0), 6.0);
    EXPECT_DOUBLE_EQ(c_of_T(0.5), 3.0);
    // T^-1 (1 + T) below 1, T (1 + T) above
    EXPECT_DOUBLE_EQ(c_of_T(0.25), 5.0);
    EXPECT_DOUBLE_EQ(c_of_T(4.0), 20.0);
}

TEST(Harness, TheoremNames) {
    EXPECT_EQ(all_theorems().size(), 11u);
    std::set<std::string> names;
    for (TheoremId id : all_theorems()) {
        names.insert(theorem_name(id));
        EXPECT_EQ(parse_theorem(theorem_name(id)), id);
    }
    EXPECT_EQ(names.size(), 11u);
    EXPECT_THROW(parse_theorem("T9.9"), InputError);
}

TEST(Harness, DefaultConfigValidAndComplete) {
    const Config c = Config::defaults();
    EXPECT_NO_THROW(c.validate());
    for (TheoremId id : all_theorems()) EXPECT_TRUE(c.plans.count(id)) << theorem_name(id);
    EXPECT_EQ(c.plans.at(TheoremId::T31).T_list, (std::vector<double>{1, 2, 4, 8}));
    EXPECT_EQ(c.plans.at(TheoremId::T310).T_list, (std::vector<double>{1, 2, 4, 8, 16}));
    EXPECT_EQ(c.plans.at(TheoremId::AppB).T_list, (std::vector<double>{0.25, 1, 4, 16}));
    EXPECT_EQ(c.plans.at(TheoremId::T31).members, 8);
    EXPECT_TRUE(std::isinf(c.thresholds.ratio_limit("no such key")));
}

TEST(Harness, SpecValidation) {
    ExperimentSpec s = small_spec(TheoremId::T31);
    EXPECT_NO_THROW(s.validate());
    auto bad = s;
    bad.T_list = {1, 1};
    EXPECT_THROW(bad.validate(), InputError);
    bad = s;
    bad.T_list = {-1};
    EXPECT_THROW(bad.validate(), InputError);
    bad = s;
    bad.levels = {1, 0};
    EXPECT_THROW(bad.validate(), InputError);
    bad = s;
    bad.seeds.clear();
    EXPECT_THROW(bad.validate(), InputError);
    Config c = Config::defaults();
    c.degree = 3;
    EXPECT_THROW(c.validate(), InputError);
    c = Config::defaults();
    c.plans.erase(TheoremId::T35);
    EXPECT_THROW(c.validate(), InputError);
}

TEST(Harness, StepsScaleWithLevel) {
    const ExperimentSpec s = small_spec(TheoremId::T31);
    EXPECT_EQ(s.steps(1.0, 0), 8);
    EXPECT_EQ(s.steps(2.0, 1), 32);
    EXPECT_EQ(s.steps(0.01, 0), 1);
}

TEST(Harness, MemberSeeds) {
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 100; ++i) seen.insert(member_seed(1, i));
    EXPECT_EQ(seen.size(), 100u);
    EXPECT_EQ(member_seed(7, 3), member_seed(7, 3));
    EXPECT_NE(member_seed(7, 3), member_seed(8, 3));
}

TEST(Harness, RecordGuard) {
    const auto r = make_record("T3.1", "v", 1, 0, 1, 0.0, 0.0, "sqrtT", 1.0);
    EXPECT_EQ(r.ratio, 0.0);
    const auto q = make_record("T3.1", "v", 4, 0, 1, 3.0, 1.5, "sqrtT", 2.0);
    EXPECT_NEAR(q.ratio, 3.0 / (1.5 * 2.0), 1e-12);
    EXPECT_DOUBLE_EQ(q.rhs, 3.0);
}

TEST(Harness, ReportFlagsAndSorting) {
    RatioReport rep;
    rep.theorem = "T3.1";
    rep.records = {make_record("T3.1", "b", 2, 0, 5, 1, 1, "1", 1), make_record("T3.1", "a", 1, 1, 5, 1, 1, "1", 1),
                   make_record("T3.1", "a", 1, 0, 9, 2, 1, "1", 1), make_record("T3.1", "a", 1, 0, 5, 4, 1, "1", 1)};
    rep.sort();
    EXPECT_EQ(rep.records[0].seed, 5u);
    EXPECT_EQ(rep.records[0].level, 0);
    EXPECT_EQ(rep.records[1].seed, 9u);
    EXPECT_EQ(rep.records[2].level, 1);
    EXPECT_EQ(rep.records[3].T, 2.0);
    EXPECT_TRUE(rep.passed());
    rep.flags["x"] = true;
    EXPECT_TRUE(rep.passed());
    rep.flags["y"] = false;
    EXPECT_FALSE(rep.passed());

    std::vector<double> Ts;
    const auto sup = sup_ratio_by_T(rep, "a", 0, &Ts);
    ASSERT_EQ(sup.size(), 1u);
    EXPECT_DOUBLE_EQ(sup[0], 4.0);
    EXPECT_EQ(Ts, std::vector<double>{1.0});
    EXPECT_NE(rep.records_csv().find("theorem,variant,T,level,seed,lhs,rhs,ratio"), std::string::npos);
}

TEST(Harness, BundleJsonSortedAndFailsOnErrors) {
    Bundle b;
    RatioReport r;
    r.theorem = "AppA";
    r.flags["ok"] = true;
    b.reports.push_back(r);
    b.meta["zz"] = "1";
    b.meta["aa"] = "2";
    const std::string j = b.to_json();
    EXPECT_LT(j.find("\"aa\""), j.find("\"zz\""));
    EXPECT_LT(j.find("\"errors\""), j.find("\"experiments\""));
    EXPECT_TRUE(b.passed());
    b.errors.push_back({"T3.1", "numerical", "boom"});
    EXPECT_FALSE(b.passed());
}

TEST(Harness, ParallelForDeterministicAndRethrowsInOrder) {
    std::vector<int> a(50), b(50);
    parallel_for(50, 1, [&](int i) { a[i] = i * i; });
    parallel_for(50, 4, [&](int i) { b[i] = i * i; });
    EXPECT_EQ(a, b);
    try {
        parallel_for(10, 3, [](int i) {
            if (i == 7) throw std::runtime_error("seven");
            if (i == 3) throw std::runtime_error("three");
        });
        FAIL() << "no exception";
    } catch (const std::runtime_error& e) {
        EXPECT_STREQ(e.what(), "three");
    }
}

TEST(Rules, CircleShellAndTime) {
    const auto c = sphere_rule(2, 2.0, 64);
    EXPECT_NEAR(c.sum([](const Vec3&) { return 1.0; }), 4 * kPi, 1e-12);
    EXPECT_NEAR(c.sum([](const Vec3& x) { return x(0) * x(0); }), kPi * 8.0, 1e-11);
    const auto a = shell_rule(2, 1.0, 2.0, 6, 64);
    EXPECT_NEAR(a.sum([](const Vec3&) { return 1.0; }), 3 * kPi, 1e-12);
    EXPECT_NEAR(a.sum([](const Vec3& x) { return x.squaredNorm(); }), kPi / 2 * (16 - 1), 1e-11);
    const auto s = sphere_rule(3, 1.5, 12);
    EXPECT_NEAR(s.sum([](const Vec3&) { return 1.0; }), 4 * kPi * 2.25, 1e-11);
    EXPECT_NEAR(s.sum([](const Vec3& x) { return x(2) * x(2); }), 4 * kPi * std::pow(1.5, 4) / 3, 1e-10);
    const auto sh = shell_rule(3, 1.0, 2.0, 6, 12);
    EXPECT_NEAR(sh.sum([](const Vec3&) { return 1.0; }), 4 * kPi / 3 * 7, 1e-10);
    const auto t = time_rule(3.3);
    EXPECT_NEAR(t.sum([](const Vec3& x) { return std::pow(x(0), 5); }), std::pow(3.3, 6) / 6, 1e-10);
}

// Closed-form surface norms of f = x0 and f = x0/|x| restricted to the circle of radius R:
// the values depend only on the restriction, not on the extension.
TEST(DataNorms, SurfaceNormsIndependentOfExtension) {
    const double R = 2.0;
    const auto rule = sphere_rule(2, R, 128);
    const auto lin = field([](const JetPoint& p) { return JetVec{p[0], Jet(0.0), Jet(0.0)}; });
    const auto hom = field([](const JetPoint& p) {
        return JetVec{p[0] / sqrt(p[0] * p[0] + p[1] * p[1]), Jet(0.0), Jet(0.0)};
    });
    const auto a = surface_norms_sq(lin, 0.0, rule, R);
    EXPECT_NEAR(a.l2, kPi * R * R * R, 1e-10);
    EXPECT_NEAR(a.h1 - a.l2, kPi * R, 1e-10);
    EXPECT_NEAR(a.h2 - a.h1, kPi / R, 1e-10);
    const auto b = surface_norms_sq(hom, 0.0, rule, R);
    EXPECT_NEAR(b.l2, kPi * R, 1e-10);
    EXPECT_NEAR(b.h1 - b.l2, kPi / R, 1e-10);
    EXPECT_NEAR(b.h2 - b.h1, kPi / (R * R * R), 1e-10);
}

// g = t cos(theta) on the unit circle, T = 1.
TEST(DataNorms, BoundaryNormsClosedForm) {
    const auto g = field([](const JetPoint& p) {
        return JetVec{p[3] * p[0] / sqrt(p[0] * p[0] + p[1] * p[1]), Jet(0.0), Jet(0.0)};
    });
    const auto n = boundary_data_norms(g, 1.0, 1.0);
    EXPECT_NEAR(n.L2L2, std::sqrt(kPi / 3), 1e-10);
    EXPECT_NEAR(n.H1L2, std::sqrt(4 * kPi / 3), 1e-10);
    EXPECT_NEAR(n.L2H1, std::sqrt(2 * kPi / 3), 1e-10);
}

TEST(DataNorms, ZeroAndHomogeneous) {
    const auto m = manufactured_member(2, 1.0, 2.0, 11, 2);
    const auto u = m.field();
    const spaces::LameParameters lame{1.0, 1.0};
    const DataNorms n1 = manufactured_data_norms(u, lame, 1.0, 2.0, 1.0);
    auto m2 = m;
    for (auto& q : m2.modes) q.amplitude *= -3.0;
    const DataNorms n3 = manufactured_data_norms(m2.field(), lame, 1.0, 2.0, 1.0);
    EXPECT_GT(n1.strong(), 0.0);
    EXPECT_NEAR(n3.strong(), 3 * n1.strong(), 1e-9 * n1.strong());
    EXPECT_NEAR(n3.weak(), 3 * n1.weak(), 1e-9 * n1.weak());
    auto m0 = m;
    m0.modes.clear();
    const DataNorms z = manufactured_data_norms(m0.field(), lame, 1.0, 2.0, 1.0);
    EXPECT_EQ(z.strong(), 0.0);
    EXPECT_EQ(z.t_independent(2.0), 0.0);
}

TEST(Ensembles, ManufacturedVanishesWithGradientOnOuterBoundary) {
    for (int dim : {2, 3}) {
        const auto u = manufactured_member(dim, 1.0, 2.0, 5, 2).field();
        for (double a : {0.1, 1.3, 2.9}) {
            const Vec3 x = dim == 2 ? Vec3(2 * std::cos(a), 2 * std::sin(a), 0)
                                    : Vec3(2 * std::cos(a) * 0.6, 2 * std::sin(a) * 0.6, 2 * 0.8);
            EXPECT_LT(u.value(x, 0.4).norm(), 1e-12);
            EXPECT_LT(u.gradient(x, 0.4).norm(), 1e-12);
        }
    }
}

TEST(Ensembles, DifferentiatedIsTheTimeDerivative) {
    const auto m = manufactured_member(2, 1.0, 2.0, 21, 2);
    const auto u = m.field(), du = m.differentiated().field();
    for (double t : {0.0, 0.7, 3.1}) {
        const Vec3 x(1.3, -0.4, 0);
        EXPECT_LT((du.value(x, t) - u.velocity(x, t)).norm(), 1e-12);
        EXPECT_LT((du.velocity(x, t) - u.acceleration(x, t)).norm(), 1e-11);
    }
}

TEST(Ensembles, DeterministicPerSeed) {
    EXPECT_EQ(mode_amplitudes(3, 6, 2), mode_amplitudes(3, 6, 2));
    EXPECT_NE(mode_amplitudes(3, 6, 2), mode_amplitudes(4, 6, 2));
    const auto a = wave_member(2, 9, 2, false).field(), b = wave_member(2, 9, 2, false).field();
    const Vec3 x(0.6, 0.8, 0);
    EXPECT_EQ(a.value(x, 0.3), b.value(x, 0.3));
    // standing waves vanish at t = 0
    EXPECT_LT(wave_member(2, 9, 2, true).field().value(x, 0.0).norm(), 1e-15);
    const auto r = rough_member(2, 4);
    EXPECT_GE(r.k, 1);
    EXPECT_NEAR(r.field().value(x, 0.0).norm(), std::abs(std::cos(r.k * std::atan2(0.8, 0.6))), 1e-12);
}

TEST(Ensembles, StationaryForcingFrequencies) {
    const auto f = forcing_member(2, 17, 2.0, 2);
    ASSERT_FALSE(f.nu.empty());
    for (double nu : f.nu) {
        EXPECT_GE(nu, 0.2 * 2.0);
        EXPECT_LE(nu, 0.6 * 2.0);
    }
}

TEST(Experiments, AppendixASmall) {
    auto s = small_spec(TheoremId::AppA);
    s.seeds = {member_seed(1, 0)};
    const auto rep = run_AppA(s);
    EXPECT_TRUE(rep.passed());
    EXPECT_FALSE(rep.flags.empty());
}

TEST(Experiments, ZeroDataRecordAndDeterminism) {
    auto s = small_spec(TheoremId::T31);
    s.levels = {0};
    s.T_list = {1, 2};
    const auto a = run_T31(s);
    EXPECT_TRUE(a.flags.at("zero_data_zero_lhs"));
    auto s2 = s;
    s2.workers = 3;
    const auto b = run_T31(s2);
    EXPECT_EQ(a.to_json(), b.to_json());
}

TEST(Experiments, RunAllSubsetDeterministic) {
    Config c = Config::defaults();
    c.enabled = {TheoremId::AppA};
    c.plans[TheoremId::AppA].members = 3;
    const Bundle b = run_all(c);
    ASSERT_EQ(b.reports.size(), 1u);
    EXPECT_TRUE(b.errors.empty());
    EXPECT_EQ(b.meta.at("seed"), "1");
    EXPECT_EQ(b.to_json(), run_all(c).to_json());
}
