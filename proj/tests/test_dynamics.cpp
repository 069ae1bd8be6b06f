#include "navtrace/dynamics.hpp"
#include "navtrace/analytic.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace navtrace;
using namespace navtrace::dynamics;

namespace {

struct Problem {
    geometry::Mesh mesh;
    std::unique_ptr<spaces::FeSpace> V;
    spaces::AssembledForms forms;
    spaces::LameParameters lame{1.0, 1.0};
    Problem(int level, int degree = 2, int d = 2) : mesh(geometry::build_mesh({d, 1.0, 2.0, level})) {
        V = std::make_unique<spaces::FeSpace>(mesh, degree);
        forms = spaces::assemble_forms(*V, lame);
    }
};

// u = (1 + t^2) v with v = 0 on Gamma0 and grad v = 0 on Gamma1.
analytic::AnalyticField manufactured() {
    return analytic::AnalyticField(2, [](const JetPoint& p) {
        const Jet r = sqrt(p[0] * p[0] + p[1] * p[1]);
        const Jet phi = (r - 1.0) * (2.0 - r) * (2.0 - r);
        const Jet a = 1.0 + p[3] * p[3];
        return JetVec{a * phi * (1.0 + 0.5 * p[0] / r), a * phi * (0.3 - p[0] * p[1] / (r * r)), Jet(0.0)};
    });
}

}  // namespace

TEST(TimeGrid, EndpointExact) {
    TimeGrid g{0.7, 13};
    EXPECT_EQ(g.t(13), 0.7);
    EXPECT_EQ(g.dt() * 13, 0.7);
    EXPECT_THROW((TimeGrid{0.0, 4}.validate()), InputError);
    EXPECT_THROW((TimeGrid{1.0, 0}.validate()), InputError);
}

TEST(FiniteDifferences, SecondOrderExactOnQuadratics) {
    std::vector<Vector> f;
    const double dt = 0.1;
    for (int n = 0; n <= 6; ++n) f.push_back(Vector::Constant(1, std::pow(n * dt, 2) + 3 * n * dt));
    const auto d1 = time_derivative(f, dt);
    const auto d2 = second_time_derivative(f, dt);
    for (int n = 0; n <= 6; ++n) {
        EXPECT_NEAR(d1[n](0), 2 * n * dt + 3, 1e-12);
        EXPECT_NEAR(d2[n](0), 2.0, 1e-10);
    }
}

TEST(Dynamics, ZeroDataZeroTrajectory) {
    Problem P(0);
    ElastodynamicsSolver S(*P.V, P.forms, {1.0, 10});
    const auto tr = S.solve_forward({});
    ASSERT_EQ(tr.u.size(), 11u);
    for (const auto& u : tr.u) EXPECT_EQ(u.norm(), 0.0);
}

TEST(Dynamics, EnergyConservation) {
    Problem P(0);
    ElastodynamicsSolver S(*P.V, P.forms, {10.0, 1000});
    ProblemData data;
    data.compatible = false;  // vanishes on the circle, not at chord midpoints
    data.u0 = [](const Vec3& x) {
        const double r = x.norm();
        return Vec3((r - 1.0) * x(1), (r - 1.0) * (r - 1.0), 0);
    };
    data.u1 = [](const Vec3& x) { return Vec3(0.0, (x.norm() - 1.0) * x(0), 0); };
    const auto tr = S.solve_forward(data);
    double worst = 0.0;
    for (double e : tr.energy) worst = std::max(worst, std::abs(e - tr.energy[0]));
    EXPECT_LE(worst, 1e-10 * std::max(tr.energy[0], 1.0));
}

TEST(Dynamics, EigenmodeTwoStepOracle) {
    Problem P(0);
    const auto modes = compute_eigenmodes(*P.V, P.forms, 3);
    const double T = 2.0;
    const int N = 40;
    ElastodynamicsSolver S(*P.V, P.forms, {T, N});
    for (int m = 0; m < 3; ++m) {
        ProblemData data;
        data.u0_coeffs = modes.modes[m];
        const auto tr = S.solve_forward(data);
        const double wt = trapezoidal_frequency(modes.omega[m], T / N);
        double worst = 0.0;
        for (int n = 0; n <= N; ++n) {
            const Vector e = tr.u[n] - std::cos(wt * S.grid().t(n)) * modes.modes[m];
            worst = std::max(worst, std::sqrt(e.dot(P.forms.mass * e)));
        }
        EXPECT_LE(worst, 1e-8);
    }
}

TEST(Dynamics, IncompatibleDataRejected) {
    Problem P(0);
    ElastodynamicsSolver S(*P.V, P.forms, {1.0, 4});
    ProblemData data;
    data.u0 = [](const Vec3&) { return Vec3(1.0, 0, 0); };
    EXPECT_THROW(S.solve_forward(data), InputError);
    data.g = [](const Vec3&, double) { return Vec3(1.0, 0, 0); };
    EXPECT_NO_THROW(S.solve_forward(data));
}

TEST(Dynamics, ManufacturedConvergence) {
    const auto u = manufactured();
    const double T = 1.0;
    double errs[3];
    for (int L = 0; L <= 2; ++L) {
        Problem P(L);
        ElastodynamicsSolver S(*P.V, P.forms, {T, 8 << L});
        ProblemData data;
        data.u0 = u.at_time(0.0);
        data.u1 = u.velocity_at_time(0.0);
        data.g = u.as_function();
        data.F = u.force_function(P.lame);
        const auto tr = S.solve_forward(data);
        double worst = 0.0;
        for (int n = 0; n <= S.grid().N; ++n) worst = std::max(worst, analytic::field_error(*P.V, tr.u[n], u, S.grid().t(n)).h1);
        errs[L] = worst;
    }
    EXPECT_GE(std::log2(errs[1] / errs[2]), 1.9) << errs[0] << " " << errs[1] << " " << errs[2];
}

TEST(Dynamics, TimeStepSecondOrder) {
    // Fixed mesh, refine dt: compare against a much finer time step.
    Problem P(0);
    const auto modes = compute_eigenmodes(*P.V, P.forms, 1);
    auto run = [&](int N) {
        ElastodynamicsSolver S(*P.V, P.forms, {1.0, N});
        ProblemData d;
        d.u0_coeffs = modes.modes[0];
        d.F = [](const Vec3& x, double t) { return Vec3(std::sin(3 * t) * (x.norm() - 1.0), 0, 0); };
        return S.solve_forward(d).u.back();
    };
    const Vector ref = run(1024);
    const double e1 = (run(16) - ref).norm(), e2 = (run(32) - ref).norm();
    EXPECT_GE(std::log2(e1 / e2), 1.9);
}

TEST(Dynamics, BackwardSolve) {
    Problem P(0);
    ElastodynamicsSolver S(*P.V, P.forms, {1.0, 16});
    const SpaceTimeFn psi = [](const Vec3& x, double t) { return Vec3(t * x(0), std::cos(t) * x(1), 0); };
    const SpaceTimeFn psi2 = [](const Vec3& x, double t) { return Vec3(x(1) * x(1), t * t, 0); };
    const auto phi = S.solve_backward(psi);
    EXPECT_EQ(phi.u.back().norm(), 0.0);
    EXPECT_EQ(phi.v.back().norm(), 0.0);
    for (const auto& u : phi.u)
        for (int dof : P.V->constrained()) EXPECT_EQ(u(dof), 0.0);
    // Involution: backward of reversed psi = reverse of forward with load psi.
    const SpaceTimeFn rev = [&](const Vec3& x, double t) { return psi(x, 1.0 - t); };
    ProblemData fd;
    fd.F = psi;
    const auto fwd = reverse(S.solve_forward(fd));
    const auto bwd = S.solve_backward(rev);
    double d = 0.0;
    for (int n = 0; n <= 16; ++n) d = std::max(d, (fwd.u[n] - bwd.u[n]).lpNorm<Eigen::Infinity>());
    EXPECT_LE(d, 1e-13);
    // Linearity.
    const auto p2 = S.solve_backward(psi2);
    const auto comb = S.solve_backward([&](const Vec3& x, double t) { return Vec3(2 * psi(x, t) - 3 * psi2(x, t)); });
    double e = 0.0, s = 0.0;
    for (int n = 0; n <= 16; ++n) {
        e = std::max(e, (comb.u[n] - 2 * phi.u[n] + 3 * p2.u[n]).lpNorm<Eigen::Infinity>());
        s = std::max(s, comb.u[n].lpNorm<Eigen::Infinity>());
    }
    EXPECT_LE(e, 1e-12 * s);
    EXPECT_EQ(S.solve_backward(SpaceTimeFn([](const Vec3&, double) { return Vec3::Zero(); })).u[0].norm(), 0.0);
}

TEST(Dynamics, TranspositionZeroPsi) {
    Problem P(0);
    ElastodynamicsSolver S(*P.V, P.forms, {1.0, 8});
    ProblemData data;
    data.u1 = [](const Vec3& x) { return Vec3(x(0), 0, 0); };
    const auto t = check_transposition_identity(S, data, [](const Vec3&, double) { return Vec3::Zero(); }, P.lame);
    EXPECT_EQ(t.lhs, 0.0);
    EXPECT_EQ(t.residual(), 0.0);
}

TEST(Dynamics, TranspositionConvergesPerChannel) {
    const SpaceTimeFn psi = [](const Vec3& x, double t) {
        const double r = x.norm();
        return Vec3((r - 1.0) * std::cos(2 * t) + 0.3 * x(1), 0.5 * x(0) * std::sin(t), 0);
    };
    const auto channel = [&](int which, int L) {
        Problem P(L);
        ElastodynamicsSolver S(*P.V, P.forms, {1.0, 8 << L});
        ProblemData d;
        d.compatible = false;
        if (which == 0) {
            d.u0 = [](const Vec3& x) { return Vec3((x.norm() - 1.0) * x(1), 0, 0); };
            d.u1 = [](const Vec3& x) { return Vec3(0, (x.norm() - 1.0) * std::cos(x(0)), 0); };
        } else if (which == 1) {
            d.F = [](const Vec3& x, double t) { return Vec3(std::sin(2 * t) * x(1), t * x(0) * x(0), 0); };
        } else {
            d.g = [](const Vec3& x, double t) {
                return Vec3(std::sin(t) * std::sin(t) * x(0), std::sin(t) * std::sin(t) * x(1) * x(0), 0);
            };
        }
        return check_transposition_identity(S, d, psi, P.lame).residual();
    };
    for (int ch = 0; ch < 3; ++ch) {
        const double r0 = channel(ch, 0), r1 = channel(ch, 1), r2 = channel(ch, 2);
        EXPECT_GE(r1 / r2, 2.0) << "channel " << ch << ": " << r0 << " " << r1 << " " << r2;
    }
}

TEST(Dynamics, EnergyCsv) {
    Problem P(0);
    ElastodynamicsSolver S(*P.V, P.forms, {1.0, 2});
    std::ostringstream os;
    write_energy_csv(os, S.solve_forward({}), P.forms);
    EXPECT_EQ(os.str().substr(0, 19), "step,t,E,v_L2,u_H1\n");
}
