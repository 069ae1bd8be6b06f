#include "navtrace/timescale.hpp"
#include "navtrace/rng.hpp"

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <numeric>

using namespace navtrace;
using namespace navtrace::timescale;

namespace {

// Exact rational arithmetic for a small Gaussian elimination oracle.
struct Frac {
    long long p = 0, q = 1;
    Frac(long long a = 0, long long b = 1) : p(a), q(b) { norm(); }
    void norm() {
        if (q < 0) p = -p, q = -q;
        const long long g = std::gcd(p < 0 ? -p : p, q);
        if (g > 1) p /= g, q /= g;
    }
    Frac operator-(const Frac& o) const { return {p * o.q - o.p * q, q * o.q}; }
    Frac operator*(const Frac& o) const { return {p * o.p, q * o.q}; }
    Frac operator/(const Frac& o) const { return {p * o.q, q * o.p}; }
};

std::vector<Frac> rational_alpha(int m) {
    std::vector<std::vector<Frac>> A(m, std::vector<Frac>(m + 1));
    for (int j = 0; j < m; ++j) {
        for (int k = 1; k <= m; ++k) {
            long long v = 1;
            for (int e = 0; e < j; ++e) v *= -k;
            A[j][k - 1] = Frac(v);
        }
        A[j][m] = Frac(1);
    }
    for (int c = 0; c < m; ++c) {
        int piv = c;
        while (A[piv][c].p == 0) ++piv;
        std::swap(A[c], A[piv]);
        for (int r = 0; r < m; ++r) {
            if (r == c || A[r][c].p == 0) continue;
            const Frac f = A[r][c] / A[c][c];
            for (int k = c; k <= m; ++k) A[r][k] = A[r][k] - f * A[c][k];
        }
    }
    std::vector<Frac> x(m);
    for (int c = 0; c < m; ++c) x[c] = A[c][m] / A[c][c];
    return x;
}

HilbertScaleSignal polynomial_signal(double tau, int K, int power, int steps, int k = 1) {
    HilbertScaleSignal f;
    f.tau = tau;
    f.K = K;
    f.values.assign(steps + 1, Coeffs(2 * K + 1, 0.0));
    for (int n = 0; n <= steps; ++n) f.values[n][K + k] = std::pow(tau * n / steps, power);
    return f;
}

HilbertScaleSignal sin_power_signal(double tau, int K, int power, int steps) {
    HilbertScaleSignal f;
    f.tau = tau;
    f.K = K;
    f.values.assign(steps + 1, Coeffs(2 * K + 1, 0.0));
    for (int n = 0; n <= steps; ++n) {
        const double s = std::pow(std::sin(0.5 * std::numbers::pi * n / steps), power);
        f.values[n][K + 2] = std::complex<double>(s, -0.5 * s);
        f.values[n][K] = 0.3 * s;
    }
    return f;
}

}  // namespace

TEST(Alpha, SmallCases) {
    EXPECT_EQ(solve_alpha(1).alpha, std::vector<double>({1.0}));
    EXPECT_EQ(solve_alpha(2).alpha, std::vector<double>({3.0, -2.0}));
    EXPECT_THROW(solve_alpha(9), InputError);
    EXPECT_THROW(solve_alpha(0), InputError);
}

TEST(Alpha, MatchesRationalEliminationAndDenseSolve) {
    for (int m = 1; m <= 8; ++m) {
        const auto a = solve_alpha(m);
        const auto exact = rational_alpha(m);
        Eigen::MatrixXd V(m, m);
        for (int j = 0; j < m; ++j)
            for (int k = 1; k <= m; ++k) V(j, k - 1) = std::pow(-double(k), j);
        const Eigen::VectorXd dense = V.fullPivLu().solve(Eigen::VectorXd::Ones(m));
        for (int k = 0; k < m; ++k) {
            ASSERT_EQ(exact[k].q, 1) << "alpha is integral";
            EXPECT_EQ(a.alpha[k], static_cast<double>(exact[k].p)) << m << ' ' << k;
            EXPECT_NEAR(dense(k), a.alpha[k], 1e-6 * (1 + std::abs(a.alpha[k])));
        }
        EXPECT_LE(a.residual(), 1e-12);
    }
}

TEST(Fornberg, KnownStencils) {
    const auto w = fd_weights(0.0, {-1, 0, 1}, 2);
    EXPECT_NEAR(w[0], 1.0, 1e-14);
    EXPECT_NEAR(w[1], -2.0, 1e-14);
    EXPECT_NEAR(w[2], 1.0, 1e-14);
    const auto o = fd_weights(0.0, {0, 1, 2}, 1);
    EXPECT_NEAR(o[0], -1.5, 1e-14);
    EXPECT_NEAR(o[1], 2.0, 1e-14);
    EXPECT_NEAR(o[2], -0.5, 1e-14);
    EXPECT_THROW(fd_weights(0.0, {0, 1}, 2), InputError);
}

TEST(Derivative, ExactOnPolynomials) {
    const auto f = polynomial_signal(2.0, 3, 3, 40);
    const auto d = derivative(f, 2, 3);
    for (int n = 0; n <= 40; ++n) EXPECT_NEAR(d.values[n][3 + 1].real(), 6.0 * 2.0 * n / 40, 1e-8);
    const auto d0 = initial_derivative(polynomial_signal(1.0, 2, 1, 16), 1, 3);
    EXPECT_NEAR(d0[2 + 1].real(), 1.0, 1e-12);
}

TEST(Norms, InterpolationEndpointsAndSingleMode) {
    Coeffs c(2 * 4 + 1, 0.0);
    c[4 + 3] = {0.6, -0.8};
    c[4 - 1] = 2.0;
    const double h = std::sqrt(1.0 + 4.0);
    const double v2 = std::sqrt(std::pow(10.0, 2) * 1.0 + std::pow(2.0, 2) * 4.0);  // m = 2
    EXPECT_NEAR(interpolation_norm(c, 0.0, 2), h, 1e-14);
    EXPECT_NEAR(interpolation_norm(c, 1.0, 2), v2, 1e-12);
    Coeffs s(2 * 8 + 1, 0.0);
    s[8 + 5] = 1.7;
    EXPECT_NEAR(interpolation_norm(s, 0.5, 1), std::pow(26.0, 0.25) * 1.7, 1e-13);
    EXPECT_THROW(interpolation_norm(s, 1.1, 1), InputError);
    EXPECT_THROW(interpolation_norm(s, -0.1, 1), InputError);
}

TEST(Norms, InterpolationInequalityHolder) {
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        Coeffs c(2 * 16 + 1);
        for (auto& z : c) z = {rng.normal(), rng.normal()};
        const double s0 = rng.uniform(0, 1), s1 = s0 + rng.uniform(0, 2), th = rng.uniform(0, 1);
        const double lhs = sobolev_norm(c, (1 - th) * s0 + th * s1);
        const double rhs = std::pow(sobolev_norm(c, s0), 1 - th) * std::pow(sobolev_norm(c, s1), th);
        EXPECT_LE(lhs, rhs * (1 + 1e-12));
    }
}

TEST(Norms, ConstantInTime) {
    HilbertScaleSignal f;
    f.tau = 3.0;
    f.K = 5;
    Coeffs c(11, 0.0);
    c[5 + 2] = 1.5;
    f.values.assign(65, c);
    EXPECT_NEAR(zm_norm(f, 2), std::sqrt(3.0) * interpolation_norm(c, 1.0, 2), 1e-10);
}

TEST(Extension, ZeroAndLinear) {
    const double tau = 0.8;
    const int N = 32;
    HilbertScaleSignal z = polynomial_signal(tau, 2, 1, N);
    for (auto& c : z.values) std::fill(c.begin(), c.end(), 0.0);
    for (const auto& c : extend_zero_left(z, 2).values)
        for (auto v : c) EXPECT_EQ(v, 0.0);
    const auto e = extend_zero_left(polynomial_signal(tau, 2, 1, N), 1);
    ASSERT_EQ(e.steps(), 2 * N);
    for (int n = N; n <= 2 * N; ++n) EXPECT_NEAR(e.values[n][2 + 1].real(), 2 * tau - tau * n / N, 1e-14);
}

TEST(Extension, QuadraticGluesSmoothly) {
    const double tau = 1.3;
    const auto f = polynomial_signal(tau, 2, 2, 60);
    const auto e = extend_zero_left(f, 2);
    // 3 f(2tau - t) - 2 f(3tau - 2t) at t = tau equals f(tau)
    EXPECT_NEAR(e.values[60][3].real(), tau * tau, 1e-12);
    const auto jumps = extension_jumps(e, 2, tau);
    // value and first-derivative jumps vanish (the stencils are exact on quadratics)
    EXPECT_LT(jumps[0], 1e-10);
    EXPECT_LT(jumps[1], 1e-8);
}

TEST(Extension, RejectsNonzeroTraces) {
    EXPECT_THROW(extend_zero_left(polynomial_signal(1.0, 2, 1, 32), 2), InputError);
    EXPECT_THROW(extend_zero_left(polynomial_signal(1.0, 2, 0, 32), 1), InputError);
}

TEST(Extension, JumpsConvergeUnderRefinement) {
    for (int m : {2, 3}) {
        std::vector<double> prev;
        for (int N : {60, 120, 240}) {
            const auto e = extend_zero_left(sin_power_signal(1.0, 3, m, N), m);
            const auto j = extension_jumps(e, m, 1.0);
            if (!prev.empty())
                for (int k = 0; k < m; ++k)
                    if (prev[k] > 1e-11) EXPECT_GE(prev[k] / std::max(j[k], 1e-300), 1.9) << m << ' ' << k;
            prev = j;
        }
    }
}

TEST(Extension, ZeroTraceReflectionDoublesTheNormSquare) {
    // The reflected copy on (tau, 2 tau) repeats f, so both parts of the Z^1 norm double.
    const auto f = sin_power_signal(2.0, 3, 1, 400);
    const auto e = extend_zero_left(f, 1);
    EXPECT_NEAR(zm_norm(e, 1) / zm_norm(f, 1), std::sqrt(2.0), 2e-3);
}

TEST(Breakpoints, FromTermSupports) {
    const auto b = extension_breakpoints(3, 2.0);
    ASSERT_EQ(b.size(), 5u);
    EXPECT_DOUBLE_EQ(b[1], 2.0);
    EXPECT_DOUBLE_EQ(b[2], 2.0 * 4 / 3);
    EXPECT_DOUBLE_EQ(b[3], 3.0);
    EXPECT_DOUBLE_EQ(b[4], 4.0);
}

TEST(TraceConstants, SineModeMatchesClosedForm) {
    // f = c sin(pi t / tau) e_k, m = 1, j = 0:
    // sup |f|_{1/2} = (1 + k^2)^(1/4) |c|, |f|^2_{Z^1} = |c|^2 ((1 + k^2) tau / 2 + pi^2 / (2 tau)).
    const int k = 3;
    const std::complex<double> c(0.4, 1.1);
    for (double tau : {1.0, 4.0}) {
        const auto f = sine_mode_signal(tau, 4, k, c, 2000);
        const double lhs = sup_time(f, 0.5, 1), rhs = zm_norm(f, 1);
        const double el = std::pow(1.0 + k * k, 0.25) * std::abs(c);
        const double er = std::abs(c) * std::sqrt((1 + k * k) * tau / 2 + std::pow(std::numbers::pi, 2) / (2 * tau));
        EXPECT_NEAR(lhs / el, 1.0, 1e-6);
        EXPECT_NEAR(rhs / er, 1.0, 1e-5);
    }
}

TEST(TraceConstants, BoundedAndDeterministic) {
    EnsembleSpec spec;
    spec.members = 9;
    spec.K = 16;
    spec.base_steps = 128;
    const auto a = verify_trace_constants(spec, 2, {0.25, 1.0, 4.0});
    const auto b = verify_trace_constants(spec, 2, {0.25, 1.0, 4.0});
    ASSERT_EQ(a.size(), b.size());
    ASSERT_EQ(a.size(), 3u * 2u * 7u);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].ratio, b[i].ratio);
        EXPECT_TRUE(std::isfinite(a[i].ratio));
        EXPECT_GT(a[i].ratio, 0.0);
        EXPECT_LT(a[i].ratio, 100.0) << a[i].theorem;
    }
    spec.members = 0;
    EXPECT_THROW(verify_trace_constants(spec, 1, {1.0}), InputError);
}

TEST(TraceConstants, ZeroTraceEnsembleHasVanishingTraces) {
    EnsembleSpec spec;
    spec.members = 6;
    spec.K = 8;
    spec.base_steps = 256;
    for (const auto& f : make_ensemble(spec, 2, 1.0)) EXPECT_NO_THROW(extend_zero_left(f, 2));
}
