#pragma once

// Independent oracle for the multiplier identity terms of an analytic field on the
// exact annulus r0 < |x| < r1 (d = 2): Gauss-Legendre in r and t, periodic trapezoid in theta.

#include "navtrace/analytic.hpp"
#include "navtrace/geometry.hpp"
#include "navtrace/identities.hpp"
#include "navtrace/quadrature.hpp"

#include <cmath>
#include <numbers>

namespace navtrace::oracle {

struct PolarRule {
    int nr = 24, ntheta = 160, nt = 8;
};

inline identities::MultiplierTerms polar_multiplier_terms(const analytic::AnalyticField& u,
                                                          const spaces::LameParameters& lame,
                                                          const geometry::MultiplierProfile& h, double r0, double r1,
                                                          double T, PolarRule R = {}) {
    const auto gr = quadrature::gauss_legendre(R.nr);
    const auto gt = quadrature::gauss_legendre(R.nt);
    const double dth = 2 * std::numbers::pi / R.ntheta;
    auto point = [](double r, double th) { return Vec3(r * std::cos(th), r * std::sin(th), 0.0); };
    // volume integral of f(x) over the annulus
    auto volume = [&](auto&& f) {
        double s = 0.0;
        for (std::size_t i = 0; i < gr.x.size(); ++i) {
            const double r = r0 + (r1 - r0) * gr.x[i];
            for (int k = 0; k < R.ntheta; ++k) s += gr.w[i] * (r1 - r0) * r * dth * f(point(r, k * dth));
        }
        return s;
    };
    auto in_time = [&](auto&& f) {
        double s = 0.0;
        for (std::size_t j = 0; j < gt.x.size(); ++j) s += gt.w[j] * T * f(T * gt.x[j]);
        return s;
    };
    const double mu = lame.mu, lm = lame.lambda + lame.mu;
    identities::MultiplierTerms m;
    m.lhs = 0.5 * in_time([&](double t) {
        double s = 0.0;
        for (int k = 0; k < R.ntheta; ++k) {
            const Mat3 G = u.gradient(point(r0, k * dth), t);
            s += r0 * dth * (mu * G.squaredNorm() + lm * std::pow(G.trace(), 2));
        }
        return s;
    });
    auto vel = [&](double t) {
        return volume([&](const Vec3& x) { return u.velocity(x, t).dot(u.gradient(x, t) * h.value(x)); });
    };
    auto vol_t = [&](auto&& f) { return in_time([&](double t) { return volume([&](const Vec3& x) { return f(x, t); }); }); };
    m.terms[0] = vel(T);
    m.terms[1] = -vel(0.0);
    m.terms[2] = 0.5 * vol_t([&](const Vec3& x, double t) { return u.velocity(x, t).squaredNorm() * h.gradient(x).trace(); });
    m.terms[3] = -0.5 * mu * vol_t([&](const Vec3& x, double t) { return u.gradient(x, t).squaredNorm() * h.gradient(x).trace(); });
    m.terms[4] = mu * vol_t([&](const Vec3& x, double t) {
        const Mat3 G = u.gradient(x, t);
        return G.cwiseProduct(G * h.gradient(x)).sum();
    });
    m.terms[5] = -0.5 * lm * vol_t([&](const Vec3& x, double t) { return std::pow(u.gradient(x, t).trace(), 2) * h.gradient(x).trace(); });
    m.terms[6] = lm * vol_t([&](const Vec3& x, double t) {
        const Mat3 G = u.gradient(x, t);
        return G.trace() * G.cwiseProduct(h.gradient(x).transpose()).sum();
    });
    m.terms[7] = -vol_t([&](const Vec3& x, double t) { return u.body_force(x, t, lame).dot(u.gradient(x, t) * h.value(x)); });
    return m;
}

}  // namespace navtrace::oracle
