#pragma once

// Second-order forward-mode jets over the four variables (x1, x2, x3, t).
// A Jet carries a value, its gradient and its Hessian; arithmetic propagates
// all three exactly, so analytic test fields get exact first and second
// derivatives without finite differences.

#include <Eigen/Core>

#include <array>
#include <cmath>

namespace navtrace {

struct Jet {
    using G = Eigen::Matrix<double, 4, 1>;
    using H = Eigen::Matrix<double, 4, 4>;

    double v = 0.0;
    G g = G::Zero();
    H h = H::Zero();

    Jet() = default;
    Jet(double c) : v(c) {}  // NOLINT(google-explicit-constructor): constants mix freely

    static Jet variable(double value, int index) {
        Jet j(value);
        j.g(index) = 1.0;
        return j;
    }
};

/// Chain rule for a scalar function with f(v), f'(v), f''(v).
inline Jet apply_unary(const Jet& a, double f, double df, double d2f) {
    Jet r;
    r.v = f;
    r.g = df * a.g;
    r.h = df * a.h + d2f * a.g * a.g.transpose();
    return r;
}

inline Jet operator+(const Jet& a, const Jet& b) {
    Jet r;
    r.v = a.v + b.v;
    r.g = a.g + b.g;
    r.h = a.h + b.h;
    return r;
}
inline Jet operator-(const Jet& a, const Jet& b) {
    Jet r;
    r.v = a.v - b.v;
    r.g = a.g - b.g;
    r.h = a.h - b.h;
    return r;
}
inline Jet operator-(const Jet& a) {
    Jet r;
    r.v = -a.v;
    r.g = -a.g;
    r.h = -a.h;
    return r;
}
inline Jet operator*(const Jet& a, const Jet& b) {
    Jet r;
    r.v = a.v * b.v;
    r.g = a.v * b.g + b.v * a.g;
    r.h = a.v * b.h + b.v * a.h + a.g * b.g.transpose() + b.g * a.g.transpose();
    return r;
}
inline Jet operator*(double s, const Jet& a) {
    Jet r;
    r.v = s * a.v;
    r.g = s * a.g;
    r.h = s * a.h;
    return r;
}
inline Jet operator*(const Jet& a, double s) { return s * a; }
inline Jet inverse(const Jet& a) {
    const double iv = 1.0 / a.v;
    return apply_unary(a, iv, -iv * iv, 2.0 * iv * iv * iv);
}
inline Jet operator/(const Jet& a, const Jet& b) { return a * inverse(b); }
inline Jet operator/(const Jet& a, double s) { return (1.0 / s) * a; }
inline Jet operator/(double s, const Jet& a) { return s * inverse(a); }

inline Jet& operator+=(Jet& a, const Jet& b) { return a = a + b; }
inline Jet& operator-=(Jet& a, const Jet& b) { return a = a - b; }
inline Jet& operator*=(Jet& a, const Jet& b) { return a = a * b; }

inline Jet sin(const Jet& a) {
    const double s = std::sin(a.v), c = std::cos(a.v);
    return apply_unary(a, s, c, -s);
}
inline Jet cos(const Jet& a) {
    const double s = std::sin(a.v), c = std::cos(a.v);
    return apply_unary(a, c, -s, -c);
}
inline Jet exp(const Jet& a) {
    const double e = std::exp(a.v);
    return apply_unary(a, e, e, e);
}
inline Jet log(const Jet& a) { return apply_unary(a, std::log(a.v), 1.0 / a.v, -1.0 / (a.v * a.v)); }
inline Jet sqrt(const Jet& a) {
    const double s = std::sqrt(a.v);
    return apply_unary(a, s, 0.5 / s, -0.25 / (s * a.v));
}
inline Jet pow(const Jet& a, double p) {
    const double f = std::pow(a.v, p);
    return apply_unary(a, f, p * std::pow(a.v, p - 1.0), p * (p - 1.0) * std::pow(a.v, p - 2.0));
}
inline Jet ipow(const Jet& a, int n) {
    Jet r(1.0);
    for (int i = 0; i < n; ++i) r = r * a;
    return r;
}
/// atan2(y, x) with d = (x dy - y dx)/(x^2 + y^2).
inline Jet atan2(const Jet& y, const Jet& x) {
    const double r2 = x.v * x.v + y.v * y.v;
    Jet r;
    r.v = std::atan2(y.v, x.v);
    const double ay = x.v / r2, ax = -y.v / r2;
    r.g = ay * y.g + ax * x.g;
    // Second derivatives of atan2 in (y, x).
    const double r4 = r2 * r2;
    const double ayy = -2.0 * x.v * y.v / r4;
    const double axx = 2.0 * x.v * y.v / r4;
    const double axy = (y.v * y.v - x.v * x.v) / r4;
    r.h = ay * y.h + ax * x.h + ayy * y.g * y.g.transpose() + axx * x.g * x.g.transpose() +
          axy * (x.g * y.g.transpose() + y.g * x.g.transpose());
    return r;
}

using JetVec = std::array<Jet, 3>;
using JetPoint = std::array<Jet, 4>;  // (x1, x2, x3, t)

inline JetPoint jet_point(double x1, double x2, double x3, double t) {
    return {Jet::variable(x1, 0), Jet::variable(x2, 1), Jet::variable(x3, 2), Jet::variable(t, 3)};
}

}  // namespace navtrace
