#include "navtrace/analytic.hpp"

#include "navtrace/quadrature.hpp"

#include <cmath>

namespace navtrace::analytic {

JetVec AnalyticField::eval(const Vec3& x, double t) const {
    if (!fn_) throw InputError("analytic field: empty expression");
    return fn_(jet_point(x(0), x(1), dim_ == 3 ? x(2) : 0.0, t));
}

Vec3 AnalyticField::value(const Vec3& x, double t) const {
    const JetVec u = eval(x, t);
    Vec3 out = Vec3::Zero();
    for (int i = 0; i < dim_; ++i) out(i) = u[i].v;
    return out;
}

Mat3 AnalyticField::gradient(const Vec3& x, double t) const {
    const JetVec u = eval(x, t);
    Mat3 G = Mat3::Zero();
    for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j) G(i, j) = u[i].g(j);
    return G;
}

Vec3 AnalyticField::velocity(const Vec3& x, double t) const {
    const JetVec u = eval(x, t);
    Vec3 out = Vec3::Zero();
    for (int i = 0; i < dim_; ++i) out(i) = u[i].g(3);
    return out;
}

Vec3 AnalyticField::acceleration(const Vec3& x, double t) const {
    const JetVec u = eval(x, t);
    Vec3 out = Vec3::Zero();
    for (int i = 0; i < dim_; ++i) out(i) = u[i].h(3, 3);
    return out;
}

Mat3 AnalyticField::hessian(const Vec3& x, double t, int i) const {
    const JetVec u = eval(x, t);
    Mat3 H = Mat3::Zero();
    H.topLeftCorner(dim_, dim_) = u[i].h.topLeftCorner(dim_, dim_);
    return H;
}

Mat3 AnalyticField::velocity_gradient(const Vec3& x, double t) const {
    const JetVec u = eval(x, t);
    Mat3 G = Mat3::Zero();
    for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j) G(i, j) = u[i].h(j, 3);
    return G;
}

Vec3 AnalyticField::div_piola(const Vec3& x, double t, const spaces::LameParameters& lame) const {
    const JetVec u = eval(x, t);
    Vec3 out = Vec3::Zero();
    for (int i = 0; i < dim_; ++i) {
        double lap = 0.0, graddiv = 0.0;
        for (int j = 0; j < dim_; ++j) {
            lap += u[i].h(j, j);
            graddiv += u[j].h(j, i);
        }
        out(i) = lame.mu * lap + (lame.lambda + lame.mu) * graddiv;
    }
    return out;
}

Vec3 AnalyticField::body_force(const Vec3& x, double t, const spaces::LameParameters& lame) const {
    return acceleration(x, t) - div_piola(x, t, lame);
}

Mat3 AnalyticField::piola(const Vec3& x, double t, const spaces::LameParameters& lame) const {
    return spaces::piola_stress(gradient(x, t), lame, dim_);
}

SpaceTimeFn AnalyticField::as_function() const {
    AnalyticField self = *this;
    return [self](const Vec3& x, double t) { return self.value(x, t); };
}

SpaceFn AnalyticField::at_time(double t) const {
    AnalyticField self = *this;
    return [self, t](const Vec3& x) { return self.value(x, t); };
}

SpaceFn AnalyticField::velocity_at_time(double t) const {
    AnalyticField self = *this;
    return [self, t](const Vec3& x) { return self.velocity(x, t); };
}

SpaceTimeFn AnalyticField::force_function(const spaces::LameParameters& lame) const {
    AnalyticField self = *this;
    return [self, lame](const Vec3& x, double t) { return self.body_force(x, t, lame); };
}

namespace {

template <class Exact>
ErrorNorms error_impl(const spaces::FeSpace& V, const Vector& coeffs, int qdeg, Exact exact) {
    const int d = V.dim();
    const auto& mesh = V.mesh();
    const auto rule = quadrature::simplex_rule(d, qdeg);
    const double scale = d == 2 ? 2.0 : 6.0;
    double l2 = 0.0, h1s = 0.0;
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
        const auto& cell = mesh.cells[c];
        const double J = V.cell_geometry(c).volume * scale;
        for (std::size_t q = 0; q < rule.size(); ++q) {
            std::array<double, 4> lam{};
            double s = 0.0;
            for (int i = 0; i < d; ++i) {
                lam[i + 1] = rule.xi[q](i);
                s += lam[i + 1];
            }
            lam[0] = 1.0 - s;
            Vec3 x = Vec3::Zero();
            for (int i = 0; i <= d; ++i) x += lam[i] * mesh.nodes[cell[i]];
            const auto pv = spaces::evaluate(V, coeffs, c, lam);
            Vec3 ev;
            Mat3 eg;
            exact(x, ev, eg);
            l2 += rule.w[q] * J * (pv.value - ev).squaredNorm();
            h1s += rule.w[q] * J * (pv.gradient - eg).squaredNorm();
        }
    }
    return {std::sqrt(l2), std::sqrt(l2 + h1s)};
}

}  // namespace

ErrorNorms field_error(const spaces::FeSpace& V, const Vector& coeffs, const AnalyticField& u, double t, int qdeg) {
    return error_impl(V, coeffs, qdeg, [&](const Vec3& x, Vec3& v, Mat3& g) {
        v = u.value(x, t);
        g = u.gradient(x, t);
    });
}

ErrorNorms velocity_error(const spaces::FeSpace& V, const Vector& coeffs, const AnalyticField& u, double t,
                          int qdeg) {
    return error_impl(V, coeffs, qdeg, [&](const Vec3& x, Vec3& v, Mat3& g) {
        v = u.velocity(x, t);
        g = u.velocity_gradient(x, t);
    });
}

}  // namespace navtrace::analytic
