#pragma once

// Analytic vector fields with exact derivatives (via second-order jets), used as
// manufactured solutions and as oracles for FE quantities.

#include "navtrace/common.hpp"
#include "navtrace/jet.hpp"
#include "navtrace/spaces.hpp"

#include <functional>

namespace navtrace::analytic {

using JetFieldFn = std::function<JetVec(const JetPoint&)>;

/// Exact pointwise quantities of a field u(x, t) given by a jet expression.
class AnalyticField {
public:
    AnalyticField() = default;
    AnalyticField(int dim, JetFieldFn fn) : dim_(dim), fn_(std::move(fn)) {}

    int dim() const { return dim_; }
    explicit operator bool() const { return static_cast<bool>(fn_); }

    Vec3 value(const Vec3& x, double t) const;
    /// grad(i, j) = d u_i / d x_j
    Mat3 gradient(const Vec3& x, double t) const;
    Vec3 velocity(const Vec3& x, double t) const;
    Vec3 acceleration(const Vec3& x, double t) const;
    /// Spatial Hessian of component i.
    Mat3 hessian(const Vec3& x, double t, int i) const;
    /// grad of the velocity field
    Mat3 velocity_gradient(const Vec3& x, double t) const;
    /// div P(u) = mu Lap u + (lambda + mu) grad div u
    Vec3 div_piola(const Vec3& x, double t, const spaces::LameParameters& lame) const;
    /// F = u_tt - div P(u)
    Vec3 body_force(const Vec3& x, double t, const spaces::LameParameters& lame) const;
    Mat3 piola(const Vec3& x, double t, const spaces::LameParameters& lame) const;

    SpaceTimeFn as_function() const;
    SpaceFn at_time(double t) const;
    SpaceFn velocity_at_time(double t) const;
    SpaceTimeFn force_function(const spaces::LameParameters& lame) const;

    /// Raw jets of the d components at (x, t).
    JetVec eval(const Vec3& x, double t) const;

private:
    int dim_ = 2;
    JetFieldFn fn_;
};

struct ErrorNorms {
    double l2 = 0.0;
    double h1 = 0.0;  ///< full H1 norm of the error
};

/// || u_h - u(., t) || in L2 and H1 over the mesh domain by cell quadrature of degree qdeg.
ErrorNorms field_error(const spaces::FeSpace& space, const Vector& coeffs, const AnalyticField& u, double t,
                       int qdeg = 6);

/// Same for the velocity field against u_t.
ErrorNorms velocity_error(const spaces::FeSpace& space, const Vector& coeffs, const AnalyticField& u, double t,
                          int qdeg = 6);

}  // namespace navtrace::analytic
