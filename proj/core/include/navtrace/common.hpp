#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace navtrace {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using SpMat = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;

/// Guard used in every relative residual |a-b|/(|a|+|b|+eps).
inline constexpr double kResidualGuard = 1e-300;

inline double relative_residual(double lhs, double rhs) {
    const double d = lhs - rhs;
    return (d < 0 ? -d : d) / ((lhs < 0 ? -lhs : lhs) + (rhs < 0 ? -rhs : rhs) + kResidualGuard);
}

/// Least-squares slope of log(y) against log(x). Nonpositive y are rejected by the caller.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) return 0.0;
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    return sxx > 0.0 ? sxy / sxx : 0.0;
}

/// Body force or boundary datum evaluated at (x, t); only the first d components are used.
using SpaceTimeFn = std::function<Vec3(const Vec3&, double)>;
/// Time-independent vector field.
using SpaceFn = std::function<Vec3(const Vec3&)>;

/// Thrown for malformed input (bad parameters, precondition violations).
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Thrown when a numerical step fails (singular factorization, non-finite values).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline const char* tool_version() { return "navtrace 0.3.1"; }

}  // namespace navtrace
