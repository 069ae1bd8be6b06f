#pragma once

#include <Eigen/Core>

#include <vector>

namespace navtrace::quadrature {

/// Gauss-Legendre rule with n points on [0, 1].
struct Rule1D {
    std::vector<double> x, w;
};
Rule1D gauss_legendre(int n);

/// Rule on the reference simplex {xi_i >= 0, sum xi_i <= 1} of dimension dim (1, 2 or 3).
/// Points are stored as reference coordinates xi (first `dim` entries used); weights sum
/// to the simplex volume 1/dim!.
struct SimplexRule {
    int dim = 0;
    int degree = 0;
    std::vector<Eigen::Vector3d> xi;
    std::vector<double> w;
    std::size_t size() const { return w.size(); }
};

/// Collapsed-coordinate (conical product) Gauss rule exact for polynomials of total degree
/// <= `degree` on the `dim`-simplex.
SimplexRule simplex_rule(int dim, int degree);

}  // namespace navtrace::quadrature
