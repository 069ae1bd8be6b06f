#include "navtrace/quadrature.hpp"

#include "navtrace/common.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace navtrace::quadrature {

Rule1D gauss_legendre(int n) {
    if (n < 1) throw InputError("gauss_legendre: need at least one point");
    // Golub-Welsch: eigenvalues of the symmetric Jacobi matrix of the Legendre recurrence.
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        const double b = k / std::sqrt(4.0 * k * k - 1.0);
        J(k, k - 1) = b;
        J(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    Rule1D r;
    r.x.resize(n);
    r.w.resize(n);
    for (int i = 0; i < n; ++i) {
        const double v0 = es.eigenvectors()(0, i);
        r.x[i] = 0.5 * (es.eigenvalues()(i) + 1.0);
        r.w[i] = v0 * v0;  // 2 v0^2 on [-1,1], halved for [0,1]
    }
    // Symmetrize exactly so that mirrored points give mirrored results.
    for (int i = 0; i < n / 2; ++i) {
        const int j = n - 1 - i;
        const double x = 0.5 * ((1.0 - r.x[j]) + r.x[i]);
        const double w = 0.5 * (r.w[i] + r.w[j]);
        r.x[i] = x;
        r.x[j] = 1.0 - x;
        r.w[i] = r.w[j] = w;
    }
    if (n % 2 == 1) r.x[n / 2] = 0.5;
    return r;
}

SimplexRule simplex_rule(int dim, int degree) {
    if (dim < 1 || dim > 3) throw InputError("simplex_rule: dim must be 1, 2 or 3");
    if (degree < 0) throw InputError("simplex_rule: negative degree");
    SimplexRule rule;
    rule.dim = dim;
    rule.degree = degree;
    // In collapsed coordinates the Jacobian adds (1-u)^(dim-1) in the first direction and
    // (1-v)^(dim-2) in the second, so each direction needs enough points for its degree.
    auto npts = [](int q) { return std::max(1, (q + 2) / 2); };  // 2n-1 >= q
    if (dim == 1) {
        const Rule1D g = gauss_legendre(npts(degree));
        for (std::size_t i = 0; i < g.x.size(); ++i) {
            rule.xi.emplace_back(g.x[i], 0.0, 0.0);
            rule.w.push_back(g.w[i]);
        }
    } else if (dim == 2) {
        const Rule1D gu = gauss_legendre(npts(degree + 1));
        const Rule1D gv = gauss_legendre(npts(degree));
        for (std::size_t i = 0; i < gu.x.size(); ++i) {
            for (std::size_t j = 0; j < gv.x.size(); ++j) {
                const double u = gu.x[i], v = gv.x[j];
                rule.xi.emplace_back(u, (1.0 - u) * v, 0.0);
                rule.w.push_back(gu.w[i] * gv.w[j] * (1.0 - u));
            }
        }
    } else {
        const Rule1D gu = gauss_legendre(npts(degree + 2));
        const Rule1D gv = gauss_legendre(npts(degree + 1));
        const Rule1D gw = gauss_legendre(npts(degree));
        for (std::size_t i = 0; i < gu.x.size(); ++i) {
            for (std::size_t j = 0; j < gv.x.size(); ++j) {
                for (std::size_t k = 0; k < gw.x.size(); ++k) {
                    const double u = gu.x[i], v = gv.x[j], w = gw.x[k];
                    rule.xi.emplace_back(u, (1.0 - u) * v, (1.0 - u) * (1.0 - v) * w);
                    rule.w.push_back(gu.w[i] * gv.w[j] * gw.w[k] * (1.0 - u) * (1.0 - u) * (1.0 - v));
                }
            }
        }
    }
    return rule;
}

}  // namespace navtrace::quadrature
