#pragma once

// Pointwise boundary identities for fields vanishing on Gamma0, and the integral
// multiplier identity behind the stress-trace estimate, evaluated on FE trajectories.

#include "navtrace/analytic.hpp"
#include "navtrace/dynamics.hpp"
#include "navtrace/geometry.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace navtrace::identities {

/// Random smooth vector fields phi = (|x|^2 - r0^2)^power * a(x) with random smooth a.
/// Every member vanishes identically on |x| = r0.
struct TestFieldFamily {
    int dim = 2;
    double r0 = 1.0;
    std::uint64_t seed = 20240601;
    int count = 100;
    int power = 1;

    void validate() const;
    std::uint64_t field_seed(int i) const;
    analytic::AnalyticField field(int i) const;
};

/// Deterministic sample points on the sphere/circle of radius r0.
std::vector<Vec3> gamma0_points(int dim, double r0, int count, std::uint64_t seed);

struct ResidualRow {
    std::string identity;
    std::uint64_t field_seed = 0;
    int point = 0;
    double residual = 0.0;
};

struct IdentityResiduals {
    std::map<std::string, double> max_residual;  ///< A1..A5 and P39 variants
    std::vector<ResidualRow> rows;
    double max_abs_phi = 0.0;
    double worst() const;
};

/// Relative residuals |LHS - RHS| / (1 + |LHS|) of the five boundary identities and of the
/// stress-vector decomposition for each Lame pair, at each point and field. Gradients come
/// from exact jets. Throws InputError if a field does not vanish at a point.
IdentityResiduals check_appendix_a(const TestFieldFamily& family, const std::vector<Vec3>& points,
                                   const std::vector<spaces::LameParameters>& lames = {{1, 1}, {1, 10}});

/// |P(phi) n|^2 and its decomposition mu^2(|grad phi|^2 + 3 div^2) + 4 mu lambda div^2 + lambda^2 div^2.
std::array<double, 2> stress_decomposition(const Mat3& grad, const Vec3& n, const spaces::LameParameters& lame,
                                           int dim);

void write_residual_csv(std::ostream& os, const std::vector<ResidualRow>& rows);

/// Left side and the eight right-hand terms of the multiplier identity.
struct MultiplierTerms {
    double lhs = 0.0;
    std::array<double, 8> terms{};

    static const std::array<const char*, 8>& names();
    double rhs() const;
    double residual() const;  ///< |lhs - rhs| / (|lhs| + |rhs| + 1e-300)
};

/// Evaluates both sides on an FE trajectory with zero Dirichlet datum. F is the body force
/// used for the run (empty for zero); h is the radial multiplier field, evaluated exactly.
MultiplierTerms check_multiplier_identity(const dynamics::Trajectory& traj, const dynamics::ProblemData& data,
                                          const spaces::LameParameters& lame,
                                          const geometry::MultiplierProfile& h, int qdeg = 6);

}  // namespace navtrace::identities
