#pragma once

#include "navtrace/common.hpp"
#include "navtrace/elliptic.hpp"
#include "navtrace/spaces.hpp"

#include <Eigen/SparseCholesky>

#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

namespace navtrace::dynamics {

/// Uniform grid on [0, T] with N steps; t(N) == T exactly.
struct TimeGrid {
    double T = 1.0;
    int N = 1;

    double dt() const { return T / N; }
    double t(int n) const { return n == N ? T : T * n / N; }
    void validate() const;
    bool operator==(const TimeGrid& o) const { return T == o.T && N == o.N; }
};

/// Data of the mixed problem. Empty functions mean zero. Discrete initial data, when set,
/// take precedence over the corresponding functions.
struct ProblemData {
    SpaceTimeFn F;
    SpaceFn u0, u1;
    SpaceTimeFn g;
    std::optional<Vector> u0_coeffs, u1_coeffs;
    bool compatible = true;  ///< require g(., 0) = u0 at Gamma0 dofs (to 1e-12)
};

struct Trajectory {
    TimeGrid grid;
    const spaces::FeSpace* space = nullptr;
    std::vector<Vector> u, v;    ///< N + 1 full coefficient vectors
    std::vector<double> energy;  ///< E_n = v M v / 2 + u K u / 2

    spaces::Field displacement(int n) const { return {space, u[n], grid.t(n), true}; }
};

/// One-sided/centered second-order finite differences of a sampled sequence.
std::vector<Vector> time_derivative(const std::vector<Vector>& samples, double dt);
std::vector<Vector> second_time_derivative(const std::vector<Vector>& samples, double dt);

/// Semi-discrete Galerkin elastodynamics M u'' + K u = b with u = g on Gamma0, integrated
/// with the average-acceleration (trapezoidal) rule. Nonzero g is split off as a lift.
class ElastodynamicsSolver {
public:
    ElastodynamicsSolver(const spaces::FeSpace& space, const spaces::AssembledForms& forms, TimeGrid grid,
                         elliptic::LiftKind lift = elliptic::LiftKind::Harmonic);

    const spaces::FeSpace& space() const { return *space_; }
    const spaces::AssembledForms& forms() const { return *forms_; }
    const TimeGrid& grid() const { return grid_; }
    elliptic::LiftKind lift_kind() const { return lift_kind_; }

    Trajectory solve_forward(const ProblemData& data) const;

    /// Core integrator. `loads` (assembled body-force vectors) and `lifts` (full vectors
    /// carrying the Gamma0 datum) have N + 1 entries each or are empty for zero.
    Trajectory integrate(const Vector& u0, const Vector& v0, const std::vector<Vector>& loads,
                         const std::vector<Vector>& lifts) const;

    /// phi'' + K phi = psi on (0, T), phi(T) = phi'(T) = 0, phi = 0 on Gamma0.
    Trajectory solve_backward(const SpaceTimeFn& psi) const;
    Trajectory solve_backward(const std::vector<Vector>& psi_loads) const;

    /// Backward solve with zero load and Gamma0 datum given by `lifts` (final conditions zero).
    Trajectory solve_backward_boundary(const std::vector<Vector>& lifts) const;

    /// Lifts of the Gamma0 datum at every grid time (space-dependent kind).
    std::vector<Vector> lift_samples(const SpaceTimeFn& g) const;
    Vector lift(const Vector& boundary) const;

    /// Assembled load vectors at every grid time.
    std::vector<Vector> load_samples(const SpaceTimeFn& F) const;

    double energy(const Vector& u, const Vector& v) const;

private:
    const spaces::FeSpace* space_;
    const spaces::AssembledForms* forms_;
    TimeGrid grid_;
    elliptic::LiftKind lift_kind_;
    SpMat Mff_, Kff_;
    Eigen::SimplicialLDLT<SpMat> step_solver_;
    std::unique_ptr<elliptic::HarmonicLift> harmonic_;
    std::unique_ptr<elliptic::ElasticityLift> elastic_;
};

/// Reverses a trajectory in time (velocity sign flipped).
Trajectory reverse(const Trajectory& traj);

/// Lowest discrete eigenmodes K w = omega^2 M w on the constrained space (full vectors,
/// M-normalised), as (omega, w) pairs.
struct Eigenmodes {
    std::vector<double> omega;
    std::vector<Vector> modes;
};
Eigenmodes compute_eigenmodes(const spaces::FeSpace& space, const spaces::AssembledForms& forms, int count);

/// Modified angular frequency of the trapezoidal rule: cos(w~ dt) = (1 - w^2 dt^2/4)/(1 + w^2 dt^2/4).
double trapezoidal_frequency(double omega, double dt);

/// Writes "step,t,E,v_L2,u_H1" rows.
void write_energy_csv(std::ostream& os, const Trajectory& traj, const spaces::AssembledForms& forms);

/// Relative residual of the transposition identity
/// int (u, psi) = <u1, phi(0)> - (u0, phi'(0)) - int int_Gamma0 g . P(phi) n + int <F, phi>.
struct TranspositionTerms {
    double lhs = 0.0;
    double initial_velocity = 0.0;
    double initial_displacement = 0.0;
    double boundary = 0.0;
    double forcing = 0.0;
    double rhs() const { return initial_velocity - initial_displacement - boundary + forcing; }
    double residual() const { return relative_residual(lhs, rhs()); }
};
TranspositionTerms check_transposition_identity(const ElastodynamicsSolver& solver, const ProblemData& data,
                                                const SpaceTimeFn& psi, const spaces::LameParameters& lame);

}  // namespace navtrace::dynamics
