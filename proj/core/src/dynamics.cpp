#include "navtrace/dynamics.hpp"

#include "navtrace/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace navtrace::dynamics {

using spaces::FeSpace;

void TimeGrid::validate() const {
    if (!(T > 0.0) || !std::isfinite(T)) throw InputError("time grid: T must be positive");
    if (N < 1) throw InputError("time grid: N must be at least 1");
}

std::vector<Vector> time_derivative(const std::vector<Vector>& f, double dt) {
    const std::size_t n = f.size();
    std::vector<Vector> out(n);
    if (n == 0) return out;
    if (n == 1) {
        out[0] = Vector::Zero(f[0].size());
        return out;
    }
    if (n == 2) {
        out[0] = out[1] = (f[1] - f[0]) / dt;
        return out;
    }
    out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * dt);
    for (std::size_t i = 1; i + 1 < n; ++i) out[i] = (f[i + 1] - f[i - 1]) / (2.0 * dt);
    out[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * dt);
    return out;
}

std::vector<Vector> second_time_derivative(const std::vector<Vector>& f, double dt) {
    const std::size_t n = f.size();
    std::vector<Vector> out(n);
    if (n == 0) return out;
    if (n < 3) {
        for (auto& o : out) o = Vector::Zero(f[0].size());
        return out;
    }
    const double h2 = dt * dt;
    for (std::size_t i = 1; i + 1 < n; ++i) out[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) / h2;
    if (n == 3) {
        out[0] = out[2] = out[1];
        return out;
    }
    out[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h2;
    out[n - 1] = (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) / h2;
    return out;
}

ElastodynamicsSolver::ElastodynamicsSolver(const FeSpace& space, const spaces::AssembledForms& forms, TimeGrid grid,
                                           elliptic::LiftKind lift)
    : space_(&space), forms_(&forms), grid_(grid), lift_kind_(lift) {
    grid_.validate();
    Mff_ = spaces::restrict_free(space, forms.mass);
    Kff_ = spaces::restrict_free(space, forms.stiffness);
    const double c = 0.25 * grid_.dt() * grid_.dt();
    step_solver_.compute(SpMat(Mff_ + c * Kff_));
    if (step_solver_.info() != Eigen::Success) throw NumericalError("time stepper: factorization failed");
    if (lift_kind_ == elliptic::LiftKind::Harmonic)
        harmonic_ = std::make_unique<elliptic::HarmonicLift>(space);
    else
        elastic_ = std::make_unique<elliptic::ElasticityLift>(space, forms.stiffness);
}

Vector ElastodynamicsSolver::lift(const Vector& boundary) const {
    return harmonic_ ? harmonic_->lift(boundary) : elastic_->lift(boundary);
}

std::vector<Vector> ElastodynamicsSolver::lift_samples(const SpaceTimeFn& g) const {
    std::vector<Vector> out(grid_.N + 1);
    for (int n = 0; n <= grid_.N; ++n) {
        const double t = grid_.t(n);
        out[n] = lift(spaces::interpolate(*space_, [&](const Vec3& x) { return g(x, t); }));
    }
    return out;
}

std::vector<Vector> ElastodynamicsSolver::load_samples(const SpaceTimeFn& F) const {
    std::vector<Vector> out(grid_.N + 1);
    for (int n = 0; n <= grid_.N; ++n) out[n] = spaces::assemble_load(*space_, F, grid_.t(n));
    return out;
}

double ElastodynamicsSolver::energy(const Vector& u, const Vector& v) const {
    return 0.5 * v.dot(forms_->mass * v) + 0.5 * u.dot(forms_->stiffness * u);
}

Trajectory ElastodynamicsSolver::integrate(const Vector& u0, const Vector& v0, const std::vector<Vector>& loads,
                                           const std::vector<Vector>& lifts) const {
    const FeSpace& V = *space_;
    const int N = grid_.N;
    const int n = V.num_dofs();
    if (u0.size() != n || v0.size() != n) throw InputError("integrate: initial data size mismatch");
    if (!loads.empty() && static_cast<int>(loads.size()) != N + 1) throw InputError("integrate: grid mismatch (loads)");
    if (!lifts.empty() && static_cast<int>(lifts.size()) != N + 1) throw InputError("integrate: grid mismatch (lifts)");
    const double dt = grid_.dt();
    const double c = 0.25 * dt * dt;

    std::vector<Vector> gdot, gddot;
    if (!lifts.empty()) {
        gdot = time_derivative(lifts, dt);
        gddot = second_time_derivative(lifts, dt);
    }
    auto reduced_load = [&](int k) -> Vector {
        Vector full = loads.empty() ? Vector::Zero(n) : loads[k];
        if (!lifts.empty()) full -= forms_->mass * gddot[k] + forms_->stiffness * lifts[k];
        return spaces::restrict_free(V, full);
    };

    Vector w = spaces::restrict_free(V, lifts.empty() ? u0 : Vector(u0 - lifts[0]));
    Vector wv = spaces::restrict_free(V, lifts.empty() ? v0 : Vector(v0 - gdot[0]));
    Vector r = reduced_load(0);

    Trajectory traj;
    traj.grid = grid_;
    traj.space = space_;
    traj.u.reserve(N + 1);
    traj.v.reserve(N + 1);
    auto record = [&](int k) {
        Vector uf = spaces::extend_free(V, w);
        Vector vf = spaces::extend_free(V, wv);
        if (!lifts.empty()) {
            uf += lifts[k];
            vf += gdot[k];
        }
        if (!uf.allFinite() || !vf.allFinite()) throw NumericalError("integrate: non-finite state");
        traj.energy.push_back(energy(uf, vf));
        traj.u.push_back(std::move(uf));
        traj.v.push_back(std::move(vf));
    };
    record(0);
    for (int k = 0; k < N; ++k) {
        const Vector r1 = reduced_load(k + 1);
        const Vector rhs = Mff_ * (w + dt * wv) - c * (Kff_ * w) + c * (r + r1);
        const Vector w1 = step_solver_.solve(rhs);
        wv = 2.0 * (w1 - w) / dt - wv;
        w = w1;
        r = r1;
        record(k + 1);
    }
    return traj;
}

Trajectory ElastodynamicsSolver::solve_forward(const ProblemData& data) const {
    const FeSpace& V = *space_;
    const int n = V.num_dofs();
    Vector u0 = data.u0_coeffs ? *data.u0_coeffs
                               : (data.u0 ? spaces::interpolate(V, data.u0) : Vector(Vector::Zero(n)));
    Vector u1 = data.u1_coeffs ? *data.u1_coeffs
                               : (data.u1 ? spaces::interpolate(V, data.u1) : Vector(Vector::Zero(n)));
    if (u0.size() != n || u1.size() != n) throw InputError("solve_forward: initial data size mismatch");
    std::vector<Vector> lifts, loads;
    if (data.g) lifts = lift_samples(data.g);
    if (data.compatible) {
        double scale = 1.0, worst = 0.0;
        for (int dof : V.constrained()) {
            const double gv = lifts.empty() ? 0.0 : lifts[0](dof);
            scale = std::max(scale, std::abs(u0(dof)));
            worst = std::max(worst, std::abs(u0(dof) - gv));
        }
        if (worst > 1e-12 * scale) throw InputError("solve_forward: incompatible data, u0 != g(., 0) on Gamma0");
    }
    if (data.F) loads = load_samples(data.F);
    return integrate(u0, u1, loads, lifts);
}

Trajectory reverse(const Trajectory& tr) {
    Trajectory out = tr;
    std::reverse(out.u.begin(), out.u.end());
    std::reverse(out.v.begin(), out.v.end());
    std::reverse(out.energy.begin(), out.energy.end());
    for (auto& v : out.v) v = -v;
    return out;
}

Trajectory ElastodynamicsSolver::solve_backward(const std::vector<Vector>& psi_loads) const {
    if (!psi_loads.empty() && static_cast<int>(psi_loads.size()) != grid_.N + 1)
        throw InputError("solve_backward: grid mismatch");
    std::vector<Vector> rev(psi_loads.rbegin(), psi_loads.rend());
    const Vector z = Vector::Zero(space_->num_dofs());
    return reverse(integrate(z, z, rev, {}));
}

Trajectory ElastodynamicsSolver::solve_backward(const SpaceTimeFn& psi) const {
    return solve_backward(load_samples(psi));
}

Trajectory ElastodynamicsSolver::solve_backward_boundary(const std::vector<Vector>& lifts) const {
    std::vector<Vector> rev(lifts.rbegin(), lifts.rend());
    const Vector z = Vector::Zero(space_->num_dofs());
    return reverse(integrate(z, z, {}, rev));
}

Eigenmodes compute_eigenmodes(const FeSpace& space, const spaces::AssembledForms& forms, int count) {
    const SpMat K = spaces::restrict_free(space, forms.stiffness);
    const SpMat M = spaces::restrict_free(space, forms.mass);
    const auto ep = spaces::smallest_eigenpairs(K, M, count);
    Eigenmodes out;
    for (int i = 0; i < ep.values.size(); ++i) {
        out.omega.push_back(std::sqrt(ep.values(i)));
        Vector w = spaces::extend_free(space, ep.vectors.col(i));
        // deterministic sign: largest-magnitude entry positive
        Eigen::Index imax = 0;
        w.cwiseAbs().maxCoeff(&imax);
        if (w(imax) < 0.0) w = -w;
        out.modes.push_back(std::move(w));
    }
    return out;
}

double trapezoidal_frequency(double omega, double dt) {
    const double a = 0.25 * omega * omega * dt * dt;
    return std::acos((1.0 - a) / (1.0 + a)) / dt;
}

void write_energy_csv(std::ostream& os, const Trajectory& tr, const spaces::AssembledForms& forms) {
    std::ostringstream ss;
    ss << std::setprecision(17) << "step,t,E,v_L2,u_H1\n";
    for (std::size_t n = 0; n < tr.u.size(); ++n) {
        const double vl2 = std::sqrt(std::max(0.0, tr.v[n].dot(forms.mass * tr.v[n])));
        const double uh1 = std::sqrt(std::max(0.0, tr.u[n].dot(forms.gram * tr.u[n])));
        ss << n << ',' << tr.grid.t(static_cast<int>(n)) << ',' << tr.energy[n] << ',' << vl2 << ',' << uh1 << '\n';
    }
    os << ss.str();
}

namespace {

double trapezoid(const std::vector<double>& f, double dt) {
    if (f.size() < 2) return 0.0;
    double s = 0.5 * (f.front() + f.back());
    for (std::size_t i = 1; i + 1 < f.size(); ++i) s += f[i];
    return s * dt;
}

// int_Gamma0 g(x, t) . P(phi) n for one coefficient vector.
double boundary_pairing(const FeSpace& V, const Vector& phi, const SpaceTimeFn& g, double t,
                        const spaces::LameParameters& lame) {
    const auto& mesh = V.mesh();
    const int d = V.dim();
    const auto rule = quadrature::simplex_rule(d - 1, 2 * V.degree() + 2);
    const double ref = d == 2 ? 1.0 : 0.5;
    double s = 0.0;
    for (const auto& f : mesh.facets) {
        if (f.tag != geometry::BoundaryTag::Gamma0) continue;
        const auto& geo = V.cell_geometry(f.cell);
        for (std::size_t q = 0; q < rule.size(); ++q) {
            Vec3 x = mesh.nodes[f.nodes[0]];
            for (int k = 1; k < d; ++k) x += rule.xi[q](k - 1) * (mesh.nodes[f.nodes[k]] - mesh.nodes[f.nodes[0]]);
            const auto pv = spaces::evaluate(V, phi, f.cell, geo.barycentric(x, d));
            const Vec3 traction = spaces::piola_stress(pv.gradient, lame, d) * f.normal;
            s += rule.w[q] * f.measure / ref * g(x, t).head(d).dot(traction.head(d));
        }
    }
    return s;
}

}  // namespace

TranspositionTerms check_transposition_identity(const ElastodynamicsSolver& solver, const ProblemData& data,
                                                const SpaceTimeFn& psi, const spaces::LameParameters& lame) {
    const FeSpace& V = solver.space();
    const auto& forms = solver.forms();
    const TimeGrid& grid = solver.grid();
    const int n = V.num_dofs();
    const Trajectory u = solver.solve_forward(data);
    const std::vector<Vector> psi_loads = solver.load_samples(psi);
    const Trajectory phi = solver.solve_backward(psi_loads);

    TranspositionTerms t;
    std::vector<double> lhs(grid.N + 1), bnd(grid.N + 1, 0.0), frc(grid.N + 1, 0.0);
    std::vector<Vector> F_loads;
    if (data.F) F_loads = solver.load_samples(data.F);
    for (int k = 0; k <= grid.N; ++k) {
        lhs[k] = u.u[k].dot(psi_loads[k]);
        if (data.g) bnd[k] = boundary_pairing(V, phi.u[k], data.g, grid.t(k), lame);
        if (data.F) frc[k] = F_loads[k].dot(phi.u[k]);
    }
    const double dt = grid.dt();
    t.lhs = trapezoid(lhs, dt);
    t.boundary = trapezoid(bnd, dt);
    t.forcing = trapezoid(frc, dt);
    const Vector u0 = data.u0_coeffs ? *data.u0_coeffs
                                     : (data.u0 ? spaces::interpolate(V, data.u0) : Vector(Vector::Zero(n)));
    const Vector u1 = data.u1_coeffs ? *data.u1_coeffs
                                     : (data.u1 ? spaces::interpolate(V, data.u1) : Vector(Vector::Zero(n)));
    t.initial_velocity = u1.dot(forms.mass * phi.u[0]);
    t.initial_displacement = u0.dot(forms.mass * phi.v[0]);
    return t;
}

}  // namespace navtrace::dynamics
