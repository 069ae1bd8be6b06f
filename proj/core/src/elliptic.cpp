#include "navtrace/elliptic.hpp"

#include <algorithm>
#include <cmath>

namespace navtrace::elliptic {

const char* lift_name(LiftKind kind) { return kind == LiftKind::Harmonic ? "harmonic" : "elasticity"; }

HarmonicLift::HarmonicLift(const spaces::FeSpace& space) : space_(&space) {
    laplacian_ = spaces::assemble_scalar_laplacian(space);
    const int ns = space.num_scalar();
    interior_index_.assign(ns, -1);
    std::vector<int> g0_index(ns, -1);
    for (int s = 0; s < ns; ++s) {
        if (space.on_gamma0(s)) {
            g0_index[s] = static_cast<int>(gamma0_nodes_.size());
            gamma0_nodes_.push_back(s);
        } else if (!space.on_gamma1(s)) {
            interior_index_[s] = static_cast<int>(interior_.size());
            interior_.push_back(s);
        }
    }
    std::vector<Eigen::Triplet<double>> tii, tib;
    for (int k = 0; k < laplacian_.outerSize(); ++k)
        for (SpMat::InnerIterator it(laplacian_, k); it; ++it) {
            const int i = interior_index_[it.row()];
            if (i < 0) continue;
            const int j = interior_index_[it.col()];
            if (j >= 0) tii.emplace_back(i, j, it.value());
            else if (g0_index[it.col()] >= 0) tib.emplace_back(i, g0_index[it.col()], it.value());
        }
    SpMat Lii(interior_.size(), interior_.size());
    Lii.setFromTriplets(tii.begin(), tii.end());
    coupling_.resize(interior_.size(), gamma0_nodes_.size());
    coupling_.setFromTriplets(tib.begin(), tib.end());
    solver_.compute(Lii);
    if (solver_.info() != Eigen::Success) throw NumericalError("harmonic lift: singular interior Laplacian");
}

Vector HarmonicLift::lift(const Vector& boundary) const {
    const spaces::FeSpace& V = *space_;
    if (boundary.size() != V.num_dofs()) throw InputError("harmonic lift: size mismatch");
    const int d = V.dim();
    Vector out = Vector::Zero(V.num_dofs());
    Vector gb(gamma0_nodes_.size());
    for (int c = 0; c < d; ++c) {
        for (std::size_t k = 0; k < gamma0_nodes_.size(); ++k) {
            const double v = boundary(V.vdof(gamma0_nodes_[k], c));
            if (!std::isfinite(v)) throw InputError("harmonic lift: non-finite boundary datum");
            gb(k) = v;
            out(V.vdof(gamma0_nodes_[k], c)) = v;
        }
        if (gb.lpNorm<Eigen::Infinity>() == 0.0) continue;
        const Vector wi = solver_.solve(-(coupling_ * gb));
        for (std::size_t k = 0; k < interior_.size(); ++k) out(V.vdof(interior_[k], c)) = wi(k);
    }
    return out;
}

Vector HarmonicLift::lift(const SpaceFn& g) const { return lift(spaces::interpolate(*space_, g)); }

double HarmonicLift::interior_residual(const Vector& w) const {
    const spaces::FeSpace& V = *space_;
    double worst = 0.0;
    Vector ws(V.num_scalar());
    for (int c = 0; c < V.dim(); ++c) {
        for (int s = 0; s < V.num_scalar(); ++s) ws(s) = w(V.vdof(s, c));
        const Vector r = laplacian_ * ws;
        const Vector a = laplacian_.cwiseAbs() * ws.cwiseAbs();
        double rmax = 0.0, amax = 0.0;
        for (int s : interior_) {
            rmax = std::max(rmax, std::abs(r(s)));
            amax = std::max(amax, a(s));
        }
        worst = std::max(worst, rmax / (amax + kResidualGuard));
    }
    return worst;
}

ElasticityLift::ElasticityLift(const spaces::FeSpace& space, const SpMat& stiffness)
    : space_(&space), stiffness_(stiffness) {
    solver_.compute(spaces::restrict_free(space, stiffness));
    if (solver_.info() != Eigen::Success) throw NumericalError("elasticity lift: singular constrained stiffness");
}

Vector ElasticityLift::solve(const Vector& load) const {
    if (load.size() != space_->num_dofs()) throw InputError("elasticity lift: size mismatch");
    return spaces::extend_free(*space_, solver_.solve(-spaces::restrict_free(*space_, load)));
}

Vector ElasticityLift::lift(const Vector& boundary) const {
    const spaces::FeSpace& V = *space_;
    if (boundary.size() != V.num_dofs()) throw InputError("elasticity lift: size mismatch");
    Vector gc = Vector::Zero(V.num_dofs());
    for (int dof : V.constrained()) gc(dof) = boundary(dof);
    const Vector rhs = stiffness_ * gc;
    Vector out = spaces::extend_free(V, solver_.solve(-spaces::restrict_free(V, rhs)));
    for (int dof : V.constrained()) out(dof) = gc(dof);
    return out;
}

RieszMap::RieszMap(const SpMat& gram) : n_(static_cast<int>(gram.rows())) {
    if (gram.rows() != gram.cols()) throw InputError("riesz: Gram matrix is not square");
    llt_.compute(gram);
    if (llt_.info() != Eigen::Success) throw NumericalError("riesz: Gram matrix is not positive definite");
}

Vector RieszMap::representer(const Vector& f) const {
    if (f.size() != n_) throw InputError("riesz: size mismatch");
    return llt_.solve(f);
}

double RieszMap::dual_norm(const Vector& f) const {
    if (f.size() != n_) throw InputError("riesz: size mismatch");
    if (f.squaredNorm() == 0.0) return 0.0;
    return std::sqrt(std::max(0.0, f.dot(llt_.solve(f))));
}

double riesz_dual_norm(const Vector& f, const SpMat& gram) { return RieszMap(gram).dual_norm(f); }

}  // namespace navtrace::elliptic
