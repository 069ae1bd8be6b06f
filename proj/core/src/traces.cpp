#include "navtrace/traces.hpp"

#include "navtrace/quadrature.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace navtrace::traces {

using geometry::BoundaryTag;

// ---------------------------------------------------------------------------
// Boundary quadrature
// ---------------------------------------------------------------------------

namespace {

// Derivatives of the Lagrange basis through nodes x at each node: D(q, k) = L_k'(x_q).
Eigen::MatrixXd lagrange_derivatives(const std::vector<double>& x) {
    const int n = static_cast<int>(x.size());
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
    for (int k = 0; k < n; ++k) {
        for (int q = 0; q < n; ++q) {
            double s = 0.0;
            for (int m = 0; m < n; ++m) {
                if (m == k) continue;
                double prod = 1.0 / (x[k] - x[m]);
                for (int j = 0; j < n; ++j)
                    if (j != k && j != m) prod *= (x[q] - x[j]) / (x[k] - x[j]);
                s += prod;
            }
            D(q, k) = s;
        }
    }
    return D;
}

}  // namespace

BoundaryQuadrature::BoundaryQuadrature(const spaces::FeSpace& space, BoundaryTag tag, int degree)
    : space_(&space), tag_(tag) {
    const auto& mesh = space.mesh();
    const int d = space.dim();
    const auto rule = quadrature::simplex_rule(d - 1, degree);
    npf_ = static_cast<int>(rule.size());
    const double ref = d == 2 ? 1.0 : 0.5;

    Eigen::MatrixXd Dxi;  // 2D: npf x npf
    Eigen::MatrixXd P, D1, D2;  // 3D least-squares fit
    if (d == 2) {
        std::vector<double> xs(npf_);
        for (int q = 0; q < npf_; ++q) xs[q] = rule.xi[q](0);
        Dxi = npf_ > 1 ? lagrange_derivatives(xs) : Eigen::MatrixXd::Zero(1, 1);
    } else {
        // monomials 1, a, b, a^2, ab, b^2 (or the linear subset)
        const int nm = npf_ >= 6 ? 6 : (npf_ >= 3 ? 3 : 1);
        Eigen::MatrixXd Vm(npf_, nm);
        D1 = Eigen::MatrixXd::Zero(npf_, nm);
        D2 = Eigen::MatrixXd::Zero(npf_, nm);
        for (int q = 0; q < npf_; ++q) {
            const double a = rule.xi[q](0), b = rule.xi[q](1);
            const double mono[6] = {1, a, b, a * a, a * b, b * b};
            for (int m = 0; m < nm; ++m) Vm(q, m) = mono[m];
            if (nm >= 3) {
                D1(q, 1) = 1.0;
                D2(q, 2) = 1.0;
            }
            if (nm == 6) {
                D1(q, 3) = 2 * a;
                D1(q, 4) = b;
                D2(q, 4) = a;
                D2(q, 5) = 2 * b;
            }
        }
        P = (Vm.transpose() * Vm).ldlt().solve(Vm.transpose());
    }

    for (std::size_t fi = 0; fi < mesh.facets.size(); ++fi) {
        const auto& f = mesh.facets[fi];
        if (f.tag != tag) continue;
        facets_.push_back(static_cast<int>(fi));
        const auto& geo = space.cell_geometry(f.cell);
        const Vec3 a = mesh.nodes[f.nodes[0]];
        for (int q = 0; q < npf_; ++q) {
            BoundaryPoint bp;
            bp.facet = static_cast<int>(fi);
            bp.cell = f.cell;
            bp.x = a;
            double s = 0.0;
            for (int k = 1; k < d; ++k) {
                bp.x += rule.xi[q](k - 1) * (mesh.nodes[f.nodes[k]] - a);
                bp.facet_lambda[k] = rule.xi[q](k - 1);
                s += rule.xi[q](k - 1);
            }
            bp.facet_lambda[0] = 1.0 - s;
            bp.normal = f.normal;
            bp.weight = rule.w[q] * f.measure / ref;
            bp.lambda = geo.barycentric(bp.x, d);
            points_.push_back(bp);
        }
        Eigen::MatrixXd G = Eigen::MatrixXd::Zero(3 * npf_, npf_);
        if (d == 2) {
            const Vec3 e = mesh.nodes[f.nodes[1]] - a;
            const double len = e.norm();
            const Vec3 t = e / len;
            for (int q = 0; q < npf_; ++q)
                for (int k = 0; k < npf_; ++k)
                    for (int i = 0; i < 3; ++i) G(3 * q + i, k) = t(i) * Dxi(q, k) / len;
        } else {
            Eigen::Matrix<double, 3, 2> J;
            J.col(0) = mesh.nodes[f.nodes[1]] - a;
            J.col(1) = mesh.nodes[f.nodes[2]] - a;
            const Eigen::Matrix<double, 3, 2> Jp = J * (J.transpose() * J).inverse();
            const Eigen::MatrixXd G1 = D1 * P, G2 = D2 * P;  // npf x npf
            for (int q = 0; q < npf_; ++q)
                for (int k = 0; k < npf_; ++k) {
                    const Vec3 g = Jp.col(0) * G1(q, k) + Jp.col(1) * G2(q, k);
                    for (int i = 0; i < 3; ++i) G(3 * q + i, k) = g(i);
                }
        }
        grad_ops_.push_back(std::move(G));
    }
}

double BoundaryQuadrature::measure() const {
    double s = 0.0;
    for (const auto& p : points_) s += p.weight;
    return s;
}

Vec3 BoundaryQuadrature::surface_gradient(std::size_t p, const double* vals, std::size_t stride) const {
    const std::size_t f = p / npf_, q = p % npf_;
    const Eigen::MatrixXd& G = grad_ops_[f];
    Vec3 g = Vec3::Zero();
    const std::size_t base = f * npf_;
    for (int k = 0; k < npf_; ++k) {
        const double v = vals[(base + k) * stride];
        for (int i = 0; i < 3; ++i) g(i) += G(3 * q + i, k) * v;
    }
    return g;
}

// ---------------------------------------------------------------------------
// Traces
// ---------------------------------------------------------------------------

namespace {

BoundaryTrace stress_of(const std::vector<Vector>& fields, const dynamics::TimeGrid& grid,
                        const spaces::LameParameters& lame, const BoundaryQuadrature& quad) {
    BoundaryTrace tr;
    tr.quad = &quad;
    tr.grid = grid;
    const auto& V = quad.space();
    const int d = V.dim();
    tr.values.resize(fields.size());
    for (std::size_t n = 0; n < fields.size(); ++n) {
        auto& row = tr.values[n];
        row.resize(quad.size());
        for (std::size_t p = 0; p < quad.size(); ++p) {
            const auto& bp = quad.points()[p];
            const auto pv = spaces::evaluate(V, fields[n], bp.cell, bp.lambda);
            row[p] = spaces::piola_stress(pv.gradient, lame, d) * bp.normal;
        }
    }
    return tr;
}

double trapezoid(const std::vector<double>& f, double dt) {
    if (f.size() < 2) return 0.0;
    double s = 0.5 * (f.front() + f.back());
    for (std::size_t i = 1; i + 1 < f.size(); ++i) s += f[i];
    return s * dt;
}

}  // namespace

BoundaryTrace stress_vector_trace(const dynamics::Trajectory& traj, const spaces::LameParameters& lame,
                                  const BoundaryQuadrature& quad) {
    return stress_of(traj.u, traj.grid, lame, quad);
}

BoundaryTrace stress_velocity_trace(const dynamics::Trajectory& traj, const spaces::LameParameters& lame,
                                    const BoundaryQuadrature& quad) {
    return stress_of(traj.v, traj.grid, lame, quad);
}

BoundaryTrace sample_trace(const SpaceTimeFn& f, const BoundaryQuadrature& quad, const dynamics::TimeGrid& grid) {
    BoundaryTrace tr;
    tr.quad = &quad;
    tr.grid = grid;
    const int d = quad.space().dim();
    tr.values.resize(grid.N + 1);
    for (int n = 0; n <= grid.N; ++n) {
        tr.values[n].resize(quad.size());
        for (std::size_t p = 0; p < quad.size(); ++p) {
            Vec3 v = f(quad.points()[p].x, grid.t(n));
            for (int i = d; i < 3; ++i) v(i) = 0.0;
            tr.values[n][p] = v;
        }
    }
    return tr;
}

BoundaryTrace time_derivative(const BoundaryTrace& trace) {
    std::vector<Vector> flat(trace.values.size());
    const std::size_t np = trace.quad->size();
    for (std::size_t n = 0; n < flat.size(); ++n) {
        flat[n].resize(3 * np);
        for (std::size_t p = 0; p < np; ++p) flat[n].segment<3>(3 * p) = trace.values[n][p];
    }
    const auto d = dynamics::time_derivative(flat, trace.grid.dt());
    BoundaryTrace out = trace;
    for (std::size_t n = 0; n < flat.size(); ++n)
        for (std::size_t p = 0; p < np; ++p) out.values[n][p] = d[n].segment<3>(3 * p);
    return out;
}

// ---------------------------------------------------------------------------
// Norms
// ---------------------------------------------------------------------------

double l2_snapshot(const BoundaryQuadrature& quad, const std::vector<Vec3>& values) {
    double s = 0.0;
    for (std::size_t p = 0; p < quad.size(); ++p) s += quad.points()[p].weight * values[p].squaredNorm();
    return std::sqrt(s);
}

double h1_seminorm_sq_snapshot(const BoundaryQuadrature& quad, const std::vector<Vec3>& values) {
    const int d = quad.space().dim();
    if (quad.num_facets() < 8) throw InputError("tangential H1 norm: boundary too coarse (need >= 8 facets)");
    geometry::TangentialFrames frames{d};
    double s = 0.0;
    for (std::size_t p = 0; p < quad.size(); ++p) {
        const auto& bp = quad.points()[p];
        for (int c = 0; c < d; ++c) {
            const Vec3 g = quad.surface_gradient(p, values[0].data() + c, 3);
            double acc = 0.0;
            if (d == 2) {
                const double db = frames.dominant_tangents(bp.x)[0].dot(g);
                acc = db * db;
            } else {
                for (int chart = 0; chart < 2; ++chart) {
                    const double w = frames.chart_weight(chart, bp.x);
                    if (w == 0.0) continue;
                    const auto t = frames.tangents(chart, bp.x);
                    acc += w * (std::pow(t[0].dot(g), 2) + std::pow(t[1].dot(g), 2));
                }
            }
            s += bp.weight * acc;
        }
    }
    return s;
}

double norm_H1_snapshot(const BoundaryQuadrature& quad, const std::vector<Vec3>& values) {
    const double l2 = l2_snapshot(quad, values);
    return std::sqrt(l2 * l2 + h1_seminorm_sq_snapshot(quad, values));
}

double hs_seminorm_sq_snapshot(const BoundaryQuadrature& quad, const std::vector<Vec3>& values, double s) {
    if (!(s > 0.0 && s < 1.0)) throw InputError("fractional norm: s must lie in (0, 1)");
    const int d = quad.space().dim();
    const double expo = 0.5 * (d - 1 + 2.0 * s);  // applied to |x - y|^2
    const auto& pts = quad.points();
    double total = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        double row = 0.0;
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            if (pts[i].facet == pts[j].facet) continue;
            const double r2 = (pts[i].x - pts[j].x).squaredNorm();
            row += pts[j].weight * (values[i] - values[j]).squaredNorm() / std::pow(r2, expo);
        }
        total += pts[i].weight * row;
    }
    return 2.0 * total;
}

double norm_Hs_gamma0(const BoundaryQuadrature& quad, const std::vector<Vec3>& values, double s) {
    const double l2 = l2_snapshot(quad, values);
    return std::sqrt(l2 * l2 + hs_seminorm_sq_snapshot(quad, values, s));
}

double norm_L2_gamma0(const BoundaryTrace& trace) {
    std::vector<double> sq(trace.values.size());
    for (std::size_t n = 0; n < sq.size(); ++n) sq[n] = std::pow(l2_snapshot(*trace.quad, trace.values[n]), 2);
    return std::sqrt(trapezoid(sq, trace.grid.dt()));
}

double norm_H1_gamma0(const BoundaryTrace& trace) {
    std::vector<double> sq(trace.values.size());
    for (std::size_t n = 0; n < sq.size(); ++n) sq[n] = std::pow(norm_H1_snapshot(*trace.quad, trace.values[n]), 2);
    return std::sqrt(trapezoid(sq, trace.grid.dt()));
}

double norm_H1T_L2G0(const BoundaryTrace& trace) {
    const double a = norm_L2_gamma0(trace), b = norm_L2_gamma0(time_derivative(trace));
    return std::sqrt(a * a + b * b);
}

// ---------------------------------------------------------------------------
// H^{1*} dual norm
// ---------------------------------------------------------------------------

H1StarDual::H1StarDual(const BoundaryQuadrature& quad, const dynamics::TimeGrid& grid) : quad_(&quad), grid_(grid) {
    grid_.validate();
    if (grid_.N < 2) throw InputError("H1* norm: need at least two time steps");
    const auto& mesh = quad.space().mesh();
    const int d = quad.space().dim();
    vertex_index_.assign(mesh.nodes.size(), -1);
    for (int fi : quad.facets())
        for (int k = 0; k < d; ++k) vertex_index_[mesh.facets[fi].nodes[k]] = 0;
    for (std::size_t n = 0; n < mesh.nodes.size(); ++n)
        if (vertex_index_[n] == 0) {
            vertex_index_[n] = static_cast<int>(vertices_.size());
            vertices_.push_back(static_cast<int>(n));
        }
    const int npf = quad.points_per_facet();
    point_basis_.resize(quad.size());
    for (std::size_t p = 0; p < quad.size(); ++p) {
        const auto& f = mesh.facets[quad.points()[p].facet];
        for (int k = 0; k < d; ++k)
            point_basis_[p].emplace_back(vertex_index_[f.nodes[k]], quad.points()[p].facet_lambda[k]);
    }
    // Spatial mass and tangential stiffness on Gamma0.
    const int nv = num_vertices();
    std::vector<Eigen::Triplet<double>> tm, ts;
    std::vector<double> vals(quad.size(), 0.0);
    for (std::size_t f = 0; f < quad.num_facets(); ++f) {
        const std::size_t base = f * npf;
        const auto& fac = mesh.facets[quad.facets()[f]];
        std::vector<std::vector<Vec3>> grads(d);
        for (int a = 0; a < d; ++a) {
            for (int q = 0; q < npf; ++q) vals[base + q] = quad.points()[base + q].facet_lambda[a];
            for (int q = 0; q < npf; ++q) grads[a].push_back(quad.surface_gradient(base + q, vals.data()));
        }
        for (int q = 0; q < npf; ++q) {
            const auto& bp = quad.points()[base + q];
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b) {
                    const int ia = vertex_index_[fac.nodes[a]], ib = vertex_index_[fac.nodes[b]];
                    tm.emplace_back(ia, ib, bp.weight * bp.facet_lambda[a] * bp.facet_lambda[b]);
                    ts.emplace_back(ia, ib, bp.weight * grads[a][q].dot(grads[b][q]));
                }
        }
    }
    SpMat Ms(nv, nv), Ss(nv, nv);
    Ms.setFromTriplets(tm.begin(), tm.end());
    Ss.setFromTriplets(ts.begin(), ts.end());
    const SpMat A = Ms + Ss;
    const int nt = num_times();
    const double dt = grid_.dt();
    std::vector<Eigen::Triplet<double>> tg;
    auto add_block = [&](int k, int l, double mt, double st) {
        for (int o = 0; o < A.outerSize(); ++o) {
            for (SpMat::InnerIterator it(A, o); it; ++it)
                for (int c = 0; c < d; ++c)
                    tg.emplace_back(index(k, static_cast<int>(it.row()), c), index(l, static_cast<int>(it.col()), c),
                                    mt * it.value());
            for (SpMat::InnerIterator it(Ms, o); it; ++it)
                for (int c = 0; c < d; ++c)
                    tg.emplace_back(index(k, static_cast<int>(it.row()), c), index(l, static_cast<int>(it.col()), c),
                                    st * it.value());
        }
    };
    for (int k = 0; k < nt; ++k) {
        add_block(k, k, 2.0 * dt / 3.0, 2.0 / dt);
        if (k + 1 < nt) {
            add_block(k, k + 1, dt / 6.0, -1.0 / dt);
            add_block(k + 1, k, dt / 6.0, -1.0 / dt);
        }
    }
    gram_.resize(size(), size());
    gram_.setFromTriplets(tg.begin(), tg.end());
    riesz_ = std::make_unique<elliptic::RieszMap>(gram_);
}

Vector H1StarDual::load(const BoundaryTrace& trace) const {
    if (!(trace.grid == grid_)) throw InputError("H1* norm: grid mismatch");
    if (trace.quad != quad_) throw InputError("H1* norm: trace from a different boundary quadrature");
    Vector f = Vector::Zero(size());
    const double dt = grid_.dt();
    const int d = dim();
    for (int k = 0; k < num_times(); ++k) {
        const auto& row = trace.values[k + 1];
        for (std::size_t p = 0; p < quad_->size(); ++p) {
            const double w = dt * quad_->points()[p].weight;
            for (const auto& [a, phi] : point_basis_[p])
                for (int c = 0; c < d; ++c) f(index(k, a, c)) += w * phi * row[p](c);
        }
    }
    return f;
}

double H1StarDual::dual_norm(const Vector& f) const { return riesz_->dual_norm(f); }

double H1StarDual::primal_norm(const Vector& w) const { return std::sqrt(std::max(0.0, w.dot(gram_ * w))); }

double H1StarDual::norm(const BoundaryTrace& trace) const { return dual_norm(load(trace)); }

Vector H1StarDual::boundary_datum(int vertex, int comp) const {
    const auto& V = quad_->space();
    const auto& mesh = V.mesh();
    const int d = V.dim();
    const int node = vertices_.at(vertex);
    Vector out = Vector::Zero(V.num_dofs());
    for (int fi : quad_->facets()) {
        const auto& f = mesh.facets[fi];
        const auto& fd = V.facet_dofs(fi);
        for (int k = 0; k < d; ++k)
            if (f.nodes[k] == node) out(V.vdof(fd[k], comp)) = 1.0;
        if (V.degree() == 2) {
            int e = d;
            for (int a = 0; a < d; ++a)
                for (int b = a + 1; b < d; ++b, ++e)
                    if (f.nodes[a] == node || f.nodes[b] == node) out(V.vdof(fd[e], comp)) = 0.5;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Bochner norms and reports
// ---------------------------------------------------------------------------

SeriesNorms bochner(const std::vector<double>& x, const dynamics::TimeGrid& grid) {
    SeriesNorms s;
    std::vector<double> sq(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        sq[i] = x[i] * x[i];
        s.Linf = std::max(s.Linf, std::abs(x[i]));
    }
    s.L1 = trapezoid(x, grid.dt());
    s.L2 = std::sqrt(trapezoid(sq, grid.dt()));
    return s;
}

std::vector<double> norm_series(const std::vector<Vector>& fields, const SpMat& gram) {
    std::vector<double> out(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i) out[i] = std::sqrt(std::max(0.0, fields[i].dot(gram * fields[i])));
    return out;
}

double hk_time_norm(const std::vector<Vector>& fields, const SpMat& gram, const dynamics::TimeGrid& grid, int k) {
    double total = 0.0;
    std::vector<Vector> cur = fields;
    for (int j = 0; j <= k; ++j) {
        const double l2 = bochner(norm_series(cur, gram), grid).L2;
        total += l2 * l2;
        if (j < k) cur = dynamics::time_derivative(cur, grid.dt());
    }
    return std::sqrt(total);
}

const std::vector<std::string>& NormReport::names() {
    static const std::vector<std::string> n = {
        "H1T_L2G0", "H1star", "Hhalf_G0_final", "L1T_L2", "L2T_H1", "L2T_H1G0", "L2T_L2",
        "L2T_L2G0", "LinfT_H1", "LinfT_L2", "LinfT_L2_velocity", "energy_drift"};
    return n;
}

void NormReport::set(const std::string& name, double value) {
    const auto& n = names();
    if (std::find(n.begin(), n.end(), name) == n.end()) throw InputError("norm report: unknown norm name '" + name + "'");
    if (!std::isfinite(value) || value < 0.0) throw NumericalError("norm report: invalid value for " + name);
    values_[name] = value;
}

double NormReport::get(const std::string& name) const {
    const auto it = values_.find(name);
    if (it == values_.end()) throw InputError("norm report: missing " + name);
    return it->second;
}

void NormReport::set_meta(const std::string& key, double value) {
    std::ostringstream ss;
    ss << std::setprecision(17) << value;
    meta_[key] = ss.str();
}

std::string NormReport::to_json() const {
    nlohmann::json j;
    j["norms"] = values_;
    j["meta"] = meta_;
    return j.dump(2);
}

std::string NormReport::to_csv() const {
    std::ostringstream ss;
    ss << std::setprecision(17) << "name,value\n";
    for (const auto& [k, v] : meta_) ss << "meta." << k << ',' << v << '\n';
    for (const auto& [k, v] : values_) ss << k << ',' << v << '\n';
    return ss.str();
}

NormReport trajectory_report(const dynamics::Trajectory& traj, const spaces::AssembledForms& forms,
                             const spaces::LameParameters& lame, const BoundaryQuadrature& quad) {
    NormReport r;
    const auto& grid = traj.grid;
    const auto uh1 = bochner(norm_series(traj.u, forms.gram), grid);
    const auto ul2 = bochner(norm_series(traj.u, forms.mass), grid);
    const auto vl2 = bochner(norm_series(traj.v, forms.mass), grid);
    r.set("LinfT_H1", uh1.Linf);
    r.set("L2T_H1", uh1.L2);
    r.set("LinfT_L2", ul2.Linf);
    r.set("L2T_L2", ul2.L2);
    r.set("L1T_L2", ul2.L1);
    r.set("LinfT_L2_velocity", vl2.Linf);
    double drift = 0.0;
    for (double e : traj.energy) drift = std::max(drift, std::abs(e - traj.energy.front()));
    r.set("energy_drift", drift);
    const BoundaryTrace tr = stress_vector_trace(traj, lame, quad);
    r.set("L2T_L2G0", norm_L2_gamma0(tr));
    r.set("L2T_H1G0", norm_H1_gamma0(tr));
    r.set("H1T_L2G0", norm_H1T_L2G0(tr));
    r.set("Hhalf_G0_final", norm_Hs_gamma0(quad, tr.values.back(), 0.5));
    if (grid.N >= 2) r.set("H1star", H1StarDual(quad, grid).norm(tr));
    r.set_meta("degree", traj.space->degree());
    r.set_meta("level", traj.space->mesh().level);
    r.set_meta("T", grid.T);
    r.set_meta("N", grid.N);
    r.set_meta("mu", lame.mu);
    r.set_meta("lambda", lame.lambda);
    r.set_meta("boundary_points_per_facet", quad.points_per_facet());
    return r;
}

void write_trace_csv(std::ostream& os, const BoundaryTrace& trace) {
    const int d = trace.quad->space().dim();
    std::ostringstream ss;
    ss << std::setprecision(17) << "step,facet,point";
    for (int c = 0; c < d; ++c) ss << ",c" << c;
    ss << '\n';
    const int npf = trace.quad->points_per_facet();
    for (std::size_t n = 0; n < trace.values.size(); ++n)
        for (std::size_t p = 0; p < trace.quad->size(); ++p) {
            ss << n << ',' << trace.quad->points()[p].facet << ',' << p % npf;
            for (int c = 0; c < d; ++c) ss << ',' << trace.values[n][p](c);
            ss << '\n';
        }
    os << ss.str();
}

}  // namespace navtrace::traces
