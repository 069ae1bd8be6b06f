#include "navtrace/spaces.hpp"

#include "navtrace/rng.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

namespace navtrace::spaces {

using geometry::BoundaryTag;
using geometry::Mesh;

void LameParameters::validate() const {
    if (!(mu > 0.0) || !std::isfinite(mu)) throw InputError("mu must be positive");
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InputError("lambda must be positive");
}

Mat3 piola_stress(const Mat3& grad, const LameParameters& lame, int dim) {
    Mat3 P = Mat3::Zero();
    double div = 0.0;
    for (int i = 0; i < dim; ++i) div += grad(i, i);
    for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) P(i, j) = lame.mu * (grad(i, j) + grad(j, i));
        P(i, i) += lame.lambda * div;
    }
    return P;
}

// ---------------------------------------------------------------------------
// Cell geometry and local basis
// ---------------------------------------------------------------------------

std::array<double, 4> CellGeometry::barycentric(const Vec3& x, int dim) const {
    const Vec3 xi = inverse_jacobian * (x - origin);
    std::array<double, 4> lam{};
    double s = 0.0;
    for (int i = 0; i < dim; ++i) {
        lam[i + 1] = xi(i);
        s += xi(i);
    }
    lam[0] = 1.0 - s;
    return lam;
}

Vec3 CellGeometry::reference_to_physical(const Vec3& xi, const std::array<Vec3, 4>& v, int dim) const {
    Vec3 x = v[0];
    for (int i = 0; i < dim; ++i) x += xi(i) * (v[i + 1] - v[0]);
    return x;
}

namespace {

CellGeometry make_cell_geometry(const Mesh& mesh, std::size_t c) {
    const int d = mesh.dimension;
    CellGeometry g;
    const auto& cell = mesh.cells[c];
    g.origin = mesh.nodes[cell[0]];
    Mat3 J = Mat3::Identity();
    for (int i = 0; i < d; ++i) J.col(i).head(d) = (mesh.nodes[cell[i + 1]] - g.origin).head(d);
    Mat3 Jinv = Mat3::Zero();
    if (d == 2) {
        const Eigen::Matrix2d J2 = J.topLeftCorner<2, 2>();
        Jinv.topLeftCorner<2, 2>() = J2.inverse();
        g.volume = std::abs(J2.determinant()) / 2.0;
    } else {
        Jinv = J.inverse();
        g.volume = std::abs(J.determinant()) / 6.0;
    }
    g.inverse_jacobian = Jinv;
    Vec3 sum = Vec3::Zero();
    for (int i = 0; i < d; ++i) {
        g.grad_lambda[i + 1] = Jinv.row(i).transpose();
        sum += g.grad_lambda[i + 1];
    }
    g.grad_lambda[0] = -sum;
    return g;
}

const int kTriEdges[3][2] = {{0, 1}, {1, 2}, {0, 2}};
const int kTetEdges[6][2] = {{0, 1}, {1, 2}, {0, 2}, {0, 3}, {1, 3}, {2, 3}};

}  // namespace

int LocalBasis::size() const {
    if (degree == 1) return dim + 1;
    return dim == 2 ? 6 : 10;
}

std::array<int, 2> LocalBasis::edge(int dim, int e) {
    if (dim == 2) return {kTriEdges[e][0], kTriEdges[e][1]};
    return {kTetEdges[e][0], kTetEdges[e][1]};
}

void LocalBasis::values(const std::array<double, 4>& lam, double* N) const {
    const int nv = dim + 1;
    if (degree == 1) {
        for (int i = 0; i < nv; ++i) N[i] = lam[i];
        return;
    }
    for (int i = 0; i < nv; ++i) N[i] = lam[i] * (2.0 * lam[i] - 1.0);
    const int ne = dim == 2 ? 3 : 6;
    for (int e = 0; e < ne; ++e) {
        const auto p = edge(dim, e);
        N[nv + e] = 4.0 * lam[p[0]] * lam[p[1]];
    }
}

void LocalBasis::gradients(const std::array<double, 4>& lam, const std::array<Vec3, 4>& glam,
                           Vec3* dN) const {
    const int nv = dim + 1;
    if (degree == 1) {
        for (int i = 0; i < nv; ++i) dN[i] = glam[i];
        return;
    }
    for (int i = 0; i < nv; ++i) dN[i] = (4.0 * lam[i] - 1.0) * glam[i];
    const int ne = dim == 2 ? 3 : 6;
    for (int e = 0; e < ne; ++e) {
        const auto p = edge(dim, e);
        dN[nv + e] = 4.0 * (lam[p[0]] * glam[p[1]] + lam[p[1]] * glam[p[0]]);
    }
}

void LocalBasis::hessians(const std::array<Vec3, 4>& glam, Mat3* HN) const {
    const int n = size();
    if (degree == 1) {
        for (int i = 0; i < n; ++i) HN[i].setZero();
        return;
    }
    const int nv = dim + 1;
    for (int i = 0; i < nv; ++i) HN[i] = 4.0 * glam[i] * glam[i].transpose();
    const int ne = dim == 2 ? 3 : 6;
    for (int e = 0; e < ne; ++e) {
        const auto p = edge(dim, e);
        HN[nv + e] = 4.0 * (glam[p[0]] * glam[p[1]].transpose() + glam[p[1]] * glam[p[0]].transpose());
    }
}

// ---------------------------------------------------------------------------
// FeSpace
// ---------------------------------------------------------------------------

FeSpace::FeSpace(const Mesh& mesh, int degree) : mesh_(&mesh), degree_(degree), dim_(mesh.dimension) {
    if (degree != 1 && degree != 2) throw InputError("FeSpace: degree must be 1 or 2");
    if (dim_ != 2 && dim_ != 3) throw InputError("FeSpace: dimension must be 2 or 3");
    LocalBasis lb{dim_, degree_};
    nloc_ = lb.size();
    const int nv = dim_ + 1;
    const std::size_t nc = mesh.cells.size();

    nodes_ = mesh.nodes;
    cell_dofs_.assign(nc * nloc_, -1);
    std::map<std::pair<int, int>, int> edge_id;
    for (std::size_t c = 0; c < nc; ++c) {
        const auto& cell = mesh.cells[c];
        for (int i = 0; i < nv; ++i) cell_dofs_[c * nloc_ + i] = cell[i];
        if (degree_ == 2) {
            const int ne = dim_ == 2 ? 3 : 6;
            for (int e = 0; e < ne; ++e) {
                const auto p = LocalBasis::edge(dim_, e);
                int a = cell[p[0]], b = cell[p[1]];
                if (a > b) std::swap(a, b);
                auto it = edge_id.find({a, b});
                int id;
                if (it == edge_id.end()) {
                    id = static_cast<int>(nodes_.size());
                    edge_id.emplace(std::make_pair(a, b), id);
                    nodes_.push_back(0.5 * (mesh.nodes[a] + mesh.nodes[b]));
                } else {
                    id = it->second;
                }
                cell_dofs_[c * nloc_ + nv + e] = id;
            }
        }
    }

    geometry_.reserve(nc);
    for (std::size_t c = 0; c < nc; ++c) geometry_.push_back(make_cell_geometry(mesh, c));

    const int ns = num_scalar();
    on_gamma0_.assign(ns, 0);
    on_gamma1_.assign(ns, 0);
    facet_dofs_.resize(mesh.facets.size());
    for (std::size_t f = 0; f < mesh.facets.size(); ++f) {
        const auto& fc = mesh.facets[f];
        std::vector<int>& fd = facet_dofs_[f];
        for (int k = 0; k < dim_; ++k) fd.push_back(fc.nodes[k]);
        if (degree_ == 2) {
            for (int a = 0; a < dim_; ++a) {
                for (int b = a + 1; b < dim_; ++b) {
                    int x = fc.nodes[a], y = fc.nodes[b];
                    if (x > y) std::swap(x, y);
                    fd.push_back(edge_id.at({x, y}));
                }
            }
        }
        auto& flag = fc.tag == BoundaryTag::Gamma0 ? on_gamma0_ : on_gamma1_;
        for (int s : fd) flag[s] = 1;
    }

    free_index_.assign(num_dofs(), -1);
    for (int s = 0; s < ns; ++s) {
        for (int c = 0; c < dim_; ++c) {
            const int dof = vdof(s, c);
            if (on_gamma0_[s]) {
                constrained_.push_back(dof);
            } else {
                free_index_[dof] = static_cast<int>(free_.size());
                free_.push_back(dof);
            }
        }
    }
}

std::vector<int> FeSpace::gamma1_dofs() const {
    std::vector<int> out;
    for (int s = 0; s < num_scalar(); ++s)
        if (on_gamma1_[s])
            for (int c = 0; c < dim_; ++c) out.push_back(vdof(s, c));
    return out;
}

int FeSpace::locate(const Vec3& x, std::array<double, 4>* lambda) const {
    int best = -1;
    double best_min = -1e300;
    std::array<double, 4> best_lam{};
    for (std::size_t c = 0; c < geometry_.size(); ++c) {
        const auto lam = geometry_[c].barycentric(x, dim_);
        double mn = lam[0];
        for (int i = 1; i <= dim_; ++i) mn = std::min(mn, lam[i]);
        if (mn > best_min) {
            best_min = mn;
            best = static_cast<int>(c);
            best_lam = lam;
        }
        if (mn >= 0.0) break;
    }
    if (best_min < -1e-10) return -1;
    if (lambda) *lambda = best_lam;
    return best;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

PointValue evaluate(const FeSpace& space, const Vector& u, std::size_t cell, const std::array<double, 4>& lam) {
    const int d = space.dim();
    LocalBasis lb{d, space.degree()};
    double N[10];
    Vec3 dN[10];
    lb.values(lam, N);
    lb.gradients(lam, space.cell_geometry(cell).grad_lambda, dN);
    const int* dofs = space.cell_dofs(cell);
    PointValue pv;
    for (int a = 0; a < lb.size(); ++a) {
        for (int c = 0; c < d; ++c) {
            const double coef = u(space.vdof(dofs[a], c));
            pv.value(c) += coef * N[a];
            pv.gradient.row(c) += coef * dN[a].transpose();
        }
    }
    return pv;
}

double hessian_norm_sq(const FeSpace& space, const Vector& u, std::size_t cell) {
    const int d = space.dim();
    LocalBasis lb{d, space.degree()};
    Mat3 H[10];
    lb.hessians(space.cell_geometry(cell).grad_lambda, H);
    const int* dofs = space.cell_dofs(cell);
    double s = 0.0;
    for (int c = 0; c < d; ++c) {
        Mat3 Hc = Mat3::Zero();
        for (int a = 0; a < lb.size(); ++a) Hc += u(space.vdof(dofs[a], c)) * H[a];
        s += Hc.squaredNorm();
    }
    return s;
}

Mat3 apply_piola_stress(const Field& u, const LameParameters& lame, const Vec3& point) {
    if (!u.space) throw InputError("apply_piola_stress: field without space");
    if (u.coeffs.size() != u.space->num_dofs()) throw InputError("apply_piola_stress: coefficient size mismatch");
    std::array<double, 4> lam{};
    const int c = u.space->locate(point, &lam);
    if (c < 0) throw InputError("apply_piola_stress: point outside the mesh");
    const PointValue pv = evaluate(*u.space, u.coeffs, c, lam);
    return piola_stress(pv.gradient, lame, u.space->dim());
}

Vector build_multiplier_field(const FeSpace& space) {
    const geometry::Mesh& mesh = space.mesh();
    geometry::MultiplierProfile h{space.dim(), {mesh.inner_radius, mesh.outer_radius}};
    Vector out = interpolate(space, [&](const Vec3& x) { return h.value(x); });
    for (int s = 0; s < space.num_scalar(); ++s) {
        const Vec3& x = space.node(s);
        Vec3 v = Vec3::Zero();
        if (space.on_gamma0(s)) v = -x / x.norm();
        else if (!space.on_gamma1(s)) continue;
        for (int c = 0; c < space.dim(); ++c) out(space.vdof(s, c)) = v(c);
    }
    return out;
}

Vector interpolate(const FeSpace& space, const SpaceFn& f) {
    Vector out(space.num_dofs());
    for (int s = 0; s < space.num_scalar(); ++s) {
        const Vec3 v = f(space.node(s));
        for (int c = 0; c < space.dim(); ++c) out(space.vdof(s, c)) = v(c);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Assembly
// ---------------------------------------------------------------------------

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

struct QuadPoint {
    std::array<double, 4> lam;
    double weight;  // includes the Jacobian
};

std::vector<QuadPoint> cell_points(const FeSpace& space, std::size_t c, const quadrature::SimplexRule& rule) {
    const int d = space.dim();
    const double scale = space.cell_geometry(c).volume * (d == 2 ? 2.0 : 6.0);
    std::vector<QuadPoint> pts(rule.size());
    for (std::size_t q = 0; q < rule.size(); ++q) {
        std::array<double, 4> lam{};
        double s = 0.0;
        for (int i = 0; i < d; ++i) {
            lam[i + 1] = rule.xi[q](i);
            s += rule.xi[q](i);
        }
        lam[0] = 1.0 - s;
        pts[q] = {lam, rule.w[q] * scale};
    }
    return pts;
}

int default_degree(const FeSpace& space, int qdeg) { return qdeg >= 0 ? qdeg : 2 * space.degree(); }

SpMat from_triplets(int n, const Triplets& t) {
    SpMat A(n, n);
    A.setFromTriplets(t.begin(), t.end());
    A.makeCompressed();
    return A;
}

// Shared loop: kernel(N, dN, w, local) accumulates into a (nloc*d)^2 local matrix.
template <class Kernel>
SpMat assemble_vector_form(const FeSpace& space, int qdeg, Kernel kernel) {
    const int d = space.dim();
    LocalBasis lb{d, space.degree()};
    const int n = lb.size();
    const auto rule = quadrature::simplex_rule(d, qdeg);
    Triplets trip;
    trip.reserve(space.mesh().num_cells() * n * n * d * d);
    Eigen::MatrixXd local(n * d, n * d);
    double N[10];
    Vec3 dN[10];
    for (std::size_t c = 0; c < space.mesh().num_cells(); ++c) {
        local.setZero();
        const auto& geo = space.cell_geometry(c);
        for (const auto& qp : cell_points(space, c, rule)) {
            lb.values(qp.lam, N);
            lb.gradients(qp.lam, geo.grad_lambda, dN);
            kernel(n, d, N, dN, qp.weight, local);
        }
        const int* dofs = space.cell_dofs(c);
        for (int a = 0; a < n; ++a)
            for (int ci = 0; ci < d; ++ci)
                for (int b = 0; b < n; ++b)
                    for (int ce = 0; ce < d; ++ce) {
                        const double v = local(a * d + ci, b * d + ce);
                        if (v != 0.0) trip.emplace_back(space.vdof(dofs[a], ci), space.vdof(dofs[b], ce), v);
                    }
    }
    return from_triplets(space.num_dofs(), trip);
}

}  // namespace

SpMat assemble_mass(const FeSpace& space, int qdeg) {
    return assemble_vector_form(space, default_degree(space, qdeg),
                                [](int n, int d, const double* N, const Vec3*, double w, Eigen::MatrixXd& L) {
                                    for (int a = 0; a < n; ++a)
                                        for (int b = 0; b < n; ++b) {
                                            const double v = w * N[a] * N[b];
                                            for (int c = 0; c < d; ++c) L(a * d + c, b * d + c) += v;
                                        }
                                });
}

SpMat assemble_stiffness(const FeSpace& space, const LameParameters& lame, int qdeg) {
    lame.validate();
    const double mu = lame.mu, la = lame.lambda;
    return assemble_vector_form(space, default_degree(space, qdeg),
                                [mu, la](int n, int d, const double*, const Vec3* dN, double w, Eigen::MatrixXd& L) {
                                    for (int a = 0; a < n; ++a)
                                        for (int b = 0; b < n; ++b) {
                                            const double gg = dN[a].dot(dN[b]);
                                            for (int c = 0; c < d; ++c)
                                                for (int e = 0; e < d; ++e) {
                                                    double v = mu * dN[a](e) * dN[b](c) + la * dN[a](c) * dN[b](e);
                                                    if (c == e) v += mu * gg;
                                                    L(a * d + c, b * d + e) += w * v;
                                                }
                                        }
                                });
}

SpMat assemble_h1_gram(const FeSpace& space, int qdeg) {
    return assemble_vector_form(space, default_degree(space, qdeg),
                                [](int n, int d, const double* N, const Vec3* dN, double w, Eigen::MatrixXd& L) {
                                    for (int a = 0; a < n; ++a)
                                        for (int b = 0; b < n; ++b) {
                                            const double v = w * (N[a] * N[b] + dN[a].dot(dN[b]));
                                            for (int c = 0; c < d; ++c) L(a * d + c, b * d + c) += v;
                                        }
                                });
}

SpMat assemble_scalar_laplacian(const FeSpace& space, int qdeg) {
    const int d = space.dim();
    LocalBasis lb{d, space.degree()};
    const int n = lb.size();
    const auto rule = quadrature::simplex_rule(d, default_degree(space, qdeg));
    Triplets trip;
    double N[10];
    Vec3 dN[10];
    for (std::size_t c = 0; c < space.mesh().num_cells(); ++c) {
        Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
        for (const auto& qp : cell_points(space, c, rule)) {
            lb.values(qp.lam, N);
            lb.gradients(qp.lam, space.cell_geometry(c).grad_lambda, dN);
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b) L(a, b) += qp.weight * dN[a].dot(dN[b]);
        }
        const int* dofs = space.cell_dofs(c);
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) trip.emplace_back(dofs[a], dofs[b], L(a, b));
    }
    return from_triplets(space.num_scalar(), trip);
}

SpMat assemble_boundary_mass(const FeSpace& space, BoundaryTag tag, int qdeg) {
    const int d = space.dim();
    const Mesh& mesh = space.mesh();
    LocalBasis lb{d, space.degree()};
    const int n = lb.size();
    const auto rule = quadrature::simplex_rule(d - 1, default_degree(space, qdeg));
    const double ref_measure = d == 2 ? 1.0 : 0.5;
    Triplets trip;
    double N[10];
    for (const auto& f : mesh.facets) {
        if (f.tag != tag) continue;
        const auto& geo = space.cell_geometry(f.cell);
        const int* dofs = space.cell_dofs(f.cell);
        for (std::size_t q = 0; q < rule.size(); ++q) {
            Vec3 x = mesh.nodes[f.nodes[0]];
            for (int k = 1; k < d; ++k) x += rule.xi[q](k - 1) * (mesh.nodes[f.nodes[k]] - mesh.nodes[f.nodes[0]]);
            lb.values(geo.barycentric(x, d), N);
            const double w = rule.w[q] * f.measure / ref_measure;
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b) {
                    const double v = w * N[a] * N[b];
                    if (v == 0.0) continue;
                    for (int c = 0; c < d; ++c) trip.emplace_back(space.vdof(dofs[a], c), space.vdof(dofs[b], c), v);
                }
        }
    }
    return from_triplets(space.num_dofs(), trip);
}

AssembledForms assemble_forms(const FeSpace& space, const LameParameters& lame) {
    AssembledForms f;
    f.quadrature_degree = 2 * space.degree();
    f.mass = assemble_mass(space);
    f.stiffness = assemble_stiffness(space, lame);
    f.gram = assemble_h1_gram(space);
    f.boundary_mass = assemble_boundary_mass(space, BoundaryTag::Gamma0);
    return f;
}

Vector assemble_load(const FeSpace& space, const SpaceTimeFn& F, double t, int qdeg) {
    const int d = space.dim();
    LocalBasis lb{d, space.degree()};
    const int n = lb.size();
    const auto rule = quadrature::simplex_rule(d, qdeg >= 0 ? qdeg : 2 * space.degree() + 2);
    Vector b = Vector::Zero(space.num_dofs());
    double N[10];
    const Mesh& mesh = space.mesh();
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
        const auto& cell = mesh.cells[c];
        const int* dofs = space.cell_dofs(c);
        for (const auto& qp : cell_points(space, c, rule)) {
            Vec3 x = Vec3::Zero();
            for (int i = 0; i <= d; ++i) x += qp.lam[i] * mesh.nodes[cell[i]];
            const Vec3 fx = F(x, t);
            for (int k = 0; k < d; ++k)
                if (!std::isfinite(fx(k))) throw NumericalError("assemble_load: non-finite body force");
            lb.values(qp.lam, N);
            for (int a = 0; a < n; ++a)
                for (int k = 0; k < d; ++k) b(space.vdof(dofs[a], k)) += qp.weight * N[a] * fx(k);
        }
    }
    return b;
}

SpMat restrict_free(const FeSpace& space, const SpMat& A) {
    const int nf = static_cast<int>(space.free().size());
    Triplets trip;
    trip.reserve(A.nonZeros());
    for (int k = 0; k < A.outerSize(); ++k)
        for (SpMat::InnerIterator it(A, k); it; ++it) {
            const int i = space.free_index(static_cast<int>(it.row()));
            const int j = space.free_index(static_cast<int>(it.col()));
            if (i >= 0 && j >= 0) trip.emplace_back(i, j, it.value());
        }
    return from_triplets(nf, trip);
}

Vector restrict_free(const FeSpace& space, const Vector& v) {
    Vector out(space.free().size());
    for (std::size_t i = 0; i < space.free().size(); ++i) out(i) = v(space.free()[i]);
    return out;
}

Vector extend_free(const FeSpace& space, const Vector& vf) {
    Vector out = Vector::Zero(space.num_dofs());
    for (std::size_t i = 0; i < space.free().size(); ++i) out(space.free()[i]) = vf(i);
    return out;
}

// ---------------------------------------------------------------------------
// Lanczos for symmetric pencils
// ---------------------------------------------------------------------------

namespace {

// Lanczos on a B-self-adjoint operator; returns Ritz values (descending) and vectors.
template <class Op>
EigenPairs lanczos(const Op& op, const SpMat& B, int count, int krylov, double tol) {
    const int n = static_cast<int>(B.rows());
    count = std::min(count, n);
    int m = std::min(n, krylov > 0 ? krylov : std::max(4 * count + 60, 150));
    Rng rng(0x5eed1a2c05ULL);
    for (;;) {
        Eigen::MatrixXd Q(n, m), BQ(n, m);
        Vector alpha = Vector::Zero(m), beta = Vector::Zero(m);
        Vector q(n);
        for (int i = 0; i < n; ++i) q(i) = rng.normal();
        Vector Bq = B * q;
        double nrm = std::sqrt(q.dot(Bq));
        q /= nrm;
        Bq /= nrm;
        int steps = 0;
        double last_beta = 0.0;
        for (int j = 0; j < m; ++j) {
            Q.col(j) = q;
            BQ.col(j) = Bq;
            ++steps;
            Vector w = op(q);
            alpha(j) = Bq.dot(w);
            for (int pass = 0; pass < 2; ++pass) {
                const Vector coef = BQ.leftCols(j + 1).transpose() * w;
                w -= Q.leftCols(j + 1) * coef;
            }
            Vector Bw = B * w;
            const double b = std::sqrt(std::max(0.0, w.dot(Bw)));
            last_beta = b;
            if (j + 1 == m) break;
            if (b < 1e-13 * std::abs(alpha(j)) || b == 0.0) break;
            beta(j) = b;
            q = w / b;
            Bq = Bw / b;
        }
        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(steps, steps);
        for (int j = 0; j < steps; ++j) {
            T(j, j) = alpha(j);
            if (j + 1 < steps) T(j, j + 1) = T(j + 1, j) = beta(j);
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
        const int k = std::min(count, steps);
        EigenPairs out;
        out.values.resize(k);
        out.vectors.resize(n, k);
        bool converged = true;
        for (int i = 0; i < k; ++i) {
            const int idx = steps - 1 - i;
            const double theta = es.eigenvalues()(idx);
            const double resid = std::abs(last_beta * es.eigenvectors()(steps - 1, idx));
            if (steps < n && resid > tol * std::abs(theta)) converged = false;
            out.values(i) = theta;
            Vector x = Q.leftCols(steps) * es.eigenvectors().col(idx);
            x /= std::sqrt(x.dot(B * x));
            out.vectors.col(i) = x;
        }
        if (converged || m >= n) return out;
        m = std::min(n, 2 * m);
    }
}

}  // namespace

EigenPairs smallest_eigenpairs(const SpMat& A, const SpMat& B, int count, double shift, int krylov) {
    if (A.rows() != B.rows() || A.rows() == 0) throw InputError("smallest_eigenpairs: bad pencil");
    SpMat S = A - shift * B;
    Eigen::SimplicialLDLT<SpMat> ldlt(S);
    if (ldlt.info() != Eigen::Success) throw NumericalError("smallest_eigenpairs: factorization failed");
    auto op = [&](const Vector& x) -> Vector { return ldlt.solve(B * x); };
    EigenPairs p = lanczos(op, B, count, krylov, 1e-10);
    for (int i = 0; i < p.values.size(); ++i) {
        if (!(p.values(i) > 0.0)) throw NumericalError("smallest_eigenpairs: shift is not below the spectrum");
        p.values(i) = shift + 1.0 / p.values(i);
    }
    return p;
}

double largest_eigenvalue(const SpMat& A, const SpMat& B, int krylov) {
    Eigen::SimplicialLLT<SpMat> llt(B);
    if (llt.info() != Eigen::Success) throw NumericalError("largest_eigenvalue: B is not positive definite");
    auto op = [&](const Vector& x) -> Vector { return llt.solve(A * x); };
    return lanczos(op, B, 1, krylov, 1e-8).values(0);
}

std::pair<double, double> estimate_korn_constants(const FeSpace& space, const AssembledForms& forms) {
    const SpMat K = restrict_free(space, forms.stiffness);
    const SpMat G = restrict_free(space, forms.gram);
    const double k1 = smallest_eigenpairs(K, G, 1).values(0);
    if (!(k1 > 0.0) || !std::isfinite(k1)) throw NumericalError("Korn constant k1 is not positive");
    const double k2 = largest_eigenvalue(K, G);
    return {k1, k2};
}

double unconstrained_smallest_eigenvalue(const AssembledForms& forms) {
    return smallest_eigenpairs(forms.stiffness, forms.gram, 1, -1e-2).values(0);
}

void write_coo(std::ostream& os, const SpMat& A) {
    Eigen::SparseMatrix<double, Eigen::RowMajor> R(A);
    std::ostringstream ss;
    ss << std::setprecision(17);
    for (int i = 0; i < R.outerSize(); ++i)
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(R, i); it; ++it)
            ss << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
    os << ss.str();
}

}  // namespace navtrace::spaces
