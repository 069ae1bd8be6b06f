#include "navtrace/geometry.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

namespace navtrace::geometry {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

/// Signed volume of a simplex (area in 2D).
double signed_volume(const Mesh& m, const std::array<int, 4>& c) {
    const Vec3& a = m.nodes[c[0]];
    if (m.dimension == 2) {
        const Vec3 e1 = m.nodes[c[1]] - a, e2 = m.nodes[c[2]] - a;
        return 0.5 * (e1.x() * e2.y() - e1.y() * e2.x());
    }
    const Vec3 e1 = m.nodes[c[1]] - a, e2 = m.nodes[c[2]] - a, e3 = m.nodes[c[3]] - a;
    return e1.dot(e2.cross(e3)) / 6.0;
}

using FaceKey = std::array<int, 3>;

FaceKey face_key(const Mesh& m, const std::array<int, 4>& cell, int opposite) {
    FaceKey k{-1, -1, -1};
    int n = 0;
    for (int i = 0; i <= m.dimension; ++i)
        if (i != opposite) k[n++] = cell[i];
    std::sort(k.begin(), k.begin() + m.dimension);
    return k;
}

void compute_facet_geometry(const Mesh& m, Facet& f) {
    const std::array<int, 4>& cell = m.cells[f.cell];
    const Vec3& opp = m.nodes[cell[f.local_face]];
    const Vec3& a = m.nodes[f.nodes[0]];
    Vec3 n;
    if (m.dimension == 2) {
        const Vec3 t = m.nodes[f.nodes[1]] - a;
        f.measure = t.norm();
        n = Vec3(t.y(), -t.x(), 0.0);
    } else {
        const Vec3 c = (m.nodes[f.nodes[1]] - a).cross(m.nodes[f.nodes[2]] - a);
        f.measure = 0.5 * c.norm();
        n = c;
    }
    n /= n.norm();
    if (n.dot(opp - a) > 0.0) n = -n;
    f.normal = n;
}

}  // namespace

const char* tag_name(BoundaryTag tag) { return tag == BoundaryTag::Gamma0 ? "GAMMA0" : "GAMMA1"; }

void DomainSpec::validate() const {
    if (dimension != 2 && dimension != 3) throw InputError("DomainSpec: dimension must be 2 or 3");
    if (!(inner_radius > 0.0)) throw InputError("DomainSpec: inner radius must be positive");
    if (!(inner_radius < outer_radius)) throw InputError("DomainSpec: need inner radius < outer radius");
    if (level < 0) throw InputError("DomainSpec: refinement level must be >= 0");
}

double Mesh::cell_volume(std::size_t c) const { return signed_volume(*this, cells[c]); }

double Mesh::max_element_diameter() const {
    double h = 0.0;
    const int nv = vertices_per_cell();
    for (const auto& c : cells)
        for (int i = 0; i < nv; ++i)
            for (int j = i + 1; j < nv; ++j) h = std::max(h, (nodes[c[i]] - nodes[c[j]]).norm());
    return h;
}

double Mesh::boundary_measure(BoundaryTag tag) const {
    double s = 0.0;
    for (const auto& f : facets)
        if (f.tag == tag) s += f.measure;
    return s;
}

std::vector<int> Mesh::facets_with_tag(BoundaryTag tag) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < facets.size(); ++i)
        if (facets[i].tag == tag) out.push_back(static_cast<int>(i));
    return out;
}

void finalize_mesh(Mesh& m) {
    // Positive orientation.
    for (auto& c : m.cells)
        if (signed_volume(m, c) < 0.0) std::swap(c[0], c[1]);

    std::map<FaceKey, std::pair<int, int>> boundary;  // face -> (cell, opposite vertex)
    std::map<FaceKey, int> count;
    for (std::size_t c = 0; c < m.cells.size(); ++c) {
        for (int o = 0; o <= m.dimension; ++o) {
            const FaceKey k = face_key(m, m.cells[c], o);
            if (++count[k] == 1) boundary[k] = {static_cast<int>(c), o};
        }
    }
    for (const auto& [k, n] : count)
        if (n != 1) boundary.erase(k);

    if (m.facets.empty()) {
        // Tag by radius: facets whose centroid is closer to r0 belong to Gamma0.
        const double rmid = 0.5 * (m.inner_radius + m.outer_radius);
        for (const auto& [k, co] : boundary) {
            Facet f;
            f.nodes = k;
            Vec3 centroid = Vec3::Zero();
            for (int i = 0; i < m.dimension; ++i) centroid += m.nodes[k[i]];
            centroid /= m.dimension;
            f.tag = centroid.norm() < rmid ? BoundaryTag::Gamma0 : BoundaryTag::Gamma1;
            m.facets.push_back(f);
        }
        std::stable_sort(m.facets.begin(), m.facets.end(),
                         [](const Facet& a, const Facet& b) { return a.tag < b.tag; });
    }
    for (auto& f : m.facets) {
        FaceKey k = f.nodes;
        for (int i = m.dimension; i < 3; ++i) k[i] = -1;
        std::sort(k.begin(), k.begin() + m.dimension);
        const auto it = boundary.find(k);
        if (it == boundary.end()) throw NumericalError("finalize_mesh: facet is not on the boundary");
        f.cell = it->second.first;
        f.local_face = it->second.second;
        compute_facet_geometry(m, f);
    }
    if (m.facets.size() != boundary.size())
        throw NumericalError("finalize_mesh: boundary faces without a tag");
}

Mesh build_annulus(double r0, double r1, int n_theta, int n_radial) {
    if (!(r0 > 0.0 && r0 < r1)) throw InputError("build_annulus: need 0 < r0 < r1");
    if (n_theta < 3 || n_radial < 1) throw InputError("build_annulus: resolution too small");
    Mesh m;
    m.dimension = 2;
    m.inner_radius = r0;
    m.outer_radius = r1;
    for (int i = 0; i <= n_radial; ++i) {
        const double r = i == n_radial ? r1 : r0 + (r1 - r0) * i / n_radial;
        for (int j = 0; j < n_theta; ++j) {
            const double a = 2.0 * kPi * j / n_theta;
            m.nodes.emplace_back(r * std::cos(a), r * std::sin(a), 0.0);
        }
    }
    auto id = [n_theta](int i, int j) { return i * n_theta + (j % n_theta); };
    for (int i = 0; i < n_radial; ++i) {
        for (int j = 0; j < n_theta; ++j) {
            m.cells.push_back({id(i, j), id(i, j + 1), id(i + 1, j + 1), -1});
            m.cells.push_back({id(i, j), id(i + 1, j + 1), id(i + 1, j), -1});
        }
    }
    finalize_mesh(m);
    return m;
}

namespace {

Mesh build_shell(const DomainSpec& spec) {
    const double r0 = spec.inner_radius, r1 = spec.outer_radius;
    // Icosahedron.
    const double p = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> v = {{-1, p, 0}, {1, p, 0}, {-1, -p, 0}, {1, -p, 0}, {0, -1, p}, {0, 1, p},
                           {0, -1, -p}, {0, 1, -p}, {p, 0, -1}, {p, 0, 1}, {-p, 0, -1}, {-p, 0, 1}};
    for (auto& x : v) x.normalize();
    std::vector<std::array<int, 3>> tri = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                           {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                           {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                           {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
    for (int s = 0; s < spec.level + 1; ++s) {
        std::map<std::pair<int, int>, int> mid;
        auto midpoint = [&](int a, int b) {
            const auto key = std::minmax(a, b);
            const auto it = mid.find(key);
            if (it != mid.end()) return it->second;
            Vec3 x = 0.5 * (v[a] + v[b]);
            x.normalize();
            v.push_back(x);
            const int id = static_cast<int>(v.size()) - 1;
            mid.emplace(key, id);
            return id;
        };
        std::vector<std::array<int, 3>> next;
        next.reserve(tri.size() * 4);
        for (const auto& t : tri) {
            const int a = midpoint(t[0], t[1]), b = midpoint(t[1], t[2]), c = midpoint(t[2], t[0]);
            next.push_back({t[0], a, c});
            next.push_back({t[1], b, a});
            next.push_back({t[2], c, b});
            next.push_back({a, b, c});
        }
        tri.swap(next);
    }
    const int ns = static_cast<int>(v.size());
    // Level-0 surface edges are about 0.55 on the unit sphere; match that spacing at mid radius.
    const int base_layers = std::max(1, static_cast<int>(std::lround((r1 - r0) / (0.275 * (r0 + r1)))));
    const int nl = base_layers << spec.level;

    Mesh m;
    m.dimension = 3;
    m.inner_radius = r0;
    m.outer_radius = r1;
    m.level = spec.level;
    for (int l = 0; l <= nl; ++l) {
        const double r = l == nl ? r1 : r0 + (r1 - r0) * l / nl;
        for (const auto& x : v) m.nodes.push_back(r * x);
    }
    for (int l = 0; l < nl; ++l) {
        for (auto t : tri) {
            std::sort(t.begin(), t.end());
            const int a = l * ns + t[0], b = l * ns + t[1], c = l * ns + t[2];
            const int a2 = a + ns, b2 = b + ns, c2 = c + ns;
            // Each quad side (x, y) with x < y is cut along (x, y'), so neighbours agree.
            m.cells.push_back({a, b, c, c2});
            m.cells.push_back({a, b, b2, c2});
            m.cells.push_back({a, a2, b2, c2});
        }
    }
    finalize_mesh(m);
    return m;
}

}  // namespace

Mesh build_mesh(const DomainSpec& spec) {
    spec.validate();
    if (spec.dimension == 2) {
        const int n_theta = 16 << spec.level;
        const double ring = kPi * (spec.inner_radius + spec.outer_radius) / 16.0;
        const int n_r0 = std::max(1, static_cast<int>(std::lround((spec.outer_radius - spec.inner_radius) / ring)));
        Mesh m = build_annulus(spec.inner_radius, spec.outer_radius, n_theta, n_r0 << spec.level);
        m.level = spec.level;
        return m;
    }
    return build_shell(spec);
}

void rotate_mesh(Mesh& mesh, const Mat3& rotation) {
    for (auto& x : mesh.nodes) {
        x = rotation * x;
        if (mesh.dimension == 2) x.z() = 0.0;
    }
    for (auto& f : mesh.facets) compute_facet_geometry(mesh, f);
}

void validate_mesh(const Mesh& m) {
    if (m.dimension != 2 && m.dimension != 3) throw NumericalError("mesh: bad dimension");
    bool has_g0 = false;
    for (std::size_t c = 0; c < m.cells.size(); ++c)
        if (!(m.cell_volume(c) > 0.0)) throw NumericalError("mesh: non-positive cell volume");
    for (const auto& f : m.facets) {
        if (std::abs(f.normal.norm() - 1.0) > 1e-14) throw NumericalError("mesh: facet normal not unit");
        if (f.tag == BoundaryTag::Gamma0) has_g0 = true;
    }
    if (!has_g0) throw NumericalError("mesh: empty Gamma0");
}

void write_mesh(std::ostream& os, const Mesh& m) {
    const int d = m.dimension;
    os << d << ' ' << m.nodes.size() << ' ' << m.cells.size() << ' ' << m.facets.size() << '\n';
    std::ostringstream line;
    line << std::setprecision(17);
    for (const auto& x : m.nodes) {
        line.str("");
        for (int i = 0; i < d; ++i) line << (i ? " " : "") << x[i];
        os << line.str() << '\n';
    }
    for (const auto& c : m.cells) {
        for (int i = 0; i <= d; ++i) os << (i ? " " : "") << c[i];
        os << '\n';
    }
    for (const auto& f : m.facets) {
        for (int i = 0; i < d; ++i) os << f.nodes[i] << ' ';
        os << tag_name(f.tag) << '\n';
    }
}

Mesh read_mesh(std::istream& is) {
    Mesh m;
    std::size_t nn = 0, nc = 0, nf = 0;
    // leading '#' lines carry provenance
    while (is >> std::ws && is.peek() == '#') {
        std::string skip;
        std::getline(is, skip);
    }
    if (!(is >> m.dimension >> nn >> nc >> nf)) throw InputError("read_mesh: bad header");
    if (m.dimension != 2 && m.dimension != 3) throw InputError("read_mesh: bad dimension");
    const int d = m.dimension;
    m.nodes.assign(nn, Vec3::Zero());
    for (auto& x : m.nodes)
        for (int i = 0; i < d; ++i)
            if (!(is >> x[i])) throw InputError("read_mesh: truncated node block");
    m.cells.assign(nc, {-1, -1, -1, -1});
    for (auto& c : m.cells)
        for (int i = 0; i <= d; ++i)
            if (!(is >> c[i]) || c[i] < 0 || static_cast<std::size_t>(c[i]) >= nn)
                throw InputError("read_mesh: bad cell block");
    m.facets.resize(nf);
    double rmin = 1e300, rmax = 0.0;
    for (auto& f : m.facets) {
        for (int i = 0; i < d; ++i)
            if (!(is >> f.nodes[i])) throw InputError("read_mesh: bad facet block");
        std::string tag;
        is >> tag;
        if (tag == "GAMMA0")
            f.tag = BoundaryTag::Gamma0;
        else if (tag == "GAMMA1")
            f.tag = BoundaryTag::Gamma1;
        else
            throw InputError("read_mesh: unknown facet tag '" + tag + "'");
        for (int i = 0; i < d; ++i) {
            const double r = m.nodes[f.nodes[i]].norm();
            rmin = std::min(rmin, r);
            rmax = std::max(rmax, r);
        }
    }
    m.inner_radius = rmin;
    m.outer_radius = rmax;
    m.level = -1;  // not stored in the file
    finalize_mesh(m);
    return m;
}

// ---------------------------------------------------------------------------

namespace {
double smoothstep5(double s) { return s * s * s * (10.0 + s * (-15.0 + 6.0 * s)); }
double smoothstep5_d(double s) { return 30.0 * s * s * (1.0 - s) * (1.0 - s); }
}  // namespace

double RadialProfile::value(double r) const {
    const double s = std::clamp((r - r0) / (r1 - r0), 0.0, 1.0);
    return 1.0 - smoothstep5(s);
}

double RadialProfile::derivative(double r) const {
    const double s = (r - r0) / (r1 - r0);
    if (s <= 0.0 || s >= 1.0) return 0.0;
    return -smoothstep5_d(s) / (r1 - r0);
}

Vec3 MultiplierProfile::value(const Vec3& x) const {
    const double r = x.norm();
    Vec3 h = -(chi.value(r) / r) * x;
    if (dimension == 2) h.z() = 0.0;
    return h;
}

Mat3 MultiplierProfile::gradient(const Vec3& x) const {
    const double r = x.norm();
    const double c = chi.value(r), dc = chi.derivative(r);
    Mat3 g = Mat3::Zero();
    for (int i = 0; i < dimension; ++i)
        for (int j = 0; j < dimension; ++j)
            g(i, j) = -dc * x[i] * x[j] / (r * r) - c * ((i == j ? 1.0 : 0.0) / r - x[i] * x[j] / (r * r * r));
    return g;
}

double Cutoff::value(const Vec3& x) const {
    const double d = 0.25 * (r1 - r0);
    const double s = std::clamp((x.norm() - r0 - d) / (r1 - r0 - 2.0 * d), 0.0, 1.0);
    return 1.0 - smoothstep5(s);
}

double TangentialFrames::chart_weight(int chart, const Vec3& x) const {
    if (dimension == 2) return 1.0;
    const double ra = x.x() * x.x() + x.y() * x.y();
    const double rb = x.y() * x.y() + x.z() * x.z();
    return chart == 0 ? ra / (ra + rb) : rb / (ra + rb);
}

std::array<Vec3, 2> TangentialFrames::tangents(int chart, const Vec3& x) const {
    const double r = x.norm();
    if (dimension == 2) return {Vec3(-x.y() / r, x.x() / r, 0.0), Vec3::Zero()};
    if (chart == 0) {
        const double rho = std::sqrt(x.x() * x.x() + x.y() * x.y());
        const Vec3 eth(x.x() * x.z() / (rho * r), x.y() * x.z() / (rho * r), -rho / r);
        const Vec3 eph(-x.y() / rho, x.x() / rho, 0.0);
        return {eth, eph};
    }
    // Chart around the x1 axis: the chart-0 formulas in the cyclic coordinates (x2, x3, x1).
    const double rho = std::sqrt(x.y() * x.y() + x.z() * x.z());
    const Vec3 eth(-rho / r, x.x() * x.y() / (rho * r), x.x() * x.z() / (rho * r));
    const Vec3 eph(0.0, -x.z() / rho, x.y() / rho);
    return {eth, eph};
}

std::array<Vec3, 2> TangentialFrames::dominant_tangents(const Vec3& x) const {
    if (dimension == 2) return tangents(0, x);
    return chart_weight(0, x) >= chart_weight(1, x) ? tangents(0, x) : tangents(1, x);
}

}  // namespace navtrace::geometry
