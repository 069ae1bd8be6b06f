#include "navtrace/identities.hpp"

#include "navtrace/quadrature.hpp"
#include "navtrace/rng.hpp"
#include "navtrace/traces.hpp"

#include <cmath>
#include <iomanip>
#include <numbers>
#include <sstream>

namespace navtrace::identities {

void TestFieldFamily::validate() const {
    if (dim != 2 && dim != 3) throw InputError("test fields: dimension must be 2 or 3");
    if (!(r0 > 0.0)) throw InputError("test fields: r0 must be positive");
    if (count < 0) throw InputError("test fields: negative count");
    if (power < 1) throw InputError("test fields: power must be >= 1");
}

std::uint64_t TestFieldFamily::field_seed(int i) const {
    // splitmix64 step so neighbouring indices get unrelated streams
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(i + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

analytic::AnalyticField TestFieldFamily::field(int i) const {
    validate();
    Rng rng(field_seed(i));
    struct Coeffs {
        double c0, lin[3], amp, w[3], phase, eamp, ev[3];
    };
    std::array<Coeffs, 3> cs{};
    for (auto& c : cs) {
        c.c0 = rng.uniform(-1, 1);
        for (double& v : c.lin) v = rng.uniform(-1, 1);
        c.amp = rng.uniform(-1, 1);
        for (double& v : c.w) v = rng.uniform(-2, 2);
        c.phase = rng.uniform(0, 2 * std::numbers::pi);
        c.eamp = rng.uniform(-0.5, 0.5);
        for (double& v : c.ev) v = rng.uniform(-0.5, 0.5);
    }
    const int d = dim, p = power;
    const double r0sq = r0 * r0;
    return analytic::AnalyticField(d, [cs, d, p, r0sq](const JetPoint& x) {
        Jet rr(-r0sq);
        for (int k = 0; k < d; ++k) rr += x[k] * x[k];
        const Jet w = ipow(rr, p);
        JetVec out{Jet(0.0), Jet(0.0), Jet(0.0)};
        for (int c = 0; c < d; ++c) {
            const auto& q = cs[c];
            Jet a(q.c0), arg(q.phase), earg(0.0);
            for (int k = 0; k < d; ++k) {
                a += q.lin[k] * x[k];
                arg += q.w[k] * x[k];
                earg += q.ev[k] * x[k];
            }
            a += q.amp * sin(arg) + q.eamp * exp(earg);
            out[c] = w * a;
        }
        return out;
    });
}

std::vector<Vec3> gamma0_points(int dim, double r0, int count, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Vec3> pts;
    pts.reserve(count);
    for (int i = 0; i < count; ++i) {
        Vec3 x = Vec3::Zero();
        if (dim == 2) {
            const double th = rng.uniform(0, 2 * std::numbers::pi);
            x << std::cos(th), std::sin(th), 0.0;
        } else {
            do {
                x << rng.normal(), rng.normal(), rng.normal();
            } while (x.norm() < 1e-8);
            x.normalize();
        }
        pts.push_back(r0 * x);
    }
    return pts;
}

double IdentityResiduals::worst() const {
    double w = 0.0;
    for (const auto& [k, v] : max_residual) w = std::max(w, v);
    return w;
}

std::array<double, 2> stress_decomposition(const Mat3& grad, const Vec3& n, const spaces::LameParameters& lame,
                                           int dim) {
    const double div = grad.trace();
    const Vec3 Pn = spaces::piola_stress(grad, lame, dim) * n;
    const double mu = lame.mu, la = lame.lambda;
    const double rhs = mu * mu * (grad.squaredNorm() + 3 * div * div) + 4 * mu * la * div * div + la * la * div * div;
    return {Pn.squaredNorm(), rhs};
}

IdentityResiduals check_appendix_a(const TestFieldFamily& family, const std::vector<Vec3>& points,
                                   const std::vector<spaces::LameParameters>& lames) {
    family.validate();
    IdentityResiduals out;
    auto record = [&](const std::string& id, std::uint64_t seed, int p, double lhs, double rhs) {
        const double r = std::abs(lhs - rhs) / (1.0 + std::abs(lhs));
        out.rows.push_back({id, seed, p, r});
        double& m = out.max_residual[id];
        m = std::max(m, r);
    };
    std::vector<std::string> pnames;
    for (const auto& l : lames) {
        std::ostringstream ss;
        ss << "P39(" << l.mu << ',' << l.lambda << ')';
        pnames.push_back(ss.str());
    }
    for (int i = 0; i < family.count; ++i) {
        const auto phi = family.field(i);
        const std::uint64_t seed = family.field_seed(i);
        for (std::size_t p = 0; p < points.size(); ++p) {
            const Vec3& x = points[p];
            const Vec3 n = -x / x.norm();  // outward with respect to the shell
            const double val = phi.value(x, 0.0).norm();
            out.max_abs_phi = std::max(out.max_abs_phi, val);
            if (val > 1e-13) throw InputError("identities: test field does not vanish on Gamma0");
            const Mat3 G = phi.gradient(x, 0.0);
            const double div = G.trace();
            const Mat3 e = 0.5 * (G + G.transpose());
            const Vec3 Gn = G * n;
            const int ip = static_cast<int>(p);
            record("A1", seed, ip, G.norm(), G.norm() + (G - Gn * n.transpose()).norm());
            record("A2", seed, ip, G.norm(), Gn.norm());
            record("A3", seed, ip, div * n.dot(G * n), div * div);
            record("A4", seed, ip, 2 * e.squaredNorm(), G.squaredNorm() + div * div);
            record("A5", seed, ip, 4 * (e * n).squaredNorm(), G.squaredNorm() + 3 * div * div);
            for (std::size_t l = 0; l < lames.size(); ++l) {
                const auto sd = stress_decomposition(G, n, lames[l], family.dim);
                record(pnames[l], seed, ip, sd[0], sd[1]);
            }
        }
    }
    return out;
}

void write_residual_csv(std::ostream& os, const std::vector<ResidualRow>& rows) {
    std::ostringstream ss;
    ss << std::setprecision(17) << "identity,field_seed,point,residual\n";
    for (const auto& r : rows) ss << r.identity << ',' << r.field_seed << ',' << r.point << ',' << r.residual << '\n';
    os << ss.str();
}

// ---------------------------------------------------------------------------
// Multiplier identity
// ---------------------------------------------------------------------------

const std::array<const char*, 8>& MultiplierTerms::names() {
    static const std::array<const char*, 8> n = {"final_velocity", "initial_data",  "kinetic_div_h", "grad_sq_div_h",
                                                 "grad_grad_h",    "div_sq_div_h", "div_grad_ht",   "forcing"};
    return n;
}

double MultiplierTerms::rhs() const {
    double s = 0.0;
    for (double t : terms) s += t;
    return s;
}

double MultiplierTerms::residual() const {
    const double r = rhs();
    return std::abs(lhs - r) / (std::abs(lhs) + std::abs(r) + 1e-300);
}

namespace {

struct VolumeSums {
    double kin = 0, grad_sq = 0, grad_grad = 0, div_sq = 0, div_grad = 0, force = 0, vel = 0;
};

// Volume integrals at one time level. `F` may be empty.
VolumeSums volume_sums(const spaces::FeSpace& V, const Vector& u, const Vector& v, const SpaceTimeFn& F, double t,
                       const geometry::MultiplierProfile& h, const quadrature::SimplexRule& rule) {
    const int d = V.dim();
    const auto& mesh = V.mesh();
    const double scale = d == 2 ? 2.0 : 6.0;
    VolumeSums s;
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
        const auto& cell = mesh.cells[c];
        const double J = V.cell_geometry(c).volume * scale;
        for (std::size_t q = 0; q < rule.size(); ++q) {
            std::array<double, 4> lam{};
            double sum = 0.0;
            for (int i = 0; i < d; ++i) {
                lam[i + 1] = rule.xi[q](i);
                sum += lam[i + 1];
            }
            lam[0] = 1.0 - sum;
            Vec3 x = Vec3::Zero();
            for (int i = 0; i <= d; ++i) x += lam[i] * mesh.nodes[cell[i]];
            const double w = rule.w[q] * J;
            const auto pu = spaces::evaluate(V, u, c, lam);
            const auto pv = spaces::evaluate(V, v, c, lam);
            const Vec3 hx = h.value(x);
            const Mat3 gh = h.gradient(x);
            const double divh = gh.trace();
            const Mat3& G = pu.gradient;
            const double div = G.trace();
            const Vec3 Gh = G * hx;
            s.kin += w * pv.value.squaredNorm() * divh;
            s.grad_sq += w * G.squaredNorm() * divh;
            s.grad_grad += w * (G.cwiseProduct(G * gh)).sum();
            s.div_sq += w * div * div * divh;
            s.div_grad += w * div * (G.cwiseProduct(gh.transpose())).sum();
            s.vel += w * pv.value.dot(Gh);
            if (F) s.force += w * F(x, t).dot(Gh);
        }
    }
    return s;
}

double trapezoid(const std::vector<double>& f, double dt) {
    double s = 0.5 * (f.front() + f.back());
    for (std::size_t i = 1; i + 1 < f.size(); ++i) s += f[i];
    return s * dt;
}

}  // namespace

MultiplierTerms check_multiplier_identity(const dynamics::Trajectory& traj, const dynamics::ProblemData& data,
                                          const spaces::LameParameters& lame,
                                          const geometry::MultiplierProfile& h, int qdeg) {
    if (data.g) throw InputError("multiplier identity: nonzero Dirichlet datum (the identity is the zero-datum form)");
    if (!traj.space || traj.u.empty()) throw InputError("multiplier identity: empty trajectory");
    lame.validate();
    const auto& V = *traj.space;
    const int d = V.dim();
    const auto rule = quadrature::simplex_rule(d, qdeg);
    const traces::BoundaryQuadrature bq(V, geometry::BoundaryTag::Gamma0, 4);
    const std::size_t nt = traj.u.size();
    std::vector<double> bnd(nt), kin(nt), gsq(nt), gg(nt), dsq(nt), dg(nt), frc(nt);
    double vel_T = 0.0, vel_0 = 0.0;
    for (std::size_t n = 0; n < nt; ++n) {
        const double t = traj.grid.t(static_cast<int>(n));
        const auto s = volume_sums(V, traj.u[n], traj.v[n], data.F, t, h, rule);
        kin[n] = s.kin;
        gsq[n] = s.grad_sq;
        gg[n] = s.grad_grad;
        dsq[n] = s.div_sq;
        dg[n] = s.div_grad;
        frc[n] = s.force;
        if (n == 0) vel_0 = s.vel;
        if (n + 1 == nt) vel_T = s.vel;
        double b = 0.0;
        for (const auto& p : bq.points()) {
            const Mat3 G = spaces::evaluate(V, traj.u[n], p.cell, p.lambda).gradient;
            const double div = G.trace();
            b += p.weight * (lame.mu * G.squaredNorm() + (lame.lambda + lame.mu) * div * div);
        }
        bnd[n] = b;
    }
    const double dt = traj.grid.dt();
    const double mu = lame.mu, lm = lame.lambda + lame.mu;
    MultiplierTerms m;
    m.lhs = 0.5 * trapezoid(bnd, dt);
    m.terms = {vel_T,
               -vel_0,
               0.5 * trapezoid(kin, dt),
               -0.5 * mu * trapezoid(gsq, dt),
               mu * trapezoid(gg, dt),
               -0.5 * lm * trapezoid(dsq, dt),
               lm * trapezoid(dg, dt),
               -trapezoid(frc, dt)};
    return m;
}

}  // namespace navtrace::identities
