#include "navtrace/timescale.hpp"

#include "navtrace/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

namespace navtrace::timescale {

void HilbertScaleSignal::validate() const {
    if (!(tau > 0.0)) throw InputError("signal: tau must be positive");
    if (K < 0) throw InputError("signal: negative mode cutoff");
    if (values.size() < 2) throw InputError("signal: need at least two samples");
    for (const auto& c : values)
        if (c.size() != static_cast<std::size_t>(2 * K + 1)) throw InputError("signal: inconsistent snapshot length");
}

double mode_weight(int k, double theta, int m) { return std::pow(1.0 + double(k) * k, theta * m); }

double interpolation_norm(const Coeffs& c, double theta, int m) {
    if (!(theta >= 0.0 && theta <= 1.0)) throw InputError("interpolation norm: theta must lie in [0, 1]");
    return sobolev_norm(c, theta * m);
}

double sobolev_norm(const Coeffs& c, double s) {
    const int K = static_cast<int>(c.size() / 2);
    double acc = 0.0;
    for (int k = -K; k <= K; ++k) acc += std::pow(1.0 + double(k) * k, s) * std::norm(c[k + K]);
    return std::sqrt(acc);
}

std::vector<double> fd_weights(double x0, const std::vector<double>& xs, int order) {
    const int n = static_cast<int>(xs.size());
    if (order < 0 || order >= n) throw InputError("fd weights: stencil too small for the derivative order");
    std::vector<std::vector<double>> C(n, std::vector<double>(order + 1, 0.0));
    double c1 = 1.0, c4 = xs[0] - x0;
    C[0][0] = 1.0;
    for (int i = 1; i < n; ++i) {
        const int mn = std::min(i, order);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = xs[i] - x0;
        for (int j = 0; j < i; ++j) {
            const double c3 = xs[i] - xs[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k) C[i][k] = c1 * (k * C[i - 1][k - 1] - c5 * C[i - 1][k]) / c2;
                C[i][0] = -c1 * c5 * C[i - 1][0] / c2;
            }
            for (int k = mn; k >= 1; --k) C[j][k] = (c4 * C[j][k] - k * C[j][k - 1]) / c3;
            C[j][0] = c4 * C[j][0] / c3;
        }
        c1 = c2;
    }
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i) w[i] = C[i][order];
    return w;
}

namespace {

// Weights in grid units for the stencil start..start+s-1 evaluated at node n.
const std::vector<double>& cached_weights(int offset, int s, int j) {
    static thread_local std::map<std::tuple<int, int, int>, std::vector<double>> cache;
    const auto key = std::make_tuple(offset, s, j);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    std::vector<double> xs(s);
    for (int i = 0; i < s; ++i) xs[i] = i - offset;
    return cache.emplace(key, fd_weights(0.0, xs, j)).first->second;
}

Coeffs combine(const HilbertScaleSignal& f, int start, const std::vector<double>& w, double scale) {
    Coeffs out(f.values[0].size(), 0.0);
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double wi = w[i] * scale;
        const auto& src = f.values[start + i];
        for (std::size_t k = 0; k < out.size(); ++k) out[k] += wi * src[k];
    }
    return out;
}

double trapezoid(const std::vector<double>& v, double dt) {
    double s = 0.5 * (v.front() + v.back());
    for (std::size_t i = 1; i + 1 < v.size(); ++i) s += v[i];
    return s * dt;
}

}  // namespace

HilbertScaleSignal derivative(const HilbertScaleSignal& f, int j, int accuracy) {
    f.validate();
    if (j == 0) return f;
    const int N = f.steps();
    const int s = j + accuracy;
    if (s > N + 1) throw InputError("derivative: grid too coarse for the stencil");
    const double scale = std::pow(f.dt(), -j);
    HilbertScaleSignal out = f;
    for (int n = 0; n <= N; ++n) {
        const int start = std::clamp(n - s / 2, 0, N + 1 - s);
        out.values[n] = combine(f, start, cached_weights(n - start, s, j), scale);
    }
    return out;
}

Coeffs initial_derivative(const HilbertScaleSignal& f, int j, int accuracy) {
    f.validate();
    if (j == 0) return f.values[0];
    const int s = j + accuracy;
    if (s > f.steps() + 1) throw InputError("derivative: grid too coarse for the stencil");
    return combine(f, 0, cached_weights(0, s, j), std::pow(f.dt(), -j));
}

namespace {

std::vector<double> weight_table(int K, double s) {
    std::vector<double> w(2 * K + 1);
    for (int k = -K; k <= K; ++k) w[k + K] = std::pow(1.0 + double(k) * k, s);
    return w;
}

double weighted_sq(const Coeffs& c, const std::vector<double>& w) {
    double acc = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) acc += w[i] * std::norm(c[i]);
    return acc;
}

}  // namespace

double l2_time(const HilbertScaleSignal& f, double theta, int m) {
    if (!(theta >= 0.0 && theta <= 1.0)) throw InputError("interpolation norm: theta must lie in [0, 1]");
    const auto w = weight_table(f.K, theta * m);
    std::vector<double> sq(f.values.size());
    for (std::size_t n = 0; n < sq.size(); ++n) sq[n] = weighted_sq(f.values[n], w);
    return std::sqrt(trapezoid(sq, f.dt()));
}

double sup_time(const HilbertScaleSignal& f, double theta, int m) {
    if (!(theta >= 0.0 && theta <= 1.0)) throw InputError("interpolation norm: theta must lie in [0, 1]");
    const auto w = weight_table(f.K, theta * m);
    double s = 0.0;
    for (const auto& c : f.values) s = std::max(s, weighted_sq(c, w));
    return std::sqrt(s);
}

double zm_norm(const HilbertScaleSignal& f, int m) {
    if (m < 1) throw InputError("Z^m norm: m must be >= 1");
    const double a = l2_time(f, 1.0, m);
    const double b = l2_time(derivative(f, m, zm_accuracy(m)), 0.0, m);
    return std::sqrt(a * a + b * b);
}

// ---------------------------------------------------------------------------
// Reflection coefficients and the zero-trace extension
// ---------------------------------------------------------------------------

double AlphaCoefficients::residual() const {
    double worst = 0.0;
    for (int j = 0; j < m; ++j) {
        double s = 0.0;
        for (int k = 1; k <= m; ++k) s += std::pow(-double(k), j) * alpha[k - 1];
        worst = std::max(worst, std::abs(s - 1.0));
    }
    return worst;
}

AlphaCoefficients solve_alpha(int m) {
    if (m < 1) throw InputError("alpha: m must be >= 1");
    if (m > 8) throw InputError("alpha: m > 8 refused (the Vandermonde system is too ill-conditioned)");
    // The system says sum_k alpha_k p(-k) = p(1) for every polynomial p of degree < m, so
    // alpha_k is the Lagrange basis polynomial of node -k (nodes -1..-m) evaluated at 1:
    // alpha_k = (-1)^(k-1) k binom(m+1, k+1). All values are small integers.
    AlphaCoefficients a;
    a.m = m;
    for (int k = 1; k <= m; ++k) {
        double binom = 1.0;
        for (int i = 1; i <= k + 1; ++i) binom = binom * (m + 2 - i) / i;
        a.alpha.push_back(((k - 1) % 2 == 0 ? 1.0 : -1.0) * k * std::round(binom));
    }
    return a;
}

std::vector<double> extension_breakpoints(int m, double tau) {
    std::vector<double> b = {0.0, tau};
    for (int k = m; k >= 2; --k) b.push_back(tau * (k + 1) / k);
    b.push_back(2.0 * tau);
    return b;
}

HilbertScaleSignal extend_zero_left(const HilbertScaleSignal& f, int m, double tol) {
    f.validate();
    const auto alpha = solve_alpha(m);
    const int N = f.steps();
    double sup = 0.0;
    for (const auto& c : f.values) sup = std::max(sup, sobolev_norm(c, 0.0));
    for (int j = 0; j < m; ++j) {
        const double dj = sobolev_norm(initial_derivative(f, j, zm_accuracy(m)), 0.0);
        if (dj > tol * (sup * std::pow(f.tau, -j) + 1e-300))
            throw InputError("extension: initial derivative of order " + std::to_string(j) + " does not vanish");
    }
    HilbertScaleSignal ext;
    ext.tau = 2.0 * f.tau;
    ext.K = f.K;
    ext.values.assign(2 * N + 1, Coeffs(f.values[0].size(), 0.0));
    for (int n = 0; n <= N; ++n) ext.values[n] = f.values[n];
    for (int n = N + 1; n <= 2 * N; ++n) {
        auto& out = ext.values[n];
        for (int k = 1; k <= m; ++k) {
            const long arg = static_cast<long>(k + 1) * N - static_cast<long>(k) * n;  // grid index of (k+1)tau - k t
            if (arg < 0 || arg > N) continue;
            const double a = alpha.alpha[k - 1];
            const auto& src = f.values[arg];
            for (std::size_t i = 0; i < out.size(); ++i) out[i] += a * src[i];
        }
    }
    return ext;
}

std::vector<double> extension_jumps(const HilbertScaleSignal& ext, int m, double tau) {
    ext.validate();
    const int N2 = ext.steps();
    const double dt = ext.dt();
    const int acc = zm_accuracy(m);
    std::vector<double> jumps(m, 0.0);
    for (double b : extension_breakpoints(m, tau)) {
        const int nl = static_cast<int>(std::floor(b / dt + 1e-9));
        const int nr = static_cast<int>(std::ceil(b / dt - 1e-9));
        for (int j = 0; j < m; ++j) {
            const int s = j + acc;
            const Coeffs zero(ext.values[0].size(), 0.0);
            // outside [0, 2 tau] the extension is identically zero
            const Coeffs left = nl - s + 1 < 0 ? zero
                                               : combine(ext, nl - s + 1, cached_weights(s - 1, s, j), std::pow(dt, -j));
            const Coeffs right = nr + s - 1 > N2 ? zero : combine(ext, nr, cached_weights(0, s, j), std::pow(dt, -j));
            Coeffs d(left.size());
            for (std::size_t i = 0; i < d.size(); ++i) d[i] = left[i] - right[i];
            jumps[j] = std::max(jumps[j], sobolev_norm(d, 0.0));
        }
    }
    return jumps;
}

// ---------------------------------------------------------------------------
// Ensembles and the trace constants
// ---------------------------------------------------------------------------

void EnsembleSpec::validate() const {
    if (members < 1) throw InputError("ensemble: empty ensemble");
    if (K < 1) throw InputError("ensemble: mode cutoff must be >= 1");
    if (base_steps < 16) throw InputError("ensemble: base_steps must be >= 16");
}

int EnsembleSpec::steps(double tau) const { return base_steps * std::max(1, static_cast<int>(std::ceil(tau))); }

namespace {

std::uint64_t member_seed(std::uint64_t seed, int i) {
    std::uint64_t z = seed * 0x2545f4914f6cdd1dULL + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(i + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

struct Profile {
    std::complex<double> amp;
    double b[3], phase[3];
};

double profile_value(const Profile& p, double x, int zero_power) {
    double s = 0.0;
    for (int q = 0; q < 3; ++q) s += p.b[q] * std::cos(q * std::numbers::pi * x + p.phase[q]);
    return s * std::pow(x, zero_power);
}

}  // namespace

std::vector<HilbertScaleSignal> make_ensemble(const EnsembleSpec& spec, int m, double tau) {
    spec.validate();
    if (!(tau > 0.0)) throw InputError("ensemble: tau must be positive");
    const int K = spec.K, N = spec.steps(tau);
    std::vector<int> single;
    for (int k : {0, 1, 2, 4, 8, 16, 32, 64, 128, 256})
        if (k <= K) single.push_back(k);
    const int zp = spec.zero_traces ? m : 0;
    std::vector<HilbertScaleSignal> out;
    for (int i = 0; i < spec.members; ++i) {
        Rng rng(member_seed(spec.seed, i));
        std::vector<std::pair<int, Profile>> modes;
        auto draw = [&](int k, double scale) {
            Profile p;
            p.amp = scale * std::complex<double>(rng.normal(), k == 0 ? 0.0 : rng.normal());
            for (int q = 0; q < 3; ++q) {
                p.b[q] = rng.normal() / (1.0 + q);
                p.phase[q] = rng.uniform(0, 2 * std::numbers::pi);
            }
            modes.emplace_back(k, p);
        };
        switch (i % 3) {
            case 0:
                draw(single[(i / 3) % single.size()], 1.0);
                break;
            case 1:
                for (int k = 0; k <= K; ++k) draw(k, std::pow(1.0 + double(k) * k, -0.5 * m));
                break;
            default:
                for (int k = std::max(1, K / 4); k <= K; ++k) draw(k, 1.0);
                break;
        }
        HilbertScaleSignal f;
        f.tau = tau;
        f.K = K;
        f.values.assign(N + 1, Coeffs(2 * K + 1, 0.0));
        for (int n = 0; n <= N; ++n) {
            const double x = static_cast<double>(n) / N;
            for (const auto& [k, p] : modes) {
                const std::complex<double> c = p.amp * profile_value(p, x, zp);
                f.values[n][K + k] += c;
                if (k != 0) f.values[n][K - k] += std::conj(c);
            }
        }
        out.push_back(std::move(f));
    }
    return out;
}

HilbertScaleSignal sine_mode_signal(double tau, int K, int k, std::complex<double> c, int steps) {
    HilbertScaleSignal f;
    f.tau = tau;
    f.K = K;
    f.values.assign(steps + 1, Coeffs(2 * K + 1, 0.0));
    for (int n = 0; n <= steps; ++n) f.values[n][K + k] = c * std::sin(std::numbers::pi * n / steps);
    return f;
}

namespace {

struct MemberNorms {
    double L2V, L2Hm, LinfV, LinfHm, Zm, traces;
    std::vector<double> sup_j, l2_j;  // sup ||d^j f||_{theta_j}, ||d^j f||_{L2([H,V]_{1-j/m})}
};

MemberNorms member_norms(const HilbertScaleSignal& f, int m) {
    const int acc = zm_accuracy(m);
    MemberNorms r;
    const auto dm = derivative(f, m, acc);
    r.L2V = l2_time(f, 1.0, m);
    r.L2Hm = l2_time(dm, 0.0, m);
    r.LinfV = sup_time(f, 1.0, m);
    r.LinfHm = sup_time(dm, 0.0, m);
    r.Zm = std::sqrt(r.L2V * r.L2V + r.L2Hm * r.L2Hm);
    r.traces = 0.0;
    for (int j = 0; j < m; ++j) {
        const double th = 1.0 - (2.0 * j + 1.0) / (2.0 * m);
        r.traces += interpolation_norm(initial_derivative(f, j, acc), th, m);
        const auto dj = derivative(f, j, acc);
        r.sup_j.push_back(sup_time(dj, th, m));
        r.l2_j.push_back(l2_time(dj, 1.0 - double(j) / m, m));
    }
    return r;
}

double guarded_ratio(double lhs, double rhs) { return lhs == 0.0 ? 0.0 : lhs / std::max(rhs, kResidualGuard); }

}  // namespace

std::vector<TraceConstantRecord> verify_trace_constants(const EnsembleSpec& spec, int m,
                                                        const std::vector<double>& taus) {
    spec.validate();
    if (m < 1) throw InputError("trace constants: m must be >= 1");
    std::vector<TraceConstantRecord> out;
    for (double tau : taus) {
        EnsembleSpec zs = spec, gs = spec;
        zs.zero_traces = true;
        gs.zero_traces = false;
        std::vector<MemberNorms> zn, gn;
        for (const auto& f : make_ensemble(zs, m, tau)) zn.push_back(member_norms(f, m));
        for (const auto& f : make_ensemble(gs, m, tau)) gn.push_back(member_norms(f, m));
        for (int j = 0; j < m; ++j) {
            auto worst = [&](const std::string& name, const std::vector<MemberNorms>& ens, auto&& lhs, auto&& rhs) {
                TraceConstantRecord rec;
                rec.theorem = name;
                rec.m = m;
                rec.j = j;
                rec.tau = tau;
                for (std::size_t i = 0; i < ens.size(); ++i) {
                    const double l = lhs(ens[i]), r = rhs(ens[i]);
                    const double q = guarded_ratio(l, r);
                    if (rec.member < 0 || q > rec.ratio) {
                        rec.lhs = l;
                        rec.rhs = r;
                        rec.ratio = q;
                        rec.member = static_cast<int>(i);
                    }
                }
                out.push_back(rec);
            };
            const double t2m = std::pow(tau, 2 * m);
            auto sup = [j](const MemberNorms& n) { return n.sup_j[j]; };
            auto l2j = [j](const MemberNorms& n) { return n.l2_j[j]; };
            auto l2scaled = [&](const MemberNorms& n) { return std::sqrt(n.L2V * n.L2V + t2m * n.L2Hm * n.L2Hm); };
            worst("B3", zn, sup, [](const MemberNorms& n) { return n.Zm; });
            worst("B4", gn, sup, [](const MemberNorms& n) { return n.Zm + n.traces; });
            worst("B4s", gn, sup, [&](const MemberNorms& n) { return std::pow(tau, -j - 0.5) * l2scaled(n); });
            worst("B5", gn, sup, [&](const MemberNorms& n) {
                return std::pow(tau, -j) * std::sqrt(n.LinfV * n.LinfV + t2m * n.LinfHm * n.LinfHm);
            });
            worst("B7", gn, l2j, [](const MemberNorms& n) { return n.Zm + n.traces; });
            worst("B8", gn, l2j, [&](const MemberNorms& n) { return std::pow(tau, 1.0 - j) * l2scaled(n); });
            worst("B8c", gn, l2j, [&](const MemberNorms& n) { return std::pow(tau, -j) * l2scaled(n); });
        }
    }
    return out;
}

}  // namespace navtrace::timescale
