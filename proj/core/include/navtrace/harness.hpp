#pragma once

// Experiment orchestration: data ensembles, LHS/RHS of each estimate, T- and
// refinement sweeps, and the report bundle.

#include "navtrace/analytic.hpp"
#include "navtrace/common.hpp"
#include "navtrace/dynamics.hpp"
#include "navtrace/elliptic.hpp"
#include "navtrace/geometry.hpp"
#include "navtrace/spaces.hpp"
#include "navtrace/traces.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace navtrace::harness {

enum class TheoremId { T31, T34, T35, L37, T38, T39k1, T310, AppA, AppB, MultId, Transpose };

const std::vector<TheoremId>& all_theorems();
const char* theorem_name(TheoremId id);
/// Inverse of theorem_name; throws InputError for unknown names.
TheoremId parse_theorem(const std::string& name);

/// c(T) = T^-1 max{1, T^2} (1 + T).
double c_of_T(double T);

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct Thresholds {
    double slope_max = 0.05;          ///< log-log slope rule
    double band_max = 2.0;            ///< max/min of sup-ratios over a T-sweep
    double cauchy_tol = 0.10;         ///< relative change across the last two levels
    double route_tol = 0.10;          ///< T3.5 two-route agreement
    double exponent_lo = 0.35, exponent_hi = 0.65;
    double identity_tol = 1e-12;
    double energy_tol = 1e-10;
    double multiplier_decrease = 1.5;
    double transpose_decrease = 2.0;
    double alpha_tol = 1e-12;
    double isometry_tol = 1e-10;
    /// LHS <= ratio_max[theorem] * RHS for every record (calibrated constants).
    std::map<std::string, double> ratio_max;

    double ratio_limit(const std::string& theorem) const;
};

/// Per-experiment sweep lists.
struct ExperimentPlan {
    std::vector<double> T_list;
    std::vector<int> levels;
    int members = 8;  ///< ensemble members (seeds) used
};

struct Config {
    geometry::DomainSpec domain;  ///< level unused; levels come from the plans
    int degree = 2;
    int steps_per_unit = 8;  ///< N = steps_per_unit * T * 2^level
    elliptic::LiftKind lift = elliptic::LiftKind::Harmonic;
    spaces::LameParameters lame{1.0, 1.0};
    std::uint64_t seed = 1;  ///< base seed; member seeds are derived from it
    int smoothness = 2;      ///< spectral decay exponent of ensemble amplitudes
    int route_members = 2;   ///< members used by the T3.5 pairing route
    std::vector<TheoremId> enabled;
    std::map<TheoremId, ExperimentPlan> plans;
    Thresholds thresholds;
    std::string output_dir = "navtrace-out";
    std::vector<std::string> formats{"json", "csv"};
    int workers = 1;

    /// Default configuration (matches configs/default.yaml).
    static Config defaults();
    void validate() const;
};

/// Everything a single experiment needs.
struct ExperimentSpec {
    TheoremId theorem = TheoremId::T31;
    geometry::DomainSpec domain;
    int degree = 2;
    int steps_per_unit = 8;
    elliptic::LiftKind lift = elliptic::LiftKind::Harmonic;
    spaces::LameParameters lame{1.0, 1.0};
    std::vector<std::uint64_t> seeds;
    int smoothness = 2;
    int route_members = 2;
    std::vector<double> T_list;
    std::vector<int> levels;
    Thresholds thresholds;
    int workers = 1;

    int steps(double T, int level) const;
    void validate() const;
};

ExperimentSpec make_spec(const Config& config, TheoremId id);

/// Member seed i derived from a base seed (splitmix64).
std::uint64_t member_seed(std::uint64_t base, int i);

// ---------------------------------------------------------------------------
// Exact-domain quadrature and analytic data norms
// ---------------------------------------------------------------------------

struct PointRule {
    std::vector<Vec3> x;
    std::vector<double> w;
    double sum(const std::function<double(const Vec3&)>& f) const;
};

/// Circle (trapezoid, n points) or sphere (n Gauss-Legendre latitudes x 2n longitudes).
PointRule sphere_rule(int dim, double radius, int n);
/// Annulus / shell r0 < |x| < r1: Gauss in r times sphere_rule.
PointRule shell_rule(int dim, double r0, double r1, int nr, int n);
/// Composite 6-point Gauss rule on [0, T], panels of length <= 1/2.
PointRule time_rule(double T);

/// Squared norms of a field on a sphere of radius R: L2, surface H1 and surface H2.
struct SurfaceNormsSq {
    double l2 = 0.0, h1 = 0.0, h2 = 0.0;
};
SurfaceNormsSq surface_norms_sq(const analytic::AnalyticField& u, double t, const PointRule& sphere, double R);

/// Space-time data norms of a manufactured solution u on the exact annulus/shell:
/// F = u_tt - div P(u), u0 = u(0), u1 = u_t(0), g = u on Gamma0.
struct DataNorms {
    double F_L1L2 = 0, F_L1H1 = 0, Ft_L1L2 = 0, F_L2H1 = 0, F_H1L2 = 0, F0_Hhalf = 0;
    double u0_H1 = 0, u0_H2 = 0, u1_L2 = 0, u1_H1 = 0;
    double g_L2L2 = 0, g_H1L2 = 0, g_L2H1 = 0, g_L2H2 = 0, g_H2L2 = 0;

    /// Data of the strong-solution estimates (shared by the k = 1 results).
    double strong() const { return F_L1H1 + Ft_L1L2 + u0_H2 + u1_H1 + g_L2H2 + g_H2L2; }
    /// Right side of the T-independent estimate for k = 1, with the initial-trace term
    /// ||F(0)||_{L1(0,T;H^{1/2})} = T ||F(0)||_{H^{1/2}} as printed.
    double t_independent(double T) const {
        return F_L2H1 + F_H1L2 + T * F0_Hhalf + u0_H2 + u1_H1 + g_L2H2 + g_H2L2;
    }
    /// Weak-solution data with the split g-norm.
    double weak() const { return F_L1L2 + u0_H1 + u1_L2 + g_H1L2 + g_L2H1; }
};
DataNorms manufactured_data_norms(const analytic::AnalyticField& u, const spaces::LameParameters& lame, double r0,
                                  double r1, double T);

/// Boundary-only norms of an analytic datum g on the exact Gamma0.
struct BoundaryDataNorms {
    double L2L2 = 0, H1L2 = 0, L2H1 = 0;
};
BoundaryDataNorms boundary_data_norms(const analytic::AnalyticField& g, double r0, double T);

// ---------------------------------------------------------------------------
// Ensembles
// ---------------------------------------------------------------------------

/// Strong manufactured solutions u = sum_q a_q cos(w_q t + phi_q) e_q s_q(x) ((r1 - |x|)/(r1 - r0))^2.
/// The radial factor makes u and grad u vanish on Gamma1, so every compatibility condition
/// of the strong theory holds and P(u) n = 0 on Gamma1 for all t.
struct ManufacturedMode {
    double amplitude = 1.0, omega = 1.0, phase = 0.0;
    Vec3 direction = Vec3::UnitX();
    Vec3 wave = Vec3::Zero();
    double wave_phase = 0.0;
};
struct ManufacturedSolution {
    int dim = 2;
    double r0 = 1.0, r1 = 2.0;
    std::vector<ManufacturedMode> modes;

    analytic::AnalyticField field() const;
    /// Exact time derivative, again a member of the family.
    ManufacturedSolution differentiated() const;
};
ManufacturedSolution manufactured_member(int dim, double r0, double r1, std::uint64_t seed, int smoothness);

/// Compatible boundary waves g = sum_q a_q e_q cos(k_q s(x) - w_q t + phi_q), q = 0 being
/// the pure travelling wave cos(theta - t) (2D) or cos(x.e - t) (3D).
struct BoundaryWave {
    int dim = 2;
    std::vector<double> amplitude, k, omega, phase;
    std::vector<Vec3> direction, axis;
    bool standing = false;  ///< sin(w t) cos(k s + phi): vanishes at t = 0
    analytic::AnalyticField field() const;
};
BoundaryWave wave_member(int dim, std::uint64_t seed, int smoothness, bool standing);

/// Rough datum g = e cos(k s(x)) cos(w t).
struct RoughDatum {
    int dim = 2;
    int k = 1;
    double omega = 1.0;
    Vec3 direction = Vec3::UnitX();
    Vec3 axis = Vec3::UnitZ();
    analytic::AnalyticField field() const;
};
RoughDatum rough_member(int dim, std::uint64_t seed);

/// Stationary forcing F = sum_q a_q e_q (1 + cos(w_q.x + psi_q)/2) cos(nu_q t + phi_q), with
/// temporal frequencies nu_q in (0.2, 0.6) * omega_ref (below the lowest eigenfrequency when
/// omega_ref is that frequency).
struct StationaryForcing {
    int dim = 2;
    std::vector<double> amplitude, nu, phase, wave_phase;
    std::vector<Vec3> direction, wave;
    SpaceTimeFn function() const;
};
StationaryForcing forcing_member(int dim, std::uint64_t seed, double omega_ref, int smoothness);

/// Coefficients a_k ~ N(0,1) (1 + k)^-s of the lowest eigenmodes.
std::vector<double> mode_amplitudes(std::uint64_t seed, int count, int smoothness);

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct RatioRecord {
    std::string theorem;
    std::string variant;
    double T = 0.0;
    int level = 0;
    std::uint64_t seed = 0;
    double lhs = 0.0, rhs = 0.0, ratio = 0.0;
    std::string factor;  ///< "sqrtT", "c(T)" or "1"
    double factor_value = 1.0;
};

/// ratio = lhs / (rhs + guard).
RatioRecord make_record(const std::string& theorem, const std::string& variant, double T, int level,
                        std::uint64_t seed, double lhs, double data, const std::string& factor, double factor_value);

struct RatioReport {
    std::string theorem;
    std::vector<RatioRecord> records;
    std::map<std::string, double> summary;
    std::map<std::string, bool> flags;
    std::map<std::string, std::string> notes;
    std::vector<traces::NormReport> norms;
    std::map<std::string, std::string> tables;  ///< name -> CSV text

    bool passed() const;
    /// Sorts records by (theorem, T, level, seed, variant).
    void sort();
    std::string to_json() const;
    std::string records_csv() const;
};

/// Largest ratio per T over records of one variant at one level.
std::vector<double> sup_ratio_by_T(const RatioReport& report, const std::string& variant, int level,
                                   std::vector<double>* Ts = nullptr);

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

RatioReport run_T31(const ExperimentSpec& spec);
RatioReport run_T34(const ExperimentSpec& spec);
RatioReport run_T35(const ExperimentSpec& spec);
RatioReport run_L37(const ExperimentSpec& spec);
RatioReport run_T38(const ExperimentSpec& spec);
RatioReport run_T39k1(const ExperimentSpec& spec);
RatioReport run_T310(const ExperimentSpec& spec);
RatioReport run_AppA(const ExperimentSpec& spec);
RatioReport run_AppB(const ExperimentSpec& spec);
RatioReport run_MultId(const ExperimentSpec& spec);
RatioReport run_Transpose(const ExperimentSpec& spec);
RatioReport run_experiment(const ExperimentSpec& spec);

struct ErrorRecord {
    std::string theorem;
    std::string kind;  ///< "input" or "numerical" or "runtime"
    std::string message;
};

struct Bundle {
    std::vector<RatioReport> reports;
    std::vector<ErrorRecord> errors;
    std::map<std::string, std::string> meta;
    bool passed() const;
    /// Sorted-key JSON of all reports, errors and metadata.
    std::string to_json() const;
};

/// Runs every enabled experiment; sub-run failures become error records.
Bundle run_all(const Config& config);

/// Runs jobs on `workers` threads; results must be written to per-job slots. Exceptions are
/// rethrown in job order after all jobs finished.
void parallel_for(int count, int workers, const std::function<void(int)>& job);

}  // namespace navtrace::harness
