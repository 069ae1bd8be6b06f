#pragma once

#include "navtrace/common.hpp"
#include "navtrace/dynamics.hpp"
#include "navtrace/elliptic.hpp"
#include "navtrace/geometry.hpp"
#include "navtrace/spaces.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace navtrace::traces {

struct BoundaryPoint {
    int facet = -1;
    int cell = -1;
    Vec3 x = Vec3::Zero();
    Vec3 normal = Vec3::Zero();
    double weight = 0.0;
    std::array<double, 4> lambda{};  ///< barycentric coordinates in the adjacent cell
    std::array<double, 3> facet_lambda{};  ///< barycentric coordinates in the facet
};

/// Facet Gauss points on one boundary component with the per-facet operators that map
/// point values to surface gradients (polynomial fit per facet).
class BoundaryQuadrature {
public:
    BoundaryQuadrature(const spaces::FeSpace& space, geometry::BoundaryTag tag, int degree = 4);

    const spaces::FeSpace& space() const { return *space_; }
    geometry::BoundaryTag tag() const { return tag_; }
    const std::vector<BoundaryPoint>& points() const { return points_; }
    std::size_t size() const { return points_.size(); }
    int points_per_facet() const { return npf_; }
    std::size_t num_facets() const { return facets_.size(); }
    const std::vector<int>& facets() const { return facets_; }
    double measure() const;

    /// Surface gradient at point p (global index) of the facet-local polynomial fit of the
    /// scalar values `vals` (indexed like points()).
    Vec3 surface_gradient(std::size_t p, const double* vals, std::size_t stride = 1) const;

private:
    const spaces::FeSpace* space_;
    geometry::BoundaryTag tag_;
    int npf_ = 0;
    std::vector<int> facets_;
    std::vector<BoundaryPoint> points_;
    std::vector<Eigen::MatrixXd> grad_ops_;  // per facet: (3 * npf) x npf
};

/// Vector-valued samples at boundary quadrature points, one row per time step.
struct BoundaryTrace {
    const BoundaryQuadrature* quad = nullptr;
    dynamics::TimeGrid grid;
    std::vector<std::vector<Vec3>> values;  ///< [step][point]

    int steps() const { return static_cast<int>(values.size()); }
};

/// P(u_n) n from the adjacent cell at every point and step.
BoundaryTrace stress_vector_trace(const dynamics::Trajectory& traj, const spaces::LameParameters& lame,
                                  const BoundaryQuadrature& quad);
/// P(v_n) n with v the velocity record.
BoundaryTrace stress_velocity_trace(const dynamics::Trajectory& traj, const spaces::LameParameters& lame,
                                    const BoundaryQuadrature& quad);
/// Samples of an analytic function.
BoundaryTrace sample_trace(const SpaceTimeFn& f, const BoundaryQuadrature& quad, const dynamics::TimeGrid& grid);
/// Centered finite-difference time derivative of a trace (second order, one-sided at the ends).
BoundaryTrace time_derivative(const BoundaryTrace& trace);

// Snapshot norms (one time step).
double l2_snapshot(const BoundaryQuadrature& quad, const std::vector<Vec3>& values);
double h1_seminorm_sq_snapshot(const BoundaryQuadrature& quad, const std::vector<Vec3>& values);
double norm_H1_snapshot(const BoundaryQuadrature& quad, const std::vector<Vec3>& values);
/// Gagliardo seminorm squared over distinct-facet point pairs.
double hs_seminorm_sq_snapshot(const BoundaryQuadrature& quad, const std::vector<Vec3>& values, double s);
double norm_Hs_gamma0(const BoundaryQuadrature& quad, const std::vector<Vec3>& values, double s);

// Space-time norms (trapezoidal rule in time).
double norm_L2_gamma0(const BoundaryTrace& trace);
double norm_H1_gamma0(const BoundaryTrace& trace);   ///< L2(0,T; H1(Gamma0))
double norm_H1T_L2G0(const BoundaryTrace& trace);    ///< H1(0,T; L2(Gamma0)), FD in time

/// Discrete H^{1*}(Gamma0 x (0,T)) norm: boundary P1 in space (on Gamma0 vertices) times
/// interior time hats; the Gram is Mt x (Ms + Ss) + St x Ms per component.
class H1StarDual {
public:
    H1StarDual(const BoundaryQuadrature& quad, const dynamics::TimeGrid& grid);

    double norm(const BoundaryTrace& trace) const;
    /// Pairings of the trace with every basis function, ordered (time, vertex, component).
    Vector load(const BoundaryTrace& trace) const;
    double dual_norm(const Vector& load) const;
    double primal_norm(const Vector& coeffs) const;
    const SpMat& gram() const { return gram_; }

    int num_times() const { return grid_.N - 1; }
    int num_vertices() const { return static_cast<int>(vertices_.size()); }
    int dim() const { return quad_->space().dim(); }
    int index(int time, int vertex, int comp) const { return (time * num_vertices() + vertex) * dim() + comp; }
    int size() const { return num_times() * num_vertices() * dim(); }
    /// Hat function of interior time node k (1-based grid node k + 1) at grid node n.
    double time_hat(int k, int n) const { return n == k + 1 ? 1.0 : 0.0; }
    /// FE coefficient vector equal to the P1 boundary function of `vertex` in component
    /// `comp` at Gamma0 dofs (midpoints interpolate linearly) and zero elsewhere.
    Vector boundary_datum(int vertex, int comp) const;

private:
    const BoundaryQuadrature* quad_;
    dynamics::TimeGrid grid_;
    std::vector<int> vertices_;        // mesh node ids
    std::vector<int> vertex_index_;    // mesh node -> local or -1
    std::vector<std::vector<std::pair<int, double>>> point_basis_;  // per point: (vertex, value)
    SpMat gram_;
    std::unique_ptr<elliptic::RieszMap> riesz_;
};

// Bochner norms of a scalar series of spatial norms, trapezoidal-in-time.
struct SeriesNorms {
    double L1 = 0.0, L2 = 0.0, Linf = 0.0;
};
SeriesNorms bochner(const std::vector<double>& spatial_norms, const dynamics::TimeGrid& grid);
/// sqrt(x_n^T G x_n) for every step.
std::vector<double> norm_series(const std::vector<Vector>& fields, const SpMat& gram);
/// H^k(0,T; X) norm via FD time derivatives of the coefficient records.
double hk_time_norm(const std::vector<Vector>& fields, const SpMat& gram, const dynamics::TimeGrid& grid, int k);

/// Named norm values with run metadata; names come from a fixed enumeration.
class NormReport {
public:
    static const std::vector<std::string>& names();
    void set(const std::string& name, double value);
    double get(const std::string& name) const;
    bool has(const std::string& name) const { return values_.count(name) != 0; }
    void set_meta(const std::string& key, const std::string& value) { meta_[key] = value; }
    void set_meta(const std::string& key, double value);
    const std::map<std::string, double>& values() const { return values_; }
    const std::map<std::string, std::string>& meta() const { return meta_; }
    std::string to_json() const;
    std::string to_csv() const;

private:
    std::map<std::string, double> values_;
    std::map<std::string, std::string> meta_;
};

/// Full Bochner/trace report for a trajectory (norm names of the enumeration).
NormReport trajectory_report(const dynamics::Trajectory& traj, const spaces::AssembledForms& forms,
                             const spaces::LameParameters& lame, const BoundaryQuadrature& quad);

/// "step,facet,point,c0,c1[,c2]" rows.
void write_trace_csv(std::ostream& os, const BoundaryTrace& trace);

}  // namespace navtrace::traces
