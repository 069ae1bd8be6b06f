#pragma once

#include "navtrace/common.hpp"

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

namespace navtrace::geometry {

enum class BoundaryTag { Gamma0 = 0, Gamma1 = 1 };

const char* tag_name(BoundaryTag tag);

/// Annulus (d = 2) or spherical shell (d = 3) between radii r0 < r1, refinement level L.
struct DomainSpec {
    int dimension = 2;
    double inner_radius = 1.0;
    double outer_radius = 2.0;
    int level = 0;

    void validate() const;
};

struct Facet {
    std::array<int, 3> nodes{};  ///< d node indices (third unused in 2D)
    BoundaryTag tag = BoundaryTag::Gamma0;
    int cell = -1;               ///< adjacent cell
    int local_face = -1;         ///< index of the cell vertex opposite to the facet
    Vec3 normal = Vec3::Zero();  ///< unit outward normal with respect to the domain
    double measure = 0.0;        ///< length (2D) or area (3D)
};

struct Mesh {
    int dimension = 2;
    double inner_radius = 1.0;
    double outer_radius = 2.0;
    int level = 0;
    std::vector<Vec3> nodes;                 ///< z = 0 in 2D
    std::vector<std::array<int, 4>> cells;   ///< d+1 node indices, positive orientation
    std::vector<Facet> facets;               ///< boundary facets only

    int vertices_per_cell() const { return dimension + 1; }
    std::size_t num_cells() const { return cells.size(); }

    /// Volume (area in 2D) of cell c.
    double cell_volume(std::size_t c) const;
    /// Largest edge length over all cells.
    double max_element_diameter() const;
    /// Sum of facet measures with the tag.
    double boundary_measure(BoundaryTag tag) const;
    /// Indices of facets carrying the tag, in storage order.
    std::vector<int> facets_with_tag(BoundaryTag tag) const;
};

/// Structured annulus / icosphere-based shell, straight-sided simplices.
Mesh build_mesh(const DomainSpec& spec);

/// Annulus with explicit angular and radial resolution (used for thin boundary-only studies).
Mesh build_annulus(double r0, double r1, int n_theta, int n_radial);

/// Recomputes facet adjacency, orientation and normals from nodes, cells and facet tags.
/// Used by the generators and by the reader.
void finalize_mesh(Mesh& mesh);

/// Applies x -> R x to all nodes and recomputes normals.
void rotate_mesh(Mesh& mesh, const Mat3& rotation);

/// Consistency checks listed on the Mesh type; throws NumericalError on violation.
void validate_mesh(const Mesh& mesh);

void write_mesh(std::ostream& os, const Mesh& mesh);
Mesh read_mesh(std::istream& is);

// ---------------------------------------------------------------------------
// Analytic auxiliary fields
// ---------------------------------------------------------------------------

/// Quintic smoothstep profile chi with chi(r0) = 1, chi(r1) = 0, clamped outside [r0, r1].
struct RadialProfile {
    double r0 = 1.0, r1 = 2.0;
    double value(double r) const;
    double derivative(double r) const;
};

/// h(x) = -(x/|x|) chi(|x|): equals the outward normal on the inner sphere, zero on the outer.
struct MultiplierProfile {
    int dimension = 2;
    RadialProfile chi;
    Vec3 value(const Vec3& x) const;
    /// Jacobian (dh_i/dx_j) in the leading d x d block.
    Mat3 gradient(const Vec3& x) const;
};

/// Scalar cutoff: 1 on [r0, r0 + (r1-r0)/4], 0 on [r1 - (r1-r0)/4, r1], quintic in between.
struct Cutoff {
    double r0 = 1.0, r1 = 2.0;
    double value(const Vec3& x) const;
};

/// Tangential frames on spheres |x| = const.
///
/// d = 2: a single field b1 = (-x2, x1)/|x|.
/// d = 3: chart A uses spherical angles around the x3 axis (singular at x = +-|x| e3),
///        chart B uses the same construction around the x1 axis (singular at +-|x| e1).
///        Each chart provides the orthonormal pair (e_theta, e_phi); the partition of
///        unity weights are w_A = rho_A^2 / (rho_A^2 + rho_B^2) with rho_A the distance
///        to the x3 axis and rho_B the distance to the x1 axis (both normalized by |x|).
struct TangentialFrames {
    int dimension = 2;

    int num_charts() const { return dimension == 2 ? 1 : 2; }
    /// Weight of chart c at x (weights sum to one).
    double chart_weight(int chart, const Vec3& x) const;
    /// The d-1 tangent vectors of chart c at x (undefined where the weight vanishes).
    std::array<Vec3, 2> tangents(int chart, const Vec3& x) const;
    /// Tangents from the chart with the largest weight (the pole of chart A uses chart B).
    std::array<Vec3, 2> dominant_tangents(const Vec3& x) const;
};

}  // namespace navtrace::geometry
