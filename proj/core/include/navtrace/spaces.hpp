#pragma once

#include "navtrace/common.hpp"
#include "navtrace/geometry.hpp"
#include "navtrace/quadrature.hpp"

#include <Eigen/Dense>

#include <array>
#include <iosfwd>
#include <memory>
#include <vector>

namespace navtrace::spaces {

struct LameParameters {
    double mu = 1.0;
    double lambda = 1.0;
    void validate() const;
};

/// P(u) = 2 mu e(u) + lambda (div u) I_d from a displacement gradient (leading d x d block).
Mat3 piola_stress(const Mat3& grad, const LameParameters& lame, int dim);

/// Geometry of one simplex: barycentric gradients and measure.
struct CellGeometry {
    std::array<Vec3, 4> grad_lambda{};
    Vec3 origin = Vec3::Zero();
    Mat3 inverse_jacobian = Mat3::Zero();  ///< maps x - origin to reference coordinates
    double volume = 0.0;

    /// Barycentric coordinates (lambda_0..lambda_d) of a physical point.
    std::array<double, 4> barycentric(const Vec3& x, int dim) const;
    Vec3 reference_to_physical(const Vec3& xi, const std::array<Vec3, 4>& vertices, int dim) const;
};

/// Vector-valued continuous Lagrange space of degree 1 or 2 on a simplicial mesh.
///
/// Scalar dofs are the mesh vertices followed (for p = 2) by the edges in order of first
/// appearance. Vector dofs are interleaved: dof = scalar * d + component.
class FeSpace {
public:
    FeSpace(const geometry::Mesh& mesh, int degree);

    const geometry::Mesh& mesh() const { return *mesh_; }
    int degree() const { return degree_; }
    int dim() const { return dim_; }
    int num_scalar() const { return static_cast<int>(nodes_.size()); }
    int num_dofs() const { return dim_ * num_scalar(); }
    int local_size() const { return nloc_; }
    int vdof(int scalar, int comp) const { return scalar * dim_ + comp; }

    const int* cell_dofs(std::size_t c) const { return &cell_dofs_[c * nloc_]; }
    const CellGeometry& cell_geometry(std::size_t c) const { return geometry_[c]; }
    const Vec3& node(int scalar) const { return nodes_[scalar]; }
    const std::vector<Vec3>& nodes() const { return nodes_; }

    /// Scalar dofs of a boundary facet (its vertices, then its edges for p = 2).
    const std::vector<int>& facet_dofs(std::size_t f) const { return facet_dofs_[f]; }

    bool on_gamma0(int scalar) const { return on_gamma0_[scalar] != 0; }
    bool on_gamma1(int scalar) const { return on_gamma1_[scalar] != 0; }

    /// Vector dofs supported on Gamma0 (sorted) and their complement.
    const std::vector<int>& constrained() const { return constrained_; }
    const std::vector<int>& free() const { return free_; }
    /// Position of a full dof inside free(), or -1.
    int free_index(int dof) const { return free_index_[dof]; }

    /// Vector dofs supported on Gamma1 (sorted).
    std::vector<int> gamma1_dofs() const;

    /// Locates the cell containing x (brute force); returns -1 if x is outside.
    int locate(const Vec3& x, std::array<double, 4>* lambda = nullptr) const;

private:
    const geometry::Mesh* mesh_;
    int degree_;
    int dim_;
    int nloc_;
    std::vector<Vec3> nodes_;
    std::vector<int> cell_dofs_;
    std::vector<CellGeometry> geometry_;
    std::vector<std::vector<int>> facet_dofs_;
    std::vector<char> on_gamma0_, on_gamma1_;
    std::vector<int> constrained_, free_, free_index_;
};

/// Local basis on the reference simplex in barycentric form.
struct LocalBasis {
    int dim = 2, degree = 1;
    int size() const;
    /// Values N_a at barycentric coordinates.
    void values(const std::array<double, 4>& lam, double* N) const;
    /// Gradients dN_a given barycentric gradients.
    void gradients(const std::array<double, 4>& lam, const std::array<Vec3, 4>& glam, Vec3* dN) const;
    /// Hessians (constant per cell for p <= 2).
    void hessians(const std::array<Vec3, 4>& glam, Mat3* HN) const;
    /// Vertex pair of local edge e.
    static std::array<int, 2> edge(int dim, int e);
};

/// Value and gradient of a field (coefficients on the space) at a point of cell c.
struct PointValue {
    Vec3 value = Vec3::Zero();
    Mat3 gradient = Mat3::Zero();  ///< gradient(i, j) = d u_i / d x_j
};
PointValue evaluate(const FeSpace& space, const Vector& coeffs, std::size_t cell, const std::array<double, 4>& lam);

/// Broken second derivatives: sum over components of |D^2 u_i|^2 at a point of cell c.
double hessian_norm_sq(const FeSpace& space, const Vector& coeffs, std::size_t cell);

/// A coefficient vector tied to a space, with an optional time stamp.
struct Field {
    const FeSpace* space = nullptr;
    Vector coeffs;
    double time = 0.0;
    bool has_time = false;
};

/// P(u) at an arbitrary point; throws InputError if the point lies outside the mesh.
Mat3 apply_piola_stress(const Field& u, const LameParameters& lame, const Vec3& point);

/// Nodal interpolation of a vector function.
Vector interpolate(const FeSpace& space, const SpaceFn& f);

/// FE interpolant of h = -(x/|x|) chi(|x|) (degree of the space). Gamma0 dofs carry the exact
/// normal -x/|x| of the node, Gamma1 dofs are exactly zero.
Vector build_multiplier_field(const FeSpace& space);

struct AssembledForms {
    SpMat mass;            ///< vector L2 mass
    SpMat stiffness;       ///< B(v, w)
    SpMat gram;            ///< vector H1 Gram (mass + gradient part)
    SpMat boundary_mass;   ///< vector L2(Gamma0) mass
    int quadrature_degree = 0;
};

SpMat assemble_mass(const FeSpace& space, int qdeg = -1);
SpMat assemble_stiffness(const FeSpace& space, const LameParameters& lame, int qdeg = -1);
SpMat assemble_h1_gram(const FeSpace& space, int qdeg = -1);
SpMat assemble_scalar_laplacian(const FeSpace& space, int qdeg = -1);
SpMat assemble_boundary_mass(const FeSpace& space, geometry::BoundaryTag tag, int qdeg = -1);
AssembledForms assemble_forms(const FeSpace& space, const LameParameters& lame);

/// load_i = int F(x, t) . phi_i dx. Throws NumericalError on non-finite F values.
Vector assemble_load(const FeSpace& space, const SpaceTimeFn& F, double t, int qdeg = -1);

/// Restriction of a square matrix to the free dofs.
SpMat restrict_free(const FeSpace& space, const SpMat& A);
Vector restrict_free(const FeSpace& space, const Vector& v);
Vector extend_free(const FeSpace& space, const Vector& vf);

/// Generalised eigen-pairs of the pencil (A, B) via Lanczos with full B-reorthogonalisation.
struct EigenPairs {
    Vector values;
    Eigen::MatrixXd vectors;  ///< B-normalised columns
};
/// `count` eigenvalues closest to and above `shift` (requires A - shift B positive definite).
EigenPairs smallest_eigenpairs(const SpMat& A, const SpMat& B, int count, double shift = 0.0, int krylov = 0);
/// Largest eigenvalue of the pencil.
double largest_eigenvalue(const SpMat& A, const SpMat& B, int krylov = 0);

/// Korn constants (k1, k2): extreme generalised eigenvalues of (K, G) on the constrained
/// subspace. Throws NumericalError if k1 <= 0.
std::pair<double, double> estimate_korn_constants(const FeSpace& space, const AssembledForms& forms);
/// Smallest eigenvalue of (K, G) on the full (unconstrained) space; ~0 because of rigid modes.
double unconstrained_smallest_eigenvalue(const AssembledForms& forms);

/// Coordinate-format text export: "row col value" per line, row-major order.
void write_coo(std::ostream& os, const SpMat& A);

}  // namespace navtrace::spaces
