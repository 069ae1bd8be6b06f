#pragma once

#include "navtrace/common.hpp"
#include "navtrace/spaces.hpp"

#include <Eigen/SparseCholesky>

#include <memory>
#include <string>
#include <vector>

namespace navtrace::elliptic {

enum class LiftKind { Harmonic, Elasticity };

const char* lift_name(LiftKind kind);

/// Componentwise discrete Laplace extension: w = g at Gamma0 dofs, w = 0 at Gamma1 dofs,
/// discrete harmonic at the remaining scalar nodes. The factorization is built once.
class HarmonicLift {
public:
    explicit HarmonicLift(const spaces::FeSpace& space);

    /// `boundary` is a full-size vector; only its Gamma0 entries are read.
    Vector lift(const Vector& boundary) const;
    Vector lift(const SpaceFn& g) const;

    /// max |(L w)_i| / max |L| |w| over interior scalar rows, per component.
    double interior_residual(const Vector& w) const;

private:
    const spaces::FeSpace* space_;
    SpMat laplacian_;
    std::vector<int> interior_;       // scalar nodes neither on Gamma0 nor Gamma1
    std::vector<int> interior_index_; // scalar -> position in interior_ or -1
    SpMat coupling_;                  // L(interior, Gamma0 nodes) in scalar numbering
    std::vector<int> gamma0_nodes_;
    Eigen::SimplicialLDLT<SpMat> solver_;
};

/// Solves with the elasticity operator on the Gamma0-constrained space (natural condition on
/// Gamma1). Shares one factorization of K_ff.
class ElasticityLift {
public:
    ElasticityLift(const spaces::FeSpace& space, const SpMat& stiffness);

    /// Weak form of div P(u) = rhs, u = 0 on Gamma0, P(u) n = 0 on Gamma1:
    /// K_ff u_f = -load_f with load the assembled vector of rhs.
    Vector solve(const Vector& load) const;

    /// Elastic extension of Gamma0 data: div P(w) = 0, w = g on Gamma0, P(w) n = 0 on Gamma1.
    Vector lift(const Vector& boundary) const;

private:
    const spaces::FeSpace* space_;
    SpMat stiffness_;
    Eigen::SimplicialLDLT<SpMat> solver_;
};

/// Discrete dual norm sqrt(f^T G^{-1} f) with a shared Cholesky factorization.
class RieszMap {
public:
    explicit RieszMap(const SpMat& gram);
    double dual_norm(const Vector& f) const;
    Vector representer(const Vector& f) const;  ///< G^{-1} f
    int size() const { return n_; }

private:
    int n_;
    Eigen::SimplicialLLT<SpMat> llt_;
};

double riesz_dual_norm(const Vector& f, const SpMat& gram);

}  // namespace navtrace::elliptic
