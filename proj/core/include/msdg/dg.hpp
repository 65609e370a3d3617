#pragma once

#include <functional>

#include <Eigen/Sparse>

#include "msdg/assembly.hpp"
#include "msdg/coefficient.hpp"
#include "msdg/grid.hpp"

namespace msdg {

using Vector = Eigen::VectorXd;

/// Assembled symmetric IPDG operator over the block-discontinuous fine
/// space: A = a_H - sum_E (consistency + transpose) + sum_E penalty.
struct DGOperator {
    const FineGrid* grid{nullptr};
    const CoefficientField* field{nullptr};
    double gamma{2.0};

    SpMat A;         // full IPDG matrix
    SpMat stiffness; // a_H (block stiffnesses)
    SpMat penalty;   // all edge penalty matrices
    SpMat mass;      // block-diagonal L2 mass
    Vector b;        // load vector (f, phi_a)

    double dg_norm_sq(const Vector& u) const {
        return u.dot(stiffness * u) + u.dot(penalty * u);
    }
    double dg_norm(const Vector& u) const;
    /// sqrt(a_DG(u,u)); throws on coercivity violation beyond round-off.
    double a_norm(const Vector& u) const;
    double a_norm_sq(const Vector& u) const;
    double a_apply(const Vector& u, const Vector& v) const { return u.dot(A * v); }
    double l2_norm(const Vector& u) const;
};

/// Block-local (npb x npb) stiffness matrix, exact for cell-constant kappa.
SpMat local_stiffness(const FineGrid& g, const CoefficientField& field, int block);

/// Consistency matrix M (see append_edge_consistency) and penalty matrix
/// for one coarse edge, over the global DOF index set.
std::pair<SpMat, SpMat> edge_terms(const FineGrid& g, const CoefficientField& field,
                                   const CoarseEdge& e, double gamma);

DGOperator assemble(const FineGrid& g, const CoefficientField& field, double gamma,
                    const std::function<double(double, double)>& f);

/// Direct sparse solve of A u = b to 1e-10 relative residual. Throws
/// std::runtime_error on factorization failure or poor residual.
Vector solve_fine(const DGOperator& op);

/// Solves a symmetric positive definite sparse system with the same
/// residual contract; shared by the fine and reduced solves.
Vector solve_spd(const SpMat& A, const Vector& b, double rel_tol,
                 const char* what);

} // namespace msdg
