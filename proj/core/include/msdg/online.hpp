#pragma once

#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "msdg/dg.hpp"
#include "msdg/offline.hpp"

namespace msdg {

/// Local residual functional norm and its Riesz representative on
/// V_0^h(omega_i), in neighborhood-local coordinates.
struct ResidualIndicator {
    int node{-1};
    double norm_sq{0.0};
    Vector phi_local; // full neighborhood-local vector, zero on the boundary
    int iteration{0};
};

/// Modified residual norm on the weighted image subspace, with the
/// eigenvalue weight (1 + 1/lambda_{L_i+1}) entering the bound.
struct ModifiedIndicator {
    int node{-1};
    double norm_sq{0.0};
    double eigen_weight{1.0};
};

/// Per-neighborhood machinery cached across iterations: the local a-form,
/// its interior-restricted factorization, and the weighted subspace
/// factorization for modified residual norms.
class NeighborhoodSolver {
  public:
    NeighborhoodSolver(const FineGrid& g, const CoefficientField& field,
                       double gamma, int node);

    const NeighborhoodMap& map() const { return map_; }
    const std::vector<int>& interior_local() const { return interior_local_; }
    const SpMat& a_omega() const { return a_omega_; }

    /// Restriction of the global fine residual b - A u to the interior
    /// DOFs of the neighborhood (the residual functional on V_0^h).
    Vector residual_functional(const Vector& global_residual) const;

    /// Solves a_omega phi = functional on the interior DOFs; the returned
    /// norm_sq is the Riesz identity value a(phi, phi) = R(phi).
    ResidualIndicator riesz_solve(const Vector& functional) const;

    /// sup over the chi-weighted image subspace; requires the partition of
    /// unity used by the spectral problems.
    ModifiedIndicator modified_residual_norm(const Vector& global_residual,
                                             const std::vector<BlockPou>& pou,
                                             double lambda_next) const;

    /// Neighborhood-local vector scattered into a zero global fine vector.
    Vector to_fine(const Vector& local, int num_fine_dofs) const;

  private:
    const FineGrid* grid_;
    NeighborhoodMap map_;
    SpMat a_omega_;
    std::vector<int> interior_local_;
    std::vector<int> interior_of_local_; // local -> interior slot or -1
    Eigen::SimplicialLDLT<SpMat> interior_fact_;
    mutable std::vector<int> wset_local_; // lazily built per pou identity
    mutable std::unique_ptr<Eigen::SimplicialLDLT<SpMat>> wset_fact_;
    mutable Matrix wset_pinv_; // dense pseudo-inverse fallback
    mutable bool wset_dense_{false};
};

struct ErrorBoundConstants {
    double a0{1.0};
    double a1{1.0};
    double C0{4.0}; // max vertices per block (rectangles)
};

struct EtaTheta {
    double eta_sq{0.0};
    double theta{0.0};
};

/// eta^2 = 2 a0^-1 a1 C0 sum_i weight_i ||Rtilde_i||^2 over all coarse
/// nodes; theta = sum of selected ||R_i||^2 over eta^2.
EtaTheta eta_theta(const std::vector<double>& selected_residual_sq,
                   const std::vector<ModifiedIndicator>& modified_all,
                   const ErrorBoundConstants& c);

enum class Strategy { all, threshold, cumulative };

struct SelectionRule {
    Strategy kind{Strategy::all};
    double tol{0.0};        // threshold on ||R_i||
    double theta_frac{0.5}; // cumulative fraction

    bool operator==(const SelectionRule&) const = default;
};

/// Index set S of indicators to enrich, by the configured strategy. The
/// cumulative rule sorts by residual descending (ties by node ascending)
/// and returns the smallest prefix with squared sum >= theta_frac * total.
std::vector<int> select_regions(const std::vector<ResidualIndicator>& indicators,
                                const SelectionRule& rule);

struct EnrichResult {
    int added_functions{0};
    int skipped{0};
};

/// Appends the Riesz representatives for the selected indicators, split
/// into per-block pieces and normalized. An optional dependence check
/// receives each piece's fine representation and the region's residual
/// norm and may veto it.
EnrichResult enrich(MultiscaleSpace& space, const FineGrid& g,
                    const std::vector<ResidualIndicator>& indicators,
                    const std::vector<int>& selected,
                    const std::vector<const NeighborhoodSolver*>& solvers,
                    const std::function<bool(const Vector&, double)>& accept = {});

} // namespace msdg
