#pragma once

#include <array>
#include <vector>

#include <Eigen/Dense>

#include "msdg/assembly.hpp"
#include "msdg/coefficient.hpp"
#include "msdg/grid.hpp"

namespace msdg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class PouKind { bilinear, multiscale };

/// Four partition-of-unity functions on one block, one per vertex, as
/// fine nodal values. Vertex order: SW, SE, NW, NE. They sum to 1.
struct BlockPou {
    int block{-1};
    std::array<Vector, 4> chi;
};

/// Vertex slot (0..3) of coarse node `node` within block `block`; the block
/// must be incident to the node.
int vertex_slot(const CoarseGrid& cg, int node, int block);

std::array<Vector, 4> build_pou_block(const FineGrid& g, const CoefficientField& field,
                                      int block, PouKind kind);
std::vector<BlockPou> build_pou(const FineGrid& g, const CoefficientField& field,
                                PouKind kind);

/// Local DOF numbering of a coarse neighborhood: slot-major over member
/// blocks, node-minor.
struct NeighborhoodMap {
    Neighborhood nb;
    std::vector<int> local_to_global;
    std::vector<int> global_to_local; // -1 outside the neighborhood
    int dim() const { return static_cast<int>(local_to_global.size()); }
};

NeighborhoodMap make_neighborhood_map(const FineGrid& g, const Neighborhood& nb);

/// a_{omega_i}: member block stiffnesses plus penalty on interior coarse
/// edges. Symmetric PSD with kernel spanned by the constant.
SpMat assemble_a_omega(const FineGrid& g, const CoefficientField& field,
                       const NeighborhoodMap& map, double gamma);

/// s_{omega_i}: kappa |grad chi_i|^2 weighted mass plus average-average
/// terms weighted by the squared jump of chi_i on interior coarse edges.
SpMat assemble_s_omega(const FineGrid& g, const CoefficientField& field,
                       const NeighborhoodMap& map, const std::vector<BlockPou>& pou,
                       double gamma);

/// kappa-weighted L2 mass on the neighborhood (the s-regularizer).
SpMat assemble_kappa_mass_omega(const FineGrid& g, const CoefficientField& field,
                                const NeighborhoodMap& map);

struct SpectralResult {
    int node{-1};
    Vector eigenvalues;  // ascending
    Matrix eigenvectors; // dim x count, s-orthonormal
};

/// Smallest `count` eigenpairs of a x = lambda s x. s may be numerically
/// semi-definite; a tiny multiple of `reg_mass` is added before the dense
/// factorization and residuals are verified against the original forms.
SpectralResult solve_spectral(const Matrix& a, const Matrix& s,
                              const Matrix& reg_mass, int count);

struct BasisProvenance {
    enum class Kind { offline, online };
    Kind kind{Kind::offline};
    int node{-1};
    int index{-1}; // eigenfunction k (offline) or iteration m (online)
};

/// One basis function, supported on a single coarse block.
struct BasisFunction {
    int block{-1};
    Vector values; // nodes_per_block() fine nodal values
    BasisProvenance prov;
};

/// Ordered basis list with the prolongation from coarse coefficients to
/// the fine DG space.
class MultiscaleSpace {
  public:
    MultiscaleSpace() = default;
    explicit MultiscaleSpace(const FineGrid* g) : grid_(g) {}

    int size() const { return static_cast<int>(basis_.size()); }
    const std::vector<BasisFunction>& basis() const { return basis_; }
    void add(BasisFunction f);

    const SpMat& prolongation() const;
    Vector to_fine(const Vector& coarse) const { return prolongation() * coarse; }

    int iteration() const { return iteration_; }
    void set_iteration(int m) { iteration_ = m; }

    /// Number of basis functions supported on each coarse block.
    std::vector<int> per_block_counts() const;

  private:
    const FineGrid* grid_{nullptr};
    std::vector<BasisFunction> basis_;
    int iteration_{0};
    mutable SpMat P_;
    mutable bool dirty_{true};
};

struct OfflineSpace {
    MultiscaleSpace space;
    std::vector<SpectralResult> spectral; // one per enriched node, node order
    std::vector<double> lambda_next;      // lambda_{L_i+1}, NaN where skipped
    double lambda_min{0.0};
};

/// Solves the spectral problem on every coarse node with L_per_node > 0,
/// splits the first L_i eigenfunctions into per-block basis functions and
/// returns the initial space V_H^(0) with Lambda_min recorded.
OfflineSpace build_offline_space(const FineGrid& g, const CoefficientField& field,
                                 const std::vector<BlockPou>& pou, double gamma,
                                 const std::vector<int>& L_per_node);

/// Uniform L on every node, optionally skipping domain-boundary nodes.
std::vector<int> uniform_basis_counts(const CoarseGrid& cg, int L,
                                      bool include_boundary_nodes);

} // namespace msdg
