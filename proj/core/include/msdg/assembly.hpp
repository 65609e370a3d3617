#pragma once

// Low-level assembly primitives shared by the global IPDG operator and the
// neighborhood forms. Appenders emit triplets; an optional index map sends
// global fine DOFs to local rows (entries < 0 are skipped).

#include <array>
#include <vector>

#include <Eigen/Sparse>

#include "msdg/coefficient.hpp"
#include "msdg/grid.hpp"

namespace msdg {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;
using Triplets = std::vector<Triplet>;

/// One side of a fine edge segment on a coarse edge: the adjacent fine
/// cell's DOFs and trace / edge-normal-derivative evaluation at a point
/// eta in (0,1) along the segment. Node order: SW, SE, NW, NE.
struct SegmentSide {
    std::array<int, 4> dofs{};
    double kappa{1.0};   // adjacent fine cell value
    bool vertical{true}; // of the owning edge
    bool max_face{true}; // edge lies on the block's upper face along the normal
    double hn{1.0};      // fine spacing normal to the edge

    void eval(double eta, std::array<double, 4>& trace,
              std::array<double, 4>& dnormal) const {
        if (vertical) {
            if (max_face)
                trace = {0.0, 1.0 - eta, 0.0, eta};
            else
                trace = {1.0 - eta, 0.0, eta, 0.0};
            dnormal = {-(1.0 - eta) / hn, (1.0 - eta) / hn, -eta / hn, eta / hn};
        } else {
            if (max_face)
                trace = {0.0, 0.0, 1.0 - eta, eta};
            else
                trace = {1.0 - eta, eta, 0.0, 0.0};
            dnormal = {-(1.0 - eta) / hn, -eta / hn, (1.0 - eta) / hn, eta / hn};
        }
    }
};

int edge_num_segments(const FineGrid& g, const CoarseEdge& e);
double edge_segment_length(const FineGrid& g, const CoarseEdge& e);
/// Fine spacing normal to the edge (the h in gamma/h).
double edge_normal_spacing(const FineGrid& g, const CoarseEdge& e);

SegmentSide edge_segment_side(const FineGrid& g, const CoefficientField& field,
                              const CoarseEdge& e, int block, int segment);

/// kappa grad phi_a . grad phi_b over one block, cell-constant kappa,
/// 2x2 Gauss (exact).
void append_block_stiffness(const FineGrid& g, const CoefficientField& field,
                            int block, Triplets& out,
                            const std::vector<int>* map = nullptr);

/// Unweighted L2 mass over one block, 2x2 Gauss (exact).
void append_block_mass(const FineGrid& g, int block, Triplets& out,
                       const std::vector<int>* map = nullptr);

/// kappa-weighted L2 mass over one block.
void append_block_kappa_mass(const FineGrid& g, const CoefficientField& field,
                             int block, Triplets& out,
                             const std::vector<int>* map = nullptr);

/// (gamma/h) kappa_bar [phi_a][phi_b] over the coarse edge. Boundary edges
/// use [G] = G.
void append_edge_penalty(const FineGrid& g, const CoefficientField& field,
                         const CoarseEdge& e, double gamma, Triplets& out,
                         const std::vector<int>* map = nullptr);

/// M_{ab} = int_E {kappa grad phi_b . n_E}[phi_a]. The IPDG operator
/// subtracts M + M^T.
void append_edge_consistency(const FineGrid& g, const CoefficientField& field,
                             const CoarseEdge& e, Triplets& out,
                             const std::vector<int>* map = nullptr);

SpMat from_triplets(int rows, int cols, const Triplets& t);

} // namespace msdg
