#pragma once

#include <array>
#include <utility>
#include <vector>

namespace msdg {

/// Axis-aligned rectangle.
struct Rect {
    double x0{0.0}, y0{0.0}, x1{1.0}, y1{1.0};

    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
    double area() const { return width() * height(); }
};

/// A coarse-grid edge with a fixed orientation. Interior edges couple
/// block_plus (K+) and block_minus (K-), with the unit normal pointing
/// from K+ to K-. Boundary edges have block_minus == -1 and an outward
/// normal.
struct CoarseEdge {
    int index{-1};
    bool vertical{false};    // true: normal along x, edge runs along y
    int block_plus{-1};
    int block_minus{-1};
    double coord{0.0};       // position along the normal axis
    double lo{0.0}, hi{0.0}; // extent along the tangential axis
    double normal_sign{1.0}; // n_E = normal_sign * unit axis vector

    bool boundary() const { return block_minus < 0; }
    double length() const { return hi - lo; }
};

/// Coarse neighborhood of a coarse node: the 1, 2 or 4 blocks sharing it,
/// the coarse edges strictly inside the union, and the union rectangle.
struct Neighborhood {
    int node{-1};
    std::vector<int> blocks;         // ascending block indices
    std::vector<int> interior_edges; // coarse edge indices inside the union
    Rect bounds;
};

/// Uniform rectangular partition of a rectangular domain into Nx x Ny
/// blocks. Blocks, nodes and edges are indexed row-major, x fastest.
class CoarseGrid {
  public:
    CoarseGrid() = default;
    CoarseGrid(Rect domain, int Nx, int Ny);

    const Rect& domain() const { return domain_; }
    int Nx() const { return Nx_; }
    int Ny() const { return Ny_; }
    int num_blocks() const { return Nx_ * Ny_; }
    int num_nodes() const { return (Nx_ + 1) * (Ny_ + 1); }

    double Hx() const { return domain_.width() / Nx_; }
    double Hy() const { return domain_.height() / Ny_; }

    int block_index(int bi, int bj) const { return bj * Nx_ + bi; }
    std::pair<int, int> block_coords(int b) const { return {b % Nx_, b / Nx_}; }
    Rect block_rect(int b) const;

    int node_index(int ci, int cj) const { return cj * (Nx_ + 1) + ci; }
    std::pair<int, int> node_coords(int n) const {
        return {n % (Nx_ + 1), n / (Nx_ + 1)};
    }
    std::pair<double, double> node_position(int n) const;

    const std::vector<CoarseEdge>& edges() const { return edges_; }
    const CoarseEdge& edge(int e) const { return edges_[e]; }

    /// Blocks incident to a coarse node (1, 2 or 4) and the edges strictly
    /// inside their union.
    Neighborhood neighborhood(int node) const;

    /// Partition of the coarse nodes into four parity classes; within a
    /// class, neighborhoods are pairwise disjoint.
    std::array<std::vector<int>, 4> color_classes() const;

  private:
    Rect domain_{};
    int Nx_{0}, Ny_{0};
    std::vector<CoarseEdge> edges_;
};

/// Conforming uniform refinement of a CoarseGrid: nx x ny fine cells per
/// block. Fine DOFs are block-discontinuous: each block carries its own
/// (nx+1)(ny+1) bilinear nodal values, so geometrically coincident nodes
/// on shared coarse edges have distinct indices.
class FineGrid {
  public:
    FineGrid() = default;
    FineGrid(CoarseGrid coarse, int nx, int ny);

    const CoarseGrid& coarse() const { return coarse_; }
    int nx() const { return nx_; }
    int ny() const { return ny_; }
    double hx() const { return hx_; }
    double hy() const { return hy_; }

    int nodes_per_block() const { return (nx_ + 1) * (ny_ + 1); }
    int cells_per_block() const { return nx_ * ny_; }
    int num_dofs() const { return coarse_.num_blocks() * nodes_per_block(); }

    int global_cells_x() const { return coarse_.Nx() * nx_; }
    int global_cells_y() const { return coarse_.Ny() * ny_; }
    int num_cells() const { return global_cells_x() * global_cells_y(); }

    int dof(int block, int lx, int ly) const {
        return block * nodes_per_block() + ly * (nx_ + 1) + lx;
    }
    /// Global fine-cell index (row-major over the whole domain) of local
    /// cell (cx, cy) of a block.
    int cell_index(int block, int cx, int cy) const;

    std::pair<double, double> node_position(int block, int lx, int ly) const;

    /// Fine DOFs of the neighborhood's blocks strictly inside its union
    /// rectangle (the interior DOF set characterizing zero boundary trace).
    std::vector<int> interior_dofs(const Neighborhood& nb) const;

  private:
    CoarseGrid coarse_;
    int nx_{0}, ny_{0};
    double hx_{0.0}, hy_{0.0};
};

/// Builds the nested coarse/fine pair. Throws std::invalid_argument on
/// non-positive counts or a degenerate domain.
FineGrid build_grids(Rect domain, int Nx, int Ny, int nx, int ny);

} // namespace msdg
