#include "msdg/grid.hpp"

#include <stdexcept>

namespace msdg {

CoarseGrid::CoarseGrid(Rect domain, int Nx, int Ny)
    : domain_(domain), Nx_(Nx), Ny_(Ny) {
    if (Nx < 1 || Ny < 1)
        throw std::invalid_argument("CoarseGrid: block counts must be >= 1");
    if (domain.width() <= 0.0 || domain.height() <= 0.0)
        throw std::invalid_argument("CoarseGrid: degenerate domain");

    const double Hx = this->Hx();
    const double Hy = this->Hy();

    // Vertical edges (normal along x): lines i = 0..Nx, rows j = 0..Ny-1.
    for (int j = 0; j < Ny_; ++j) {
        for (int i = 0; i <= Nx_; ++i) {
            CoarseEdge e;
            e.index = static_cast<int>(edges_.size());
            e.vertical = true;
            e.coord = domain_.x0 + i * Hx;
            e.lo = domain_.y0 + j * Hy;
            e.hi = e.lo + Hy;
            if (i == 0) {
                e.block_plus = block_index(0, j);
                e.normal_sign = -1.0; // outward
            } else if (i == Nx_) {
                e.block_plus = block_index(Nx_ - 1, j);
                e.normal_sign = 1.0;
            } else {
                e.block_plus = block_index(i - 1, j);
                e.block_minus = block_index(i, j);
                e.normal_sign = 1.0; // from K+ (left) to K- (right)
            }
            edges_.push_back(e);
        }
    }
    // Horizontal edges (normal along y): lines j = 0..Ny, columns i = 0..Nx-1.
    for (int j = 0; j <= Ny_; ++j) {
        for (int i = 0; i < Nx_; ++i) {
            CoarseEdge e;
            e.index = static_cast<int>(edges_.size());
            e.vertical = false;
            e.coord = domain_.y0 + j * Hy;
            e.lo = domain_.x0 + i * Hx;
            e.hi = e.lo + Hx;
            if (j == 0) {
                e.block_plus = block_index(i, 0);
                e.normal_sign = -1.0;
            } else if (j == Ny_) {
                e.block_plus = block_index(i, Ny_ - 1);
                e.normal_sign = 1.0;
            } else {
                e.block_plus = block_index(i, j - 1);
                e.block_minus = block_index(i, j);
                e.normal_sign = 1.0; // from K+ (below) to K- (above)
            }
            edges_.push_back(e);
        }
    }
}

Rect CoarseGrid::block_rect(int b) const {
    auto [bi, bj] = block_coords(b);
    Rect r;
    r.x0 = domain_.x0 + bi * Hx();
    r.x1 = domain_.x0 + (bi + 1) * Hx();
    r.y0 = domain_.y0 + bj * Hy();
    r.y1 = domain_.y0 + (bj + 1) * Hy();
    return r;
}

std::pair<double, double> CoarseGrid::node_position(int n) const {
    auto [ci, cj] = node_coords(n);
    return {domain_.x0 + ci * Hx(), domain_.y0 + cj * Hy()};
}

Neighborhood CoarseGrid::neighborhood(int node) const {
    if (node < 0 || node >= num_nodes())
        throw std::invalid_argument("CoarseGrid::neighborhood: node index out of range");
    auto [ci, cj] = node_coords(node);

    Neighborhood nb;
    nb.node = node;
    const int bi_lo = std::max(ci - 1, 0);
    const int bi_hi = std::min(ci, Nx_ - 1);
    const int bj_lo = std::max(cj - 1, 0);
    const int bj_hi = std::min(cj, Ny_ - 1);
    for (int bj = bj_lo; bj <= bj_hi; ++bj)
        for (int bi = bi_lo; bi <= bi_hi; ++bi)
            nb.blocks.push_back(block_index(bi, bj));

    nb.bounds.x0 = domain_.x0 + bi_lo * Hx();
    nb.bounds.x1 = domain_.x0 + (bi_hi + 1) * Hx();
    nb.bounds.y0 = domain_.y0 + bj_lo * Hy();
    nb.bounds.y1 = domain_.y0 + (bj_hi + 1) * Hy();

    // Edges incident to the node and strictly inside the union rectangle.
    const int nvert = (Nx_ + 1) * Ny_; // vertical edges come first
    if (ci > 0 && ci < Nx_) {
        if (cj > 0) nb.interior_edges.push_back((cj - 1) * (Nx_ + 1) + ci);
        if (cj < Ny_) nb.interior_edges.push_back(cj * (Nx_ + 1) + ci);
    }
    if (cj > 0 && cj < Ny_) {
        if (ci > 0) nb.interior_edges.push_back(nvert + cj * Nx_ + (ci - 1));
        if (ci < Nx_) nb.interior_edges.push_back(nvert + cj * Nx_ + ci);
    }
    return nb;
}

std::array<std::vector<int>, 4> CoarseGrid::color_classes() const {
    std::array<std::vector<int>, 4> classes;
    for (int cj = 0; cj <= Ny_; ++cj) {
        for (int ci = 0; ci <= Nx_; ++ci) {
            const int cls = (ci % 2) * 2 + (cj % 2);
            classes[cls].push_back(node_index(ci, cj));
        }
    }
    return classes;
}

FineGrid::FineGrid(CoarseGrid coarse, int nx, int ny)
    : coarse_(std::move(coarse)), nx_(nx), ny_(ny) {
    if (nx < 1 || ny < 1)
        throw std::invalid_argument("FineGrid: cell counts must be >= 1");
    hx_ = coarse_.Hx() / nx_;
    hy_ = coarse_.Hy() / ny_;
}

int FineGrid::cell_index(int block, int cx, int cy) const {
    auto [bi, bj] = coarse_.block_coords(block);
    const int gx = bi * nx_ + cx;
    const int gy = bj * ny_ + cy;
    return gy * global_cells_x() + gx;
}

std::pair<double, double> FineGrid::node_position(int block, int lx, int ly) const {
    const Rect r = coarse_.block_rect(block);
    return {r.x0 + lx * hx_, r.y0 + ly * hy_};
}

std::vector<int> FineGrid::interior_dofs(const Neighborhood& nb) const {
    // Integer test: a node is on the union boundary iff its global fine
    // index along an axis coincides with the union's extremal index.
    int bi_lo = coarse_.Nx(), bi_hi = -1, bj_lo = coarse_.Ny(), bj_hi = -1;
    for (int b : nb.blocks) {
        auto [bi, bj] = coarse_.block_coords(b);
        bi_lo = std::min(bi_lo, bi);
        bi_hi = std::max(bi_hi, bi);
        bj_lo = std::min(bj_lo, bj);
        bj_hi = std::max(bj_hi, bj);
    }
    const int gx_lo = bi_lo * nx_, gx_hi = (bi_hi + 1) * nx_;
    const int gy_lo = bj_lo * ny_, gy_hi = (bj_hi + 1) * ny_;

    std::vector<int> out;
    for (int b : nb.blocks) {
        auto [bi, bj] = coarse_.block_coords(b);
        for (int ly = 0; ly <= ny_; ++ly) {
            const int gy = bj * ny_ + ly;
            if (gy == gy_lo || gy == gy_hi) continue;
            for (int lx = 0; lx <= nx_; ++lx) {
                const int gx = bi * nx_ + lx;
                if (gx == gx_lo || gx == gx_hi) continue;
                out.push_back(dof(b, lx, ly));
            }
        }
    }
    return out;
}

FineGrid build_grids(Rect domain, int Nx, int Ny, int nx, int ny) {
    return FineGrid(CoarseGrid(domain, Nx, Ny), nx, ny);
}

} // namespace msdg
