#include "msdg/assembly.hpp"

#include <cmath>

namespace msdg {

namespace {

constexpr double kGauss2[2] = {0.5 - 0.28867513459481288225,
                               0.5 + 0.28867513459481288225};

inline void scatter(const std::array<int, 4>& dofs, const double m[4][4],
                    Triplets& out, const std::vector<int>* map) {
    for (int a = 0; a < 4; ++a) {
        const int ra = map ? (*map)[dofs[a]] : dofs[a];
        if (ra < 0) continue;
        for (int b = 0; b < 4; ++b) {
            const int cb = map ? (*map)[dofs[b]] : dofs[b];
            if (cb < 0) continue;
            if (m[a][b] != 0.0) out.emplace_back(ra, cb, m[a][b]);
        }
    }
}

inline void scatter2(const std::array<int, 4>& rows, const std::array<int, 4>& cols,
                     const double m[4][4], Triplets& out,
                     const std::vector<int>* map) {
    for (int a = 0; a < 4; ++a) {
        const int ra = map ? (*map)[rows[a]] : rows[a];
        if (ra < 0) continue;
        for (int b = 0; b < 4; ++b) {
            const int cb = map ? (*map)[cols[b]] : cols[b];
            if (cb < 0) continue;
            if (m[a][b] != 0.0) out.emplace_back(ra, cb, m[a][b]);
        }
    }
}

inline std::array<int, 4> cell_dofs(const FineGrid& g, int block, int cx, int cy) {
    return {g.dof(block, cx, cy), g.dof(block, cx + 1, cy),
            g.dof(block, cx, cy + 1), g.dof(block, cx + 1, cy + 1)};
}

// Q1 shape values and gradients at (xi, eta) in the unit cell.
inline void shape(double xi, double eta, double hx, double hy, double N[4],
                  double dNx[4], double dNy[4]) {
    N[0] = (1 - xi) * (1 - eta);
    N[1] = xi * (1 - eta);
    N[2] = (1 - xi) * eta;
    N[3] = xi * eta;
    dNx[0] = -(1 - eta) / hx;
    dNx[1] = (1 - eta) / hx;
    dNx[2] = -eta / hx;
    dNx[3] = eta / hx;
    dNy[0] = -(1 - xi) / hy;
    dNy[1] = -xi / hy;
    dNy[2] = (1 - xi) / hy;
    dNy[3] = xi / hy;
}

} // namespace

int edge_num_segments(const FineGrid& g, const CoarseEdge& e) {
    return e.vertical ? g.ny() : g.nx();
}

double edge_segment_length(const FineGrid& g, const CoarseEdge& e) {
    return e.vertical ? g.hy() : g.hx();
}

double edge_normal_spacing(const FineGrid& g, const CoarseEdge& e) {
    return e.vertical ? g.hx() : g.hy();
}

SegmentSide edge_segment_side(const FineGrid& g, const CoefficientField& field,
                              const CoarseEdge& e, int block, int segment) {
    const Rect r = g.coarse().block_rect(block);
    SegmentSide s;
    s.vertical = e.vertical;
    s.hn = edge_normal_spacing(g, e);
    if (e.vertical) {
        s.max_face = e.coord > 0.5 * (r.x0 + r.x1);
        const int cx = s.max_face ? g.nx() - 1 : 0;
        s.dofs = cell_dofs(g, block, cx, segment);
        s.kappa = field.value(g, block, cx, segment);
    } else {
        s.max_face = e.coord > 0.5 * (r.y0 + r.y1);
        const int cy = s.max_face ? g.ny() - 1 : 0;
        s.dofs = cell_dofs(g, block, segment, cy);
        s.kappa = field.value(g, block, segment, cy);
    }
    return s;
}

void append_block_stiffness(const FineGrid& g, const CoefficientField& field,
                            int block, Triplets& out,
                            const std::vector<int>* map) {
    const double hx = g.hx(), hy = g.hy();
    const double w = 0.25 * hx * hy; // 2x2 Gauss, weight per point
    double N[4], dNx[4], dNy[4];
    for (int cy = 0; cy < g.ny(); ++cy) {
        for (int cx = 0; cx < g.nx(); ++cx) {
            const double kap = field.value(g, block, cx, cy);
            double m[4][4] = {};
            for (double xi : kGauss2) {
                for (double eta : kGauss2) {
                    shape(xi, eta, hx, hy, N, dNx, dNy);
                    for (int a = 0; a < 4; ++a)
                        for (int b = 0; b < 4; ++b)
                            m[a][b] += w * kap * (dNx[a] * dNx[b] + dNy[a] * dNy[b]);
                }
            }
            scatter(cell_dofs(g, block, cx, cy), m, out, map);
        }
    }
}

void append_block_mass(const FineGrid& g, int block, Triplets& out,
                       const std::vector<int>* map) {
    const double hx = g.hx(), hy = g.hy();
    const double w = 0.25 * hx * hy;
    double N[4], dNx[4], dNy[4];
    double m[4][4] = {};
    for (double xi : kGauss2) {
        for (double eta : kGauss2) {
            shape(xi, eta, hx, hy, N, dNx, dNy);
            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 4; ++b) m[a][b] += w * N[a] * N[b];
        }
    }
    for (int cy = 0; cy < g.ny(); ++cy)
        for (int cx = 0; cx < g.nx(); ++cx)
            scatter(cell_dofs(g, block, cx, cy), m, out, map);
}

void append_block_kappa_mass(const FineGrid& g, const CoefficientField& field,
                             int block, Triplets& out,
                             const std::vector<int>* map) {
    const double hx = g.hx(), hy = g.hy();
    const double w = 0.25 * hx * hy;
    double N[4], dNx[4], dNy[4];
    double unit[4][4] = {};
    for (double xi : kGauss2) {
        for (double eta : kGauss2) {
            shape(xi, eta, hx, hy, N, dNx, dNy);
            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 4; ++b) unit[a][b] += w * N[a] * N[b];
        }
    }
    for (int cy = 0; cy < g.ny(); ++cy) {
        for (int cx = 0; cx < g.nx(); ++cx) {
            const double kap = field.value(g, block, cx, cy);
            double m[4][4];
            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 4; ++b) m[a][b] = kap * unit[a][b];
            scatter(cell_dofs(g, block, cx, cy), m, out, map);
        }
    }
}

void append_edge_penalty(const FineGrid& g, const CoefficientField& field,
                         const CoarseEdge& e, double gamma, Triplets& out,
                         const std::vector<int>* map) {
    const double kbar = field.kappa_bar(e);
    const double hn = edge_normal_spacing(g, e);
    const double len = edge_segment_length(g, e);
    const double scale = gamma / hn * kbar;
    const int nseg = edge_num_segments(g, e);
    std::array<double, 4> trp, dnp, trm, dnm;
    for (int s = 0; s < nseg; ++s) {
        const SegmentSide plus = edge_segment_side(g, field, e, e.block_plus, s);
        if (e.boundary()) {
            double m[4][4] = {};
            for (double eta : kGauss2) {
                plus.eval(eta, trp, dnp);
                for (int a = 0; a < 4; ++a)
                    for (int b = 0; b < 4; ++b)
                        m[a][b] += 0.5 * len * scale * trp[a] * trp[b];
            }
            scatter(plus.dofs, m, out, map);
        } else {
            const SegmentSide minus = edge_segment_side(g, field, e, e.block_minus, s);
            double mpp[4][4] = {}, mpm[4][4] = {}, mmp[4][4] = {}, mmm[4][4] = {};
            for (double eta : kGauss2) {
                plus.eval(eta, trp, dnp);
                minus.eval(eta, trm, dnm);
                const double w = 0.5 * len * scale;
                for (int a = 0; a < 4; ++a) {
                    for (int b = 0; b < 4; ++b) {
                        mpp[a][b] += w * trp[a] * trp[b];
                        mpm[a][b] -= w * trp[a] * trm[b];
                        mmp[a][b] -= w * trm[a] * trp[b];
                        mmm[a][b] += w * trm[a] * trm[b];
                    }
                }
            }
            scatter(plus.dofs, mpp, out, map);
            scatter2(plus.dofs, minus.dofs, mpm, out, map);
            scatter2(minus.dofs, plus.dofs, mmp, out, map);
            scatter(minus.dofs, mmm, out, map);
        }
    }
}

void append_edge_consistency(const FineGrid& g, const CoefficientField& field,
                             const CoarseEdge& e, Triplets& out,
                             const std::vector<int>* map) {
    const double len = edge_segment_length(g, e);
    const int nseg = edge_num_segments(g, e);
    const double sgn = e.normal_sign;
    std::array<double, 4> trp, dnp, trm, dnm;
    for (int s = 0; s < nseg; ++s) {
        const SegmentSide plus = edge_segment_side(g, field, e, e.block_plus, s);
        if (e.boundary()) {
            // {G} = [G] = G on boundary edges.
            double m[4][4] = {};
            for (double eta : kGauss2) {
                plus.eval(eta, trp, dnp);
                const double w = 0.5 * len;
                for (int a = 0; a < 4; ++a)
                    for (int b = 0; b < 4; ++b)
                        m[a][b] += w * trp[a] * plus.kappa * sgn * dnp[b];
            }
            scatter(plus.dofs, m, out, map);
        } else {
            const SegmentSide minus = edge_segment_side(g, field, e, e.block_minus, s);
            // M_{ab} = int {kappa dphi_b/dn}[phi_a]
            double mpp[4][4] = {}, mpm[4][4] = {}, mmp[4][4] = {}, mmm[4][4] = {};
            for (double eta : kGauss2) {
                plus.eval(eta, trp, dnp);
                minus.eval(eta, trm, dnm);
                const double w = 0.5 * len;
                for (int a = 0; a < 4; ++a) {
                    for (int b = 0; b < 4; ++b) {
                        const double fp = 0.5 * plus.kappa * sgn * dnp[b];
                        const double fm = 0.5 * minus.kappa * sgn * dnm[b];
                        mpp[a][b] += w * trp[a] * fp;
                        mpm[a][b] += w * trp[a] * fm;
                        mmp[a][b] -= w * trm[a] * fp;
                        mmm[a][b] -= w * trm[a] * fm;
                    }
                }
            }
            scatter(plus.dofs, mpp, out, map);
            scatter2(plus.dofs, minus.dofs, mpm, out, map);
            scatter2(minus.dofs, plus.dofs, mmp, out, map);
            scatter(minus.dofs, mmm, out, map);
        }
    }
}

SpMat from_triplets(int rows, int cols, const Triplets& t) {
    SpMat m(rows, cols);
    m.setFromTriplets(t.begin(), t.end());
    return m;
}

} // namespace msdg
