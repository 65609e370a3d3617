#include "msdg/offline.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/SparseCholesky>

namespace msdg {

namespace {

const double kG3x[3] = {0.5 - 0.5 * std::sqrt(3.0 / 5.0), 0.5,
                        0.5 + 0.5 * std::sqrt(3.0 / 5.0)};
const double kG3w[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};

} // namespace

int vertex_slot(const CoarseGrid& cg, int node, int block) {
    auto [ci, cj] = cg.node_coords(node);
    auto [bi, bj] = cg.block_coords(block);
    const int vx = ci - bi, vy = cj - bj;
    if ((vx != 0 && vx != 1) || (vy != 0 && vy != 1))
        throw std::invalid_argument("vertex_slot: block not incident to node");
    return vy * 2 + vx;
}

std::array<Vector, 4> build_pou_block(const FineGrid& g, const CoefficientField& field,
                                      int block, PouKind kind) {
    const int nx = g.nx(), ny = g.ny();
    const int npb = g.nodes_per_block();
    std::array<Vector, 4> chi;
    for (auto& c : chi) c = Vector::Zero(npb);

    // Bilinear tensor hats; also the boundary data of the multiscale kind.
    for (int ly = 0; ly <= ny; ++ly) {
        const double ty = static_cast<double>(ly) / ny;
        for (int lx = 0; lx <= nx; ++lx) {
            const double tx = static_cast<double>(lx) / nx;
            const int l = ly * (nx + 1) + lx;
            chi[0][l] = (1 - tx) * (1 - ty);
            chi[1][l] = tx * (1 - ty);
            chi[2][l] = (1 - tx) * ty;
            chi[3][l] = tx * ty;
        }
    }
    if (kind == PouKind::bilinear) return chi;

    // Multiscale kind: kappa-harmonic extension of the bilinear boundary data.
    std::vector<int> map(g.num_dofs(), -1);
    for (int l = 0; l < npb; ++l) map[block * npb + l] = l;
    Triplets t;
    append_block_stiffness(g, field, block, t, &map);
    SpMat S = from_triplets(npb, npb, t);

    std::vector<int> interior, boundary;
    for (int ly = 0; ly <= ny; ++ly)
        for (int lx = 0; lx <= nx; ++lx) {
            const int l = ly * (nx + 1) + lx;
            if (lx == 0 || lx == nx || ly == 0 || ly == ny)
                boundary.push_back(l);
            else
                interior.push_back(l);
        }
    if (interior.empty()) return chi; // 1x1 fine cell: all nodes on the boundary

    const int ni = static_cast<int>(interior.size());
    std::vector<int> reindex(npb, -1);
    for (int k = 0; k < ni; ++k) reindex[interior[k]] = k;

    Triplets tii;
    SpMat Sib(ni, npb);
    Triplets tib;
    for (int k = 0; k < S.outerSize(); ++k) {
        for (SpMat::InnerIterator it(S, k); it; ++it) {
            const int ri = reindex[static_cast<int>(it.row())];
            if (ri < 0) continue;
            const int c = static_cast<int>(it.col());
            if (reindex[c] >= 0)
                tii.emplace_back(ri, reindex[c], it.value());
            else
                tib.emplace_back(ri, c, it.value());
        }
    }
    SpMat Sii = from_triplets(ni, ni, tii);
    Sib = from_triplets(ni, npb, tib);

    Eigen::SimplicialLDLT<SpMat> ldlt(Sii);
    if (ldlt.info() != Eigen::Success)
        throw std::runtime_error("build_pou_block: singular local solve");
    for (int j = 0; j < 4; ++j) {
        Vector rhs = -(Sib * chi[j]);
        // Keep the boundary trace; overwrite interior values.
        Vector xi = ldlt.solve(rhs);
        for (int k = 0; k < ni; ++k) chi[j][interior[k]] = xi[k];
    }
    return chi;
}

std::vector<BlockPou> build_pou(const FineGrid& g, const CoefficientField& field,
                                PouKind kind) {
    std::vector<BlockPou> out(g.coarse().num_blocks());
    for (int b = 0; b < g.coarse().num_blocks(); ++b) {
        out[b].block = b;
        out[b].chi = build_pou_block(g, field, b, kind);
    }
    return out;
}

NeighborhoodMap make_neighborhood_map(const FineGrid& g, const Neighborhood& nb) {
    NeighborhoodMap m;
    m.nb = nb;
    const int npb = g.nodes_per_block();
    m.global_to_local.assign(g.num_dofs(), -1);
    m.local_to_global.reserve(nb.blocks.size() * npb);
    for (std::size_t s = 0; s < nb.blocks.size(); ++s) {
        for (int l = 0; l < npb; ++l) {
            const int gd = nb.blocks[s] * npb + l;
            m.global_to_local[gd] = static_cast<int>(m.local_to_global.size());
            m.local_to_global.push_back(gd);
        }
    }
    return m;
}

SpMat assemble_a_omega(const FineGrid& g, const CoefficientField& field,
                       const NeighborhoodMap& map, double gamma) {
    Triplets t;
    for (int b : map.nb.blocks)
        append_block_stiffness(g, field, b, t, &map.global_to_local);
    for (int e : map.nb.interior_edges)
        append_edge_penalty(g, field, g.coarse().edge(e), gamma, t,
                            &map.global_to_local);
    return from_triplets(map.dim(), map.dim(), t);
}

SpMat assemble_kappa_mass_omega(const FineGrid& g, const CoefficientField& field,
                                const NeighborhoodMap& map) {
    Triplets t;
    for (int b : map.nb.blocks)
        append_block_kappa_mass(g, field, b, t, &map.global_to_local);
    return from_triplets(map.dim(), map.dim(), t);
}

SpMat assemble_s_omega(const FineGrid& g, const CoefficientField& field,
                       const NeighborhoodMap& map, const std::vector<BlockPou>& pou,
                       double gamma) {
    const auto& cg = g.coarse();
    const int node = map.nb.node;
    const int npb = g.nodes_per_block();
    const double hx = g.hx(), hy = g.hy();
    Triplets t;

    // Volume term: kappa |grad chi_i^K|^2 u v, 3x3 Gauss per fine cell
    // (the weight is piecewise quadratic for bilinear chi).
    for (int b : map.nb.blocks) {
        const Vector& chi = pou[b].chi[vertex_slot(cg, node, b)];
        for (int cy = 0; cy < g.ny(); ++cy) {
            for (int cx = 0; cx < g.nx(); ++cx) {
                const double kap = field.value(g, b, cx, cy);
                const int loc[4] = {cy * (g.nx() + 1) + cx, cy * (g.nx() + 1) + cx + 1,
                                    (cy + 1) * (g.nx() + 1) + cx,
                                    (cy + 1) * (g.nx() + 1) + cx + 1};
                std::array<int, 4> dofs;
                for (int a = 0; a < 4; ++a) dofs[a] = g.dof(b, 0, 0) + loc[a];
                const double cv[4] = {chi[loc[0]], chi[loc[1]], chi[loc[2]], chi[loc[3]]};
                double m[4][4] = {};
                for (int qx = 0; qx < 3; ++qx) {
                    for (int qy = 0; qy < 3; ++qy) {
                        const double xi = kG3x[qx], eta = kG3x[qy];
                        const double w = kG3w[qx] * kG3w[qy] * hx * hy;
                        const double N[4] = {(1 - xi) * (1 - eta), xi * (1 - eta),
                                             (1 - xi) * eta, xi * eta};
                        const double dNx[4] = {-(1 - eta) / hx, (1 - eta) / hx,
                                               -eta / hx, eta / hx};
                        const double dNy[4] = {-(1 - xi) / hy, -xi / hy, (1 - xi) / hy,
                                               xi / hy};
                        double gx = 0, gy = 0;
                        for (int a = 0; a < 4; ++a) {
                            gx += cv[a] * dNx[a];
                            gy += cv[a] * dNy[a];
                        }
                        const double wgt = w * kap * (gx * gx + gy * gy);
                        for (int a = 0; a < 4; ++a)
                            for (int c = 0; c < 4; ++c) m[a][c] += wgt * N[a] * N[c];
                    }
                }
                for (int a = 0; a < 4; ++a) {
                    const int ra = map.global_to_local[dofs[a]];
                    for (int c = 0; c < 4; ++c) {
                        const int cc = map.global_to_local[dofs[c]];
                        if (m[a][c] != 0.0) t.emplace_back(ra, cc, m[a][c]);
                    }
                }
            }
        }
    }

    // Edge term: (gamma/h) kappa_bar [chi_i]^2 {u}{v} on interior edges.
    for (int ei : map.nb.interior_edges) {
        const CoarseEdge& e = cg.edge(ei);
        const double kbar = field.kappa_bar(e);
        const double hn = edge_normal_spacing(g, e);
        const double len = edge_segment_length(g, e);
        const Vector& chip = pou[e.block_plus].chi[vertex_slot(cg, node, e.block_plus)];
        const Vector& chim = pou[e.block_minus].chi[vertex_slot(cg, node, e.block_minus)];
        const int nseg = edge_num_segments(g, e);
        std::array<double, 4> trp, dnp, trm, dnm;
        for (int s = 0; s < nseg; ++s) {
            const SegmentSide plus = edge_segment_side(g, field, e, e.block_plus, s);
            const SegmentSide minus = edge_segment_side(g, field, e, e.block_minus, s);
            double m[8][8] = {};
            int dofs[8];
            for (int a = 0; a < 4; ++a) {
                dofs[a] = plus.dofs[a];
                dofs[4 + a] = minus.dofs[a];
            }
            for (int q = 0; q < 3; ++q) {
                plus.eval(kG3x[q], trp, dnp);
                minus.eval(kG3x[q], trm, dnm);
                double chij = 0.0; // [chi_i] at the quadrature point
                for (int a = 0; a < 4; ++a) {
                    chij += trp[a] * chip[plus.dofs[a] - npb * e.block_plus];
                    chij -= trm[a] * chim[minus.dofs[a] - npb * e.block_minus];
                }
                const double w = kG3w[q] * len * (gamma / hn) * kbar * chij * chij;
                double avg[8];
                for (int a = 0; a < 4; ++a) {
                    avg[a] = 0.5 * trp[a];
                    avg[4 + a] = 0.5 * trm[a];
                }
                for (int a = 0; a < 8; ++a)
                    for (int c = 0; c < 8; ++c) m[a][c] += w * avg[a] * avg[c];
            }
            for (int a = 0; a < 8; ++a) {
                const int ra = map.global_to_local[dofs[a]];
                for (int c = 0; c < 8; ++c) {
                    const int cc = map.global_to_local[dofs[c]];
                    if (m[a][c] != 0.0) t.emplace_back(ra, cc, m[a][c]);
                }
            }
        }
    }
    return from_triplets(map.dim(), map.dim(), t);
}

SpectralResult solve_spectral(const Matrix& a, const Matrix& s,
                              const Matrix& reg_mass, int count) {
    const int n = static_cast<int>(a.rows());
    if (count < 1 || count > n)
        throw std::invalid_argument("solve_spectral: invalid eigenpair count");

    const double ts = s.trace();
    const double tm = reg_mass.trace();
    const double anorm = a.norm();

    // The mass shift makes the pencil solvable when s is semi-definite.
    // Residuals are always verified against the unregularized forms, so the
    // shift may be escalated when s is so ill-conditioned that the factored
    // solve loses accuracy: the perturbation it introduces on a resolved
    // pair is lambda * eps * ||reg psi||, far below the residual tolerance
    // for every shift tried here.
    SpectralResult r;
    std::string last_error = "solve_spectral: dense eigensolve failed";
    for (double eps_rel = 1e-12; eps_rel <= 1e-6; eps_rel *= 100.0) {
        const double eps = (tm > 0.0) ? eps_rel * std::max(ts, tm) / tm : 0.0;
        Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(a,
                                                            Matrix(s + eps * reg_mass));
        if (es.info() != Eigen::Success) continue;

        r.eigenvalues = es.eigenvalues().head(count);
        r.eigenvectors = es.eigenvectors().leftCols(count);

        bool ok = true;
        for (int k = 0; k < count; ++k) {
            const Vector psi = r.eigenvectors.col(k);
            const double lam = r.eigenvalues[k];
            const double res = (a * psi - lam * (s * psi)).norm() / psi.norm();
            if (res > 1e-8 * std::max(anorm, 1.0)) {
                ok = false;
                last_error = "solve_spectral: eigenpair residual too large";
                break;
            }
        }
        if (!ok) continue;

        for (int k = 0; k < count; ++k) {
            const Vector psi = r.eigenvectors.col(k);
            const double c = psi.dot(s * psi);
            if (c > 1e-300) r.eigenvectors.col(k) = psi / std::sqrt(c);
        }
        return r;
    }
    throw std::runtime_error(last_error);
}

void MultiscaleSpace::add(BasisFunction f) {
    if (f.values.size() == 0 || f.values.norm() == 0.0)
        throw std::invalid_argument("MultiscaleSpace::add: zero basis function");
    basis_.push_back(std::move(f));
    dirty_ = true;
}

const SpMat& MultiscaleSpace::prolongation() const {
    if (dirty_) {
        const int npb = grid_->nodes_per_block();
        Triplets t;
        for (int c = 0; c < size(); ++c) {
            const auto& f = basis_[c];
            for (int l = 0; l < npb; ++l)
                if (f.values[l] != 0.0)
                    t.emplace_back(f.block * npb + l, c, f.values[l]);
        }
        P_ = from_triplets(grid_->num_dofs(), size(), t);
        dirty_ = false;
    }
    return P_;
}

std::vector<int> MultiscaleSpace::per_block_counts() const {
    std::vector<int> counts(grid_->coarse().num_blocks(), 0);
    for (const auto& f : basis_) counts[f.block]++;
    return counts;
}

std::vector<int> uniform_basis_counts(const CoarseGrid& cg, int L,
                                      bool include_boundary_nodes) {
    std::vector<int> out(cg.num_nodes(), L);
    if (!include_boundary_nodes) {
        for (int n = 0; n < cg.num_nodes(); ++n) {
            auto [ci, cj] = cg.node_coords(n);
            if (ci == 0 || ci == cg.Nx() || cj == 0 || cj == cg.Ny()) out[n] = 0;
        }
    }
    return out;
}

OfflineSpace build_offline_space(const FineGrid& g, const CoefficientField& field,
                                 const std::vector<BlockPou>& pou, double gamma,
                                 const std::vector<int>& L_per_node) {
    const auto& cg = g.coarse();
    if (static_cast<int>(L_per_node.size()) != cg.num_nodes())
        throw std::invalid_argument("build_offline_space: L_per_node size mismatch");

    OfflineSpace off;
    off.space = MultiscaleSpace(&g);
    off.lambda_next.assign(cg.num_nodes(), std::nan(""));
    off.lambda_min = std::numeric_limits<double>::infinity();
    const int npb = g.nodes_per_block();

    for (int node = 0; node < cg.num_nodes(); ++node) {
        const int L = L_per_node[node];
        if (L < 1) continue;
        const auto nb = cg.neighborhood(node);
        const auto map = make_neighborhood_map(g, nb);
        if (L + 1 > map.dim())
            throw std::invalid_argument("build_offline_space: L exceeds local dimension");

        Matrix a = Matrix(assemble_a_omega(g, field, map, gamma));
        Matrix s = Matrix(assemble_s_omega(g, field, map, pou, gamma));
        Matrix reg = Matrix(assemble_kappa_mass_omega(g, field, map));
        SpectralResult sr = solve_spectral(a, s, reg, L + 1);
        sr.node = node;

        for (int k = 0; k < L; ++k) {
            const Vector psi = sr.eigenvectors.col(k);
            const double pn = psi.cwiseAbs().maxCoeff();
            for (std::size_t slot = 0; slot < nb.blocks.size(); ++slot) {
                const int b = nb.blocks[slot];
                const Vector& chi = pou[b].chi[vertex_slot(cg, node, b)];
                Vector vals(npb);
                for (int l = 0; l < npb; ++l)
                    vals[l] = chi[l] * psi[static_cast<int>(slot) * npb + l];
                if (vals.cwiseAbs().maxCoeff() <= 1e-14 * std::max(pn, 1.0))
                    continue; // zero candidate
                BasisFunction f;
                f.block = b;
                f.values = std::move(vals);
                f.prov = {BasisProvenance::Kind::offline, node, k};
                off.space.add(std::move(f));
            }
        }
        off.lambda_next[node] = sr.eigenvalues[L];
        off.lambda_min = std::min(off.lambda_min, sr.eigenvalues[L]);
        off.spectral.push_back(std::move(sr));
    }
    return off;
}

} // namespace msdg
