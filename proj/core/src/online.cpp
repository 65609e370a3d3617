#include "msdg/online.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <Eigen/Dense>

namespace msdg {

namespace {

SpMat submatrix(const SpMat& m, const std::vector<int>& of_row) {
    // of_row: full-size map row -> sub index or -1
    Triplets t;
    int dim = 0;
    for (int v : of_row) dim = std::max(dim, v + 1);
    for (int k = 0; k < m.outerSize(); ++k) {
        for (SpMat::InnerIterator it(m, k); it; ++it) {
            const int r = of_row[static_cast<int>(it.row())];
            const int c = of_row[static_cast<int>(it.col())];
            if (r >= 0 && c >= 0) t.emplace_back(r, c, it.value());
        }
    }
    return from_triplets(dim, dim, t);
}

} // namespace

NeighborhoodSolver::NeighborhoodSolver(const FineGrid& g,
                                       const CoefficientField& field, double gamma,
                                       int node)
    : grid_(&g) {
    const auto nb = g.coarse().neighborhood(node);
    map_ = make_neighborhood_map(g, nb);
    a_omega_ = assemble_a_omega(g, field, map_, gamma);

    const auto interior_global = g.interior_dofs(nb);
    interior_of_local_.assign(map_.dim(), -1);
    interior_local_.reserve(interior_global.size());
    for (int gd : interior_global) {
        const int loc = map_.global_to_local[gd];
        interior_of_local_[loc] = static_cast<int>(interior_local_.size());
        interior_local_.push_back(loc);
    }
    SpMat a00 = submatrix(a_omega_, interior_of_local_);
    interior_fact_.compute(a00);
    if (interior_fact_.info() != Eigen::Success)
        throw std::runtime_error("NeighborhoodSolver: degenerate interior a-form, node " +
                                 std::to_string(node));
}

Vector NeighborhoodSolver::residual_functional(const Vector& global_residual) const {
    Vector f(interior_local_.size());
    for (std::size_t k = 0; k < interior_local_.size(); ++k)
        f[k] = global_residual[map_.local_to_global[interior_local_[k]]];
    return f;
}

ResidualIndicator NeighborhoodSolver::riesz_solve(const Vector& functional) const {
    if (functional.size() != static_cast<Eigen::Index>(interior_local_.size()))
        throw std::invalid_argument("riesz_solve: functional size mismatch");
    ResidualIndicator ind;
    ind.node = map_.nb.node;
    Vector phi0 = interior_fact_.solve(functional);
    ind.norm_sq = std::max(functional.dot(phi0), 0.0);
    ind.phi_local = Vector::Zero(map_.dim());
    for (std::size_t k = 0; k < interior_local_.size(); ++k)
        ind.phi_local[interior_local_[k]] = phi0[k];
    return ind;
}

ModifiedIndicator NeighborhoodSolver::modified_residual_norm(
    const Vector& global_residual, const std::vector<BlockPou>& pou,
    double lambda_next) const {
    const auto& cg = grid_->coarse();
    const int npb = grid_->nodes_per_block();

    if (wset_local_.empty() && !wset_fact_ && !wset_dense_) {
        // W_i is a coordinate subspace: the image of the diagonal map
        // v -> interp(chi_i v) is spanned by the DOFs where chi_i != 0.
        for (std::size_t slot = 0; slot < map_.nb.blocks.size(); ++slot) {
            const int b = map_.nb.blocks[slot];
            const Vector& chi = pou[b].chi[vertex_slot(cg, map_.nb.node, b)];
            for (int l = 0; l < npb; ++l)
                if (std::abs(chi[l]) > 1e-13)
                    wset_local_.push_back(static_cast<int>(slot) * npb + l);
        }
        std::vector<int> of_local(map_.dim(), -1);
        for (std::size_t k = 0; k < wset_local_.size(); ++k)
            of_local[wset_local_[k]] = static_cast<int>(k);
        SpMat aw = submatrix(a_omega_, of_local);
        wset_fact_ = std::make_unique<Eigen::SimplicialLDLT<SpMat>>(aw);
        Vector probe = Vector::Ones(aw.rows());
        bool ok = wset_fact_->info() == Eigen::Success;
        if (ok) {
            Vector x = wset_fact_->solve(probe);
            ok = (aw * x - probe).norm() <= 1e-6 * probe.norm();
        }
        if (!ok) {
            // Rank-deficient weighted subspace: pseudo-solve on its range.
            Matrix ad = Matrix(aw);
            Eigen::SelfAdjointEigenSolver<Matrix> es(ad);
            const double lmax = es.eigenvalues().cwiseAbs().maxCoeff();
            Vector inv = es.eigenvalues();
            for (int i = 0; i < inv.size(); ++i)
                inv[i] = (inv[i] > 1e-12 * lmax) ? 1.0 / inv[i] : 0.0;
            wset_pinv_ = es.eigenvectors() * inv.asDiagonal() *
                         es.eigenvectors().transpose();
            wset_dense_ = true;
            wset_fact_.reset();
        }
    }

    Vector rw(wset_local_.size());
    for (std::size_t k = 0; k < wset_local_.size(); ++k)
        rw[k] = global_residual[map_.local_to_global[wset_local_[k]]];

    ModifiedIndicator mi;
    mi.node = map_.nb.node;
    mi.eigen_weight = 1.0 + 1.0 / lambda_next;
    if (wset_dense_)
        mi.norm_sq = std::max(rw.dot(wset_pinv_ * rw), 0.0);
    else
        mi.norm_sq = std::max(rw.dot(wset_fact_->solve(rw)), 0.0);
    return mi;
}

Vector NeighborhoodSolver::to_fine(const Vector& local, int num_fine_dofs) const {
    Vector out = Vector::Zero(num_fine_dofs);
    for (int l = 0; l < map_.dim(); ++l)
        if (local[l] != 0.0) out[map_.local_to_global[l]] = local[l];
    return out;
}

EtaTheta eta_theta(const std::vector<double>& selected_residual_sq,
                   const std::vector<ModifiedIndicator>& modified_all,
                   const ErrorBoundConstants& c) {
    if (c.a0 <= 0.0)
        throw std::invalid_argument("eta_theta: a0 must be positive (gamma too small)");
    EtaTheta out;
    double sum = 0.0;
    for (const auto& m : modified_all) sum += m.eigen_weight * m.norm_sq;
    out.eta_sq = 2.0 / c.a0 * c.a1 * c.C0 * sum;
    const double rsum = std::accumulate(selected_residual_sq.begin(),
                                        selected_residual_sq.end(), 0.0);
    if (out.eta_sq == 0.0) {
        if (rsum > 0.0)
            throw std::runtime_error("eta_theta: zero bound with nonzero residuals");
        out.theta = 0.0;
    } else {
        out.theta = rsum / out.eta_sq;
    }
    return out;
}

std::vector<int> select_regions(const std::vector<ResidualIndicator>& indicators,
                                const SelectionRule& rule) {
    std::vector<int> idx(indicators.size());
    std::iota(idx.begin(), idx.end(), 0);

    switch (rule.kind) {
    case Strategy::all: {
        std::vector<int> out;
        for (int i : idx)
            if (indicators[i].norm_sq > 0.0) out.push_back(i);
        return out;
    }
    case Strategy::threshold: {
        std::vector<int> out;
        for (int i : idx)
            if (std::sqrt(indicators[i].norm_sq) > rule.tol) out.push_back(i);
        return out;
    }
    case Strategy::cumulative: {
        std::sort(idx.begin(), idx.end(), [&](int a, int b) {
            if (indicators[a].norm_sq != indicators[b].norm_sq)
                return indicators[a].norm_sq > indicators[b].norm_sq;
            return indicators[a].node < indicators[b].node;
        });
        double total = 0.0;
        for (const auto& ind : indicators) total += ind.norm_sq;
        std::vector<int> out;
        if (total == 0.0) return out;
        double acc = 0.0;
        for (int i : idx) {
            if (indicators[i].norm_sq == 0.0) break;
            if (rule.tol > 0.0 && std::sqrt(indicators[i].norm_sq) <= rule.tol) break;
            out.push_back(i);
            acc += indicators[i].norm_sq;
            if (acc >= rule.theta_frac * total) break;
        }
        std::sort(out.begin(), out.end());
        return out;
    }
    }
    return {};
}

EnrichResult enrich(MultiscaleSpace& space, const FineGrid& g,
                    const std::vector<ResidualIndicator>& indicators,
                    const std::vector<int>& selected,
                    const std::vector<const NeighborhoodSolver*>& solvers,
                    const std::function<bool(const Vector&, double)>& accept) {
    EnrichResult res;
    const int npb = g.nodes_per_block();
    for (std::size_t k = 0; k < selected.size(); ++k) {
        const auto& ind = indicators[selected[k]];
        const auto* solver = solvers[selected[k]];
        if (ind.phi_local.size() == 0 || ind.norm_sq <= 0.0 ||
            ind.phi_local.cwiseAbs().maxCoeff() == 0.0) {
            ++res.skipped;
            continue;
        }
        const auto& blocks = solver->map().nb.blocks;
        for (std::size_t slot = 0; slot < blocks.size(); ++slot) {
            Vector piece = ind.phi_local.segment(static_cast<int>(slot) * npb, npb);
            const double scale = piece.norm();
            if (scale == 0.0) continue;
            piece /= scale; // keep reduced-system conditioning scale-free
            if (accept) {
                Vector fine = Vector::Zero(g.num_dofs());
                fine.segment(blocks[slot] * npb, npb) = piece;
                if (!accept(fine, ind.norm_sq)) {
                    ++res.skipped;
                    continue;
                }
            }
            BasisFunction f;
            f.block = blocks[slot];
            f.values = std::move(piece);
            f.prov = {BasisProvenance::Kind::online, ind.node, ind.iteration};
            space.add(std::move(f));
            ++res.added_functions;
        }
    }
    space.set_iteration(space.iteration() + 1);
    return res;
}

} // namespace msdg
