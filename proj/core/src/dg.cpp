#include "msdg/dg.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <Eigen/SparseCholesky>

namespace msdg {

namespace {
constexpr double kGauss2[2] = {0.5 - 0.28867513459481288225,
                               0.5 + 0.28867513459481288225};
}

double DGOperator::dg_norm(const Vector& u) const {
    return std::sqrt(std::max(dg_norm_sq(u), 0.0));
}

double DGOperator::a_norm_sq(const Vector& u) const {
    const double q = u.dot(A * u);
    if (q < 0.0) {
        const double scale = dg_norm_sq(u);
        if (q < -1e-12 * scale)
            throw std::runtime_error("a_norm: coercivity violation, a_DG(u,u) = " +
                                     std::to_string(q));
        return 0.0;
    }
    return q;
}

double DGOperator::a_norm(const Vector& u) const { return std::sqrt(a_norm_sq(u)); }

double DGOperator::l2_norm(const Vector& u) const {
    return std::sqrt(std::max(u.dot(mass * u), 0.0));
}

SpMat local_stiffness(const FineGrid& g, const CoefficientField& field, int block) {
    const int npb = g.nodes_per_block();
    std::vector<int> map(g.num_dofs(), -1);
    for (int l = 0; l < npb; ++l) map[block * npb + l] = l;
    Triplets t;
    append_block_stiffness(g, field, block, t, &map);
    return from_triplets(npb, npb, t);
}

std::pair<SpMat, SpMat> edge_terms(const FineGrid& g, const CoefficientField& field,
                                   const CoarseEdge& e, double gamma) {
    Triplets tc, tp;
    append_edge_consistency(g, field, e, tc);
    append_edge_penalty(g, field, e, gamma, tp);
    const int n = g.num_dofs();
    return {from_triplets(n, n, tc), from_triplets(n, n, tp)};
}

DGOperator assemble(const FineGrid& g, const CoefficientField& field, double gamma,
                    const std::function<double(double, double)>& f) {
    if (gamma <= 0.0) throw std::invalid_argument("assemble: gamma must be > 0");
    DGOperator op;
    op.grid = &g;
    op.field = &field;
    op.gamma = gamma;

    const int n = g.num_dofs();
    Triplets ts, tm, tc, tp;
    for (int b = 0; b < g.coarse().num_blocks(); ++b) {
        append_block_stiffness(g, field, b, ts);
        append_block_mass(g, b, tm);
    }
    for (const auto& e : g.coarse().edges()) {
        append_edge_consistency(g, field, e, tc);
        append_edge_penalty(g, field, e, gamma, tp);
    }
    op.stiffness = from_triplets(n, n, ts);
    op.mass = from_triplets(n, n, tm);
    op.penalty = from_triplets(n, n, tp);
    SpMat C = from_triplets(n, n, tc);
    op.A = op.stiffness - C - SpMat(C.transpose()) + op.penalty;
    op.A.makeCompressed();

    // Load vector, 2x2 Gauss per fine cell.
    op.b = Vector::Zero(n);
    const double w = 0.25 * g.hx() * g.hy();
    for (int blk = 0; blk < g.coarse().num_blocks(); ++blk) {
        const Rect r = g.coarse().block_rect(blk);
        for (int cy = 0; cy < g.ny(); ++cy) {
            for (int cx = 0; cx < g.nx(); ++cx) {
                const double x0 = r.x0 + cx * g.hx();
                const double y0 = r.y0 + cy * g.hy();
                const int d[4] = {g.dof(blk, cx, cy), g.dof(blk, cx + 1, cy),
                                  g.dof(blk, cx, cy + 1), g.dof(blk, cx + 1, cy + 1)};
                for (double xi : kGauss2) {
                    for (double eta : kGauss2) {
                        const double fv = f(x0 + xi * g.hx(), y0 + eta * g.hy());
                        const double N[4] = {(1 - xi) * (1 - eta), xi * (1 - eta),
                                             (1 - xi) * eta, xi * eta};
                        for (int a = 0; a < 4; ++a) op.b[d[a]] += w * fv * N[a];
                    }
                }
            }
        }
    }
    return op;
}

Vector solve_spd(const SpMat& A, const Vector& b, double rel_tol, const char* what) {
    // Jacobi equilibration: high-contrast coefficients spread the diagonal
    // over many orders of magnitude, which the factorization tolerates much
    // better after symmetric scaling.
    const Vector diag = A.diagonal();
    if ((diag.array() <= 0.0).any())
        throw std::runtime_error(std::string(what) + ": non-positive diagonal");
    const Vector dscale = diag.cwiseSqrt().cwiseInverse();
    const SpMat As = dscale.asDiagonal() * A * dscale.asDiagonal();
    Eigen::SimplicialLDLT<SpMat> ldlt(As);
    if (ldlt.info() != Eigen::Success)
        throw std::runtime_error(std::string(what) + ": factorization failed");
    const auto solve = [&](const Vector& rhs) -> Vector {
        return dscale.cwiseProduct(ldlt.solve(dscale.cwiseProduct(rhs)));
    };
    // b - A u accumulated in extended precision: the double-precision
    // residual bottoms out near eps * ||A|| * ||u||, which for high-contrast
    // operators can exceed the tolerance relative to ||b|| no matter how
    // good u is. Refining against the extended-precision residual removes
    // that floor.
    const auto residual = [&](const Vector& u) -> Vector {
        std::vector<long double> acc(static_cast<std::size_t>(b.size()));
        for (Eigen::Index i = 0; i < b.size(); ++i)
            acc[static_cast<std::size_t>(i)] = static_cast<long double>(b[i]);
        for (int col = 0; col < A.outerSize(); ++col)
            for (SpMat::InnerIterator it(A, col); it; ++it)
                acc[static_cast<std::size_t>(it.row())] -=
                    static_cast<long double>(it.value()) *
                    static_cast<long double>(u[it.col()]);
        Vector r(b.size());
        for (Eigen::Index i = 0; i < b.size(); ++i)
            r[i] = static_cast<double>(acc[static_cast<std::size_t>(i)]);
        return r;
    };
    Vector u = solve(b);
    const double bn = b.norm();
    double rn = residual(u).norm();
    for (int k = 0; k < 20 && bn > 0.0 && rn > rel_tol * bn; ++k) {
        u += solve(residual(u));
        rn = residual(u).norm();
    }
    if (bn > 0.0 && rn > rel_tol * bn) {
        char msg[128];
        std::snprintf(msg, sizeof msg, "%s: relative residual %.3e exceeds %.0e",
                      what, rn / bn, rel_tol);
        throw std::runtime_error(msg);
    }
    return u;
}

Vector solve_fine(const DGOperator& op) {
    return solve_spd(op.A, op.b, 1e-10, "solve_fine");
}

} // namespace msdg
