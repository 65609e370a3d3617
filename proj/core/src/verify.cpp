#include "msdg/verify.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>

namespace msdg {

namespace {

constexpr double kG2a = 0.5 - 0.5 / 1.7320508075688772;
constexpr double kG2b = 0.5 + 0.5 / 1.7320508075688772;

Matrix dense_local_stiffness(const FineGrid& g, const CoefficientField& field,
                             int block) {
    return Matrix(local_stiffness(g, field, block));
}

Matrix dense_local_mass(const FineGrid& g, int block) {
    const int npb = g.nodes_per_block();
    std::vector<int> map(g.num_dofs(), -1);
    for (int l = 0; l < npb; ++l) map[block * npb + l] = l;
    Triplets t;
    append_block_mass(g, block, t, &map);
    return Matrix(from_triplets(npb, npb, t));
}

std::vector<int> boundary_locals(const FineGrid& g) {
    std::vector<int> out;
    for (int ly = 0; ly <= g.ny(); ++ly)
        for (int lx = 0; lx <= g.nx(); ++lx)
            if (lx == 0 || lx == g.nx() || ly == 0 || ly == g.ny())
                out.push_back(ly * (g.nx() + 1) + lx);
    return out;
}

} // namespace

double estimate_cinv_block(const FineGrid& g, const CoefficientField& field,
                           int block) {
    const int nx = g.nx(), ny = g.ny();
    const int npb = g.nodes_per_block();
    const Matrix A = dense_local_stiffness(g, field, block);

    const auto bnd = boundary_locals(g);
    std::vector<int> trace_of(npb, -1);
    for (std::size_t k = 0; k < bnd.size(); ++k)
        trace_of[bnd[k]] = static_cast<int>(k);
    std::vector<int> interior;
    for (int l = 0; l < npb; ++l)
        if (trace_of[l] < 0) interior.push_back(l);

    const int nb = static_cast<int>(bnd.size());
    const int ni = static_cast<int>(interior.size());

    // Schur complement of the interior: the energy of the kappa-harmonic
    // extension as a quadratic form on the boundary trace.
    Matrix S(nb, nb);
    if (ni == 0) {
        for (int a = 0; a < nb; ++a)
            for (int b = 0; b < nb; ++b) S(a, b) = A(bnd[a], bnd[b]);
    } else {
        Matrix Aii(ni, ni), Aib(ni, nb), Abb(nb, nb);
        for (int a = 0; a < ni; ++a)
            for (int b = 0; b < ni; ++b) Aii(a, b) = A(interior[a], interior[b]);
        for (int a = 0; a < ni; ++a)
            for (int b = 0; b < nb; ++b) Aib(a, b) = A(interior[a], bnd[b]);
        for (int a = 0; a < nb; ++a)
            for (int b = 0; b < nb; ++b) Abb(a, b) = A(bnd[a], bnd[b]);
        S = Abb - Aib.transpose() * Aii.ldlt().solve(Aib);
    }
    S = 0.5 * (S + S.transpose()).eval();

    // Boundary mass of piecewise-linear traces, exact segment quadrature.
    Matrix B = Matrix::Zero(nb, nb);
    const auto add_segment = [&](int l0, int l1, double len) {
        const int a = trace_of[l0], b = trace_of[l1];
        B(a, a) += len / 3.0;
        B(b, b) += len / 3.0;
        B(a, b) += len / 6.0;
        B(b, a) += len / 6.0;
    };
    for (int lx = 0; lx < nx; ++lx) {
        add_segment(lx, lx + 1, g.hx());
        add_segment(ny * (nx + 1) + lx, ny * (nx + 1) + lx + 1, g.hx());
    }
    for (int ly = 0; ly < ny; ++ly) {
        add_segment(ly * (nx + 1), (ly + 1) * (nx + 1), g.hy());
        add_segment(ly * (nx + 1) + nx, (ly + 1) * (nx + 1) + nx, g.hy());
    }

    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(S, B);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("estimate_cinv_block: eigensolver failed, block " +
                                 std::to_string(block));
    const double lmax = std::max(es.eigenvalues().maxCoeff(), 0.0);
    const double h = std::max(g.hx(), g.hy());
    return std::sqrt(lmax * h / field.block_max(block));
}

double estimate_cinv_flux_block(const FineGrid& g, const CoefficientField& field,
                                int block) {
    const int nx = g.nx(), ny = g.ny();
    const int npb = g.nodes_per_block();
    const double hx = g.hx(), hy = g.hy();
    const Matrix A = dense_local_stiffness(g, field, block);

    // Q(u) = int_{dK} |kappa grad u . n|^2: the Q1 normal derivative on an
    // edge is linear in the tangential coordinate, so 2-point Gauss per fine
    // segment is exact.
    Matrix Q = Matrix::Zero(npb, npb);
    const auto local = [&](int lx, int ly) { return ly * (nx + 1) + lx; };
    const auto add_edge = [&](const std::array<int, 4>& dofs, double kappa,
                              double len, double hnorm) {
        for (double s : {kG2a, kG2b}) {
            const std::array<double, 4> d = {-(1.0 - s) / hnorm, -s / hnorm,
                                             (1.0 - s) / hnorm, s / hnorm};
            const double w = 0.5 * len * kappa * kappa;
            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 4; ++b) Q(dofs[a], dofs[b]) += w * d[a] * d[b];
        }
    };
    for (int cx = 0; cx < nx; ++cx) {
        // dofs ordered so the first two carry -(1-s), -s: the near side.
        add_edge({local(cx, 0), local(cx + 1, 0), local(cx, 1), local(cx + 1, 1)},
                 field.value(g, block, cx, 0), hx, hy);
        add_edge({local(cx, ny), local(cx + 1, ny), local(cx, ny - 1),
                  local(cx + 1, ny - 1)},
                 field.value(g, block, cx, ny - 1), hx, hy);
    }
    for (int cy = 0; cy < ny; ++cy) {
        add_edge({local(0, cy), local(0, cy + 1), local(1, cy), local(1, cy + 1)},
                 field.value(g, block, 0, cy), hy, hx);
        add_edge({local(nx, cy), local(nx, cy + 1), local(nx - 1, cy),
                  local(nx - 1, cy + 1)},
                 field.value(g, block, nx - 1, cy), hy, hx);
    }
    Q = 0.5 * (Q + Q.transpose()).eval();

    // Both Q and A annihilate constants, so the ratio lives on the quotient;
    // a rank-one shift along the mass-weighted constant makes the pencil
    // definite without moving the supremum.
    const Matrix M = dense_local_mass(g, block);
    const Vector m = M * Vector::Ones(npb);
    const double c = A.trace() / m.squaredNorm();
    const Matrix denom = A + c * (m * m.transpose());

    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(Q, denom);
    if (es.info() != Eigen::Success)
        throw std::runtime_error(
            "estimate_cinv_flux_block: eigensolver failed, block " +
            std::to_string(block));
    const double lmax = std::max(es.eigenvalues().maxCoeff(), 0.0);
    const double h = std::max(hx, hy);
    return std::sqrt(lmax * h / field.block_max(block));
}

ConstantsReport estimate_constants(const FineGrid& g, const CoefficientField& field,
                                   double gamma) {
    if (gamma <= 0.0)
        throw std::invalid_argument("estimate_constants: gamma must be > 0");
    ConstantsReport r;
    r.gamma = gamma;
    const int nblocks = g.coarse().num_blocks();
    r.cinv_trace.resize(nblocks);
    r.cinv_flux.resize(nblocks);
    for (int b = 0; b < nblocks; ++b) {
        r.cinv_trace[b] = estimate_cinv_block(g, field, b);
        r.cinv_flux[b] = estimate_cinv_flux_block(g, field, b);
        r.cinv = std::max({r.cinv, r.cinv_trace[b], r.cinv_flux[b]});
    }
    r.a0 = 1.0 - r.cinv / std::sqrt(gamma);
    r.a1 = 2.0 - r.a0; // a0 + a1 = 2 exactly
    return r;
}

void write_constants(const ConstantsReport& r, std::ostream& out) {
    out << std::setprecision(17);
    out << "gamma: " << r.gamma << "\n";
    out << "cinv: " << r.cinv << "\n";
    out << "a0: " << r.a0 << "\n";
    out << "a1: " << r.a1 << "\n";
    out << "trace_space: " << r.trace_space << "\n";
    out << "blocks: " << r.cinv_trace.size() << "\n";
    for (std::size_t b = 0; b < r.cinv_trace.size(); ++b)
        out << "cinv_block_" << b << ": " << r.cinv_trace[b] << " "
            << r.cinv_flux[b] << "\n";
}

Lemma1Report check_lemma1(const DGOperator& op, const ConstantsReport& r,
                          int samples, std::uint64_t seed, int exact_limit) {
    constexpr double kTol = 1e-10;
    Lemma1Report rep;
    rep.samples = samples;
    rep.sample_lower = std::numeric_limits<double>::infinity();
    rep.sample_upper = -std::numeric_limits<double>::infinity();

    const SpMat gram = op.stiffness + op.penalty;
    const int n = static_cast<int>(op.A.rows());
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, 1.0);

    for (int k = 0; k < samples; ++k) {
        Vector u(n);
        for (int i = 0; i < n; ++i) u[i] = dist(rng);
        const double g2 = u.dot(gram * u);
        if (g2 <= 0.0) continue;
        const double a = u.dot(op.A * u);
        const double q = a / g2;
        rep.sample_lower = std::min(rep.sample_lower, q);
        rep.sample_upper = std::max(rep.sample_upper, q);
        if (a < r.a0 * g2 - kTol * g2 || a > r.a1 * g2 + kTol * g2) {
            ++rep.violations;
            if (rep.witness.size() == 0) rep.witness = u;
        }
    }

    if (n <= exact_limit) {
        Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(Matrix(op.A),
                                                            Matrix(gram));
        if (es.info() != Eigen::Success)
            throw std::runtime_error("check_lemma1: dense eigensolver failed");
        rep.exact_computed = true;
        rep.exact_lower = es.eigenvalues().minCoeff();
        rep.exact_upper = es.eigenvalues().maxCoeff();
        if (rep.exact_lower < r.a0 - kTol || rep.exact_upper > r.a1 + kTol)
            ++rep.violations;
    }
    rep.passed = rep.violations == 0;
    return rep;
}

void write_lemma1(const Lemma1Report& r, std::ostream& out) {
    out << std::setprecision(17);
    out << "lemma1_passed: " << (r.passed ? "true" : "false") << "\n";
    out << "lemma1_samples: " << r.samples << "\n";
    out << "lemma1_violations: " << r.violations << "\n";
    out << "lemma1_sample_lower: " << r.sample_lower << "\n";
    out << "lemma1_sample_upper: " << r.sample_upper << "\n";
    out << "lemma1_exact_computed: " << (r.exact_computed ? "true" : "false")
        << "\n";
    if (r.exact_computed) {
        out << "lemma1_exact_lower: " << r.exact_lower << "\n";
        out << "lemma1_exact_upper: " << r.exact_upper << "\n";
    }
}

TheoremReport check_theorem(const ConvergenceHistory& h) {
    TheoremReport t;
    t.passed = true;
    const auto violate = [&](int row, const std::string& what) {
        t.passed = false;
        if (t.first_violation_row < 0) {
            t.first_violation_row = row;
            t.what = what;
        }
    };
    for (std::size_t k = 0; k < h.rows.size(); ++k) {
        const auto& row = h.rows[k];
        if (row.eta_sq > 0.0) {
            t.slack.push_back(row.error_a_sq > 0.0
                                  ? row.eta_sq / row.error_a_sq
                                  : std::numeric_limits<double>::infinity());
            if (row.error_a_sq > row.eta_sq * (1.0 + 1e-9)) {
                ++t.bound_violations;
                violate(static_cast<int>(k), "a posteriori bound violated");
            }
        }
        if (k > 0 && h.rows[k - 1].eta_sq > 0.0) {
            const double prev = h.rows[k - 1].error_a_sq;
            if (prev > 0.0) {
                const double allowed =
                    (1.0 - h.rows[k - 1].theta + 1e-8) * prev;
                // The absolute guard covers round-off in the squared-error
                // evaluation once the error stagnates near machine precision
                // of the reference solution.
                if (row.error_a_sq > allowed + 1e-12 * h.error_scale) {
                    ++t.contraction_violations;
                    violate(static_cast<int>(k), "contraction inequality violated");
                }
            }
        }
    }
    return t;
}

void write_theorem(const TheoremReport& r, std::ostream& out) {
    out << std::setprecision(17);
    out << "theorem_passed: " << (r.passed ? "true" : "false") << "\n";
    out << "theorem_certified_rows: " << r.slack.size() << "\n";
    out << "theorem_bound_violations: " << r.bound_violations << "\n";
    out << "theorem_contraction_violations: " << r.contraction_violations << "\n";
    double min_slack = std::numeric_limits<double>::infinity();
    for (double s : r.slack) min_slack = std::min(min_slack, s);
    if (!r.slack.empty()) out << "theorem_min_slack: " << min_slack << "\n";
    if (!r.what.empty())
        out << "theorem_first_violation: row " << r.first_violation_row << " ("
            << r.what << ")\n";
}

} // namespace msdg
