#include <cmath>
#include <random>

#include <doctest.h>

#include "msdg/dg.hpp"
#include "msdg/offline.hpp"
#include "msdg/online.hpp"

using namespace msdg;

namespace {

const Rect kUnit{0.0, 0.0, 1.0, 1.0};

CoefficientField random_field(const FineGrid& g, double contrast,
                              std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(1.0, contrast);
    std::vector<double> v(g.num_cells());
    for (auto& x : v) x = dist(rng);
    return CoefficientField(g, v);
}

struct Setup {
    FineGrid g;
    CoefficientField f;
    DGOperator op;
    Vector u_fine;
    double gamma;
};

Setup make_setup(int N, int n, double contrast, std::uint64_t seed,
                 double gamma = 4.0) {
    Setup s;
    s.g = build_grids(kUnit, N, N, n, n);
    s.f = random_field(s.g, contrast, seed);
    s.op = assemble(s.g, s.f, gamma, [](double, double) { return 1.0; });
    s.u_fine = solve_fine(s.op);
    s.gamma = gamma;
    return s;
}

ResidualIndicator make_indicator(int node, double norm_sq) {
    ResidualIndicator ind;
    ind.node = node;
    ind.norm_sq = norm_sq;
    return ind;
}

} // namespace

TEST_CASE("residual functional vanishes at the fine solution") {
    const Setup s = make_setup(2, 2, 1e3, 7);
    const Vector resid = s.op.b - s.op.A * s.u_fine;
    const int center = s.g.coarse().node_index(1, 1);
    const NeighborhoodSolver solver(s.g, s.f, s.gamma, center);
    const Vector fn = solver.residual_functional(resid);
    const auto ind = solver.riesz_solve(fn);
    CHECK(ind.norm_sq < 1e-16 * s.op.b.squaredNorm());
}

TEST_CASE("Riesz representative: identity and maximizer property") {
    const Setup s = make_setup(2, 2, 1e3, 11);
    const Vector resid = s.op.b; // residual at u_H = 0
    const int center = s.g.coarse().node_index(1, 1);
    const NeighborhoodSolver solver(s.g, s.f, s.gamma, center);
    const Vector fn = solver.residual_functional(resid);
    const auto ind = solver.riesz_solve(fn);
    REQUIRE(ind.norm_sq > 0.0);

    // a_omega(phi, v) = R(v) for interior v, and ||R||^2 = R(phi).
    const Vector aphi = solver.a_omega() * ind.phi_local;
    double fdotphi = 0.0;
    for (std::size_t k = 0; k < solver.interior_local().size(); ++k) {
        const int loc = solver.interior_local()[k];
        CHECK(aphi[loc] == doctest::Approx(fn[k]).epsilon(1e-9));
        fdotphi += fn[k] * ind.phi_local[loc];
    }
    CHECK(ind.norm_sq == doctest::Approx(fdotphi).epsilon(1e-9));
    // boundary entries of phi are zero
    for (int l = 0; l < solver.map().dim(); ++l) {
        bool interior = false;
        for (int il : solver.interior_local()) interior |= (il == l);
        if (!interior) CHECK(ind.phi_local[l] == 0.0);
    }

    // phi maximizes R(v)^2 / a(v, v) over interior v.
    std::mt19937_64 rng(99);
    std::normal_distribution<double> dist;
    for (int trial = 0; trial < 200; ++trial) {
        Vector v = Vector::Zero(solver.map().dim());
        for (int il : solver.interior_local()) v[il] = dist(rng);
        const double rv = [&] {
            double acc = 0.0;
            for (std::size_t k = 0; k < solver.interior_local().size(); ++k)
                acc += fn[k] * v[solver.interior_local()[k]];
            return acc;
        }();
        const double energy = v.dot(solver.a_omega() * v);
        REQUIRE(energy > 0.0);
        CHECK(rv * rv / energy <= ind.norm_sq * (1.0 + 1e-9));
    }
}

TEST_CASE("modified residual norm: oracle match and quotient bound") {
    const Setup s = make_setup(2, 2, 1e3, 13);
    const auto pou = build_pou(s.g, s.f, PouKind::bilinear);
    const int center = s.g.coarse().node_index(1, 1);
    const NeighborhoodSolver solver(s.g, s.f, s.gamma, center);
    const Vector resid = s.op.b;
    const double lambda_next = 3.5;
    const auto mi = solver.modified_residual_norm(resid, pou, lambda_next);
    CHECK(mi.eigen_weight == doctest::Approx(1.0 + 1.0 / lambda_next));
    REQUIRE(mi.norm_sq > 0.0);

    // Reference: restrict a_omega to the chi-support coordinates and apply
    // an eigen-decomposition pseudo-inverse.
    const auto& map = solver.map();
    const int npb = s.g.nodes_per_block();
    std::vector<int> wset;
    for (std::size_t slot = 0; slot < map.nb.blocks.size(); ++slot) {
        const int b = map.nb.blocks[slot];
        const Vector& chi = pou[b].chi[vertex_slot(s.g.coarse(), center, b)];
        for (int l = 0; l < npb; ++l)
            if (std::abs(chi[l]) > 1e-13)
                wset.push_back(static_cast<int>(slot) * npb + l);
    }
    const int nw = static_cast<int>(wset.size());
    Matrix aw(nw, nw);
    const Matrix adense = Matrix(solver.a_omega());
    Vector rw(nw);
    for (int i = 0; i < nw; ++i) {
        rw[i] = resid[map.local_to_global[wset[i]]];
        for (int j = 0; j < nw; ++j) aw(i, j) = adense(wset[i], wset[j]);
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(aw);
    Vector inv = es.eigenvalues();
    const double lmax = inv.cwiseAbs().maxCoeff();
    for (int i = 0; i < inv.size(); ++i)
        inv[i] = (inv[i] > 1e-12 * lmax) ? 1.0 / inv[i] : 0.0;
    const double ref = rw.dot(es.eigenvectors() * inv.asDiagonal() *
                              es.eigenvectors().transpose() * rw);
    CHECK(mi.norm_sq == doctest::Approx(ref).epsilon(1e-8));

    // Sampled Rayleigh quotients never exceed the sup.
    std::mt19937_64 rng(5);
    std::normal_distribution<double> dist;
    for (int trial = 0; trial < 100; ++trial) {
        Vector w(nw);
        for (int i = 0; i < nw; ++i) w[i] = dist(rng);
        const double energy = w.dot(aw * w);
        if (energy <= 0.0) continue;
        const double rv = rw.dot(w);
        CHECK(rv * rv / energy <= mi.norm_sq * (1.0 + 1e-9));
    }

    // ... and it vanishes together with the residual.
    const Vector zero_resid = s.op.b - s.op.A * s.u_fine;
    const auto mi0 = solver.modified_residual_norm(zero_resid, pou, lambda_next);
    CHECK(mi0.norm_sq < 1e-16 * s.op.b.squaredNorm());
}

TEST_CASE("eta_theta arithmetic and guards") {
    ErrorBoundConstants c;
    c.a0 = 0.5;
    c.a1 = 1.5;
    c.C0 = 4.0;
    std::vector<ModifiedIndicator> mods(2);
    mods[0] = {0, 2.0, 1.25}; // weight * norm_sq = 2.5
    mods[1] = {1, 1.0, 3.0};  // 3.0
    const auto et = eta_theta({1.0, 0.5}, mods, c);
    // eta^2 = 2 / 0.5 * 1.5 * 4 * 5.5 = 132
    CHECK(et.eta_sq == doctest::Approx(132.0));
    CHECK(et.theta == doctest::Approx(1.5 / 132.0));

    ErrorBoundConstants bad = c;
    bad.a0 = 0.0;
    CHECK_THROWS_AS(eta_theta({1.0}, mods, bad), std::invalid_argument);
    CHECK_THROWS_AS(eta_theta({1.0}, {}, c), std::runtime_error); // eta = 0, R != 0
    const auto quiet = eta_theta({}, {}, c);
    CHECK(quiet.eta_sq == 0.0);
    CHECK(quiet.theta == 0.0);
}

TEST_CASE("select_regions strategies") {
    std::vector<ResidualIndicator> inds = {make_indicator(0, 9.0),
                                           make_indicator(1, 4.0),
                                           make_indicator(2, 1.0),
                                           make_indicator(3, 0.0)};
    SelectionRule all;
    all.kind = Strategy::all;
    CHECK(select_regions(inds, all) == std::vector<int>{0, 1, 2});

    SelectionRule thr;
    thr.kind = Strategy::threshold;
    thr.tol = 1.5; // on the norm, not the square
    CHECK(select_regions(inds, thr) == std::vector<int>{0, 1});
    thr.tol = 100.0;
    CHECK(select_regions(inds, thr).empty());

    SelectionRule cum;
    cum.kind = Strategy::cumulative;
    cum.theta_frac = 0.5; // 9 >= 0.5 * 14: the largest alone suffices
    CHECK(select_regions(inds, cum) == std::vector<int>{0});
    cum.theta_frac = 0.75; // needs 9 + 4 >= 10.5
    CHECK(select_regions(inds, cum) == std::vector<int>{0, 1});
    cum.theta_frac = 1.0; // all nonzero
    CHECK(select_regions(inds, cum) == std::vector<int>{0, 1, 2});

    // tie-break: equal norms ordered by node index
    std::vector<ResidualIndicator> ties = {make_indicator(7, 4.0),
                                           make_indicator(2, 4.0)};
    SelectionRule one;
    one.kind = Strategy::cumulative;
    one.theta_frac = 0.5;
    CHECK(select_regions(ties, one) == std::vector<int>{1});

    // cumulative with a tolerance floor stops at small indicators
    cum.theta_frac = 1.0;
    cum.tol = 1.5;
    CHECK(select_regions(inds, cum) == std::vector<int>{0, 1});

    std::vector<ResidualIndicator> zeros = {make_indicator(0, 0.0)};
    CHECK(select_regions(zeros, cum).empty());
}

TEST_CASE("enrich: normalized per-block pieces with provenance") {
    const Setup s = make_setup(2, 2, 1e3, 17);
    const int center = s.g.coarse().node_index(1, 1);
    const NeighborhoodSolver solver(s.g, s.f, s.gamma, center);
    auto ind = solver.riesz_solve(solver.residual_functional(s.op.b));
    ind.iteration = 3;

    MultiscaleSpace space(&s.g);
    const auto res = enrich(space, s.g, {ind}, {0}, {&solver});
    CHECK(res.added_functions == 4); // one piece per member block
    CHECK(res.skipped == 0);
    CHECK(space.iteration() == 1);
    for (const auto& bf : space.basis()) {
        CHECK(bf.values.norm() == doctest::Approx(1.0));
        CHECK(bf.prov.kind == BasisProvenance::Kind::online);
        CHECK(bf.prov.node == center);
        CHECK(bf.prov.index == 3);
    }

    // zero indicators are skipped ...
    auto zero = make_indicator(center, 0.0);
    zero.phi_local = Vector::Zero(solver.map().dim());
    const auto res0 = enrich(space, s.g, {zero}, {0}, {&solver});
    CHECK(res0.added_functions == 0);
    CHECK(res0.skipped == 1);

    // ... and the dependence veto counts per piece.
    const auto res_veto = enrich(space, s.g, {ind}, {0}, {&solver},
                                 [](const Vector&, double) { return false; });
    CHECK(res_veto.added_functions == 0);
    CHECK(res_veto.skipped == 4);
}
