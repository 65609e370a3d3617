#include "msdg/driver.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace msdg {

namespace {

std::string describe(const BasisProvenance& p) {
    if (p.kind == BasisProvenance::Kind::offline)
        return "offline node " + std::to_string(p.node) + " eigenfunction " +
               std::to_string(p.index);
    return "online node " + std::to_string(p.node) + " iteration " +
           std::to_string(p.index);
}

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
    const auto dt = std::chrono::steady_clock::now() - t0;
    return std::chrono::duration<double, std::milli>(dt).count();
}

} // namespace

ReducedSolver::ReducedSolver(const DGOperator& op, const MultiscaleSpace& space)
    : op_(&op), space_(&space), P_(space.prolongation()) {
    // Snapshot the prolongation: the dependence check must stay consistent
    // with the factorization even while enrichment grows the space.
    Ac_ = P_.transpose() * op.A * P_;
    bc_ = P_.transpose() * op.b;

    bool deficient = false;
    int bad = -1;
    // Jacobi equilibration: basis energies span many orders of magnitude, so
    // factor D^-1/2 Ac D^-1/2 instead. A non-positive diagonal already names
    // the dependent column.
    const Vector diag = Ac_.diagonal();
    dscale_.resize(diag.size());
    for (int j = 0; j < diag.size(); ++j) {
        if (diag[j] <= 0.0) {
            deficient = true;
            if (bad < 0) bad = j;
            dscale_[j] = 1.0;
        } else {
            dscale_[j] = 1.0 / std::sqrt(diag[j]);
        }
    }
    if (!deficient) {
        const SpMat scaled =
            dscale_.asDiagonal() * Ac_ * dscale_.asDiagonal();
        fact_.compute(scaled);
        deficient = fact_.info() != Eigen::Success;
    }
    if (!deficient) {
        const Vector& d = fact_.vectorD();
        const double dmax = d.cwiseAbs().maxCoeff();
        int k = -1;
        const double dmin = d.cwiseAbs().minCoeff(&k);
        // D entry k lives at permuted position k; undo the fill-reducing
        // permutation to name the column of the weakest pivot. It is kept
        // as the suspect even when the factorization is accepted, so a
        // later solve that cannot reach its residual target can still name
        // a basis function.
        const auto& perm = fact_.permutationP().indices();
        for (int o = 0; o < perm.size(); ++o)
            if (perm[o] == k) { suspect_ = o; break; }
        // Only an (almost) exact dependence is fatal here; merely
        // ill-conditioned systems are still solvable to the residual
        // target with iterative refinement, which solve() enforces.
        if (dmin <= 1e-16 * dmax || d[k] < 0.0) {
            deficient = true;
            bad = suspect_;
        }
    }
    if (deficient) fail_rank_deficient(bad);
}

void ReducedSolver::fail_rank_deficient(int column) const {
    std::string what = "reduced system P^T A P is rank deficient";
    if (column >= 0 && column < space_->size())
        what += "; offending basis function: " +
                describe(space_->basis()[column].prov);
    else if (space_->size() > 0)
        what += "; last added basis function: " +
                describe(space_->basis().back().prov);
    throw std::runtime_error(what);
}

Vector ReducedSolver::solve_reduced(const Vector& rhs) const {
    const Vector scaled = dscale_.cwiseProduct(rhs);
    return dscale_.cwiseProduct(fact_.solve(scaled));
}

CoarseSolution ReducedSolver::solve() const {
    CoarseSolution s;
    s.coarse = solve_reduced(bc_);
    // Normwise backward error |r| / (|A||x| + |b|), driven below 1e-13 by
    // iterative refinement.
    const double anorm = Ac_.norm();
    Vector r = bc_ - Ac_ * s.coarse;
    double scale = anorm * s.coarse.norm() + bc_.norm();
    for (int k = 0; k < 10 && r.norm() > 1e-13 * scale; ++k) {
        s.coarse += solve_reduced(r);
        r = bc_ - Ac_ * s.coarse;
        scale = anorm * s.coarse.norm() + bc_.norm();
    }
    // Failure to reach the residual target means the system is singular for
    // practical purposes; report it as a rank deficiency with the weakest
    // pivot's provenance.
    if (scale > 0.0 && r.norm() > 1e-12 * scale) fail_rank_deficient(suspect_);
    s.fine = P_ * s.coarse;
    s.dof = static_cast<int>(P_.cols());
    s.m = space_->iteration();
    return s;
}

double ReducedSolver::unexplained_energy_fraction(const Vector& phi_fine,
                                                  double phi_energy) const {
    (void)phi_energy;
    const Vector Aphi = op_->A * phi_fine;
    const double e = phi_fine.dot(Aphi);
    if (e <= 0.0) return 0.0;
    const Vector g = P_.transpose() * Aphi;
    Vector x = solve_reduced(g);
    for (int k = 0; k < 3; ++k) x += solve_reduced(g - Ac_ * x);
    // Evaluated as the energy of the explicit remainder rather than as
    // e - g.x: the latter cancels two O(e) terms and its noise (linear in
    // the solve error) can make a dependent candidate look independent,
    // while the quadratic form below is exact in the formed remainder.
    const Vector w = phi_fine - P_ * x;
    const double num = w.dot(op_->A * w) + x.dot(g - Ac_ * x);
    return std::max(num, 0.0) / e;
}

CoarseSolution coarse_solve(const DGOperator& op, const MultiscaleSpace& space) {
    return ReducedSolver(op, space).solve();
}

std::pair<double, double> errors(const DGOperator& op, const Vector& u_h,
                                 const Vector& u_H) {
    const double ref2 = op.l2_norm(u_h);
    const double refa = op.dg_norm(u_h);
    if (ref2 <= 0.0 || refa <= 0.0)
        throw std::runtime_error("errors: zero reference norm");
    const Vector e = u_h - u_H;
    return {op.l2_norm(e) / ref2, op.dg_norm(e) / refa};
}

NeighborhoodSolver& Session::solver(int node, double gamma) {
    if (!solvers[node])
        solvers[node] = std::make_unique<NeighborhoodSolver>(grid, field, gamma, node);
    return *solvers[node];
}

std::unique_ptr<Session> prepare(const RunConfig& cfg) {
    auto s = std::make_unique<Session>();
    s->grid = build_grids(Rect{0.0, 0.0, 1.0, 1.0}, cfg.Nx, cfg.Ny, cfg.nx, cfg.ny);
    if (cfg.use_generator)
        s->field = generate_channels_inclusions(s->grid, cfg.gen_channels,
                                                cfg.gen_inclusions, cfg.contrast,
                                                cfg.seed);
    else
        s->field = load_field(cfg.field_file, s->grid);
    s->op = assemble(s->grid, s->field, cfg.gamma,
                     [](double, double) { return 1.0; });
    s->pou = build_pou(s->grid, s->field, cfg.pou);
    s->basis_counts = uniform_basis_counts(s->grid.coarse(), cfg.initial_basis,
                                           cfg.include_boundary_nodes);
    s->offline = build_offline_space(s->grid, s->field, s->pou, cfg.gamma,
                                     s->basis_counts);
    s->u_fine = solve_fine(s->op);
    s->solvers.resize(s->grid.coarse().num_nodes());
    return s;
}

ConvergenceHistory run_adaptive(Session& s, const RunConfig& cfg,
                                const ErrorBoundConstants* constants,
                                const Observer& observe) {
    if (cfg.certified && !constants)
        throw std::invalid_argument("run_adaptive: certified run needs constants");

    ConvergenceHistory h;
    h.error_scale = std::max(s.op.a_norm_sq(s.u_fine), 0.0);
    h.lambda_min = s.offline.lambda_min;
    h.gamma = cfg.gamma;
    h.strategy = strategy_text(cfg.strategy);

    MultiscaleSpace& space = s.offline.space;
    const auto colors = s.grid.coarse().color_classes();

    std::vector<int> enriched_nodes;
    for (int n = 0; n < s.grid.coarse().num_nodes(); ++n)
        if (s.basis_counts[n] > 0) enriched_nodes.push_back(n);

    const auto certified_eta = [&](const Vector& resid,
                                   const std::vector<double>& selected_sq) {
        std::vector<ModifiedIndicator> mods;
        mods.reserve(enriched_nodes.size());
        for (int node : enriched_nodes)
            mods.push_back(s.solver(node, cfg.gamma)
                               .modified_residual_norm(resid, s.pou,
                                                       s.offline.lambda_next[node]));
        return eta_theta(selected_sq, mods, *constants);
    };

    double prev_err_a_sq = -1.0;
    const auto record = [&](int iter, int sub, const CoarseSolution& sol,
                            double sum_sq, double eta_sq, double theta,
                            double wall_ms) -> const HistoryRow& {
        const auto [e2, ea] = errors(s.op, s.u_fine, sol.fine);
        HistoryRow row;
        row.iteration = iter;
        row.sub_iteration = sub;
        row.dof = sol.dof;
        row.e_a = ea;
        row.e_2 = e2;
        row.sum_residual_sq = sum_sq;
        row.eta_sq = eta_sq;
        row.theta = theta;
        row.error_a_sq = std::max(s.op.a_norm_sq(s.u_fine - sol.fine), 0.0);
        row.contraction_ratio =
            prev_err_a_sq > 0.0 ? std::sqrt(row.error_a_sq / prev_err_a_sq) : 0.0;
        row.wall_ms = cfg.record_timings ? wall_ms : 0.0;
        prev_err_a_sq = row.error_a_sq;
        h.rows.push_back(row);
        return h.rows.back();
    };

    int iter = 0;
    int last_recorded_dof = -1;
    bool stop = false;
    while (!stop) {
        if (iter >= cfg.max_iterations) {
            h.stopping_reason = "max_iterations";
            break;
        }
        int added_this_iteration = 0;
        for (int sub = 0; sub < 4 && !stop; ++sub) {
            const auto t0 = std::chrono::steady_clock::now();
            ReducedSolver rs(s.op, space);
            const CoarseSolution sol = rs.solve();
            const Vector resid = s.op.b - s.op.A * sol.fine;

            // Indicators at the round-off floor of the residual evaluation
            // are treated as zero: enriching on them cannot move the error
            // past its seventh digit but steadily degrades the reduced
            // system's conditioning.
            const double floor_sq =
                1e-14 * std::max(s.op.b.dot(sol.fine), 0.0);
            std::vector<ResidualIndicator> inds;
            std::vector<const NeighborhoodSolver*> nsolvers;
            for (int node : colors[sub]) {
                if (s.basis_counts[node] <= 0) continue;
                auto& ns = s.solver(node, cfg.gamma);
                auto ind = ns.riesz_solve(ns.residual_functional(resid));
                if (ind.norm_sq <= floor_sq) continue;
                ind.iteration = iter;
                inds.push_back(std::move(ind));
                nsolvers.push_back(&ns);
            }
            const auto selected = select_regions(inds, cfg.strategy);
            std::vector<double> selected_sq;
            double sum_sq = 0.0;
            for (int i : selected) {
                selected_sq.push_back(inds[i].norm_sq);
                sum_sq += inds[i].norm_sq;
            }

            double eta_sq = 0.0, theta = 0.0;
            if (cfg.certified) {
                const EtaTheta et = certified_eta(resid, selected_sq);
                eta_sq = et.eta_sq;
                theta = et.theta;
            }

            const auto& row = record(iter, sub, sol, sum_sq, eta_sq, theta,
                                     elapsed_ms(t0));
            last_recorded_dof = sol.dof;
            if (observe) {
                IterationEvent ev;
                ev.iteration = iter;
                ev.sub_iteration = sub;
                ev.space = &space;
                ev.solution = &sol;
                ev.indicators = &inds;
                ev.selected = &selected;
                ev.e_a = row.e_a;
                ev.e_2 = row.e_2;
                ev.error_a_sq = row.error_a_sq;
                ev.eta_sq = eta_sq;
                ev.theta = theta;
                observe(ev);
            }

            if (cfg.target_ea > 0.0 && row.e_a <= cfg.target_ea) {
                h.stopping_reason = "target_ea";
                stop = true;
                break;
            }
            if (cfg.dof_budget > 0 && sol.dof >= cfg.dof_budget) {
                h.stopping_reason = "dof_budget";
                stop = true;
                break;
            }

            // Veto candidates nearly inside the span: the error decrease a
            // candidate can still deliver is at most its unexplained fraction
            // times the squared error, so skipping a sub-1e-6 candidate is
            // harmless, while adding it steadily degrades the reduced
            // system's conditioning.
            const auto accept = [&rs](const Vector& fine, double energy) {
                return rs.unexplained_energy_fraction(fine, energy) > 1e-6;
            };
            const EnrichResult er =
                enrich(space, s.grid, inds, selected, nsolvers, accept);
            added_this_iteration += er.added_functions;
        }
        if (stop) break;
        if (added_this_iteration == 0) {
            h.stopping_reason = "empty_selection";
            break;
        }
        ++iter;
    }

    // The last enrichment's effect (or the bare offline space when
    // max_iterations = 0) still needs a measured row.
    if (h.rows.empty() || last_recorded_dof != space.size()) {
        const auto t0 = std::chrono::steady_clock::now();
        ReducedSolver rs(s.op, space);
        const CoarseSolution sol = rs.solve();
        double eta_sq = 0.0;
        if (cfg.certified) {
            const Vector resid = s.op.b - s.op.A * sol.fine;
            eta_sq = certified_eta(resid, {}).eta_sq;
        }
        record(iter, 0, sol, 0.0, eta_sq, 0.0, elapsed_ms(t0));
    }
    return h;
}

void write_history_csv(const ConvergenceHistory& h, std::ostream& out) {
    out << "iteration,sub_iteration,dof,e_a,e_2,sum_residual_sq,eta_sq,theta,"
           "contraction_ratio,wall_ms\n";
    out << std::setprecision(17);
    for (const auto& r : h.rows)
        out << r.iteration << ',' << r.sub_iteration << ',' << r.dof << ','
            << r.e_a << ',' << r.e_2 << ',' << r.sum_residual_sq << ','
            << r.eta_sq << ',' << r.theta << ',' << r.contraction_ratio << ','
            << r.wall_ms << '\n';
}

void write_summary(const ConvergenceHistory& h, const RunConfig& cfg,
                   std::ostream& out) {
    out << std::setprecision(17);
    out << "coarse_grid: " << cfg.Nx << " x " << cfg.Ny << "\n";
    out << "fine_per_block: " << cfg.nx << " x " << cfg.ny << "\n";
    out << "gamma: " << h.gamma << "\n";
    out << "lambda_min: " << h.lambda_min << "\n";
    out << "initial_basis: " << cfg.initial_basis << "\n";
    out << "pou: " << (cfg.pou == PouKind::bilinear ? "bilinear" : "multiscale")
        << "\n";
    out << "strategy: " << h.strategy << "\n";
    out << "stopping_reason: " << h.stopping_reason << "\n";
    out << "rows: " << h.rows.size() << "\n";
    if (!h.rows.empty()) {
        const auto& last = h.rows.back();
        out << "iterations: " << last.iteration << "\n";
        out << "final_dof: " << last.dof << "\n";
        out << "final_e_a: " << last.e_a << "\n";
        out << "final_e_2: " << last.e_2 << "\n";
    }
}

} // namespace msdg
