#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "msdg/config.hpp"
#include "msdg/dg.hpp"
#include "msdg/offline.hpp"
#include "msdg/online.hpp"

namespace msdg {

/// Galerkin solution in the multiscale space, with its fine representation.
struct CoarseSolution {
    Vector coarse;
    Vector fine;
    int dof{0};
    int m{0};
};

/// Reduced system P^T A P with a cached factorization; also provides the
/// dependence check used when enriching.
class ReducedSolver {
  public:
    ReducedSolver(const DGOperator& op, const MultiscaleSpace& space);

    CoarseSolution solve() const;

    /// Fraction of the candidate's energy unexplained by the current space;
    /// numerically dependent candidates report a (near-)zero fraction.
    double unexplained_energy_fraction(const Vector& phi_fine, double phi_energy) const;

  private:
    Vector solve_reduced(const Vector& rhs) const;
    [[noreturn]] void fail_rank_deficient(int column) const;

    const DGOperator* op_;
    const MultiscaleSpace* space_;
    SpMat P_; // prolongation snapshot taken at construction
    SpMat Ac_;
    Vector bc_;
    Vector dscale_; // Jacobi equilibration of Ac
    Eigen::SimplicialLDLT<SpMat> fact_;
    int suspect_{-1}; // column of the smallest equilibrated pivot
};

CoarseSolution coarse_solve(const DGOperator& op, const MultiscaleSpace& space);

/// (e_2, e_a): relative L2 and relative DG-norm errors of u_H against u_h.
std::pair<double, double> errors(const DGOperator& op, const Vector& u_h,
                                 const Vector& u_H);

struct HistoryRow {
    int iteration{0};
    int sub_iteration{0};
    int dof{0};
    double e_a{0.0};
    double e_2{0.0};
    double sum_residual_sq{0.0}; // over the selected set
    double eta_sq{0.0};          // 0 when not computed
    double theta{0.0};           // theta-tilde for the selected set
    double contraction_ratio{0.0}; // A-norm error ratio vs previous row
    double wall_ms{0.0};
    double error_a_sq{0.0}; // squared A-norm error (not serialized)
};

struct ConvergenceHistory {
    std::vector<HistoryRow> rows;
    double error_scale{0.0}; // squared A-norm of the fine reference solution
    double lambda_min{0.0};
    double gamma{0.0};
    std::string strategy;
    std::string stopping_reason;
};

/// Everything assembled from a config: grids, field, operator, partition
/// of unity, initial space and the fine reference solution. Heap-allocated
/// so internal pointers stay valid.
struct Session {
    FineGrid grid;
    CoefficientField field;
    DGOperator op;
    std::vector<BlockPou> pou;
    std::vector<int> basis_counts; // L per node
    OfflineSpace offline;
    Vector u_fine;
    std::vector<std::unique_ptr<NeighborhoodSolver>> solvers; // per node, lazy

    NeighborhoodSolver& solver(int node, double gamma);

    Session() = default;
    Session(const Session&) = delete;
    Session& operator=(const Session&) = delete;
};

std::unique_ptr<Session> prepare(const RunConfig& cfg);

/// Per-sub-iteration state handed to an observer during run_adaptive.
struct IterationEvent {
    int iteration{0};
    int sub_iteration{0};
    const MultiscaleSpace* space{nullptr};
    const CoarseSolution* solution{nullptr};
    const std::vector<ResidualIndicator>* indicators{nullptr};
    const std::vector<int>* selected{nullptr};
    double e_a{0.0}, e_2{0.0}, error_a_sq{0.0};
    double eta_sq{0.0}, theta{0.0};
};

using Observer = std::function<void(const IterationEvent&)>;

/// The adaptive loop: offline space, then iterations of 4 color-class
/// sub-iterations (coarse solve, indicators, selection, enrichment) until
/// a stopping rule fires. `constants` enables the certified bound columns
/// and is required when cfg.certified is set.
ConvergenceHistory run_adaptive(Session& s, const RunConfig& cfg,
                                const ErrorBoundConstants* constants = nullptr,
                                const Observer& observe = {});

void write_history_csv(const ConvergenceHistory& h, std::ostream& out);
void write_summary(const ConvergenceHistory& h, const RunConfig& cfg,
                   std::ostream& out);

} // namespace msdg
