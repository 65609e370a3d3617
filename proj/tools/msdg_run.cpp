// Command-line front end: parses a run configuration, executes the adaptive
// solver and writes the history CSV, summary and optional dumps to an output
// directory. Exit codes: 0 completed, 1 error, 2 verification failure.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>

#include "msdg/config.hpp"
#include "msdg/driver.hpp"
#include "msdg/verify.hpp"

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& p) {
    std::ofstream out(p);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adaptive multiscale DG solver for high-contrast elliptic problems"};
    std::string config_path;
    std::string out_dir = "out";
    long long seed_override = -1;
    bool dry_run = false, verify = false, quiet = false;
    app.add_option("--config", config_path, "Run configuration file")->required();
    app.add_option("--out", out_dir, "Output directory");
    app.add_option("--seed", seed_override, "Override the config seed");
    app.add_flag("--dry-run", dry_run, "Validate the config and print it, no computation");
    app.add_flag("--verify", verify, "Estimate constants and check the certified bound");
    app.add_flag("--quiet", quiet, "Suppress progress output");
    CLI11_PARSE(app, argc, argv);

    try {
        msdg::RunConfig cfg = msdg::parse_config_file(config_path);
        if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);

        if (dry_run) {
            msdg::print_config(cfg, std::cout);
            return 0;
        }

        fs::create_directories(out_dir);
        const fs::path out(out_dir);

        if (!quiet)
            std::cout << "preparing " << cfg.Nx << "x" << cfg.Ny << " coarse / "
                      << cfg.nx << "x" << cfg.ny << " fine per block" << std::endl;
        auto session = msdg::prepare(cfg);

        msdg::ConstantsReport constants;
        msdg::ErrorBoundConstants bound_constants;
        bool certified = false;
        if (verify) {
            constants = msdg::estimate_constants(session->grid, session->field,
                                                 cfg.gamma);
            certified = constants.a0 > 0.0;
            if (!quiet && !certified)
                std::cout << "note: a0 = " << constants.a0
                          << " <= 0 at gamma = " << cfg.gamma
                          << "; certified bound skipped" << std::endl;
            if (certified) bound_constants = constants.constants();
        }
        cfg.certified = certified;

        std::ofstream ind_out;
        msdg::Observer observer;
        if (cfg.dump_indicators) {
            fs::create_directories(out / "indicators");
            ind_out = open_out(out / "indicators" / "indicators.csv");
            ind_out << "iteration,sub_iteration,node_index,residual_norm_sq,"
                       "selected_flag\n"
                    << std::setprecision(17);
            observer = [&ind_out](const msdg::IterationEvent& ev) {
                std::vector<bool> sel(ev.indicators->size(), false);
                for (int i : *ev.selected) sel[i] = true;
                for (std::size_t i = 0; i < ev.indicators->size(); ++i)
                    ind_out << ev.iteration << ',' << ev.sub_iteration << ','
                            << (*ev.indicators)[i].node << ','
                            << (*ev.indicators)[i].norm_sq << ','
                            << (sel[i] ? 1 : 0) << '\n';
            };
        }

        msdg::ConvergenceHistory history = msdg::run_adaptive(
            *session, cfg, certified ? &bound_constants : nullptr, observer);

        {
            auto f = open_out(out / "history.csv");
            msdg::write_history_csv(history, f);
        }
        msdg::TheoremReport theorem;
        msdg::Lemma1Report lemma1;
        if (verify) {
            lemma1 = msdg::check_lemma1(session->op, constants, 100, cfg.seed);
            if (certified) theorem = msdg::check_theorem(history);
            auto f = open_out(out / "constants.txt");
            msdg::write_constants(constants, f);
            msdg::write_lemma1(lemma1, f);
            if (certified)
                msdg::write_theorem(theorem, f);
            else
                f << "certified_bound: skipped (a0 <= 0)\n";
        }
        {
            auto f = open_out(out / "summary.txt");
            msdg::write_summary(history, cfg, f);
            if (verify) {
                msdg::write_constants(constants, f);
                msdg::write_lemma1(lemma1, f);
                if (certified) msdg::write_theorem(theorem, f);
            }
        }
        if (cfg.dump_field) {
            auto f = open_out(out / "field.txt");
            msdg::save_field(session->field, session->grid, f);
        }
        if (cfg.dump_eigens) {
            fs::create_directories(out / "eigens");
            auto f = open_out(out / "eigens" / "eigenvalues.csv");
            f << "node_index,k,lambda_k\n" << std::setprecision(17);
            for (const auto& sr : session->offline.spectral)
                for (int k = 0; k < sr.eigenvalues.size(); ++k)
                    f << sr.node << ',' << k << ',' << sr.eigenvalues[k] << '\n';
        }

        if (!quiet && !history.rows.empty())
            std::cout << "done: " << history.rows.size() << " rows, final e_a = "
                      << history.rows.back().e_a << " at "
                      << history.rows.back().dof << " DOF ("
                      << history.stopping_reason << ")" << std::endl;

        if (verify && (!lemma1.passed || (certified && !theorem.passed))) {
            if (!quiet) std::cout << "verification failed" << std::endl;
            return 2;
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    }
}
