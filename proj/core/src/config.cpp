#include "msdg/config.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace msdg {

namespace {

[[noreturn]] void fail(const std::string& key, int line, const std::string& why) {
    throw std::runtime_error("config: key '" + key + "' (line " +
                             std::to_string(line) + "): " + why);
}

double to_double(const std::string& key, int line, const std::string& v) {
    try {
        std::size_t pos = 0;
        double d = std::stod(v, &pos);
        if (pos != v.size()) fail(key, line, "trailing characters in number");
        return d;
    } catch (const std::invalid_argument&) {
        fail(key, line, "expected a number, got '" + v + "'");
    }
}

long to_int(const std::string& key, int line, const std::string& v) {
    try {
        std::size_t pos = 0;
        long d = std::stol(v, &pos);
        if (pos != v.size()) fail(key, line, "trailing characters in integer");
        return d;
    } catch (const std::invalid_argument&) {
        fail(key, line, "expected an integer, got '" + v + "'");
    }
}

bool to_bool(const std::string& key, int line, const std::string& v) {
    if (v == "true" || v == "1" || v == "on") return true;
    if (v == "false" || v == "0" || v == "off") return false;
    fail(key, line, "expected a boolean, got '" + v + "'");
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

} // namespace

RunConfig parse_config(std::istream& in) {
    RunConfig cfg;
    bool have_field = false, have_strategy = false;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']') continue; // section header
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config: line " + std::to_string(lineno) +
                                     ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (val.empty()) fail(key, lineno, "empty value");

        if (key == "Nx") cfg.Nx = static_cast<int>(to_int(key, lineno, val));
        else if (key == "Ny") cfg.Ny = static_cast<int>(to_int(key, lineno, val));
        else if (key == "nx") cfg.nx = static_cast<int>(to_int(key, lineno, val));
        else if (key == "ny") cfg.ny = static_cast<int>(to_int(key, lineno, val));
        else if (key == "gamma") cfg.gamma = to_double(key, lineno, val);
        else if (key == "field_file") { cfg.field_file = val; have_field = true; }
        else if (key == "generator") {
            if (val != "channels_inclusions")
                fail(key, lineno, "unknown generator '" + val + "'");
            cfg.use_generator = true;
            have_field = true;
        }
        else if (key == "channels") cfg.gen_channels = static_cast<int>(to_int(key, lineno, val));
        else if (key == "inclusions") cfg.gen_inclusions = static_cast<int>(to_int(key, lineno, val));
        else if (key == "contrast") cfg.contrast = to_double(key, lineno, val);
        else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(to_int(key, lineno, val));
        else if (key == "pou") {
            if (val == "bilinear") cfg.pou = PouKind::bilinear;
            else if (val == "multiscale") cfg.pou = PouKind::multiscale;
            else fail(key, lineno, "expected bilinear or multiscale");
        }
        else if (key == "initial_basis") cfg.initial_basis = static_cast<int>(to_int(key, lineno, val));
        else if (key == "include_boundary_nodes") cfg.include_boundary_nodes = to_bool(key, lineno, val);
        else if (key == "strategy") {
            std::istringstream ss(val);
            std::string kind;
            ss >> kind;
            if (kind == "all") cfg.strategy.kind = Strategy::all;
            else if (kind == "threshold") {
                cfg.strategy.kind = Strategy::threshold;
                if (!(ss >> cfg.strategy.tol))
                    fail(key, lineno, "threshold needs a tolerance");
            } else if (kind == "cumulative") {
                cfg.strategy.kind = Strategy::cumulative;
                if (!(ss >> cfg.strategy.theta_frac))
                    fail(key, lineno, "cumulative needs a fraction");
            } else fail(key, lineno, "expected all, threshold or cumulative");
            std::string rest;
            if (ss >> rest) fail(key, lineno, "trailing tokens");
            have_strategy = true;
        }
        else if (key == "tol") cfg.strategy.tol = to_double(key, lineno, val);
        else if (key == "target_ea") cfg.target_ea = to_double(key, lineno, val);
        else if (key == "max_iterations") cfg.max_iterations = static_cast<int>(to_int(key, lineno, val));
        else if (key == "dof_budget") cfg.dof_budget = static_cast<int>(to_int(key, lineno, val));
        else if (key == "certified") cfg.certified = to_bool(key, lineno, val);
        else if (key == "record_timings") cfg.record_timings = to_bool(key, lineno, val);
        else if (key == "dump_eigens") cfg.dump_eigens = to_bool(key, lineno, val);
        else if (key == "dump_field") cfg.dump_field = to_bool(key, lineno, val);
        else if (key == "dump_indicators") cfg.dump_indicators = to_bool(key, lineno, val);
        else fail(key, lineno, "unknown key");
    }

    if (!have_field)
        throw std::runtime_error("config: a field source is required "
                                 "(field_file or generator)");
    if (!cfg.field_file.empty() && cfg.use_generator)
        throw std::runtime_error("config: field_file and generator are exclusive");
    if (cfg.Nx < 1 || cfg.Ny < 1 || cfg.nx < 1 || cfg.ny < 1)
        throw std::runtime_error("config: grid counts must be >= 1");
    if (cfg.gamma <= 0.0) throw std::runtime_error("config: gamma must be > 0");
    if (cfg.initial_basis < 1)
        throw std::runtime_error("config: initial_basis must be >= 1");
    if (cfg.contrast < 1.0) throw std::runtime_error("config: contrast must be >= 1");
    if (cfg.max_iterations < 0)
        throw std::runtime_error("config: max_iterations must be >= 0");
    if (cfg.strategy.kind == Strategy::threshold && cfg.strategy.tol <= 0.0)
        throw std::runtime_error("config: threshold tolerance must be > 0");
    if (cfg.strategy.kind == Strategy::cumulative &&
        (cfg.strategy.theta_frac <= 0.0 || cfg.strategy.theta_frac > 1.0))
        throw std::runtime_error("config: cumulative fraction must be in (0, 1]");
    (void)have_strategy;
    return cfg;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    return parse_config(in);
}

std::string strategy_text(const SelectionRule& rule) {
    std::ostringstream ss;
    ss << std::setprecision(17);
    switch (rule.kind) {
    case Strategy::all: ss << "all"; break;
    case Strategy::threshold: ss << "threshold " << rule.tol; break;
    case Strategy::cumulative: ss << "cumulative " << rule.theta_frac; break;
    }
    return ss.str();
}

void print_config(const RunConfig& cfg, std::ostream& out) {
    out << std::setprecision(17);
    out << "Nx = " << cfg.Nx << "\n";
    out << "Ny = " << cfg.Ny << "\n";
    out << "nx = " << cfg.nx << "\n";
    out << "ny = " << cfg.ny << "\n";
    out << "gamma = " << cfg.gamma << "\n";
    if (cfg.use_generator) {
        out << "generator = channels_inclusions\n";
        out << "channels = " << cfg.gen_channels << "\n";
        out << "inclusions = " << cfg.gen_inclusions << "\n";
    } else {
        out << "field_file = " << cfg.field_file << "\n";
    }
    out << "contrast = " << cfg.contrast << "\n";
    out << "seed = " << cfg.seed << "\n";
    out << "pou = " << (cfg.pou == PouKind::bilinear ? "bilinear" : "multiscale")
        << "\n";
    out << "initial_basis = " << cfg.initial_basis << "\n";
    out << "include_boundary_nodes = "
        << (cfg.include_boundary_nodes ? "true" : "false") << "\n";
    out << "strategy = " << strategy_text(cfg.strategy) << "\n";
    if (cfg.strategy.kind != Strategy::threshold && cfg.strategy.tol != 0.0)
        out << "tol = " << cfg.strategy.tol << "\n";
    out << "target_ea = " << cfg.target_ea << "\n";
    out << "max_iterations = " << cfg.max_iterations << "\n";
    out << "dof_budget = " << cfg.dof_budget << "\n";
    out << "certified = " << (cfg.certified ? "true" : "false") << "\n";
    out << "record_timings = " << (cfg.record_timings ? "true" : "false") << "\n";
    out << "dump_eigens = " << (cfg.dump_eigens ? "true" : "false") << "\n";
    out << "dump_field = " << (cfg.dump_field ? "true" : "false") << "\n";
    out << "dump_indicators = " << (cfg.dump_indicators ? "true" : "false") << "\n";
}

} // namespace msdg
