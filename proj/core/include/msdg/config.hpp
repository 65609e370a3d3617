#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "msdg/offline.hpp"
#include "msdg/online.hpp"

namespace msdg {

/// One experiment: grids, penalty, field source, initial space, enrichment
/// strategy and stopping rules. Parsed from flat "key = value" text.
struct RunConfig {
    int Nx{10}, Ny{10};
    int nx{10}, ny{10};
    double gamma{2.0};

    // Field source: exactly one of file path or generator.
    std::string field_file;
    bool use_generator{false};
    int gen_channels{3};
    int gen_inclusions{6};
    double contrast{1e4};
    std::uint64_t seed{1};

    PouKind pou{PouKind::multiscale};
    int initial_basis{2}; // L, uniform across nodes
    bool include_boundary_nodes{true};

    SelectionRule strategy{};

    double target_ea{0.0}; // 0 disables
    int max_iterations{10};
    int dof_budget{0}; // 0 disables

    bool certified{false};
    bool record_timings{false};
    bool dump_eigens{false};
    bool dump_field{false};
    bool dump_indicators{false};

    bool operator==(const RunConfig&) const = default;
};

/// Parses and validates; throws std::runtime_error with the offending key
/// and line on unknown keys, type mismatches or constraint violations.
RunConfig parse_config(std::istream& in);
RunConfig parse_config_file(const std::string& path);

void print_config(const RunConfig& cfg, std::ostream& out);
std::string strategy_text(const SelectionRule& rule);

} // namespace msdg
