#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "msdg/grid.hpp"

namespace msdg {

/// Piecewise-constant conductivity per global fine cell, with per-block
/// maxima. kappa >= 1 everywhere.
class CoefficientField {
  public:
    CoefficientField() = default;
    CoefficientField(const FineGrid& grid, std::vector<double> cell_values);

    double value(int global_cell) const { return values_[global_cell]; }
    double value(const FineGrid& g, int block, int cx, int cy) const {
        return values_[g.cell_index(block, cx, cy)];
    }
    const std::vector<double>& values() const { return values_; }

    double block_max(int block) const { return block_max_[block]; }
    double contrast() const { return max_ / min_; }
    double min() const { return min_; }
    double max() const { return max_; }

    /// Mean of the two adjacent block maxima on interior edges; the single
    /// block maximum on boundary edges.
    double kappa_bar(const CoarseEdge& e) const;

  private:
    std::vector<double> values_;    // row-major over global fine cells
    std::vector<double> block_max_; // per coarse block
    double min_{1.0}, max_{1.0};
};

/// Axis-aligned feature of a synthetic field: a channel strip spanning the
/// domain or a rectangular inclusion. Cells whose centers fall inside get
/// the contrast value.
struct FieldFeature {
    Rect box;
    double value{1.0}; // multiplier applied on top of contrast when != 1
};

/// Reads a field from the plain-text format: first line "<ncx> <ncy>",
/// then row-major values. Throws std::runtime_error on dimension mismatch
/// and std::domain_error on values < 1 (unless auto_shift).
CoefficientField load_field(const std::string& path, const FineGrid& grid,
                            bool auto_shift = false);
CoefficientField load_field(std::istream& in, const FineGrid& grid,
                            bool auto_shift = false);

/// Writes the field in the same format with 17 significant digits.
void save_field(const CoefficientField& field, const FineGrid& grid,
                const std::string& path);
void save_field(const CoefficientField& field, const FineGrid& grid,
                std::ostream& out);

/// Background 1, feature cells = contrast * feature.value. Features must
/// intersect the domain.
CoefficientField generate_from_features(const FineGrid& grid,
                                        const std::vector<FieldFeature>& features,
                                        double contrast);

/// Seeded random channels (full-width strips, alternating axes) and
/// rectangular inclusions. Deterministic given the seed.
CoefficientField generate_channels_inclusions(const FineGrid& grid,
                                              int num_channels,
                                              int num_inclusions,
                                              double contrast,
                                              std::uint64_t seed);

/// Feature layout of the seeded generator, for diagnostics.
std::vector<FieldFeature> channels_inclusions_features(const FineGrid& grid,
                                                       int num_channels,
                                                       int num_inclusions,
                                                       std::uint64_t seed);

} // namespace msdg
