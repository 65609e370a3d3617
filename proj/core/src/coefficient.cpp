#include "msdg/coefficient.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

namespace msdg {

CoefficientField::CoefficientField(const FineGrid& grid,
                                   std::vector<double> cell_values)
    : values_(std::move(cell_values)) {
    if (static_cast<int>(values_.size()) != grid.num_cells())
        throw std::runtime_error("CoefficientField: cell count mismatch");
    min_ = std::numeric_limits<double>::infinity();
    max_ = 0.0;
    for (double v : values_) {
        min_ = std::min(min_, v);
        max_ = std::max(max_, v);
    }
    if (min_ < 1.0)
        throw std::domain_error("CoefficientField: kappa must be >= 1");

    const auto& cg = grid.coarse();
    block_max_.assign(cg.num_blocks(), 0.0);
    for (int b = 0; b < cg.num_blocks(); ++b) {
        double m = 0.0;
        for (int cy = 0; cy < grid.ny(); ++cy)
            for (int cx = 0; cx < grid.nx(); ++cx)
                m = std::max(m, values_[grid.cell_index(b, cx, cy)]);
        block_max_[b] = m;
    }
}

double CoefficientField::kappa_bar(const CoarseEdge& e) const {
    if (e.boundary()) return block_max_[e.block_plus];
    return 0.5 * (block_max_[e.block_plus] + block_max_[e.block_minus]);
}

CoefficientField load_field(const std::string& path, const FineGrid& grid,
                            bool auto_shift) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_field: cannot open " + path);
    return load_field(in, grid, auto_shift);
}

CoefficientField load_field(std::istream& in, const FineGrid& grid,
                            bool auto_shift) {
    int ncx = 0, ncy = 0;
    if (!(in >> ncx >> ncy))
        throw std::runtime_error("load_field: missing dimension header");
    if (ncx != grid.global_cells_x() || ncy != grid.global_cells_y())
        throw std::runtime_error("load_field: dimension mismatch: file " +
                                 std::to_string(ncx) + "x" + std::to_string(ncy) +
                                 ", grid " + std::to_string(grid.global_cells_x()) +
                                 "x" + std::to_string(grid.global_cells_y()));
    std::vector<double> vals(static_cast<std::size_t>(ncx) * ncy);
    for (auto& v : vals) {
        if (!(in >> v))
            throw std::runtime_error("load_field: too few values");
    }
    if (auto_shift) {
        double mn = *std::min_element(vals.begin(), vals.end());
        if (mn < 1.0)
            for (auto& v : vals) v += 1.0 - mn;
    }
    return CoefficientField(grid, std::move(vals));
}

void save_field(const CoefficientField& field, const FineGrid& grid,
                const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_field: cannot open " + path);
    save_field(field, grid, out);
}

void save_field(const CoefficientField& field, const FineGrid& grid,
                std::ostream& out) {
    const int ncx = grid.global_cells_x();
    const int ncy = grid.global_cells_y();
    out << ncx << ' ' << ncy << '\n';
    out << std::setprecision(17);
    for (int gy = 0; gy < ncy; ++gy) {
        for (int gx = 0; gx < ncx; ++gx) {
            if (gx) out << ' ';
            out << field.values()[gy * ncx + gx];
        }
        out << '\n';
    }
}

CoefficientField generate_from_features(const FineGrid& grid,
                                        const std::vector<FieldFeature>& features,
                                        double contrast) {
    if (contrast < 1.0)
        throw std::invalid_argument("generate_from_features: contrast must be >= 1");
    const Rect dom = grid.coarse().domain();
    for (const auto& f : features) {
        if (f.box.x1 <= dom.x0 || f.box.x0 >= dom.x1 || f.box.y1 <= dom.y0 ||
            f.box.y0 >= dom.y1)
            throw std::invalid_argument("generate_from_features: feature outside domain");
    }
    const int ncx = grid.global_cells_x();
    const int ncy = grid.global_cells_y();
    std::vector<double> vals(static_cast<std::size_t>(ncx) * ncy, 1.0);
    for (int gy = 0; gy < ncy; ++gy) {
        const double yc = dom.y0 + (gy + 0.5) * grid.hy();
        for (int gx = 0; gx < ncx; ++gx) {
            const double xc = dom.x0 + (gx + 0.5) * grid.hx();
            for (const auto& f : features) {
                if (xc > f.box.x0 && xc < f.box.x1 && yc > f.box.y0 && yc < f.box.y1)
                    vals[gy * ncx + gx] = std::max(vals[gy * ncx + gx],
                                                   contrast * f.value);
            }
        }
    }
    return CoefficientField(grid, std::move(vals));
}

std::vector<FieldFeature> channels_inclusions_features(const FineGrid& grid,
                                                       int num_channels,
                                                       int num_inclusions,
                                                       std::uint64_t seed) {
    const Rect dom = grid.coarse().domain();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(0.0, 1.0);
    std::vector<FieldFeature> features;

    // Channels: full-span strips, 1-2 fine cells thick, alternating axes.
    for (int c = 0; c < num_channels; ++c) {
        FieldFeature f;
        const double thick = (1.0 + std::floor(2.0 * ux(rng))) *
                             ((c % 2 == 0) ? grid.hy() : grid.hx());
        if (c % 2 == 0) {
            const double y = dom.y0 + ux(rng) * (dom.height() - thick);
            f.box = {dom.x0, y, dom.x1, y + thick};
        } else {
            const double x = dom.x0 + ux(rng) * (dom.width() - thick);
            f.box = {x, dom.y0, x + thick, dom.y1};
        }
        features.push_back(f);
    }
    // Inclusions: rectangles of a few fine cells.
    for (int c = 0; c < num_inclusions; ++c) {
        FieldFeature f;
        const double w = (2.0 + std::floor(4.0 * ux(rng))) * grid.hx();
        const double h = (2.0 + std::floor(4.0 * ux(rng))) * grid.hy();
        const double x = dom.x0 + ux(rng) * (dom.width() - w);
        const double y = dom.y0 + ux(rng) * (dom.height() - h);
        f.box = {x, y, x + w, y + h};
        features.push_back(f);
    }
    return features;
}

CoefficientField generate_channels_inclusions(const FineGrid& grid,
                                              int num_channels,
                                              int num_inclusions,
                                              double contrast,
                                              std::uint64_t seed) {
    return generate_from_features(
        grid, channels_inclusions_features(grid, num_channels, num_inclusions, seed),
        contrast);
}

} // namespace msdg
