#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "areal/errors.hpp"
#include "areal/grid.hpp"
#include "areal/io.hpp"

namespace areal {

/// Standalone SVG heatmap of one per-cell value vector. Presentation only.
inline void write_svg_heatmap(const std::filesystem::path& path, const GridRegion& region,
                              const std::vector<double>& values, const std::string& title = "") {
    if (static_cast<int>(values.size()) != region.cell_count())
        throw OutOfBounds("heatmap values do not match the grid");
    const double lo = *std::min_element(values.begin(), values.end());
    const double hi = *std::max_element(values.begin(), values.end());
    const double span = hi > lo ? hi - lo : 1.0;
    const int cell_px = 24;
    const int top = title.empty() ? 0 : 20;
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << region.cols * cell_px
        << "\" height=\"" << region.rows * cell_px + top << "\">\n";
    if (!title.empty())
        out << "  <text x=\"4\" y=\"14\" font-family=\"sans-serif\" font-size=\"12\">" << title
            << "</text>\n";
    for (int c = 0; c < region.cell_count(); ++c) {
        const double t = (values[static_cast<std::size_t>(c)] - lo) / span;
        // white to dark blue ramp
        const int r = static_cast<int>(255.0 * (1.0 - 0.85 * t));
        const int g = static_cast<int>(255.0 * (1.0 - 0.70 * t));
        const int b = static_cast<int>(255.0 * (1.0 - 0.25 * t));
        out << "  <rect x=\"" << region.col_of(c) * cell_px << "\" y=\""
            << region.row_of(c) * cell_px + top << "\" width=\"" << cell_px << "\" height=\""
            << cell_px << "\" fill=\"rgb(" << r << ',' << g << ',' << b
            << ")\" stroke=\"#777\" stroke-width=\"0.5\"/>\n";
    }
    out << "</svg>\n";
}

} // namespace areal
