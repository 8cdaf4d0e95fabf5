#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "areal/errors.hpp"

namespace areal {

/// Rectangular study region split into rows x cols cells of equal area.
/// Cell indices are row-major, 0-based.
struct GridRegion {
    int rows = 0;
    int cols = 0;
    double cell_area = 1.0;

    GridRegion() = default;
    GridRegion(int r, int c, double area = 1.0) : rows(r), cols(c), cell_area(area) {
        if (rows < 1 || cols < 1) throw OutOfBounds("grid must have at least one row and column");
        if (!(cell_area > 0.0)) throw OutOfBounds("cell_area must be positive");
    }

    int cell_count() const { return rows * cols; }
    double total_area() const { return rows * static_cast<double>(cols) * cell_area; }
    int index(int r, int c) const { return r * cols + c; }
    int row_of(int idx) const { return idx / cols; }
    int col_of(int idx) const { return idx % cols; }

    bool operator==(const GridRegion&) const = default;
};

/// A zone is a nonempty union of grid cells.
struct Zone {
    std::string id;
    std::vector<int> cells; // sorted, unique

    Zone() = default;
    Zone(std::string zone_id, std::vector<int> zone_cells, const GridRegion& region)
        : id(std::move(zone_id)), cells(std::move(zone_cells)) {
        if (id.empty()) throw EmptyZone("zone id must be nonempty");
        if (cells.empty()) throw EmptyZone("zone '" + id + "' has no cells");
        std::sort(cells.begin(), cells.end());
        cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
        for (int c : cells) {
            if (c < 0 || c >= region.cell_count())
                throw OutOfBounds("zone '" + id + "' references cell " + std::to_string(c));
        }
    }

    double area(const GridRegion& region) const {
        return static_cast<double>(cells.size()) * region.cell_area;
    }
};

enum class ZoneKind { source, target, control };

/// An ordered partition of the grid into zones. Construction checks the
/// partition property: every cell belongs to exactly one zone.
class ZoneSystem {
public:
    ZoneSystem() = default;

    ZoneSystem(GridRegion region, std::vector<Zone> zones, ZoneKind kind)
        : region_(region), zones_(std::move(zones)), kind_(kind),
          cell_to_zone_(static_cast<std::size_t>(region.cell_count()), -1) {
        for (std::size_t z = 0; z < zones_.size(); ++z) {
            for (int c : zones_[z].cells) {
                if (cell_to_zone_[static_cast<std::size_t>(c)] != -1)
                    throw NotAPartition("cell " + std::to_string(c) + " belongs to two zones");
                cell_to_zone_[static_cast<std::size_t>(c)] = static_cast<int>(z);
            }
        }
        for (int c = 0; c < region_.cell_count(); ++c) {
            if (cell_to_zone_[static_cast<std::size_t>(c)] == -1)
                throw NotAPartition("cell " + std::to_string(c) + " is not covered by any zone");
        }
    }

    const GridRegion& region() const { return region_; }
    const std::vector<Zone>& zones() const { return zones_; }
    ZoneKind kind() const { return kind_; }
    std::size_t size() const { return zones_.size(); }
    const Zone& zone(std::size_t i) const { return zones_.at(i); }
    int zone_of_cell(int cell) const { return cell_to_zone_.at(static_cast<std::size_t>(cell)); }

    int index_of(const std::string& id) const {
        for (std::size_t i = 0; i < zones_.size(); ++i)
            if (zones_[i].id == id) return static_cast<int>(i);
        return -1;
    }

private:
    GridRegion region_;
    std::vector<Zone> zones_;
    ZoneKind kind_ = ZoneKind::source;
    std::vector<int> cell_to_zone_;
};

/// Build a zone system from one label per cell (row-major). Zone order follows
/// first appearance of each label, which keeps downstream output deterministic.
inline ZoneSystem build_zone_system(const GridRegion& region,
                                    const std::vector<std::string>& assignment,
                                    ZoneKind kind) {
    if (static_cast<int>(assignment.size()) != region.cell_count())
        throw OutOfBounds("assignment has " + std::to_string(assignment.size()) +
                          " labels for " + std::to_string(region.cell_count()) + " cells");
    std::vector<std::string> order;
    std::map<std::string, std::vector<int>> members;
    for (int c = 0; c < region.cell_count(); ++c) {
        const std::string& label = assignment[static_cast<std::size_t>(c)];
        if (label.empty()) throw EmptyZone("empty label at cell " + std::to_string(c));
        auto [it, inserted] = members.try_emplace(label);
        if (inserted) order.push_back(label);
        it->second.push_back(c);
    }
    std::vector<Zone> zones;
    zones.reserve(order.size());
    for (const auto& label : order)
        zones.emplace_back(label, members[label], region);
    return ZoneSystem(region, std::move(zones), kind);
}

/// One zone per cell; ids are "r<row>c<col>".
inline ZoneSystem make_cell_targets(const GridRegion& region) {
    std::vector<std::string> labels;
    labels.reserve(static_cast<std::size_t>(region.cell_count()));
    for (int c = 0; c < region.cell_count(); ++c)
        labels.push_back("r" + std::to_string(region.row_of(c)) + "c" + std::to_string(region.col_of(c)));
    return build_zone_system(region, labels, ZoneKind::target);
}

struct NestingReport {
    bool nested = false;
    std::vector<std::string> violations; // target ids that straddle sources
};

/// A system is nested when every target's cell set lies inside exactly one source.
inline NestingReport nesting_check(const ZoneSystem& sources, const ZoneSystem& targets) {
    if (!(sources.region() == targets.region()))
        throw RegionMismatch("source and target systems use different grids");
    NestingReport report;
    for (const Zone& t : targets.zones()) {
        const int first = sources.zone_of_cell(t.cells.front());
        const bool straddles = std::any_of(t.cells.begin(), t.cells.end(), [&](int c) {
            return sources.zone_of_cell(c) != first;
        });
        if (straddles) report.violations.push_back(t.id);
    }
    report.nested = report.violations.empty();
    return report;
}

} // namespace areal
