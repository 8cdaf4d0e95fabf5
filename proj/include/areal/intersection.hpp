#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "areal/errors.hpp"
#include "areal/field.hpp"
#include "areal/grid.hpp"

namespace areal {

/// One nonempty source-target overlap. Atomic prediction unit.
struct IntersectionEntry {
    int source_index = -1;
    int target_index = -1;
    std::string source_id;
    std::string target_id;
    std::vector<int> cells;
    double area = 0.0;
    std::vector<double> aux_counts; // one entry per auxiliary variable
};

/// All nonempty overlaps between a source and a target system, plus per-source
/// totals. Row sums of entry areas reproduce source areas exactly because all
/// zones are unions of cells.
struct IntersectionTable {
    GridRegion region;
    std::vector<IntersectionEntry> entries; // ordered by (source, target) index
    std::vector<std::string> source_ids;
    std::vector<std::string> target_ids;
    std::vector<double> source_areas;              // |S_s|
    std::vector<std::vector<double>> source_aux;   // per source, per auxiliary
    std::size_t n_aux = 0;

    std::size_t n_sources() const { return source_ids.size(); }
    std::size_t n_targets() const { return target_ids.size(); }
};

inline IntersectionTable intersect(const ZoneSystem& sources, const ZoneSystem& targets,
                                   const std::vector<CountField>& aux = {}) {
    if (!(sources.region() == targets.region()))
        throw RegionMismatch("source and target systems use different grids");
    for (const CountField& a : aux)
        if (!(a.region == sources.region()))
            throw RegionMismatch("auxiliary field uses a different grid");

    const GridRegion& region = sources.region();
    const std::size_t n_s = sources.size();
    const std::size_t n_t = targets.size();

    // bucket cells by (source, target) pair in one pass
    std::vector<std::vector<int>> bucket(n_s * n_t);
    for (int c = 0; c < region.cell_count(); ++c) {
        const std::size_t s = static_cast<std::size_t>(sources.zone_of_cell(c));
        const std::size_t t = static_cast<std::size_t>(targets.zone_of_cell(c));
        bucket[s * n_t + t].push_back(c);
    }

    IntersectionTable table;
    table.region = region;
    table.n_aux = aux.size();
    for (const Zone& z : sources.zones()) table.source_ids.push_back(z.id);
    for (const Zone& z : targets.zones()) table.target_ids.push_back(z.id);
    table.source_areas.assign(n_s, 0.0);
    table.source_aux.assign(n_s, std::vector<double>(aux.size(), 0.0));

    for (std::size_t s = 0; s < n_s; ++s) {
        for (std::size_t t = 0; t < n_t; ++t) {
            std::vector<int>& cells = bucket[s * n_t + t];
            if (cells.empty()) continue;
            IntersectionEntry e;
            e.source_index = static_cast<int>(s);
            e.target_index = static_cast<int>(t);
            e.source_id = table.source_ids[s];
            e.target_id = table.target_ids[t];
            e.area = static_cast<double>(cells.size()) * region.cell_area;
            e.aux_counts.resize(aux.size(), 0.0);
            for (std::size_t j = 0; j < aux.size(); ++j) {
                std::int64_t sum = 0;
                for (int c : cells) sum += aux[j].counts[static_cast<std::size_t>(c)];
                e.aux_counts[j] = static_cast<double>(sum);
            }
            e.cells = std::move(cells);
            table.source_areas[s] += e.area;
            for (std::size_t j = 0; j < aux.size(); ++j)
                table.source_aux[s][j] += e.aux_counts[j];
            table.entries.push_back(std::move(e));
        }
    }
    return table;
}

/// Realized counts per intersection entry, in table order.
inline std::vector<std::int64_t> aggregate_intersections(const CountField& counts,
                                                         const IntersectionTable& table) {
    if (!(counts.region == table.region)) throw RegionMismatch("count field uses a different grid");
    std::vector<std::int64_t> out;
    out.reserve(table.entries.size());
    for (const IntersectionEntry& e : table.entries) {
        std::int64_t sum = 0;
        for (int c : e.cells) sum += counts.counts[static_cast<std::size_t>(c)];
        out.push_back(sum);
    }
    return out;
}

/// Geometric and auxiliary share summaries for one source and its nested targets.
/// p holds area shares |T|/|S|, q holds auxiliary shares x_T/x_S, and
///   D = sum (p-q)^2,  B = 1 - sum q^2,  C = 1 - sum p^2.
struct GeometryStats {
    std::vector<std::string> target_ids;
    std::vector<double> p;
    std::vector<double> q;
    double d = 0.0;
    double b = 0.0;
    double c = 0.0;
};

inline GeometryStats geometry_stats(const Zone& source, const std::vector<Zone>& nested_targets,
                                    const CountField& x) {
    // targets must partition the source cell set
    std::vector<int> covered;
    for (const Zone& t : nested_targets)
        covered.insert(covered.end(), t.cells.begin(), t.cells.end());
    std::sort(covered.begin(), covered.end());
    if (std::adjacent_find(covered.begin(), covered.end()) != covered.end())
        throw NotAPartition("targets overlap within source '" + source.id + "'");
    if (covered != source.cells)
        throw NotAPartition("targets do not cover source '" + source.id + "'");

    const double x_s = static_cast<double>(aggregate_count(x, source));
    if (!(x_s > 0.0)) throw ZeroAuxiliary("x_S = 0 on source '" + source.id + "'");
    const double area_s = static_cast<double>(source.cells.size());

    GeometryStats stats;
    for (const Zone& t : nested_targets) {
        stats.target_ids.push_back(t.id);
        stats.p.push_back(static_cast<double>(t.cells.size()) / area_s);
        stats.q.push_back(static_cast<double>(aggregate_count(x, t)) / x_s);
    }
    double sum_q2 = 0.0, sum_p2 = 0.0;
    for (std::size_t i = 0; i < stats.p.size(); ++i) {
        const double diff = stats.p[i] - stats.q[i];
        stats.d += diff * diff;
        sum_q2 += stats.q[i] * stats.q[i];
        sum_p2 += stats.p[i] * stats.p[i];
    }
    stats.b = 1.0 - sum_q2;
    stats.c = 1.0 - sum_p2;
    return stats;
}

} // namespace areal
