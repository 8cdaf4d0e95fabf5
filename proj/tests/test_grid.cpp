#include <catch_amalgamated.hpp>

#include <algorithm>
#include <random>
#include <set>
#include <utility>

#include "areal/field.hpp"
#include "areal/grid.hpp"
#include "areal/intersection.hpp"

using namespace areal;

namespace {

CountField make_counts(const GridRegion& region, std::vector<std::int64_t> counts) {
    return CountField(region, std::move(counts));
}

// fixture R1: one 4-cell source split into targets of 1 and 3 cells,
// auxiliary counts 30 on the first cell and 10 spread over the rest
struct FixtureR1 {
    GridRegion region{1, 4};
    Zone source{"S", {0, 1, 2, 3}, region};
    Zone t1{"T1", {0}, region};
    Zone t2{"T2", {1, 2, 3}, region};
    CountField x{region, {30, 4, 3, 3}};
};

} // namespace

TEST_CASE("build_zone_system basics") {
    SECTION("singleton partition") {
        GridRegion region(1, 1, 2.5);
        ZoneSystem zs = build_zone_system(region, {"a"}, ZoneKind::source);
        REQUIRE(zs.size() == 1);
        REQUIRE(zs.zone(0).area(region) == 2.5);
    }
    SECTION("three contiguous blocks on a 5x5 grid") {
        GridRegion region(5, 5);
        std::vector<std::string> labels;
        for (int c = 0; c < 25; ++c)
            labels.push_back(c < 10 ? "a" : (c < 15 ? "b" : "c"));
        ZoneSystem zs = build_zone_system(region, labels, ZoneKind::source);
        REQUIRE(zs.size() == 3);
        double total = 0.0;
        for (const Zone& z : zs.zones()) total += z.area(region);
        REQUIRE(total == 25.0);
    }
    SECTION("14-block labeling on a 16x16 grid") {
        GridRegion region(16, 16);
        std::vector<std::string> labels;
        for (int c = 0; c < 256; ++c) labels.push_back("S" + std::to_string(c % 14));
        ZoneSystem zs = build_zone_system(region, labels, ZoneKind::source);
        REQUIRE(zs.size() == 14);
        double total = 0.0;
        for (const Zone& z : zs.zones()) total += z.area(region);
        REQUIRE(total == 256.0);
    }
    SECTION("errors") {
        GridRegion region(2, 2);
        REQUIRE_THROWS_AS(build_zone_system(region, {"a", "a"}, ZoneKind::source), OutOfBounds);
        REQUIRE_THROWS_AS(build_zone_system(region, {"a", "", "a", "a"}, ZoneKind::source),
                          EmptyZone);
    }
    SECTION("zone order follows first appearance") {
        GridRegion region(1, 4);
        ZoneSystem zs = build_zone_system(region, {"z", "a", "z", "a"}, ZoneKind::source);
        REQUIRE(zs.zone(0).id == "z");
        REQUIRE(zs.zone(1).id == "a");
    }
}

TEST_CASE("intersect") {
    GridRegion region(1, 6);
    ZoneSystem sources = build_zone_system(region, {"s1", "s1", "s1", "s2", "s2", "s2"},
                                           ZoneKind::source);

    SECTION("self intersection is diagonal") {
        ZoneSystem targets = build_zone_system(region, {"s1", "s1", "s1", "s2", "s2", "s2"},
                                               ZoneKind::target);
        IntersectionTable table = intersect(sources, targets);
        REQUIRE(table.entries.size() == 2);
        for (const auto& e : table.entries) {
            REQUIRE(e.source_index == e.target_index);
            REQUIRE(e.area == table.source_areas[static_cast<std::size_t>(e.source_index)]);
        }
    }
    SECTION("refinement of the whole region") {
        ZoneSystem whole = build_zone_system(region, std::vector<std::string>(6, "all"),
                                             ZoneKind::source);
        ZoneSystem targets = build_zone_system(region, {"a", "b", "c", "d", "e", "f"},
                                               ZoneKind::target);
        IntersectionTable table = intersect(whole, targets);
        REQUIRE(table.entries.size() == 6);
        double total = 0.0;
        for (const auto& e : table.entries) total += e.area;
        REQUIRE(total == region.total_area());
    }
    SECTION("region mismatch rejected") {
        GridRegion other(2, 3);
        ZoneSystem targets = build_zone_system(other, {"a", "a", "a", "b", "b", "b"},
                                               ZoneKind::target);
        REQUIRE_THROWS_AS(intersect(sources, targets), RegionMismatch);
    }
    SECTION("aux sums are consistent with source totals") {
        ZoneSystem targets = build_zone_system(region, {"a", "a", "b", "b", "c", "c"},
                                               ZoneKind::target);
        CountField x = make_counts(region, {1, 2, 3, 4, 5, 6});
        IntersectionTable table = intersect(sources, targets, {x});
        for (std::size_t s = 0; s < table.n_sources(); ++s) {
            double area = 0.0, aux = 0.0;
            for (const auto& e : table.entries)
                if (static_cast<std::size_t>(e.source_index) == s) {
                    area += e.area;
                    aux += e.aux_counts[0];
                }
            REQUIRE(area == table.source_areas[s]);
            REQUIRE(aux == table.source_aux[s][0]);
        }
    }
}

TEST_CASE("toy-1 reconstruction: intersections match a brute-force cell scan") {
    GridRegion region(5, 5);
    // the checked-in layouts, inlined
    std::vector<std::string> src(25), tgt(25);
    auto set = [&](std::vector<std::string>& v, std::initializer_list<int> cells,
                   const std::string& label) {
        for (int c : cells) v[static_cast<std::size_t>(c)] = label;
    };
    set(src, {0, 1, 2, 3, 5, 6, 7, 8}, "S1");
    set(src, {4, 9, 14, 19, 24, 18}, "S2");
    set(src, {10, 11, 12, 13, 15, 16, 17, 20, 21, 22, 23}, "S3");
    set(tgt, {0, 1, 5, 6}, "T1");
    set(tgt, {2, 3, 7}, "T2");
    set(tgt, {4, 9, 14}, "T3");
    set(tgt, {10, 11, 15, 16}, "T4");
    set(tgt, {17, 20, 21, 22}, "T5");
    set(tgt, {18, 19, 23, 24}, "T6");
    set(tgt, {8, 12, 13}, "T7");
    ZoneSystem sources = build_zone_system(region, src, ZoneKind::source);
    ZoneSystem targets = build_zone_system(region, tgt, ZoneKind::target);

    // oracle: exhaustive cell-membership scan
    std::set<std::pair<std::string, std::string>> pairs;
    for (int c = 0; c < 25; ++c)
        pairs.insert({src[static_cast<std::size_t>(c)], tgt[static_cast<std::size_t>(c)]});

    IntersectionTable table = intersect(sources, targets);
    REQUIRE(table.entries.size() == pairs.size());
    for (const auto& e : table.entries)
        REQUIRE(pairs.count({e.source_id, e.target_id}) == 1);

    NestingReport nesting = nesting_check(sources, targets);
    REQUIRE_FALSE(nesting.nested);
    REQUIRE(std::find(nesting.violations.begin(), nesting.violations.end(), "T6") !=
            nesting.violations.end());
    REQUIRE(std::find(nesting.violations.begin(), nesting.violations.end(), "T7") !=
            nesting.violations.end());
}

TEST_CASE("nesting_check") {
    GridRegion region(1, 4);
    ZoneSystem sources = build_zone_system(region, {"s1", "s1", "s2", "s2"}, ZoneKind::source);
    SECTION("refinement is nested") {
        ZoneSystem targets = build_zone_system(region, {"a", "b", "c", "d"}, ZoneKind::target);
        REQUIRE(nesting_check(sources, targets).nested);
    }
    SECTION("straddling target is reported") {
        ZoneSystem targets = build_zone_system(region, {"a", "b", "b", "c"}, ZoneKind::target);
        NestingReport report = nesting_check(sources, targets);
        REQUIRE_FALSE(report.nested);
        REQUIRE(report.violations == std::vector<std::string>{"b"});
    }
}

TEST_CASE("geometry_stats") {
    SECTION("single target equal to the source") {
        GridRegion region(1, 4);
        Zone source("S", {0, 1, 2, 3}, region);
        CountField x = make_counts(region, {5, 5, 5, 25});
        GeometryStats stats = geometry_stats(source, {source}, x);
        REQUIRE(stats.d == 0.0);
        REQUIRE(stats.b == 0.0);
        REQUIRE(stats.c == 0.0);
    }
    SECTION("fixture R1") {
        FixtureR1 f;
        GeometryStats stats = geometry_stats(f.source, {f.t1, f.t2}, f.x);
        REQUIRE_THAT(stats.d, Catch::Matchers::WithinAbs(0.5, 1e-12));
        REQUIRE_THAT(stats.b, Catch::Matchers::WithinAbs(0.375, 1e-12));
        REQUIRE_THAT(stats.c, Catch::Matchers::WithinAbs(0.375, 1e-12));
    }
    SECTION("n equal targets with homogeneous x") {
        GridRegion region(1, 6);
        Zone source("S", {0, 1, 2, 3, 4, 5}, region);
        std::vector<Zone> targets{Zone("a", {0, 1}, region), Zone("b", {2, 3}, region),
                                  Zone("c", {4, 5}, region)};
        CountField x = make_counts(region, {7, 7, 7, 7, 7, 7});
        GeometryStats stats = geometry_stats(source, targets, x);
        REQUIRE_THAT(stats.d, Catch::Matchers::WithinAbs(0.0, 1e-15));
        REQUIRE_THAT(stats.b, Catch::Matchers::WithinAbs(1.0 - 1.0 / 3.0, 1e-12));
        REQUIRE_THAT(stats.c, Catch::Matchers::WithinAbs(1.0 - 1.0 / 3.0, 1e-12));
    }
    SECTION("errors") {
        FixtureR1 f;
        CountField zero = make_counts(f.region, {0, 0, 0, 0});
        REQUIRE_THROWS_AS(geometry_stats(f.source, {f.t1, f.t2}, zero), ZeroAuxiliary);
        REQUIRE_THROWS_AS(geometry_stats(f.source, {f.t1}, f.x), NotAPartition);
        REQUIRE_THROWS_AS(geometry_stats(f.source, {f.t1, f.t1, f.t2}, f.x), NotAPartition);
    }
}

TEST_CASE("geometry identity sum(p*q) = (2-B-C-D)/2 on randomized partitions") {
    std::mt19937_64 gen(20260101);
    for (int trial = 0; trial < 1000; ++trial) {
        const int n_cells = 5 + static_cast<int>(gen() % 8);
        GridRegion region(1, n_cells);
        std::vector<int> all_cells(static_cast<std::size_t>(n_cells));
        for (int c = 0; c < n_cells; ++c) all_cells[static_cast<std::size_t>(c)] = c;
        Zone source("S", all_cells, region);
        // random contiguous partition into 2..4 targets
        const int n_targets = 2 + static_cast<int>(gen() % 3);
        std::vector<int> cuts{0, n_cells};
        while (static_cast<int>(cuts.size()) < n_targets + 1) {
            const int cut = 1 + static_cast<int>(gen() % static_cast<std::uint64_t>(n_cells - 1));
            if (std::find(cuts.begin(), cuts.end(), cut) == cuts.end()) cuts.push_back(cut);
        }
        std::sort(cuts.begin(), cuts.end());
        std::vector<Zone> targets;
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            std::vector<int> cells;
            for (int c = cuts[i]; c < cuts[i + 1]; ++c) cells.push_back(c);
            targets.emplace_back("T" + std::to_string(i), cells, region);
        }
        std::vector<std::int64_t> counts(static_cast<std::size_t>(n_cells));
        for (auto& v : counts) v = 1 + static_cast<std::int64_t>(gen() % 50);
        CountField x(region, counts);

        GeometryStats stats = geometry_stats(source, targets, x);
        double sum_p = 0.0, sum_q = 0.0, sum_pq = 0.0;
        for (std::size_t i = 0; i < stats.p.size(); ++i) {
            sum_p += stats.p[i];
            sum_q += stats.q[i];
            sum_pq += stats.p[i] * stats.q[i];
        }
        REQUIRE_THAT(sum_p, Catch::Matchers::WithinAbs(1.0, 1e-12));
        REQUIRE_THAT(sum_q, Catch::Matchers::WithinAbs(1.0, 1e-12));
        REQUIRE_THAT(sum_pq,
                     Catch::Matchers::WithinAbs((2.0 - stats.b - stats.c - stats.d) / 2.0, 1e-12));
        REQUIRE(stats.d >= 0.0);
    }
}

TEST_CASE("D vanishes exactly when x is proportional to area") {
    GridRegion region(1, 8);
    std::vector<int> all_cells{0, 1, 2, 3, 4, 5, 6, 7};
    Zone source("S", all_cells, region);
    std::vector<Zone> targets{Zone("a", {0, 1, 2}, region), Zone("b", {3, 4, 5, 6}, region),
                              Zone("c", {7}, region)};
    CountField proportional = make_counts(region, {9, 9, 9, 9, 9, 9, 9, 9});
    REQUIRE(geometry_stats(source, targets, proportional).d == 0.0);
    CountField skewed = make_counts(region, {9, 9, 9, 9, 9, 9, 9, 10});
    REQUIRE(geometry_stats(source, targets, skewed).d > 0.0);
}
