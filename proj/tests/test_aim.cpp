#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "areal/aim.hpp"
#include "areal/field.hpp"
#include "areal/grid.hpp"
#include "areal/io.hpp"

using namespace areal;

TEST_CASE("expected_count") {
    SECTION("hand fixture") {
        AimParams params(2.0, {0.5});
        REQUIRE(expected_count(params, 4.0, 40.0) == 28.0);
    }
    SECTION("area-only model") {
        AimParams params(3.0, {0.0});
        REQUIRE(expected_count(params, 7.0, 123.0) == 21.0);
    }
    SECTION("region-level value for the large study") {
        AimParams params(100.0, {1.0});
        REQUIRE(expected_count(params, 256.0, 100247.0) == 125847.0);
    }
    SECTION("Monte-Carlo mean matches the expectation") {
        // zone of 4 unit cells with per-cell auxiliary count 10
        GridRegion region(1, 4);
        AimParams params(2.0, {0.5});
        CountField x(region, {10, 10, 10, 10});
        IntensityField lambda = conditional_intensity(params, {x});
        Zone zone("S", {0, 1, 2, 3}, region);
        const int reps = 10000;
        double sum = 0.0;
        for (int r = 0; r < reps; ++r)
            sum += static_cast<double>(
                aggregate_count(simulate_counts(lambda, 1.0, 31337, static_cast<std::uint64_t>(r)),
                                zone));
        const double expect = expected_count(params, 4.0, 40.0);
        REQUIRE(std::abs(sum / reps - expect) < 3.0 * std::sqrt(expect / reps));
    }
    SECTION("additivity over disjoint zones") {
        AimParams params(1.5, {2.0, 0.25});
        const double a[2] = {3.0, 10.0};
        const double x1[2] = {5.0, 1.0};
        const double x2[2] = {2.0, 8.0};
        const double joint =
            expected_count(params, a[0] + a[1], std::vector<double>{x1[0] + x2[0], x1[1] + x2[1]});
        const double split = expected_count(params, a[0], std::vector<double>{x1[0], x1[1]}) +
                             expected_count(params, a[1], std::vector<double>{x2[0], x2[1]});
        REQUIRE_THAT(joint, Catch::Matchers::WithinRel(split, 1e-14));
    }
}

TEST_CASE("decompose_effects") {
    SECTION("pure areal effect") {
        AimParams params(5.0, {0.0});
        EffectDecomposition d = decompose_effects(params, "Z", 2.0, 100.0);
        REQUIRE(d.delta == 1.0);
        REQUIRE(d.i_area == 1.0);
    }
    SECTION("pure auxiliary effect") {
        AimParams params(0.0, {1.0});
        EffectDecomposition d = decompose_effects(params, "Z", 2.0, 100.0);
        REQUIRE(d.delta == -1.0);
    }
    SECTION("fixture R1") {
        AimParams params(2.0, {0.5});
        EffectDecomposition d = decompose_effects(params, "S", 4.0, 40.0);
        REQUIRE_THAT(d.i_aux, Catch::Matchers::WithinAbs(5.0 / 7.0, 1e-12));
        REQUIRE_THAT(d.i_area, Catch::Matchers::WithinAbs(2.0 / 7.0, 1e-12));
        REQUIRE_THAT(d.delta, Catch::Matchers::WithinAbs(-3.0 / 7.0, 1e-12));
    }
    SECTION("errors") {
        REQUIRE_THROWS_AS(decompose_effects(AimParams(0.0, {1.0}), "Z", 5.0, 0.0),
                          ZeroExpectation);
        REQUIRE_THROWS_AS(decompose_effects(AimParams(1.0, {1.0, 1.0}), "Z", 5.0, 1.0),
                          DegenerateModel);
    }
    SECTION("contributions always sum to one") {
        std::mt19937_64 gen(11);
        for (int i = 0; i < 200; ++i) {
            const double alpha = static_cast<double>(gen() % 1000) / 100.0;
            const double beta = static_cast<double>(gen() % 1000) / 100.0 + 0.01;
            const double area = 1.0 + static_cast<double>(gen() % 50);
            const double x = static_cast<double>(gen() % 500);
            AimParams params(alpha, {beta});
            EffectDecomposition d = decompose_effects(params, "Z", area, x);
            REQUIRE_THAT(d.i_area + d.i_aux, Catch::Matchers::WithinAbs(1.0, 1e-12));
            REQUIRE_THAT(d.delta, Catch::Matchers::WithinAbs(d.i_area - d.i_aux, 1e-12));
            REQUIRE(d.delta >= -1.0);
            REQUIRE(d.delta <= 1.0);
        }
    }
}

TEST_CASE("piecewise_intensity") {
    SECTION("single control zone is homogeneous") {
        GridRegion region(2, 2);
        ZoneSystem zones = build_zone_system(region, {"c", "c", "c", "c"}, ZoneKind::control);
        IntensityField f = piecewise_intensity(PiecewiseModel(zones, {3.5}));
        REQUIRE(f.values == std::vector<double>{3.5, 3.5, 3.5, 3.5});
    }
    SECTION("left-right split of a 2x2 grid") {
        GridRegion region(2, 2);
        ZoneSystem zones = build_zone_system(region, {"l", "r", "l", "r"}, ZoneKind::control);
        IntensityField f = piecewise_intensity(PiecewiseModel(zones, {1.0, 3.0}));
        REQUIRE(f.values == std::vector<double>{1.0, 3.0, 1.0, 3.0});
    }
    SECTION("equal intensities reduce to the homogeneous field") {
        GridRegion region(3, 3);
        ZoneSystem zones = build_zone_system(
            region, {"a", "a", "b", "b", "b", "c", "c", "c", "c"}, ZoneKind::control);
        IntensityField f = piecewise_intensity(PiecewiseModel(zones, {2.0, 2.0, 2.0}));
        REQUIRE(f.values == std::vector<double>(9, 2.0));
    }
    SECTION("zone means match the control intensities") {
        GridRegion region(10, 10);
        std::vector<std::string> labels(100);
        for (int c = 0; c < 100; ++c) labels[static_cast<std::size_t>(c)] = c % 10 < 5 ? "c1" : "c2";
        ZoneSystem zones = build_zone_system(region, labels, ZoneKind::control);
        PiecewiseModel model(zones, {2.0, 10.0});
        IntensityField f = piecewise_intensity(model);
        const Zone& c1 = zones.zone(0);
        const Zone& c2 = zones.zone(1);
        const int reps = 10000;
        double s1 = 0, s2 = 0;
        for (int r = 0; r < reps; ++r) {
            CountField counts = simulate_counts(f, 1.0, 777, static_cast<std::uint64_t>(r));
            s1 += static_cast<double>(aggregate_count(counts, c1));
            s2 += static_cast<double>(aggregate_count(counts, c2));
        }
        REQUIRE(std::abs(s1 / reps - 100.0) < 3.0 * std::sqrt(100.0 / reps));
        REQUIRE(std::abs(s2 / reps - 500.0) < 3.0 * std::sqrt(500.0 / reps));
    }
}

TEST_CASE("imbalance_table") {
    GridRegion region(1, 6);
    ZoneSystem sources = build_zone_system(region, {"a", "a", "a", "b", "b", "b"},
                                           ZoneKind::source);
    SECTION("no areal effect pins every source at -1") {
        CountField x(region, {4, 5, 6, 7, 8, 9});
        auto rows = imbalance_table(AimParams(0.0, {1.0}), sources, x);
        REQUIRE(rows.size() == 2);
        for (const auto& r : rows) REQUIRE(r.delta == -1.0);
    }
    SECTION("balanced effects give zero") {
        CountField x(region, {5, 5, 5, 5, 5, 5});
        // beta * x_S = 2 * 15 = 30 = alpha * |S| = 10 * 3
        auto rows = imbalance_table(AimParams(10.0, {2.0}), sources, x);
        for (const auto& r : rows) REQUIRE_THAT(r.delta, Catch::Matchers::WithinAbs(0.0, 1e-12));
    }
}

TEST_CASE("toy-1 reconstruction imbalances sit near the reference magnitudes") {
    GridRegion region(5, 5);
    const std::string root(AREAL_SOURCE_DIR);
    ZoneSystem sources = read_zone_labels(root + "/data/toy1_sources.csv", region, ZoneKind::source);
    IntensityField xi = read_intensity_field(root + "/data/toy1_x_intensity.csv", region);
    REQUIRE_THAT(xi.expected_total(), Catch::Matchers::WithinAbs(1011.0, 1e-9));
    CountField x = simulate_counts(xi, 1.0, derive_stream(20260810, 0xA0));

    auto rows = imbalance_table(AimParams(80.0, {1.0}), sources, x);
    REQUIRE(rows.size() == 3);
    for (const auto& r : rows) {
        REQUIRE(r.delta > -1.0);
        REQUIRE(r.delta < 1.0);
    }
    // expected source masses 524, 199, 288 put the indices near 0.10, 0.41, 0.51
    REQUIRE(rows[0].zone_id == "S1");
    REQUIRE(rows[0].delta > 0.02);
    REQUIRE(rows[0].delta < 0.20);
    REQUIRE(rows[1].delta > 0.30);
    REQUIRE(rows[1].delta < 0.55);
    REQUIRE(rows[2].delta > 0.40);
    REQUIRE(rows[2].delta < 0.62);

    auto rows2 = imbalance_table(AimParams(0.0, {1.0}), sources, x);
    for (const auto& r : rows2) REQUIRE(r.delta == -1.0);
}

TEST_CASE("conditional_intensity") {
    GridRegion region(1, 2, 0.5); // non-unit cell area
    AimParams params(4.0, {2.0});
    CountField x(region, {3, 0});
    IntensityField f = conditional_intensity(params, {x});
    // mean count per cell = alpha*cell_area + beta*x, expressed per unit area
    REQUIRE_THAT(f.values[0], Catch::Matchers::WithinAbs((4.0 * 0.5 + 2.0 * 3.0) / 0.5, 1e-12));
    REQUIRE_THAT(f.values[1], Catch::Matchers::WithinAbs(4.0, 1e-12));
    REQUIRE_THROWS_AS(conditional_intensity(params, {}), DegenerateModel);
}
