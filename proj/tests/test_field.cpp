#include <catch_amalgamated.hpp>

#include <cmath>

#include "areal/field.hpp"
#include "areal/grid.hpp"
#include "areal/io.hpp"
#include "areal/rng.hpp"

using namespace areal;

TEST_CASE("derive_target_intensity") {
    GridRegion region(1, 3);
    IntensityField x(region, {3.0, 0.0, 7.0});
    SECTION("beta = 0 gives a constant field") {
        IntensityField y = derive_target_intensity(x, 4.5, 0.0);
        REQUIRE(y.values == std::vector<double>{4.5, 4.5, 4.5});
    }
    SECTION("alpha = 0, beta = 1 copies the auxiliary intensity") {
        IntensityField y = derive_target_intensity(x, 0.0, 1.0);
        REQUIRE(y.values == x.values);
    }
    SECTION("pointwise affine") {
        IntensityField y = derive_target_intensity(x, 80.0, 1.0);
        REQUIRE(y.values[0] == 83.0);
    }
    SECTION("degenerate link rejected") {
        REQUIRE_THROWS_AS(derive_target_intensity(x, 0.0, 0.0), DegenerateModel);
    }
}

TEST_CASE("simulate_counts basics") {
    SECTION("zero field gives zero counts") {
        GridRegion region(4, 4);
        IntensityField f(region, std::vector<double>(16, 0.0));
        CountField c = simulate_counts(f, 1.0, 123);
        REQUIRE(c.total() == 0);
    }
    SECTION("sample mean over a million cells") {
        GridRegion region(1000, 1000);
        IntensityField f(region, std::vector<double>(1000000, 5.0));
        CountField c = simulate_counts(f, 1.0, 2026);
        const double mean = static_cast<double>(c.total()) / 1e6;
        REQUIRE(mean > 4.99);
        REQUIRE(mean < 5.01);
    }
    SECTION("expected mass of 100000 lands near 100000") {
        GridRegion region(16, 16);
        IntensityField x1 =
            read_intensity_field(std::string(AREAL_SOURCE_DIR) + "/data/toy2_x1_intensity.csv",
                                 region);
        REQUIRE_THAT(x1.expected_total(), Catch::Matchers::WithinAbs(100000.0, 1e-6));
        CountField c = simulate_counts(x1, 1.0, derive_stream(20260810, 0xA0));
        REQUIRE(std::llabs(c.total() - 100000) < 1500); // inside 4.7 sd
    }
    SECTION("reproducibility is bit exact") {
        GridRegion region(8, 8);
        std::vector<double> v(64);
        for (std::size_t i = 0; i < 64; ++i) v[i] = 0.25 * static_cast<double>(i);
        IntensityField f(region, v);
        CountField a = simulate_counts(f, 2.0, 99, 7);
        CountField b = simulate_counts(f, 2.0, 99, 7);
        REQUIRE(a.counts == b.counts);
        CountField c = simulate_counts(f, 2.0, 99, 8);
        REQUIRE(a.counts != c.counts);
        REQUIRE(a.provenance.base_seed == 99);
        REQUIRE(a.provenance.replicate == 7);
    }
}

TEST_CASE("aggregate_count") {
    GridRegion region(2, 3);
    CountField c(region, {1, 2, 3, 4, 5, 6});
    Zone all("all", {0, 1, 2, 3, 4, 5}, region);
    Zone left("left", {0, 3}, region);
    Zone rest("rest", {1, 2, 4, 5}, region);
    REQUIRE(aggregate_count(c, all) == 21);
    REQUIRE(aggregate_count(c, Zone("one", {4}, region)) == 5);
    REQUIRE(aggregate_count(c, left) + aggregate_count(c, rest) == aggregate_count(c, all));
}

TEST_CASE("gini") {
    GridRegion region(1, 5);
    SECTION("equal cells") {
        CountField c(region, {7, 7, 7, 7, 7});
        REQUIRE_THAT(gini(c), Catch::Matchers::WithinAbs(0.0, 1e-12));
    }
    SECTION("all mass in one of n cells") {
        CountField c(region, {0, 0, 40, 0, 0});
        REQUIRE_THAT(gini(c), Catch::Matchers::WithinAbs(4.0 / 5.0, 1e-12));
    }
    SECTION("all zero is an error") {
        CountField c(region, {0, 0, 0, 0, 0});
        REQUIRE_THROWS_AS(gini(c), AllZero);
    }
    SECTION("near-homogeneous auxiliary draw has small inequality") {
        GridRegion big(16, 16);
        IntensityField f(big, std::vector<double>(256, 100000.0 / 256.0));
        CountField c = simulate_counts(f, 1.0, derive_stream(20260810, 0xA1));
        REQUIRE(gini(c) > 0.02);
        REQUIRE(gini(c) < 0.04);
    }
    SECTION("hotspot auxiliary draw is strongly unequal") {
        GridRegion big(16, 16);
        IntensityField x1 =
            read_intensity_field(std::string(AREAL_SOURCE_DIR) + "/data/toy2_x1_intensity.csv",
                                 big);
        CountField c = simulate_counts(x1, 1.0, derive_stream(20260810, 0xA0));
        REQUIRE(gini(c) > 0.70);
        REQUIRE(gini(c) < 0.78);
    }
}

TEST_CASE("Poisson moments and independence of disjoint zones") {
    GridRegion region(1, 2);
    IntensityField f(region, {4.0, 2.5});
    Zone a("a", {0}, region);
    Zone b("b", {1}, region);
    const double k = 2.0;
    const int reps = 10000;
    double sa = 0, sa2 = 0, sb = 0, sb2 = 0, sab = 0;
    for (int r = 0; r < reps; ++r) {
        CountField c = simulate_counts(f, k, 5150, static_cast<std::uint64_t>(r));
        const double ya = static_cast<double>(aggregate_count(c, a));
        const double yb = static_cast<double>(aggregate_count(c, b));
        sa += ya;
        sa2 += ya * ya;
        sb += yb;
        sb2 += yb * yb;
        sab += ya * yb;
    }
    const double mean_a = sa / reps;
    const double var_a = sa2 / reps - mean_a * mean_a;
    const double mean_b = sb / reps;
    const double var_b = sb2 / reps - mean_b * mean_b;
    const double cov = sab / reps - mean_a * mean_b;

    // mean and variance both target k * lambda, here 8 and 5
    const double se_mean_a = std::sqrt(8.0 / reps);
    REQUIRE(std::abs(mean_a - 8.0) < 3.0 * se_mean_a);
    const double se_var_a = 8.0 * std::sqrt(2.0 / reps + 1.0 / (8.0 * reps));
    REQUIRE(std::abs(var_a - 8.0) < 3.0 * se_var_a);
    const double se_mean_b = std::sqrt(5.0 / reps);
    REQUIRE(std::abs(mean_b - 5.0) < 3.0 * se_mean_b);
    // counts on disjoint zones are uncorrelated
    const double se_cov = std::sqrt(var_a * var_b / reps);
    REQUIRE(std::abs(cov) < 3.0 * se_cov);
}
