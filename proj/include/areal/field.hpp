#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "areal/errors.hpp"
#include "areal/grid.hpp"
#include "areal/rng.hpp"

namespace areal {

/// Per-cell point-process intensity (points per unit area), nonnegative.
struct IntensityField {
    GridRegion region;
    std::vector<double> values;

    IntensityField() = default;
    IntensityField(GridRegion r, std::vector<double> v) : region(r), values(std::move(v)) {
        if (static_cast<int>(values.size()) != region.cell_count())
            throw OutOfBounds("intensity has wrong number of cells");
        for (double x : values)
            if (!(x >= 0.0)) throw OutOfBounds("intensity values must be nonnegative");
    }

    /// Expected count over a zone; exact for piecewise-constant intensities.
    double expected_count(const Zone& zone) const {
        double sum = 0.0;
        for (int c : zone.cells) sum += values[static_cast<std::size_t>(c)];
        return sum * region.cell_area;
    }

    double expected_total() const {
        return std::accumulate(values.begin(), values.end(), 0.0) * region.cell_area;
    }
};

struct SeedProvenance {
    std::uint64_t base_seed = 0;
    std::uint64_t replicate = 0;
};

/// Realized per-cell counts from one draw of the point pattern.
struct CountField {
    GridRegion region;
    std::vector<std::int64_t> counts;
    SeedProvenance provenance;

    CountField() = default;
    CountField(GridRegion r, std::vector<std::int64_t> c, SeedProvenance prov = {})
        : region(r), counts(std::move(c)), provenance(prov) {
        if (static_cast<int>(counts.size()) != region.cell_count())
            throw OutOfBounds("count field has wrong number of cells");
        for (std::int64_t v : counts)
            if (v < 0) throw OutOfBounds("counts must be nonnegative");
    }

    std::int64_t total() const {
        return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
    }
};

/// Pointwise intensity link: lambda_Y(s) = alpha + beta * lambda_X(s).
inline IntensityField derive_target_intensity(const IntensityField& x_field,
                                              double alpha, double beta) {
    if (alpha < 0.0 || beta < 0.0) throw DegenerateModel("link coefficients must be nonnegative");
    if (alpha == 0.0 && beta == 0.0) throw DegenerateModel("alpha and beta cannot both be zero");
    std::vector<double> v(x_field.values.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        v[i] = alpha + beta * x_field.values[i];
    return IntensityField(x_field.region, std::move(v));
}

/// Draw independent Poisson counts per cell with mean k * lambda * cell_area.
/// Fully deterministic: the same (field, k, seed, replicate) reproduces the
/// same counts bit for bit, and replicates use disjoint counter-derived seeds.
inline CountField simulate_counts(const IntensityField& field, double k,
                                  std::uint64_t seed, std::uint64_t replicate = 0) {
    if (!(k > 0.0)) throw DegenerateModel("scale k must be positive");
    Rng rng(replicate_seed(seed, replicate));
    std::vector<std::int64_t> counts(field.values.size());
    const double a = k * field.region.cell_area;
    for (std::size_t i = 0; i < counts.size(); ++i)
        counts[i] = rng.poisson(a * field.values[i]);
    return CountField(field.region, std::move(counts), SeedProvenance{seed, replicate});
}

/// Extensive aggregation: sum of cell counts over the zone.
inline std::int64_t aggregate_count(const CountField& counts, const Zone& zone) {
    std::int64_t sum = 0;
    for (int c : zone.cells) {
        if (c < 0 || c >= counts.region.cell_count()) throw OutOfBounds("zone outside region");
        sum += counts.counts[static_cast<std::size_t>(c)];
    }
    return sum;
}

namespace detail {

// Mean-absolute-difference Gini via the sorted-rank identity,
// G = (2 * sum_i i*y_(i)) / (n * sum_i y_i) - (n + 1) / n  with 1-based ranks.
inline double gini_sorted(std::vector<double> v) {
    const double total = std::accumulate(v.begin(), v.end(), 0.0);
    if (!(total > 0.0)) throw AllZero("gini undefined for an all-zero field");
    std::sort(v.begin(), v.end());
    const double n = static_cast<double>(v.size());
    double weighted = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i)
        weighted += static_cast<double>(i + 1) * v[i];
    return 2.0 * weighted / (n * total) - (n + 1.0) / n;
}

} // namespace detail

/// Gini coefficient of the per-cell counts, in [0, 1).
inline double gini(const CountField& counts) {
    std::vector<double> v(counts.counts.begin(), counts.counts.end());
    return detail::gini_sorted(std::move(v));
}

inline double gini(const IntensityField& field) {
    return detail::gini_sorted(field.values);
}

} // namespace areal
