#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "areal/errors.hpp"
#include "areal/field.hpp"
#include "areal/grid.hpp"

namespace areal {

/// Coefficients of the auxiliary information model: expected count on a zone A
/// is alpha*|A| + sum_j beta_j * x_A,j. All coefficients are nonnegative so the
/// induced intensity stays nonnegative everywhere.
struct AimParams {
    double alpha = 0.0;
    std::vector<double> betas;

    AimParams() = default;
    AimParams(double a, std::vector<double> b) : alpha(a), betas(std::move(b)) {
        validate();
    }

    void validate() const {
        if (alpha < 0.0) throw DegenerateModel("alpha must be nonnegative");
        double sum = alpha;
        for (double b : betas) {
            if (b < 0.0) throw DegenerateModel("betas must be nonnegative");
            sum += b;
        }
        if (!(sum > 0.0)) throw DegenerateModel("alpha and betas cannot all be zero");
    }

    std::size_t p() const { return betas.size(); }
};

inline double expected_count(const AimParams& params, double area, std::span<const double> x) {
    if (x.size() != params.betas.size())
        throw DegenerateModel("auxiliary dimension does not match betas");
    if (area < 0.0) throw OutOfBounds("area must be nonnegative");
    double value = params.alpha * area;
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (x[j] < 0.0) throw OutOfBounds("auxiliary counts must be nonnegative");
        value += params.betas[j] * x[j];
    }
    return value;
}

inline double expected_count(const AimParams& params, double area, double x) {
    const double xs[1] = {x};
    return expected_count(params, area, std::span<const double>(xs, 1));
}

/// How the expected count on a zone splits between the areal effect and the
/// auxiliary effect. delta = i_area - i_aux is +1 for a pure areal effect and
/// -1 for a pure auxiliary effect. Defined for a single auxiliary only.
struct EffectDecomposition {
    std::string zone_id;
    double expected = 0.0;
    double i_area = 0.0;
    double i_aux = 0.0;
    double delta = 0.0;
};

inline EffectDecomposition decompose_effects(const AimParams& params, const std::string& zone_id,
                                             double area, double x) {
    if (params.p() != 1)
        throw DegenerateModel("effect decomposition requires exactly one auxiliary variable");
    EffectDecomposition d;
    d.zone_id = zone_id;
    d.expected = expected_count(params, area, x);
    if (!(d.expected > 0.0)) throw ZeroExpectation("expected count is zero on '" + zone_id + "'");
    d.i_area = params.alpha * area / d.expected;
    d.i_aux = params.betas[0] * x / d.expected;
    d.delta = d.i_area - d.i_aux;
    return d;
}

/// Imbalance index per source, from realized auxiliary counts.
inline std::vector<EffectDecomposition> imbalance_table(const AimParams& params,
                                                        const ZoneSystem& sources,
                                                        const CountField& x) {
    if (!(x.region == sources.region())) throw RegionMismatch("auxiliary field uses a different grid");
    std::vector<EffectDecomposition> rows;
    rows.reserve(sources.size());
    for (const Zone& s : sources.zones()) {
        rows.push_back(decompose_effects(params, s.id, s.area(sources.region()),
                                         static_cast<double>(aggregate_count(x, s))));
    }
    return rows;
}

/// Piecewise homogeneous submodel: constant intensity alpha_* on each control zone.
struct PiecewiseModel {
    ZoneSystem control_zones;
    std::vector<double> intensities;

    PiecewiseModel() = default;
    PiecewiseModel(ZoneSystem zones, std::vector<double> alphas)
        : control_zones(std::move(zones)), intensities(std::move(alphas)) {
        if (intensities.size() != control_zones.size())
            throw NotAPartition("one intensity per control zone required");
        for (double a : intensities)
            if (!(a >= 0.0)) throw DegenerateModel("control intensities must be nonnegative");
    }
};

inline IntensityField piecewise_intensity(const PiecewiseModel& model) {
    const GridRegion& region = model.control_zones.region();
    std::vector<double> values(static_cast<std::size_t>(region.cell_count()));
    for (int c = 0; c < region.cell_count(); ++c)
        values[static_cast<std::size_t>(c)] =
            model.intensities[static_cast<std::size_t>(model.control_zones.zone_of_cell(c))];
    return IntensityField(region, std::move(values));
}

/// Conditional intensity of Y given realized auxiliary counts: the mean count
/// on cell c is alpha*cell_area + sum_j beta_j*x_j[c], expressed per unit area.
inline IntensityField conditional_intensity(const AimParams& params,
                                            const std::vector<CountField>& aux) {
    if (aux.size() != params.p())
        throw DegenerateModel("auxiliary count fields do not match betas");
    if (aux.empty()) throw DegenerateModel("conditional intensity needs at least one auxiliary");
    const GridRegion& region = aux.front().region;
    for (const CountField& a : aux)
        if (!(a.region == region)) throw RegionMismatch("auxiliary fields use different grids");
    std::vector<double> values(static_cast<std::size_t>(region.cell_count()), params.alpha);
    for (std::size_t j = 0; j < aux.size(); ++j)
        for (std::size_t c = 0; c < values.size(); ++c)
            values[c] += params.betas[j] * static_cast<double>(aux[j].counts[c]) / region.cell_area;
    return IntensityField(region, std::move(values));
}

} // namespace areal
