#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "areal/aim.hpp"
#include "areal/errors.hpp"
#include "areal/intersection.hpp"
#include "areal/regression.hpp"

namespace areal {

enum class Method { DAW, DAX, COMPOSITE, REG, SCR };

inline const char* method_name(Method m) {
    switch (m) {
        case Method::DAW: return "DAW";
        case Method::DAX: return "DAX";
        case Method::COMPOSITE: return "COMPOSITE";
        case Method::REG: return "REG";
        case Method::SCR: return "SCR";
    }
    return "?";
}

inline Method method_from_name(const std::string& name) {
    if (name == "DAW") return Method::DAW;
    if (name == "DAX") return Method::DAX;
    if (name == "COMPOSITE") return Method::COMPOSITE;
    if (name == "REG") return Method::REG;
    if (name == "SCR" || name == "ScR") return Method::SCR;
    throw ConfigError("unknown method '" + name + "'");
}

/// Intersection-level predictions plus their target aggregates. The aggregate
/// of a target is exactly the sum of its intersection values.
struct PredictionSet {
    Method method = Method::DAW;
    std::vector<double> values;        // one per table entry, table order
    std::vector<double> target_totals; // one per target
    bool any_negative = false;                 // REG with an externally supplied fit only
    std::vector<std::string> zero_aux_sources; // DAX sources that fell back to area weights

    void aggregate(const IntersectionTable& table) {
        target_totals.assign(table.n_targets(), 0.0);
        for (std::size_t i = 0; i < table.entries.size(); ++i)
            target_totals[static_cast<std::size_t>(table.entries[i].target_index)] += values[i];
    }
};

/// Areal weighting: allocate Y_s proportionally to intersection area.
inline PredictionSet predict_daw(std::span<const std::int64_t> source_counts,
                                 const IntersectionTable& table) {
    if (source_counts.size() != table.n_sources())
        throw RegionMismatch("source counts do not match table");
    PredictionSet pred;
    pred.method = Method::DAW;
    pred.values.reserve(table.entries.size());
    for (const IntersectionEntry& e : table.entries) {
        const double share = e.area / table.source_areas[static_cast<std::size_t>(e.source_index)];
        pred.values.push_back(share * static_cast<double>(source_counts[static_cast<std::size_t>(e.source_index)]));
    }
    pred.aggregate(table);
    return pred;
}

/// Dasymetric: allocate Y_s proportionally to the auxiliary counts. A source
/// with x_s = 0 leaves the weights undefined; its mass falls back to area
/// shares and the source is recorded in the result.
inline PredictionSet predict_dax(std::span<const std::int64_t> source_counts,
                                 const IntersectionTable& table, std::size_t aux_index = 0) {
    if (source_counts.size() != table.n_sources())
        throw RegionMismatch("source counts do not match table");
    if (aux_index >= table.n_aux) throw ZeroAuxiliary("auxiliary index out of range");
    PredictionSet pred;
    pred.method = Method::DAX;
    pred.values.reserve(table.entries.size());
    std::vector<bool> flagged(table.n_sources(), false);
    for (const IntersectionEntry& e : table.entries) {
        const std::size_t s = static_cast<std::size_t>(e.source_index);
        const double x_s = table.source_aux[s][aux_index];
        double share;
        if (x_s > 0.0) {
            share = e.aux_counts[aux_index] / x_s;
        } else {
            share = e.area / table.source_areas[s];
            if (!flagged[s]) {
                flagged[s] = true;
                pred.zero_aux_sources.push_back(e.source_id);
            }
        }
        pred.values.push_back(share * static_cast<double>(source_counts[s]));
    }
    pred.aggregate(table);
    return pred;
}

/// Composite oracle: allocate Y_s proportionally to the true expected counts.
/// Unfeasible in practice (needs the true coefficients); used as a benchmark.
inline PredictionSet predict_composite(const AimParams& params,
                                       std::span<const std::int64_t> source_counts,
                                       const IntersectionTable& table) {
    if (source_counts.size() != table.n_sources())
        throw RegionMismatch("source counts do not match table");
    if (params.p() != table.n_aux)
        throw DegenerateModel("params do not match table auxiliaries");
    std::vector<double> lambda_s(table.n_sources());
    for (std::size_t s = 0; s < table.n_sources(); ++s) {
        lambda_s[s] = expected_count(params, table.source_areas[s],
                                     std::span<const double>(table.source_aux[s]));
        if (!(lambda_s[s] > 0.0))
            throw ZeroExpectation("expected count is zero on source '" + table.source_ids[s] + "'");
    }
    PredictionSet pred;
    pred.method = Method::COMPOSITE;
    pred.values.reserve(table.entries.size());
    for (const IntersectionEntry& e : table.entries) {
        const std::size_t s = static_cast<std::size_t>(e.source_index);
        const double lambda_e = expected_count(params, e.area, std::span<const double>(e.aux_counts));
        pred.values.push_back(lambda_e / lambda_s[s] * static_cast<double>(source_counts[s]));
    }
    pred.aggregate(table);
    return pred;
}

/// Poisson regression predictor: fitted linear predictor evaluated per
/// intersection. Negative values are flagged, never clamped here.
inline PredictionSet predict_reg(const FitResult& fit_result, const IntersectionTable& table) {
    if (!fit_result.converged) throw UnconvergedFit("regression fit did not converge");
    if (fit_result.gamma_hat.size() != table.n_aux + 1)
        throw DegenerateModel("fit dimension does not match table auxiliaries");
    PredictionSet pred;
    pred.method = Method::REG;
    pred.values.reserve(table.entries.size());
    for (const IntersectionEntry& e : table.entries) {
        double v = fit_result.gamma_hat[0] * e.area;
        for (std::size_t j = 0; j < table.n_aux; ++j)
            v += fit_result.gamma_hat[j + 1] * e.aux_counts[j];
        v *= fit_result.scale;
        if (v < 0.0) pred.any_negative = true;
        pred.values.push_back(v);
    }
    pred.aggregate(table);
    return pred;
}

/// Scaled regression: regression shares rescaled within each source so the
/// observed source total is preserved.
inline PredictionSet predict_scr(const FitResult& fit_result,
                                 std::span<const std::int64_t> source_counts,
                                 const IntersectionTable& table) {
    if (!fit_result.converged) throw UnconvergedFit("regression fit did not converge");
    if (fit_result.gamma_hat.size() != table.n_aux + 1)
        throw DegenerateModel("fit dimension does not match table auxiliaries");
    if (source_counts.size() != table.n_sources())
        throw RegionMismatch("source counts do not match table");
    std::vector<double> denom(table.n_sources());
    for (std::size_t s = 0; s < table.n_sources(); ++s) {
        double d = fit_result.gamma_hat[0] * table.source_areas[s];
        for (std::size_t j = 0; j < table.n_aux; ++j)
            d += fit_result.gamma_hat[j + 1] * table.source_aux[s][j];
        if (!(d > 0.0))
            throw ZeroFittedDenominator("fitted expectation is zero on source '" +
                                        table.source_ids[s] + "'");
        denom[s] = d;
    }
    PredictionSet pred;
    pred.method = Method::SCR;
    pred.values.reserve(table.entries.size());
    for (const IntersectionEntry& e : table.entries) {
        const std::size_t s = static_cast<std::size_t>(e.source_index);
        double num = fit_result.gamma_hat[0] * e.area;
        for (std::size_t j = 0; j < table.n_aux; ++j)
            num += fit_result.gamma_hat[j + 1] * e.aux_counts[j];
        pred.values.push_back(num / denom[s] * static_cast<double>(source_counts[s]));
    }
    pred.aggregate(table);
    return pred;
}

/// Presentation helper: clamp negative intersection values at zero.
inline PredictionSet clamp_negative(PredictionSet pred, const IntersectionTable& table) {
    for (double& v : pred.values) v = std::max(v, 0.0);
    pred.aggregate(table);
    return pred;
}

enum class MassLevel { source, region };

struct PycnophylacticReport {
    MassLevel level = MassLevel::source;
    std::vector<std::string> ids;          // empty for region level
    std::vector<double> discrepancy;       // |predicted - observed| / max(observed, 1)
    bool pass = false;                     // every discrepancy <= 1e-9
};

/// Check whether aggregated predictions reproduce the observed mass at the
/// requested level.
inline PycnophylacticReport pycnophylactic_check(const PredictionSet& pred,
                                                 std::span<const std::int64_t> source_counts,
                                                 MassLevel level,
                                                 const IntersectionTable& table) {
    PycnophylacticReport report;
    report.level = level;
    std::vector<double> predicted(table.n_sources(), 0.0);
    for (std::size_t i = 0; i < table.entries.size(); ++i)
        predicted[static_cast<std::size_t>(table.entries[i].source_index)] += pred.values[i];
    if (level == MassLevel::source) {
        for (std::size_t s = 0; s < table.n_sources(); ++s) {
            const double observed = static_cast<double>(source_counts[s]);
            report.ids.push_back(table.source_ids[s]);
            report.discrepancy.push_back(std::abs(predicted[s] - observed) / std::max(observed, 1.0));
        }
    } else {
        double total_pred = 0.0, total_obs = 0.0;
        for (std::size_t s = 0; s < table.n_sources(); ++s) {
            total_pred += predicted[s];
            total_obs += static_cast<double>(source_counts[s]);
        }
        report.discrepancy.push_back(std::abs(total_pred - total_obs) / std::max(total_obs, 1.0));
    }
    report.pass = true;
    for (double d : report.discrepancy)
        if (!(d <= 1e-9)) report.pass = false;
    return report;
}

} // namespace areal
