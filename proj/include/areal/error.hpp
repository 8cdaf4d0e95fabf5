#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "areal/aim.hpp"
#include "areal/errors.hpp"
#include "areal/field.hpp"
#include "areal/grid.hpp"
#include "areal/intersection.hpp"
#include "areal/interpolate.hpp"
#include "areal/regression.hpp"
#include "areal/rng.hpp"

namespace areal {

enum class Scope { target, source, region };

inline const char* scope_name(Scope s) {
    switch (s) {
        case Scope::target: return "target";
        case Scope::source: return "source";
        case Scope::region: return "region";
    }
    return "?";
}

/// Exact finite-distance error of a predictor, conditional on the auxiliary.
struct AnalyticError {
    Scope scope = Scope::target;
    Method method = Method::DAW;
    double bias = 0.0;
    double variance = 0.0;
    double mse = 0.0;
    double relative = 0.0; // sqrt(mse) / E(Y_scope)
};

namespace detail {

inline AnalyticError make_error(Scope scope, Method method, double bias, double variance,
                                double expected) {
    AnalyticError e;
    e.scope = scope;
    e.method = method;
    e.bias = bias;
    e.variance = variance;
    e.mse = bias * bias + variance;
    e.relative = expected > 0.0 ? std::sqrt(e.mse) / expected
                                : std::numeric_limits<double>::quiet_NaN();
    return e;
}

inline void require_nested(const Zone& source, const Zone& target) {
    if (!std::includes(source.cells.begin(), source.cells.end(),
                       target.cells.begin(), target.cells.end()))
        throw NotNested("target '" + target.id + "' is not nested in source '" + source.id + "'");
}

inline void require_partition(const Zone& source, const std::vector<Zone>& targets) {
    std::vector<int> covered;
    for (const Zone& t : targets) covered.insert(covered.end(), t.cells.begin(), t.cells.end());
    std::sort(covered.begin(), covered.end());
    if (std::adjacent_find(covered.begin(), covered.end()) != covered.end() ||
        covered != source.cells)
        throw NotAPartition("targets do not partition source '" + source.id + "'");
}

} // namespace detail

/// Closed-form bias and variance of the two weighting predictors on one nested
/// target, as functions of the area and auxiliary shares. The two biases have
/// opposite signs and a common proportionality to p - q = |T|/|S| - x_T/x_S.
struct DawDaxErrors {
    AnalyticError daw;
    AnalyticError dax;
};

inline DawDaxErrors target_errors_daw_dax(const AimParams& params, double area_s, double area_t,
                                          double x_s, double x_t) {
    if (params.p() != 1) throw DegenerateModel("closed forms require a single auxiliary");
    if (!(x_s > 0.0)) throw ZeroAuxiliary("x_S must be positive");
    const double alpha = params.alpha;
    const double beta = params.betas[0];
    const double p = area_t / area_s;
    const double q = x_t / x_s;
    const double d = p - q;
    const double common = beta * x_t * (1.0 - q) + alpha * area_t * (1.0 - p);
    const double lambda_t = expected_count(params, area_t, x_t);
    DawDaxErrors out;
    out.daw = detail::make_error(Scope::target, Method::DAW, beta * x_s * d,
                                 beta * x_s * d * d + common, lambda_t);
    out.dax = detail::make_error(Scope::target, Method::DAX, alpha * area_s * -d,
                                 alpha * area_s * d * d + common, lambda_t);
    return out;
}

inline DawDaxErrors bias_variance_daw_dax(const AimParams& params, const Zone& source,
                                          const Zone& target, const CountField& x) {
    detail::require_nested(source, target);
    const double area_s = source.area(x.region);
    const double area_t = target.area(x.region);
    const double x_s = static_cast<double>(aggregate_count(x, source));
    const double x_t = static_cast<double>(aggregate_count(x, target));
    return target_errors_daw_dax(params, area_s, area_t, x_s, x_t);
}

/// Source-level variances of the two predictors; each equals the sum of its
/// target-level variances over a partition of the source.
inline std::pair<double, double> source_variances(const AimParams& params, const Zone& source,
                                                  const std::vector<Zone>& targets,
                                                  const CountField& x) {
    detail::require_partition(source, targets);
    if (params.p() != 1) throw DegenerateModel("closed forms require a single auxiliary");
    const GeometryStats stats = geometry_stats(source, targets, x);
    const double area_s = source.area(x.region);
    const double x_s = static_cast<double>(aggregate_count(x, source));
    const double alpha_area = params.alpha * area_s;
    const double beta_x = params.betas[0] * x_s;
    const double var_daw = beta_x * stats.d + beta_x * stats.b + alpha_area * stats.c;
    const double var_dax = alpha_area * stats.d + beta_x * stats.b + alpha_area * stats.c;
    return {var_daw, var_dax};
}

/// Source-level errors expressed through the geometry summaries D, B, C and the
/// effect contributions. Must agree with the aggregated target-level closed
/// forms; the test suite checks the identity on randomized fixtures.
struct SourceErrors {
    AnalyticError daw;
    AnalyticError dax;
};

inline SourceErrors source_errors_theorem1(const EffectDecomposition& effects,
                                           const GeometryStats& stats) {
    const double e = effects.expected;
    const double ix = effects.i_aux;
    const double ia = effects.i_area;
    const double er_daw = ix * ix * e * e * stats.d + ix * e * (stats.d + stats.b) + ia * e * stats.c;
    const double re2_dax = ia * ia * stats.d +
                           (ia * (stats.d - stats.b + stats.c) + stats.b) / e;
    const double er_dax = re2_dax * e * e;
    SourceErrors out;
    out.daw.scope = out.dax.scope = Scope::source;
    out.daw.method = Method::DAW;
    out.dax.method = Method::DAX;
    out.daw.bias = out.dax.bias = 0.0; // both methods preserve the source total
    out.daw.mse = out.daw.variance = er_daw;
    out.dax.mse = out.dax.variance = er_dax;
    out.daw.relative = std::sqrt(er_daw) / e;
    out.dax.relative = std::sqrt(er_dax) / e;
    return out;
}

/// Difference of squared relative errors at source level,
/// (Re_DAW)^2 - (Re_DAX)^2 = -D * Delta_S * (1 + 1/E).
inline double relative_error_sq_difference(const EffectDecomposition& effects,
                                           const GeometryStats& stats) {
    return -stats.d * effects.delta * (1.0 + 1.0 / effects.expected);
}

/// Error difference Er_DAW - Er_DAX on a nested target. Positive (dasymetric
/// wins) exactly when the auxiliary effect dominates, Delta_S < 0.
inline double error_difference(const AimParams& params, double area_s, double area_t,
                               double x_s, double x_t) {
    if (params.p() != 1) throw DegenerateModel("closed forms require a single auxiliary");
    if (!(x_s > 0.0)) throw ZeroAuxiliary("x_S must be positive");
    const double d = area_t / area_s - x_t / x_s;
    const double e = expected_count(params, area_s, x_s);
    return d * d * (params.betas[0] * x_s - params.alpha * area_s) * (e + 1.0);
}

inline double error_difference(const AimParams& params, const Zone& source, const Zone& target,
                               const CountField& x) {
    detail::require_nested(source, target);
    return error_difference(params, source.area(x.region), target.area(x.region),
                            static_cast<double>(aggregate_count(x, source)),
                            static_cast<double>(aggregate_count(x, target)));
}

/// Exact error of the composite oracle on one nested target: unbiased with
/// variance lambda_T (lambda_S - lambda_T) / lambda_S.
inline AnalyticError composite_error_target(const AimParams& params, double area_s, double area_t,
                                            double x_s, double x_t) {
    const double lambda_s = expected_count(params, area_s, x_s);
    const double lambda_t = expected_count(params, area_t, x_t);
    if (!(lambda_s > 0.0)) throw ZeroExpectation("expected count is zero on the source");
    return detail::make_error(Scope::target, Method::COMPOSITE, 0.0,
                              lambda_t * (lambda_s - lambda_t) / lambda_s, lambda_t);
}

/// Source-level composite error by the direct expectation sum,
/// Er_C = lambda_S - sum_T lambda_T^2 / lambda_S.
inline AnalyticError composite_error_source(const AimParams& params, double area_s,
                                            std::span<const double> target_areas, double x_s,
                                            std::span<const double> target_x) {
    if (target_areas.size() != target_x.size())
        throw NotAPartition("target areas and auxiliaries differ in length");
    const double lambda_s = expected_count(params, area_s, x_s);
    if (!(lambda_s > 0.0)) throw ZeroExpectation("expected count is zero on the source");
    double sum_sq = 0.0;
    for (std::size_t i = 0; i < target_areas.size(); ++i) {
        const double lt = expected_count(params, target_areas[i], target_x[i]);
        sum_sq += lt * lt;
    }
    return detail::make_error(Scope::source, Method::COMPOSITE, 0.0,
                              lambda_s - sum_sq / lambda_s, lambda_s);
}

/// The same squared relative error through Delta, D, B, C. Algebraically equal
/// to the direct sum; kept separate so the two routes cross-check each other.
inline double composite_source_relative_sq(const EffectDecomposition& effects,
                                           const GeometryStats& stats) {
    const double delta = effects.delta;
    return (-delta * delta * stats.d + 2.0 * delta * (stats.c - stats.b) + stats.d +
            2.0 * stats.b + 2.0 * stats.c) /
           (4.0 * effects.expected);
}

/// Per-target areal-weighting error under a piecewise homogeneous intensity,
/// computed by reducing to the generic constant-share predictor a*Y_S with
/// a = |T|/|S| and zone expectations taken from the piecewise field.
inline std::vector<AnalyticError> piecewise_errors(const PiecewiseModel& model, const Zone& source,
                                                   const std::vector<Zone>& targets) {
    const IntensityField field = piecewise_intensity(model);
    for (const Zone& t : targets) {
        detail::require_nested(source, t);
        const int first = model.control_zones.zone_of_cell(t.cells.front());
        for (int c : t.cells)
            if (model.control_zones.zone_of_cell(c) != first)
                throw TargetStraddlesControl("target '" + t.id + "' straddles control zones");
    }
    const double lambda_s = field.expected_count(source);
    const double area_s = source.area(field.region);
    std::vector<AnalyticError> out;
    out.reserve(targets.size());
    for (const Zone& t : targets) {
        const double a = t.area(field.region) / area_s;
        const double lambda_t = field.expected_count(t);
        const double bias = a * lambda_s - lambda_t;
        const double variance = a * a * lambda_s + lambda_t - 2.0 * a * lambda_t;
        out.push_back(detail::make_error(Scope::target, Method::DAW, bias, variance, lambda_t));
    }
    return out;
}

/// Large-count approximations for the regression predictor at source level.
struct RegApproximation {
    double re_reg = 0.0;      // ~ 1 / sqrt(E(Y_S))
    double diff_vs_daw = 0.0; // (Re_REG)^2 - (Re_DAW)^2 ~ -(1+Delta)^2 D
    double diff_vs_dax = 0.0; // (Re_REG)^2 - (Re_DAX)^2 ~ -(1-Delta)^2 D
};

inline RegApproximation reg_error_approximations(const EffectDecomposition& effects,
                                                 const GeometryStats& stats) {
    if (!(effects.expected > 0.0)) throw ZeroExpectation("expected count must be positive");
    RegApproximation out;
    out.re_reg = 1.0 / std::sqrt(effects.expected);
    out.diff_vs_daw = -(1.0 + effects.delta) * (1.0 + effects.delta) * stats.d;
    out.diff_vs_dax = -(1.0 - effects.delta) * (1.0 - effects.delta) * stats.d;
    return out;
}

// ---------------------------------------------------------------------------
// Monte-Carlo evaluation
// ---------------------------------------------------------------------------

/// Monte-Carlo error estimate for one method at one scope unit.
struct McErrorEstimate {
    Scope scope = Scope::region;
    std::string scope_id;
    Method method = Method::DAW;
    int replicates_used = 0;
    int failed_fits = 0;
    double bias = 0.0;
    double variance = 0.0;
    double mse = 0.0;
    double std_error = 0.0; // sample sd of per-replicate squared errors / sqrt(R)
    double relative = 0.0;
    double expected = 0.0;
};

namespace seed_stream {
constexpr std::uint64_t auxiliary = 0xA0;  // + auxiliary index
constexpr std::uint64_t target_var = 0x59;
} // namespace seed_stream

/// A replicated disaggregation experiment. Auxiliary fields are either drawn
/// once and held fixed (conditional mode, the default) or redrawn with the
/// target variable at every replicate.
struct McScenario {
    ZoneSystem sources;
    ZoneSystem targets;
    AimParams params;
    std::vector<IntensityField> aux_intensities;
    std::vector<CountField> fixed_aux; // pre-drawn auxiliaries; implies conditional mode
    std::vector<Method> methods;
    int replicates = 1000;
    std::uint64_t base_seed = 1;
    bool condition_on_x = true;
    double scale = 1.0;
    std::size_t dax_aux = 0;
    std::optional<std::vector<std::size_t>> reg_aux; // regression model columns; default all
    int threads = 0;                                 // 0: hardware concurrency
};

struct McReport {
    std::vector<McErrorEstimate> rows;
    int failed_replicates = 0;
    std::vector<CountField> aux_used; // the conditional draws, when applicable
    // per-replicate region-level squared-error sums, for paired comparisons;
    // NaN marks a skipped replicate
    std::map<Method, std::vector<double>> region_sq_errors;
};

namespace detail {

struct UnitErrors {
    // per replicate: region, then sources, then targets
    std::vector<double> err;
    std::vector<double> sq;
};

inline Design make_design(const IntersectionTable& table, std::span<const std::int64_t> y_s,
                          std::span<const std::size_t> aux_cols, double scale) {
    Design design;
    design.scale = scale;
    design.rows.reserve(table.n_sources());
    for (std::size_t s = 0; s < table.n_sources(); ++s) {
        DesignRow row;
        row.area = table.source_areas[s];
        for (std::size_t j : aux_cols) row.x.push_back(table.source_aux[s][j]);
        row.y = y_s[s];
        design.rows.push_back(std::move(row));
    }
    return design;
}

// Restricted view of the table keeping only the selected auxiliary columns, so
// a regression fitted on a sub-model can predict against matching entries.
inline IntersectionTable restrict_aux(const IntersectionTable& table,
                                      std::span<const std::size_t> aux_cols) {
    IntersectionTable out = table;
    out.n_aux = aux_cols.size();
    for (IntersectionEntry& e : out.entries) {
        std::vector<double> kept;
        for (std::size_t j : aux_cols) kept.push_back(e.aux_counts[j]);
        e.aux_counts = std::move(kept);
    }
    for (std::vector<double>& sa : out.source_aux) {
        std::vector<double> kept;
        for (std::size_t j : aux_cols) kept.push_back(sa[j]);
        sa = std::move(kept);
    }
    return out;
}

} // namespace detail

inline McReport mc_evaluate(const McScenario& scenario) {
    if (scenario.replicates < 1) throw ConfigError("replicates must be at least 1");
    if (scenario.methods.empty()) throw ConfigError("no methods requested");
    if (!(scenario.sources.region() == scenario.targets.region()))
        throw RegionMismatch("source and target systems use different grids");
    scenario.params.validate();
    const std::size_t n_aux = scenario.params.p();
    if (!scenario.fixed_aux.empty() && scenario.fixed_aux.size() != n_aux)
        throw ConfigError("fixed auxiliaries do not match the model dimension");
    if (scenario.fixed_aux.empty() && scenario.aux_intensities.size() != n_aux)
        throw ConfigError("auxiliary intensities do not match the model dimension");

    const GridRegion region = scenario.sources.region();
    const int r_total = scenario.replicates;
    const bool conditional = scenario.condition_on_x || !scenario.fixed_aux.empty();

    std::vector<std::size_t> reg_cols;
    if (scenario.reg_aux) {
        reg_cols = *scenario.reg_aux;
        for (std::size_t j : reg_cols)
            if (j >= n_aux) throw ConfigError("regression auxiliary index out of range");
    } else {
        for (std::size_t j = 0; j < n_aux; ++j) reg_cols.push_back(j);
    }
    const bool needs_fit =
        std::any_of(scenario.methods.begin(), scenario.methods.end(),
                    [](Method m) { return m == Method::REG || m == Method::SCR; });

    // conditional auxiliaries: one draw per auxiliary, shared by every replicate
    std::vector<CountField> aux_fixed = scenario.fixed_aux;
    if (conditional && aux_fixed.empty()) {
        for (std::size_t j = 0; j < n_aux; ++j)
            aux_fixed.push_back(simulate_counts(
                scenario.aux_intensities[j], 1.0,
                derive_stream(scenario.base_seed, seed_stream::auxiliary + j), 0));
    }

    IntersectionTable table_fixed;
    IntensityField y_intensity_fixed;
    if (conditional) {
        table_fixed = intersect(scenario.sources, scenario.targets, aux_fixed);
        y_intensity_fixed = n_aux > 0
                                ? conditional_intensity(scenario.params, aux_fixed)
                                : IntensityField(region, std::vector<double>(
                                                             static_cast<std::size_t>(region.cell_count()),
                                                             scenario.params.alpha));
    }

    const std::size_t n_s = scenario.sources.size();
    const std::size_t n_t = scenario.targets.size();
    const std::size_t n_units = 1 + n_s + n_t;
    const std::size_t n_methods = scenario.methods.size();
    const std::uint64_t y_seed = derive_stream(scenario.base_seed, seed_stream::target_var);

    // per-replicate error storage, reduced sequentially afterwards so results
    // do not depend on the number of worker threads
    std::vector<detail::UnitErrors> store(n_methods);
    for (auto& u : store) {
        u.err.assign(static_cast<std::size_t>(r_total) * n_units,
                     std::numeric_limits<double>::quiet_NaN());
        u.sq.assign(static_cast<std::size_t>(r_total) * n_units,
                    std::numeric_limits<double>::quiet_NaN());
    }
    std::vector<std::uint8_t> replicate_failed(static_cast<std::size_t>(r_total), 0);
    // expected counts per unit (region, sources, targets); NaN until computed
    std::vector<double> expected_units(n_units, 0.0);
    bool expected_ready = false;

    auto run_replicate = [&](int r, std::vector<double>& expected_out, bool want_expected) {
        const IntersectionTable* table = &table_fixed;
        const IntensityField* y_intensity = &y_intensity_fixed;
        IntersectionTable table_local;
        IntensityField y_local;
        std::vector<CountField> aux_local;
        if (!conditional) {
            for (std::size_t j = 0; j < n_aux; ++j)
                aux_local.push_back(simulate_counts(
                    scenario.aux_intensities[j], 1.0,
                    derive_stream(scenario.base_seed, seed_stream::auxiliary + j),
                    static_cast<std::uint64_t>(r)));
            table_local = intersect(scenario.sources, scenario.targets, aux_local);
            y_local = n_aux > 0 ? conditional_intensity(scenario.params, aux_local)
                                : IntensityField(region, std::vector<double>(
                                                             static_cast<std::size_t>(region.cell_count()),
                                                             scenario.params.alpha));
            table = &table_local;
            y_intensity = &y_local;
        }

        const CountField y = simulate_counts(*y_intensity, scenario.scale, y_seed,
                                             static_cast<std::uint64_t>(r));
        std::vector<std::int64_t> y_sources(n_s), y_targets(n_t);
        for (std::size_t s = 0; s < n_s; ++s)
            y_sources[s] = aggregate_count(y, scenario.sources.zone(s));
        for (std::size_t t = 0; t < n_t; ++t)
            y_targets[t] = aggregate_count(y, scenario.targets.zone(t));
        const std::vector<std::int64_t> y_entries = aggregate_intersections(y, *table);

        if (want_expected) {
            expected_out.assign(n_units, 0.0);
            expected_out[0] = scenario.scale * y_intensity->expected_total();
            for (std::size_t s = 0; s < n_s; ++s)
                expected_out[1 + s] =
                    scenario.scale * y_intensity->expected_count(scenario.sources.zone(s));
            for (std::size_t t = 0; t < n_t; ++t)
                expected_out[1 + n_s + t] =
                    scenario.scale * y_intensity->expected_count(scenario.targets.zone(t));
        }

        FitResult fit_result;
        bool fit_ok = true;
        if (needs_fit) {
            const Design design =
                detail::make_design(*table, y_sources, reg_cols, scenario.scale);
            try {
                fit_result = fit(design);
                fit_ok = fit_result.converged;
            } catch (const Error&) {
                fit_ok = false;
            }
            if (!fit_ok) replicate_failed[static_cast<std::size_t>(r)] = 1;
        }
        IntersectionTable reg_table;
        const bool reg_needs_restrict = needs_fit && reg_cols.size() != n_aux;
        if (reg_needs_restrict) reg_table = detail::restrict_aux(*table, reg_cols);

        for (std::size_t mi = 0; mi < n_methods; ++mi) {
            const Method method = scenario.methods[mi];
            PredictionSet pred;
            switch (method) {
                case Method::DAW:
                    pred = predict_daw(y_sources, *table);
                    break;
                case Method::DAX:
                    pred = predict_dax(y_sources, *table, scenario.dax_aux);
                    break;
                case Method::COMPOSITE:
                    pred = predict_composite(scenario.params, y_sources, *table);
                    break;
                case Method::REG:
                    if (!fit_ok) continue;
                    pred = predict_reg(fit_result, reg_needs_restrict ? reg_table : *table);
                    break;
                case Method::SCR:
                    if (!fit_ok) continue;
                    pred = predict_scr(fit_result, y_sources,
                                       reg_needs_restrict ? reg_table : *table);
                    break;
            }
            double* err = &store[mi].err[static_cast<std::size_t>(r) * n_units];
            double* sq = &store[mi].sq[static_cast<std::size_t>(r) * n_units];
            double region_err = 0.0, region_sq = 0.0;
            for (std::size_t t = 0; t < n_t; ++t) {
                const double e = pred.target_totals[t] - static_cast<double>(y_targets[t]);
                err[1 + n_s + t] = e;
                sq[1 + n_s + t] = e * e;
                region_err += e;
                region_sq += e * e;
            }
            err[0] = region_err;
            sq[0] = region_sq;
            for (std::size_t s = 0; s < n_s; ++s) {
                err[1 + s] = 0.0;
                sq[1 + s] = 0.0;
            }
            for (std::size_t i = 0; i < table->entries.size(); ++i) {
                const std::size_t s = static_cast<std::size_t>(table->entries[i].source_index);
                const double e = pred.values[i] - static_cast<double>(y_entries[i]);
                err[1 + s] += e;
                sq[1 + s] += e * e;
            }
        }
    };

    // expected counts come from replicate 0's intensity (constant across
    // replicates in conditional mode; a representative draw otherwise)
    run_replicate(0, expected_units, true);
    expected_ready = true;

    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const unsigned n_threads = scenario.threads > 0
                                   ? static_cast<unsigned>(scenario.threads)
                                   : std::min<unsigned>(hw, static_cast<unsigned>(r_total));
    if (r_total > 1) {
        std::vector<std::thread> workers;
        std::vector<double> dummy;
        const int per = (r_total - 1 + static_cast<int>(n_threads) - 1) / static_cast<int>(n_threads);
        for (unsigned w = 0; w < n_threads; ++w) {
            const int lo = 1 + static_cast<int>(w) * per;
            const int hi = std::min(r_total, lo + per);
            if (lo >= hi) break;
            workers.emplace_back([&, lo, hi]() {
                std::vector<double> ignore;
                for (int r = lo; r < hi; ++r) run_replicate(r, ignore, false);
            });
        }
        for (auto& t : workers) t.join();
    }
    (void)expected_ready;

    McReport report;
    for (std::uint8_t f : replicate_failed) report.failed_replicates += f;
    report.aux_used = aux_fixed;

    auto unit_id = [&](std::size_t u) -> std::string {
        if (u == 0) return "region";
        if (u < 1 + n_s) return scenario.sources.zone(u - 1).id;
        return scenario.targets.zone(u - 1 - n_s).id;
    };
    auto unit_scope = [&](std::size_t u) {
        if (u == 0) return Scope::region;
        return u < 1 + n_s ? Scope::source : Scope::target;
    };

    for (std::size_t mi = 0; mi < n_methods; ++mi) {
        report.region_sq_errors[scenario.methods[mi]] =
            std::vector<double>(r_total, std::numeric_limits<double>::quiet_NaN());
        for (int r = 0; r < r_total; ++r)
            report.region_sq_errors[scenario.methods[mi]][static_cast<std::size_t>(r)] =
                store[mi].sq[static_cast<std::size_t>(r) * n_units];
        for (std::size_t u = 0; u < n_units; ++u) {
            McErrorEstimate est;
            est.scope = unit_scope(u);
            est.scope_id = unit_id(u);
            est.method = scenario.methods[mi];
            est.expected = expected_units[u];
            double sum_err = 0.0, sum_sq = 0.0, sum_sq2 = 0.0;
            int used = 0;
            for (int r = 0; r < r_total; ++r) {
                const double e = store[mi].err[static_cast<std::size_t>(r) * n_units + u];
                const double s = store[mi].sq[static_cast<std::size_t>(r) * n_units + u];
                if (std::isnan(s)) continue;
                ++used;
                sum_err += e;
                sum_sq += s;
                sum_sq2 += s * s;
            }
            est.replicates_used = used;
            est.failed_fits = r_total - used;
            if (used > 0) {
                est.bias = sum_err / used;
                est.mse = sum_sq / used;
                est.variance = std::max(0.0, est.mse - est.bias * est.bias);
                if (used > 1) {
                    const double var_sq = std::max(0.0, (sum_sq2 - sum_sq * sum_sq / used) / (used - 1));
                    est.std_error = std::sqrt(var_sq / used);
                }
                est.relative = est.expected > 0.0
                                   ? std::sqrt(est.mse) / est.expected
                                   : std::numeric_limits<double>::quiet_NaN();
            }
            report.rows.push_back(std::move(est));
        }
    }
    return report;
}

} // namespace areal
