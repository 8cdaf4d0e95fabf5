#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "areal/aim.hpp"
#include "areal/error.hpp"
#include "areal/errors.hpp"
#include "areal/field.hpp"
#include "areal/grid.hpp"
#include "areal/intersection.hpp"
#include "areal/interpolate.hpp"
#include "areal/io.hpp"
#include "areal/regression.hpp"
#include "areal/svg.hpp"

namespace areal {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// config building blocks
// ---------------------------------------------------------------------------

inline GridRegion parse_grid(const cfg::json& j, const std::string& where) {
    cfg::check_keys(j, where, {"rows", "cols", "cell_area"});
    return GridRegion(static_cast<int>(cfg::integer(j, where, "rows")),
                      static_cast<int>(cfg::integer(j, where, "cols")),
                      cfg::number_or(j, where, "cell_area", 1.0));
}

inline AimParams parse_params(const cfg::json& j, const std::string& where) {
    cfg::check_keys(j, where, {"alpha", "betas", "name"});
    const cfg::json& b = cfg::require(j, where, "betas");
    if (!b.is_array()) throw ConfigError(where + ": 'betas' must be an array");
    std::vector<double> betas;
    for (const auto& v : b) {
        if (!v.is_number()) throw ConfigError(where + ": betas must be numbers");
        betas.push_back(v.get<double>());
    }
    try {
        return AimParams(cfg::number(j, where, "alpha"), std::move(betas));
    } catch (const DegenerateModel& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

/// Intensity specification:
///   {"type":"homogeneous","value":v}
///   {"type":"two_level","low":l,"high":h,"mask_stride":s,"mask_offset":o}
///   {"type":"csv","path":"..."}
///   {"type":"piecewise","zones_csv":"...","values":[...]}
inline IntensityField parse_intensity(const cfg::json& j, const std::string& where,
                                      const GridRegion& region, const fs::path& base_dir) {
    const std::string type = cfg::text(j, where, "type");
    if (type == "homogeneous") {
        cfg::check_keys(j, where, {"type", "value"});
        const double v = cfg::number(j, where, "value");
        if (v < 0.0) throw ConfigError(where + ": intensity must be nonnegative");
        return IntensityField(region,
                              std::vector<double>(static_cast<std::size_t>(region.cell_count()), v));
    }
    if (type == "two_level") {
        cfg::check_keys(j, where, {"type", "low", "high", "mask_stride", "mask_offset"});
        const double lo = cfg::number(j, where, "low");
        const double hi = cfg::number(j, where, "high");
        const auto stride = cfg::integer(j, where, "mask_stride");
        const auto offset = cfg::integer(j, where, "mask_offset");
        if (lo < 0.0 || hi < 0.0) throw ConfigError(where + ": intensity must be nonnegative");
        if (stride < 1 || offset < 0 || offset >= stride)
            throw ConfigError(where + ": need 0 <= mask_offset < mask_stride");
        std::vector<double> values(static_cast<std::size_t>(region.cell_count()), lo);
        for (int c = 0; c < region.cell_count(); ++c)
            if (c % stride == offset) values[static_cast<std::size_t>(c)] = hi;
        return IntensityField(region, std::move(values));
    }
    if (type == "csv") {
        cfg::check_keys(j, where, {"type", "path"});
        return read_intensity_field(base_dir / cfg::text(j, where, "path"), region);
    }
    if (type == "piecewise") {
        cfg::check_keys(j, where, {"type", "zones_csv", "values"});
        const ZoneSystem zones =
            read_zone_labels(base_dir / cfg::text(j, where, "zones_csv"), region, ZoneKind::control);
        const cfg::json& v = cfg::require(j, where, "values");
        if (!v.is_array()) throw ConfigError(where + ": 'values' must be an array");
        std::vector<double> alphas;
        for (const auto& a : v) alphas.push_back(a.get<double>());
        return piecewise_intensity(PiecewiseModel(zones, std::move(alphas)));
    }
    throw ConfigError(where + ": unknown intensity type '" + type + "'");
}

inline std::vector<Method> parse_methods(const cfg::json& j, const std::string& where) {
    std::vector<Method> methods;
    if (!j.is_array()) throw ConfigError(where + ": 'methods' must be an array");
    for (const auto& m : j) methods.push_back(method_from_name(m.get<std::string>()));
    return methods;
}

// ---------------------------------------------------------------------------
// shared helpers
// ---------------------------------------------------------------------------

/// Analytic region-level error of the composite oracle, summed over all
/// intersections with conditional expectations from the realized auxiliaries.
inline double composite_region_benchmark(const AimParams& params, const IntersectionTable& table) {
    std::vector<double> lambda_s(table.n_sources(), 0.0);
    for (std::size_t s = 0; s < table.n_sources(); ++s)
        lambda_s[s] = expected_count(params, table.source_areas[s],
                                     std::span<const double>(table.source_aux[s]));
    double total = 0.0;
    for (const IntersectionEntry& e : table.entries) {
        const double ls = lambda_s[static_cast<std::size_t>(e.source_index)];
        if (!(ls > 0.0)) throw ZeroExpectation("expected count is zero on a source");
        const double lt = expected_count(params, e.area, std::span<const double>(e.aux_counts));
        total += lt * (ls - lt) / ls;
    }
    return total;
}

inline const McErrorEstimate& find_region_row(const McReport& report, Method method) {
    for (const McErrorEstimate& r : report.rows)
        if (r.scope == Scope::region && r.method == method) return r;
    throw Error("missing region row");
}

// ---------------------------------------------------------------------------
// toy experiment 1: 5x5 grid, 3 sources, 7 non-nested targets
// ---------------------------------------------------------------------------

struct Toy1Config {
    GridRegion grid;
    fs::path sources_csv;
    fs::path targets_csv;
    cfg::json x_intensity;
    fs::path base_dir;
    struct Case {
        std::string name;
        AimParams params;
    };
    std::vector<Case> cases;
    int replicates = 1000;
    std::uint64_t base_seed = 1;
    std::vector<Method> methods{Method::DAW, Method::DAX, Method::REG, Method::SCR,
                                Method::COMPOSITE};
};

inline Toy1Config parse_toy1_config(const cfg::json& j, const fs::path& base_dir) {
    const std::string where = "toy1 config";
    cfg::check_keys(j, where,
                    {"schema", "experiment", "grid", "sources_csv", "targets_csv", "x_intensity",
                     "cases", "replicates", "base_seed", "methods"});
    cfg::check_schema(j, where);
    Toy1Config config;
    config.base_dir = base_dir;
    config.grid = parse_grid(cfg::require(j, where, "grid"), where + ".grid");
    config.sources_csv = base_dir / cfg::text(j, where, "sources_csv");
    config.targets_csv = base_dir / cfg::text(j, where, "targets_csv");
    config.x_intensity = cfg::require(j, where, "x_intensity");
    const cfg::json& cases = cfg::require(j, where, "cases");
    if (!cases.is_array() || cases.empty()) throw ConfigError(where + ": 'cases' must be a nonempty array");
    for (const auto& c : cases) {
        Toy1Config::Case item;
        item.name = cfg::text(c, where + ".case", "name");
        item.params = parse_params(c, where + ".case");
        if (item.params.p() != 1) throw ConfigError(where + ": cases use a single auxiliary");
        config.cases.push_back(std::move(item));
    }
    config.replicates = static_cast<int>(cfg::integer(j, where, "replicates"));
    if (config.replicates < 1) throw ConfigError(where + ": replicates must be positive");
    config.base_seed = static_cast<std::uint64_t>(cfg::integer(j, where, "base_seed"));
    if (j.contains("methods")) config.methods = parse_methods(j["methods"], where);
    return config;
}

struct Toy1Result {
    CountField x;
    // per case: region-level MC rows in method order plus the analytic benchmark
    struct CaseResult {
        std::string name;
        McReport report;
        double composite_benchmark = 0.0;
        double expected_y_region = 0.0;
        std::vector<EffectDecomposition> imbalance;
    };
    std::vector<CaseResult> cases;
    IntersectionTable table;
};

inline Toy1Result run_toy1(const Toy1Config& config, const fs::path& out_dir, bool svg = false) {
    fs::create_directories(out_dir);
    const ZoneSystem sources = read_zone_labels(config.sources_csv, config.grid, ZoneKind::source);
    const ZoneSystem targets = read_zone_labels(config.targets_csv, config.grid, ZoneKind::target);
    if (sources.size() != 3 || targets.size() != 7)
        throw ConfigError("toy1 expects 3 sources and 7 targets");
    const IntensityField x_intensity =
        parse_intensity(config.x_intensity, "toy1 x_intensity", config.grid, config.base_dir);

    Toy1Result result;
    // one auxiliary draw, held fixed across every replicate and case
    result.x = simulate_counts(x_intensity, 1.0,
                               derive_stream(config.base_seed, seed_stream::auxiliary), 0);
    result.table = intersect(sources, targets, {result.x});

    std::ofstream t1(out_dir / "table1.csv");
    t1 << "case,method,sqrt_overall_error,relative_pct,expected_y_region,sqrt_expected_y_region,"
          "sqrt_composite_benchmark,failed_replicates\n";
    std::ofstream t2(out_dir / "table2.csv");
    t2 << "case,source_id,expected_y_source,imbalance\n";
    std::ofstream t3(out_dir / "table3.csv");
    t3 << "case,source_id,target_id,share_gap,er_dax_minus_er_daw,re_ratio_dax_over_daw\n";

    for (std::size_t ci = 0; ci < config.cases.size(); ++ci) {
        const auto& item = config.cases[ci];
        McScenario scenario;
        scenario.sources = sources;
        scenario.targets = targets;
        scenario.params = item.params;
        scenario.fixed_aux = {result.x};
        scenario.methods = config.methods;
        scenario.replicates = config.replicates;
        scenario.base_seed = derive_stream(config.base_seed, 0x1000 + ci);
        scenario.condition_on_x = true;

        Toy1Result::CaseResult cr;
        cr.name = item.name;
        cr.report = mc_evaluate(scenario);
        cr.composite_benchmark = composite_region_benchmark(item.params, result.table);
        cr.expected_y_region = find_region_row(cr.report, scenario.methods.front()).expected;
        cr.imbalance = imbalance_table(item.params, sources, result.x);

        for (Method m : scenario.methods) {
            const McErrorEstimate& row = find_region_row(cr.report, m);
            t1 << item.name << ',' << method_name(m) << ',' << fmt_double(std::sqrt(row.mse)) << ','
               << fmt_double(100.0 * row.relative) << ',' << fmt_double(row.expected) << ','
               << fmt_double(std::sqrt(row.expected)) << ','
               << fmt_double(std::sqrt(cr.composite_benchmark)) << ',' << cr.report.failed_replicates
               << '\n';
        }
        for (const EffectDecomposition& d : cr.imbalance)
            t2 << item.name << ',' << d.zone_id << ',' << fmt_double(d.expected) << ','
               << fmt_double(d.delta) << '\n';
        for (const IntersectionEntry& e : result.table.entries) {
            const std::size_t s = static_cast<std::size_t>(e.source_index);
            const double area_s = result.table.source_areas[s];
            const double x_s = result.table.source_aux[s][0];
            const double share_gap = std::abs(e.area / area_s - e.aux_counts[0] / x_s);
            const double diff = -error_difference(item.params, area_s, e.area, x_s, e.aux_counts[0]);
            const DawDaxErrors errs =
                target_errors_daw_dax(item.params, area_s, e.area, x_s, e.aux_counts[0]);
            t3 << item.name << ',' << e.source_id << ',' << e.target_id << ','
               << fmt_double(share_gap) << ',' << fmt_double(diff) << ','
               << fmt_double(std::sqrt(errs.dax.mse / errs.daw.mse)) << '\n';
        }
        result.cases.push_back(std::move(cr));
    }

    if (svg) {
        std::vector<double> xvals(result.x.counts.begin(), result.x.counts.end());
        write_svg_heatmap(out_dir / "x_counts.svg", config.grid, xvals, "auxiliary counts");
        for (std::size_t ci = 0; ci < config.cases.size(); ++ci) {
            const IntensityField lambda = conditional_intensity(config.cases[ci].params, {result.x});
            const CountField y = simulate_counts(
                lambda, 1.0, derive_stream(config.base_seed, 0x1000 + ci + 0x59), 0);
            std::vector<double> yvals(y.counts.begin(), y.counts.end());
            write_svg_heatmap(out_dir / (config.cases[ci].name + "_example.svg"), config.grid,
                              yvals, config.cases[ci].name + " example draw");
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// toy experiment 2: 16x16 grid, three source systems, cell-level targets
// ---------------------------------------------------------------------------

struct Toy2Config {
    GridRegion grid;
    struct SourceSystem {
        std::string name;
        fs::path csv;
    };
    std::vector<SourceSystem> source_systems;
    struct Aux {
        std::string name;
        cfg::json intensity;
    };
    std::vector<Aux> aux;
    std::vector<AimParams> params;
    fs::path base_dir;
    int replicates = 1000;
    std::uint64_t base_seed = 1;
};

inline Toy2Config parse_toy2_config(const cfg::json& j, const fs::path& base_dir) {
    const std::string where = "toy2 config";
    cfg::check_keys(j, where,
                    {"schema", "experiment", "grid", "source_systems", "aux", "params",
                     "replicates", "base_seed"});
    cfg::check_schema(j, where);
    Toy2Config config;
    config.base_dir = base_dir;
    config.grid = parse_grid(cfg::require(j, where, "grid"), where + ".grid");
    for (const auto& s : cfg::require(j, where, "source_systems")) {
        cfg::check_keys(s, where + ".source_systems", {"name", "csv"});
        config.source_systems.push_back(
            {cfg::text(s, where, "name"), base_dir / cfg::text(s, where, "csv")});
    }
    for (const auto& a : cfg::require(j, where, "aux")) {
        cfg::check_keys(a, where + ".aux", {"name", "intensity"});
        config.aux.push_back({cfg::text(a, where, "name"), cfg::require(a, where, "intensity")});
    }
    for (const auto& p : cfg::require(j, where, "params")) {
        AimParams params = parse_params(p, where + ".params");
        if (params.p() != 1) throw ConfigError(where + ": toy2 uses a single auxiliary per case");
        config.params.push_back(std::move(params));
    }
    if (config.source_systems.empty() || config.aux.empty() || config.params.empty())
        throw ConfigError(where + ": source_systems, aux and params must be nonempty");
    config.replicates = static_cast<int>(cfg::integer(j, where, "replicates"));
    if (config.replicates < 1) throw ConfigError(where + ": replicates must be positive");
    config.base_seed = static_cast<std::uint64_t>(cfg::integer(j, where, "base_seed"));
    return config;
}

struct Toy2Cell {
    std::string aux_name;
    double alpha = 0.0;
    double beta = 0.0;
    std::string system_name;
    double expected_y = 0.0;
    double composite_benchmark_sqrt = 0.0;
    std::map<Method, double> sqrt_mse;
    std::map<Method, double> relative_pct;
    double min_delta = 0.0, mean_delta = 0.0, max_delta = 0.0;
    int failed_replicates = 0;
};

struct Toy2Result {
    std::vector<Toy2Cell> cells;
    std::map<std::string, double> aux_gini; // realized Gini per auxiliary draw
};

inline Toy2Result run_toy2(const Toy2Config& config, const fs::path& out_dir, bool svg = false) {
    fs::create_directories(out_dir);
    const ZoneSystem cells = make_cell_targets(config.grid);
    std::vector<ZoneSystem> systems;
    for (const auto& s : config.source_systems)
        systems.push_back(read_zone_labels(s.csv, config.grid, ZoneKind::source));

    // each auxiliary is drawn once and reused across parameter sets and systems
    std::vector<CountField> aux_draws;
    Toy2Result result;
    for (std::size_t a = 0; a < config.aux.size(); ++a) {
        const IntensityField intensity = parse_intensity(
            config.aux[a].intensity, "toy2 aux '" + config.aux[a].name + "'", config.grid,
            config.base_dir);
        aux_draws.push_back(simulate_counts(
            intensity, 1.0, derive_stream(config.base_seed, seed_stream::auxiliary + a), 0));
        result.aux_gini[config.aux[a].name] = gini(aux_draws.back());
        if (svg) {
            std::vector<double> v(aux_draws.back().counts.begin(), aux_draws.back().counts.end());
            write_svg_heatmap(out_dir / (config.aux[a].name + "_counts.svg"), config.grid, v,
                              config.aux[a].name + " counts");
        }
    }

    const std::vector<Method> methods{Method::DAW, Method::DAX, Method::REG, Method::SCR,
                                      Method::COMPOSITE};
    std::ofstream t4(out_dir / "table4.csv");
    t4 << "aux,alpha,beta,source_system,sqrt_expected_y,daw,dax,reg,scr,composite,"
          "composite_benchmark,failed_replicates\n";
    std::ofstream t5(out_dir / "table5.csv");
    t5 << "aux,alpha,beta,source_system,expected_y,daw,dax,reg,scr,composite\n";
    std::ofstream ti(out_dir / "imbalances.csv");
    ti << "aux,alpha,beta,source_system,min_imbalance,mean_imbalance,max_imbalance\n";

    for (std::size_t a = 0; a < config.aux.size(); ++a) {
        for (std::size_t pi = 0; pi < config.params.size(); ++pi) {
            for (std::size_t sy = 0; sy < systems.size(); ++sy) {
                McScenario scenario;
                scenario.sources = systems[sy];
                scenario.targets = cells;
                scenario.params = config.params[pi];
                scenario.fixed_aux = {aux_draws[a]};
                scenario.methods = methods;
                scenario.replicates = config.replicates;
                // same target draws across source systems: the same data is
                // transferred from each of the three systems
                scenario.base_seed = derive_stream(config.base_seed, 0x2000 + a * 16 + pi);
                scenario.condition_on_x = true;

                const McReport report = mc_evaluate(scenario);
                const IntersectionTable table =
                    intersect(scenario.sources, scenario.targets, {aux_draws[a]});

                Toy2Cell cell;
                cell.aux_name = config.aux[a].name;
                cell.alpha = config.params[pi].alpha;
                cell.beta = config.params[pi].betas[0];
                cell.system_name = config.source_systems[sy].name;
                cell.expected_y = find_region_row(report, Method::DAW).expected;
                cell.composite_benchmark_sqrt =
                    std::sqrt(composite_region_benchmark(config.params[pi], table));
                cell.failed_replicates = report.failed_replicates;
                for (Method m : methods) {
                    const McErrorEstimate& row = find_region_row(report, m);
                    cell.sqrt_mse[m] = std::sqrt(row.mse);
                    cell.relative_pct[m] = 100.0 * row.relative;
                }
                const std::vector<EffectDecomposition> imb =
                    imbalance_table(config.params[pi], scenario.sources, aux_draws[a]);
                cell.min_delta = imb.front().delta;
                cell.max_delta = imb.front().delta;
                for (const EffectDecomposition& d : imb) {
                    cell.min_delta = std::min(cell.min_delta, d.delta);
                    cell.max_delta = std::max(cell.max_delta, d.delta);
                    cell.mean_delta += d.delta;
                }
                cell.mean_delta /= static_cast<double>(imb.size());

                t4 << cell.aux_name << ',' << fmt_double(cell.alpha) << ',' << fmt_double(cell.beta)
                   << ',' << cell.system_name << ',' << fmt_double(std::sqrt(cell.expected_y));
                for (Method m : methods) t4 << ',' << fmt_double(cell.sqrt_mse[m]);
                t4 << ',' << fmt_double(cell.composite_benchmark_sqrt) << ','
                   << cell.failed_replicates << '\n';

                t5 << cell.aux_name << ',' << fmt_double(cell.alpha) << ',' << fmt_double(cell.beta)
                   << ',' << cell.system_name << ',' << fmt_double(cell.expected_y);
                for (Method m : methods) t5 << ',' << fmt_double(cell.relative_pct[m]);
                t5 << '\n';

                ti << cell.aux_name << ',' << fmt_double(cell.alpha) << ',' << fmt_double(cell.beta)
                   << ',' << cell.system_name << ',' << fmt_double(cell.min_delta) << ','
                   << fmt_double(cell.mean_delta) << ',' << fmt_double(cell.max_delta) << '\n';

                result.cells.push_back(std::move(cell));
            }
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// robustness study: model misspecification on the 14-source system
// ---------------------------------------------------------------------------

struct RobustnessConfig {
    GridRegion grid;
    fs::path sources_csv;
    cfg::json x1_intensity;
    cfg::json x3_intensity;
    AimParams true_params; // generates Y from (area, X1, X3); beta on X1 is zero
    fs::path base_dir;
    int replicates = 1000;
    std::uint64_t base_seed = 1;
};

inline RobustnessConfig parse_robustness_config(const cfg::json& j, const fs::path& base_dir) {
    const std::string where = "robustness config";
    cfg::check_keys(j, where,
                    {"schema", "experiment", "grid", "sources_csv", "x1_intensity", "x3_intensity",
                     "true_params", "replicates", "base_seed"});
    cfg::check_schema(j, where);
    RobustnessConfig config;
    config.base_dir = base_dir;
    config.grid = parse_grid(cfg::require(j, where, "grid"), where + ".grid");
    config.sources_csv = base_dir / cfg::text(j, where, "sources_csv");
    config.x1_intensity = cfg::require(j, where, "x1_intensity");
    config.x3_intensity = cfg::require(j, where, "x3_intensity");
    config.true_params = parse_params(cfg::require(j, where, "true_params"), where + ".true_params");
    if (config.true_params.p() != 2)
        throw ConfigError(where + ": true_params needs betas for (X1, X3)");
    config.replicates = static_cast<int>(cfg::integer(j, where, "replicates"));
    if (config.replicates < 1) throw ConfigError(where + ": replicates must be positive");
    config.base_seed = static_cast<std::uint64_t>(cfg::integer(j, where, "base_seed"));
    return config;
}

struct RobustnessRow {
    std::string label;
    Method method = Method::DAW;
    double relative_pct = 0.0;
    double sqrt_mse = 0.0;
    double mse = 0.0;
    double std_error = 0.0;
    std::vector<double> replicate_sq; // region-level squared errors per replicate
};

struct RobustnessResult {
    std::vector<RobustnessRow> rows;
    double aux_correlation = 0.0; // realized cell-level correlation of X1 and X3
    double expected_y = 0.0;
    double composite_benchmark = 0.0;
};

inline RobustnessResult run_robustness(const RobustnessConfig& config, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    const ZoneSystem sources = read_zone_labels(config.sources_csv, config.grid, ZoneKind::source);
    const ZoneSystem cells = make_cell_targets(config.grid);

    const IntensityField x1_intensity =
        parse_intensity(config.x1_intensity, "robustness x1", config.grid, config.base_dir);
    const IntensityField x3_intensity =
        parse_intensity(config.x3_intensity, "robustness x3", config.grid, config.base_dir);
    const CountField x1 = simulate_counts(
        x1_intensity, 1.0, derive_stream(config.base_seed, seed_stream::auxiliary + 0), 0);
    const CountField x3 = simulate_counts(
        x3_intensity, 1.0, derive_stream(config.base_seed, seed_stream::auxiliary + 1), 0);

    RobustnessResult result;
    { // realized correlation between the two auxiliaries at cell level
        const std::size_t n = x1.counts.size();
        double m1 = 0, m3 = 0;
        for (std::size_t i = 0; i < n; ++i) {
            m1 += static_cast<double>(x1.counts[i]);
            m3 += static_cast<double>(x3.counts[i]);
        }
        m1 /= static_cast<double>(n);
        m3 /= static_cast<double>(n);
        double c13 = 0, v1 = 0, v3 = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d1 = static_cast<double>(x1.counts[i]) - m1;
            const double d3 = static_cast<double>(x3.counts[i]) - m3;
            c13 += d1 * d3;
            v1 += d1 * d1;
            v3 += d3 * d3;
        }
        result.aux_correlation = c13 / std::sqrt(v1 * v3);
    }

    struct ModelSpec {
        std::string label;
        std::vector<Method> methods;
        std::size_t dax_aux = 0;
        std::optional<std::vector<std::size_t>> reg_aux;
    };
    const std::vector<ModelSpec> specs = {
        {"DAW", {Method::DAW}, 0, std::nullopt},
        {"DAX(X3)", {Method::DAX}, 1, std::nullopt},
        {"area+X3", {Method::REG, Method::SCR}, 0, std::vector<std::size_t>{1}},
        {"DAX(X1)", {Method::DAX}, 0, std::nullopt},
        {"area+X1", {Method::REG, Method::SCR}, 0, std::vector<std::size_t>{0}},
        {"area", {Method::REG, Method::SCR}, 0, std::vector<std::size_t>{}},
        {"area+X1+X3", {Method::REG, Method::SCR}, 0, std::vector<std::size_t>{0, 1}},
        {"COMPOSITE", {Method::COMPOSITE}, 0, std::nullopt},
    };

    for (const ModelSpec& spec : specs) {
        McScenario scenario;
        scenario.sources = sources;
        scenario.targets = cells;
        scenario.params = config.true_params;
        scenario.fixed_aux = {x1, x3};
        scenario.methods = spec.methods;
        scenario.replicates = config.replicates;
        scenario.base_seed = config.base_seed; // shared draws keep rows paired
        scenario.condition_on_x = true;
        scenario.dax_aux = spec.dax_aux;
        scenario.reg_aux = spec.reg_aux;
        const McReport report = mc_evaluate(scenario);
        if (result.expected_y == 0.0)
            result.expected_y = find_region_row(report, spec.methods.front()).expected;
        for (Method m : spec.methods) {
            const McErrorEstimate& row = find_region_row(report, m);
            RobustnessRow out;
            if (spec.label == "DAW" || spec.label == "COMPOSITE" ||
                spec.label.rfind("DAX", 0) == 0) {
                out.label = spec.label;
            } else {
                out.label = std::string(m == Method::REG ? "REG(" : "ScR(") + spec.label + ")";
            }
            out.method = m;
            out.relative_pct = 100.0 * row.relative;
            out.sqrt_mse = std::sqrt(row.mse);
            out.mse = row.mse;
            out.std_error = row.std_error;
            out.replicate_sq = report.region_sq_errors.at(m);
            result.rows.push_back(std::move(out));
        }
    }
    {
        const IntersectionTable table = intersect(sources, cells, {x1, x3});
        result.composite_benchmark = composite_region_benchmark(config.true_params, table);
    }

    std::ofstream t6(out_dir / "table6.csv");
    t6 << "model,method,relative_error_pct,sqrt_mse,mse_std_error\n";
    for (const RobustnessRow& row : result.rows)
        t6 << row.label << ',' << method_name(row.method) << ',' << fmt_double(row.relative_pct)
           << ',' << fmt_double(row.sqrt_mse) << ',' << fmt_double(row.std_error) << '\n';
    return result;
}

// ---------------------------------------------------------------------------
// asymptotics: estimator and predictor behavior along an intensity scale
// ---------------------------------------------------------------------------

struct AsymptoticsConfig {
    GridRegion grid;
    fs::path sources_csv;
    cfg::json x_intensity;
    AimParams gamma0;
    std::vector<double> scales{1.0, 10.0, 100.0, 1000.0};
    fs::path base_dir;
    int replicates = 500;
    std::uint64_t base_seed = 1;
};

inline AsymptoticsConfig parse_asymptotics_config(const cfg::json& j, const fs::path& base_dir) {
    const std::string where = "asymptotics config";
    cfg::check_keys(j, where,
                    {"schema", "experiment", "grid", "sources_csv", "x_intensity", "gamma0",
                     "scales", "replicates", "base_seed"});
    cfg::check_schema(j, where);
    AsymptoticsConfig config;
    config.base_dir = base_dir;
    config.grid = parse_grid(cfg::require(j, where, "grid"), where + ".grid");
    config.sources_csv = base_dir / cfg::text(j, where, "sources_csv");
    config.x_intensity = cfg::require(j, where, "x_intensity");
    config.gamma0 = parse_params(cfg::require(j, where, "gamma0"), where + ".gamma0");
    if (config.gamma0.p() != 1) throw ConfigError(where + ": gamma0 uses a single auxiliary");
    if (j.contains("scales")) {
        config.scales.clear();
        for (const auto& s : j["scales"]) config.scales.push_back(s.get<double>());
        if (config.scales.empty()) throw ConfigError(where + ": scales must be nonempty");
    }
    config.replicates = static_cast<int>(cfg::integer(j, where, "replicates"));
    if (config.replicates < 2) throw ConfigError(where + ": need at least 2 replicates");
    config.base_seed = static_cast<std::uint64_t>(cfg::integer(j, where, "base_seed"));
    return config;
}

struct AsymptoticsRow {
    double scale = 0.0;
    double median_gamma_error = 0.0;
    double z_mean_alpha = 0.0, z_var_alpha = 0.0;
    double z_mean_beta = 0.0, z_var_beta = 0.0;
    double mse_reg_over_expected = 0.0;
    double mse_scr_over_composite = 0.0;
    int failed_fits = 0;
    int replicates = 0;
};

inline std::vector<AsymptoticsRow> run_asymptotics(const AsymptoticsConfig& config,
                                                   const fs::path& out_dir) {
    fs::create_directories(out_dir);
    const ZoneSystem sources = read_zone_labels(config.sources_csv, config.grid, ZoneKind::source);
    const ZoneSystem cells = make_cell_targets(config.grid);
    const IntensityField x_intensity =
        parse_intensity(config.x_intensity, "asymptotics x", config.grid, config.base_dir);
    const CountField x = simulate_counts(
        x_intensity, 1.0, derive_stream(config.base_seed, seed_stream::auxiliary), 0);
    const IntersectionTable table = intersect(sources, cells, {x});
    const IntensityField y_intensity = conditional_intensity(config.gamma0, {x});
    const std::vector<double> gamma_true{config.gamma0.alpha, config.gamma0.betas[0]};

    std::vector<AsymptoticsRow> rows;
    for (double k : config.scales) {
        const std::uint64_t y_seed =
            derive_stream(derive_stream(config.base_seed, 0x4000 + rows.size()), seed_stream::target_var);
        Design design_template;
        design_template.scale = k;
        for (std::size_t s = 0; s < table.n_sources(); ++s) {
            DesignRow row;
            row.area = table.source_areas[s];
            row.x = {table.source_aux[s][0]};
            design_template.rows.push_back(std::move(row));
        }
        const double expected_region = k * y_intensity.expected_total();
        double composite_analytic = 0.0;
        {
            // scaled benchmark: expectations grow by k, the formula is degree one
            std::vector<double> lambda_s(table.n_sources(), 0.0);
            for (std::size_t s = 0; s < table.n_sources(); ++s)
                lambda_s[s] = k * expected_count(config.gamma0, table.source_areas[s],
                                                 table.source_aux[s][0]);
            for (const IntersectionEntry& e : table.entries) {
                const double ls = lambda_s[static_cast<std::size_t>(e.source_index)];
                const double lt = k * expected_count(config.gamma0, e.area, e.aux_counts[0]);
                composite_analytic += lt * (ls - lt) / ls;
            }
        }

        AsymptoticsRow row;
        row.scale = k;
        std::vector<double> gamma_errors;
        double z_sum[2] = {0, 0}, z_sq[2] = {0, 0};
        double reg_sq_sum = 0.0, scr_sq_sum = 0.0;
        int used = 0;
        for (int r = 0; r < config.replicates; ++r) {
            const CountField y =
                simulate_counts(y_intensity, k, y_seed, static_cast<std::uint64_t>(r));
            Design design = design_template;
            std::vector<std::int64_t> y_sources(table.n_sources());
            for (std::size_t s = 0; s < table.n_sources(); ++s) {
                y_sources[s] = aggregate_count(y, sources.zone(s));
                design.rows[s].y = y_sources[s];
            }
            FitResult fit_result;
            try {
                fit_result = fit(design);
            } catch (const Error&) {
                ++row.failed_fits;
                continue;
            }
            if (!fit_result.converged) {
                ++row.failed_fits;
                continue;
            }
            ++used;
            const double da = fit_result.gamma_hat[0] - gamma_true[0];
            const double db = fit_result.gamma_hat[1] - gamma_true[1];
            gamma_errors.push_back(std::sqrt(da * da + db * db));
            const std::vector<double> z = standardized_estimator(design, fit_result, gamma_true);
            for (int c = 0; c < 2; ++c) {
                z_sum[c] += z[static_cast<std::size_t>(c)];
                z_sq[c] += z[static_cast<std::size_t>(c)] * z[static_cast<std::size_t>(c)];
            }
            const PredictionSet reg = predict_reg(fit_result, table);
            const PredictionSet scr = predict_scr(fit_result, y_sources, table);
            const std::vector<std::int64_t> y_cells = aggregate_intersections(y, table);
            double reg_sq = 0.0, scr_sq = 0.0;
            for (std::size_t i = 0; i < table.entries.size(); ++i) {
                const double er = reg.values[i] - static_cast<double>(y_cells[i]);
                const double es = scr.values[i] - static_cast<double>(y_cells[i]);
                reg_sq += er * er;
                scr_sq += es * es;
            }
            reg_sq_sum += reg_sq;
            scr_sq_sum += scr_sq;
        }
        if (used < 2) throw Error("too many failed fits at scale " + fmt_double(k));
        std::sort(gamma_errors.begin(), gamma_errors.end());
        const std::size_t mid = gamma_errors.size() / 2;
        row.median_gamma_error = gamma_errors.size() % 2 == 1
                                     ? gamma_errors[mid]
                                     : 0.5 * (gamma_errors[mid - 1] + gamma_errors[mid]);
        row.z_mean_alpha = z_sum[0] / used;
        row.z_mean_beta = z_sum[1] / used;
        row.z_var_alpha = (z_sq[0] - z_sum[0] * z_sum[0] / used) / (used - 1);
        row.z_var_beta = (z_sq[1] - z_sum[1] * z_sum[1] / used) / (used - 1);
        row.mse_reg_over_expected = reg_sq_sum / used / expected_region;
        row.mse_scr_over_composite = scr_sq_sum / used / composite_analytic;
        row.replicates = used;
        rows.push_back(row);
    }

    std::ofstream out(out_dir / "diagnostics.csv");
    out << "scale,median_gamma_error,z_mean_alpha,z_var_alpha,z_mean_beta,z_var_beta,"
           "mse_reg_over_expected,mse_scr_over_composite,failed_fits,replicates\n";
    for (const AsymptoticsRow& row : rows)
        out << fmt_double(row.scale) << ',' << fmt_double(row.median_gamma_error) << ','
            << fmt_double(row.z_mean_alpha) << ',' << fmt_double(row.z_var_alpha) << ','
            << fmt_double(row.z_mean_beta) << ',' << fmt_double(row.z_var_beta) << ','
            << fmt_double(row.mse_reg_over_expected) << ','
            << fmt_double(row.mse_scr_over_composite) << ',' << row.failed_fits << ','
            << row.replicates << '\n';
    return rows;
}

} // namespace areal
