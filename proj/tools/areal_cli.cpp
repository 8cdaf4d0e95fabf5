// Command line front end: simulation, fitting, prediction, Monte-Carlo
// evaluation and the packaged experiments.
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "areal/areal.hpp"

namespace fs = std::filesystem;
using areal::cfg::json;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::optional<int> replicates;
    bool svg = false;
};

std::uint64_t seed_from(const json& j, const std::string& where, const CommonArgs& args) {
    if (args.seed) return *args.seed;
    return static_cast<std::uint64_t>(areal::cfg::integer(j, where, "base_seed"));
}

void run_simulate(const CommonArgs& args) {
    const fs::path config_path(args.config_path);
    const json j = areal::cfg::load(config_path);
    const std::string where = "simulate config";
    areal::cfg::check_keys(j, where, {"schema", "grid", "intensity", "scale", "base_seed", "output"});
    areal::cfg::check_schema(j, where);
    const areal::GridRegion grid =
        areal::parse_grid(areal::cfg::require(j, where, "grid"), where + ".grid");
    const areal::IntensityField intensity = areal::parse_intensity(
        areal::cfg::require(j, where, "intensity"), where + ".intensity", grid,
        config_path.parent_path());
    const double scale = areal::cfg::number_or(j, where, "scale", 1.0);
    const std::uint64_t seed = seed_from(j, where, args);
    const std::string output =
        j.contains("output") ? areal::cfg::text(j, where, "output") : std::string("counts.csv");

    const areal::CountField counts = areal::simulate_counts(intensity, scale, seed);
    fs::create_directories(args.out_dir);
    areal::write_count_field(fs::path(args.out_dir) / output, counts);
    if (args.svg) {
        std::vector<double> v(counts.counts.begin(), counts.counts.end());
        areal::write_svg_heatmap(fs::path(args.out_dir) / (output + ".svg"), grid, v, "counts");
    }
    std::cout << "total=" << counts.total() << " cells=" << grid.cell_count() << "\n";
}

struct LoadedData {
    areal::GridRegion grid;
    areal::ZoneSystem sources;
    areal::ZoneSystem targets; // optional, only when targets_csv/cells present
    bool has_targets = false;
    areal::CountField y;
    std::vector<areal::CountField> aux;
};

LoadedData load_observed(const json& j, const std::string& where, const fs::path& base_dir,
                         bool need_targets) {
    LoadedData data;
    data.grid = areal::parse_grid(areal::cfg::require(j, where, "grid"), where + ".grid");
    data.sources = areal::read_zone_labels(base_dir / areal::cfg::text(j, where, "sources_csv"),
                                           data.grid, areal::ZoneKind::source);
    if (need_targets) {
        if (j.contains("targets_csv")) {
            data.targets = areal::read_zone_labels(base_dir / areal::cfg::text(j, where, "targets_csv"),
                                                   data.grid, areal::ZoneKind::target);
        } else if (j.contains("targets") && j["targets"] == "cells") {
            data.targets = areal::make_cell_targets(data.grid);
        } else {
            throw areal::ConfigError(where + ": need 'targets_csv' or \"targets\": \"cells\"");
        }
        data.has_targets = true;
    }
    data.y = areal::read_count_field(base_dir / areal::cfg::text(j, where, "y_csv"), data.grid);
    if (j.contains("aux_csv")) {
        for (const auto& p : j["aux_csv"])
            data.aux.push_back(
                areal::read_count_field(base_dir / p.get<std::string>(), data.grid));
    }
    return data;
}

void run_fit(const CommonArgs& args) {
    const fs::path config_path(args.config_path);
    const json j = areal::cfg::load(config_path);
    const std::string where = "fit config";
    areal::cfg::check_keys(j, where,
                           {"schema", "grid", "sources_csv", "y_csv", "aux_csv", "scale", "tol",
                            "max_iter", "output"});
    areal::cfg::check_schema(j, where);
    const LoadedData data = load_observed(j, where, config_path.parent_path(), false);

    areal::Design design;
    design.scale = areal::cfg::number_or(j, where, "scale", 1.0);
    for (const areal::Zone& s : data.sources.zones()) {
        areal::DesignRow row;
        row.area = s.area(data.grid);
        for (const areal::CountField& a : data.aux)
            row.x.push_back(static_cast<double>(areal::aggregate_count(a, s)));
        row.y = areal::aggregate_count(data.y, s);
        design.rows.push_back(std::move(row));
    }
    const areal::FitResult fit_result =
        areal::fit(design, std::nullopt, areal::cfg::number_or(j, where, "tol", 1e-10),
                   static_cast<int>(areal::cfg::number_or(j, where, "max_iter", 100)));
    fs::create_directories(args.out_dir);
    const std::string output =
        j.contains("output") ? areal::cfg::text(j, where, "output") : std::string("fit.json");
    areal::write_fit_json(fs::path(args.out_dir) / output, fit_result);
    std::cout << "converged=" << (fit_result.converged ? "true" : "false")
              << " boundary=" << (fit_result.boundary ? "true" : "false")
              << " iterations=" << fit_result.iterations << "\n";
    if (!fit_result.converged) throw areal::UnconvergedFit("fit did not converge");
}

void run_predict(const CommonArgs& args) {
    const fs::path config_path(args.config_path);
    const json j = areal::cfg::load(config_path);
    const std::string where = "predict config";
    areal::cfg::check_keys(j, where,
                           {"schema", "grid", "sources_csv", "targets_csv", "targets", "y_csv",
                            "aux_csv", "method", "params", "fit_json", "aux_index",
                            "clamp_negative", "output"});
    areal::cfg::check_schema(j, where);
    const LoadedData data = load_observed(j, where, config_path.parent_path(), true);
    const areal::Method method = areal::method_from_name(areal::cfg::text(j, where, "method"));

    const areal::IntersectionTable table = areal::intersect(data.sources, data.targets, data.aux);
    std::vector<std::int64_t> y_sources;
    for (const areal::Zone& s : data.sources.zones())
        y_sources.push_back(areal::aggregate_count(data.y, s));

    areal::PredictionSet pred;
    switch (method) {
        case areal::Method::DAW:
            pred = areal::predict_daw(y_sources, table);
            break;
        case areal::Method::DAX:
            pred = areal::predict_dax(
                y_sources, table,
                static_cast<std::size_t>(areal::cfg::number_or(j, where, "aux_index", 0)));
            break;
        case areal::Method::COMPOSITE:
            pred = areal::predict_composite(
                areal::parse_params(areal::cfg::require(j, where, "params"), where + ".params"),
                y_sources, table);
            break;
        case areal::Method::REG:
        case areal::Method::SCR: {
            areal::FitResult fit_result;
            if (j.contains("fit_json")) {
                fit_result =
                    areal::read_fit_json(config_path.parent_path() / areal::cfg::text(j, where, "fit_json"));
            } else {
                areal::Design design;
                for (std::size_t s = 0; s < data.sources.size(); ++s) {
                    areal::DesignRow row;
                    row.area = data.sources.zone(s).area(data.grid);
                    for (const areal::CountField& a : data.aux)
                        row.x.push_back(
                            static_cast<double>(areal::aggregate_count(a, data.sources.zone(s))));
                    row.y = y_sources[s];
                    design.rows.push_back(std::move(row));
                }
                fit_result = areal::fit(design);
            }
            pred = method == areal::Method::REG
                       ? areal::predict_reg(fit_result, table)
                       : areal::predict_scr(fit_result, y_sources, table);
            break;
        }
    }
    if (j.contains("clamp_negative") && j["clamp_negative"].get<bool>())
        pred = areal::clamp_negative(std::move(pred), table);

    fs::create_directories(args.out_dir);
    const std::string output =
        j.contains("output") ? areal::cfg::text(j, where, "output") : std::string("predictions.csv");
    areal::write_predictions(fs::path(args.out_dir) / output, pred, table);
    if (args.svg) {
        // spread each intersection's value uniformly over its cells
        std::vector<double> density(static_cast<std::size_t>(data.grid.cell_count()), 0.0);
        for (std::size_t i = 0; i < table.entries.size(); ++i)
            for (int c : table.entries[i].cells)
                density[static_cast<std::size_t>(c)] =
                    pred.values[i] / static_cast<double>(table.entries[i].cells.size());
        areal::write_svg_heatmap(fs::path(args.out_dir) / (output + ".svg"), data.grid, density,
                                 areal::method_name(method));
    }
    std::cout << "entries=" << table.entries.size() << "\n";
}

void run_evaluate(const CommonArgs& args) {
    const fs::path config_path(args.config_path);
    const json j = areal::cfg::load(config_path);
    const std::string where = "evaluate config";
    areal::cfg::check_keys(j, where,
                           {"schema", "grid", "sources_csv", "targets_csv", "targets",
                            "aux_intensity", "params", "methods", "replicates", "base_seed",
                            "condition_on_x", "scale", "dax_aux", "output"});
    areal::cfg::check_schema(j, where);
    const fs::path base_dir = config_path.parent_path();

    areal::McScenario scenario;
    const areal::GridRegion grid =
        areal::parse_grid(areal::cfg::require(j, where, "grid"), where + ".grid");
    scenario.sources = areal::read_zone_labels(base_dir / areal::cfg::text(j, where, "sources_csv"),
                                               grid, areal::ZoneKind::source);
    if (j.contains("targets_csv"))
        scenario.targets = areal::read_zone_labels(base_dir / areal::cfg::text(j, where, "targets_csv"),
                                                   grid, areal::ZoneKind::target);
    else
        scenario.targets = areal::make_cell_targets(grid);
    scenario.params = areal::parse_params(areal::cfg::require(j, where, "params"), where + ".params");
    if (j.contains("aux_intensity"))
        for (const auto& spec : j["aux_intensity"])
            scenario.aux_intensities.push_back(
                areal::parse_intensity(spec, where + ".aux_intensity", grid, base_dir));
    scenario.methods = areal::parse_methods(areal::cfg::require(j, where, "methods"), where);
    scenario.replicates = args.replicates
                              ? *args.replicates
                              : static_cast<int>(areal::cfg::integer(j, where, "replicates"));
    scenario.base_seed = seed_from(j, where, args);
    scenario.condition_on_x =
        !j.contains("condition_on_x") || j["condition_on_x"].get<bool>();
    scenario.scale = areal::cfg::number_or(j, where, "scale", 1.0);
    scenario.dax_aux = static_cast<std::size_t>(areal::cfg::number_or(j, where, "dax_aux", 0));

    const areal::McReport report = areal::mc_evaluate(scenario);
    fs::create_directories(args.out_dir);
    const std::string output =
        j.contains("output") ? areal::cfg::text(j, where, "output") : std::string("error_report.csv");
    areal::write_error_report(fs::path(args.out_dir) / output, report.rows);
    std::cout << "rows=" << report.rows.size()
              << " failed_replicates=" << report.failed_replicates << "\n";
}

void run_experiment(const std::string& which, const CommonArgs& args) {
    const fs::path config_path(args.config_path);
    json j = areal::cfg::load(config_path);
    if (args.seed) j["base_seed"] = *args.seed;
    if (args.replicates) j["replicates"] = *args.replicates;
    const fs::path base_dir = config_path.parent_path();
    const fs::path out_dir(args.out_dir);
    if (j.contains("experiment") && j["experiment"] != which)
        throw areal::ConfigError("config is for experiment '" +
                                 j["experiment"].get<std::string>() + "', not '" + which + "'");

    if (which == "toy1") {
        const areal::Toy1Result r =
            areal::run_toy1(areal::parse_toy1_config(j, base_dir), out_dir, args.svg);
        std::cout << "x_total=" << r.x.total() << " cases=" << r.cases.size() << "\n";
    } else if (which == "toy2") {
        const areal::Toy2Result r =
            areal::run_toy2(areal::parse_toy2_config(j, base_dir), out_dir, args.svg);
        for (const auto& [name, g] : r.aux_gini) std::cout << name << "_gini=" << g << " ";
        std::cout << "cells=" << r.cells.size() << "\n";
    } else if (which == "robustness") {
        const areal::RobustnessResult r =
            areal::run_robustness(areal::parse_robustness_config(j, base_dir), out_dir);
        std::cout << "aux_correlation=" << r.aux_correlation << " rows=" << r.rows.size() << "\n";
    } else if (which == "asymptotics") {
        const auto rows =
            areal::run_asymptotics(areal::parse_asymptotics_config(j, base_dir), out_dir);
        std::cout << "scales=" << rows.size() << "\n";
    } else {
        throw areal::ConfigError("unknown experiment '" + which + "'");
    }
}

void add_common(CLI::App* cmd, CommonArgs& args, bool svg_flag = true) {
    cmd->add_option("--config", args.config_path, "JSON configuration file")->required();
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--seed", args.seed, "override base_seed");
    cmd->add_option("--replicates", args.replicates, "override replicate count");
    if (svg_flag) cmd->add_flag("--svg", args.svg, "emit SVG heatmaps");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Areal interpolation toolkit for count data"};
    app.require_subcommand(1);

    CommonArgs sim_args, fit_args, pred_args, eval_args, exp_args;
    std::string experiment_name;

    add_common(app.add_subcommand("simulate", "draw a count field from an intensity"), sim_args);
    add_common(app.add_subcommand("fit", "identity-link Poisson regression at source level"),
               fit_args, false);
    add_common(app.add_subcommand("predict", "disaggregate observed counts to targets"), pred_args);
    add_common(app.add_subcommand("evaluate", "Monte-Carlo error estimates for a scenario"),
               eval_args, false);
    auto* exp = app.add_subcommand("experiment", "run a packaged study");
    exp->add_option("name", experiment_name, "toy1|toy2|robustness|asymptotics")->required();
    add_common(exp, exp_args);

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("simulate")) run_simulate(sim_args);
        else if (app.got_subcommand("fit")) run_fit(fit_args);
        else if (app.got_subcommand("predict")) run_predict(pred_args);
        else if (app.got_subcommand("evaluate")) run_evaluate(eval_args);
        else if (app.got_subcommand("experiment")) run_experiment(experiment_name, exp_args);
    } catch (const areal::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const areal::IoError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const areal::Error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
