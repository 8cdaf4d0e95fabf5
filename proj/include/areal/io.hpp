#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "areal/errors.hpp"
#include "areal/error.hpp"
#include "areal/field.hpp"
#include "areal/grid.hpp"
#include "areal/interpolate.hpp"
#include "areal/regression.hpp"

namespace areal {

/// Shortest-ish deterministic decimal rendering used in every CSV we emit.
inline std::string fmt_double(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return std::string(buf);
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

inline std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path,
                                                      const std::string& expected_header) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line)) throw IoError("'" + path.string() + "' is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != expected_header)
        throw IoError("'" + path.string() + "': expected header '" + expected_header + "'");
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        rows.push_back(split_csv_line(line));
    }
    return rows;
}

inline int parse_int(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        const int v = std::stoi(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw IoError("bad " + what + " value '" + s + "'");
    }
}

inline double parse_double(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw IoError("bad " + what + " value '" + s + "'");
    }
}

} // namespace detail

/// Zone-label file: `row,col,label`, one line per cell.
inline ZoneSystem read_zone_labels(const std::filesystem::path& path, const GridRegion& region,
                                   ZoneKind kind) {
    const auto rows = detail::read_csv(path, "row,col,label");
    std::vector<std::string> labels(static_cast<std::size_t>(region.cell_count()));
    std::vector<bool> seen(labels.size(), false);
    for (const auto& fields : rows) {
        if (fields.size() != 3) throw IoError("'" + path.string() + "': malformed line");
        const int r = detail::parse_int(fields[0], "row");
        const int c = detail::parse_int(fields[1], "col");
        if (r < 0 || r >= region.rows || c < 0 || c >= region.cols)
            throw IoError("'" + path.string() + "': cell out of range");
        const std::size_t idx = static_cast<std::size_t>(region.index(r, c));
        if (seen[idx]) throw IoError("'" + path.string() + "': duplicate cell");
        seen[idx] = true;
        labels[idx] = fields[2];
    }
    for (std::size_t i = 0; i < seen.size(); ++i)
        if (!seen[i]) throw IoError("'" + path.string() + "': missing cell " + std::to_string(i));
    return build_zone_system(region, labels, kind);
}

inline void write_zone_labels(const std::filesystem::path& path, const ZoneSystem& system) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << "row,col,label\n";
    const GridRegion& region = system.region();
    for (int c = 0; c < region.cell_count(); ++c)
        out << region.row_of(c) << ',' << region.col_of(c) << ','
            << system.zone(static_cast<std::size_t>(system.zone_of_cell(c))).id << '\n';
}

/// Field files: `row,col,value` in row-major order.
inline CountField read_count_field(const std::filesystem::path& path, const GridRegion& region) {
    const auto rows = detail::read_csv(path, "row,col,value");
    std::vector<std::int64_t> counts(static_cast<std::size_t>(region.cell_count()), -1);
    for (const auto& fields : rows) {
        if (fields.size() != 3) throw IoError("'" + path.string() + "': malformed line");
        const int r = detail::parse_int(fields[0], "row");
        const int c = detail::parse_int(fields[1], "col");
        if (r < 0 || r >= region.rows || c < 0 || c >= region.cols)
            throw IoError("'" + path.string() + "': cell out of range");
        counts[static_cast<std::size_t>(region.index(r, c))] =
            detail::parse_int(fields[2], "count");
    }
    for (std::int64_t v : counts)
        if (v < 0) throw IoError("'" + path.string() + "': missing or negative cell");
    return CountField(region, std::move(counts));
}

inline IntensityField read_intensity_field(const std::filesystem::path& path,
                                           const GridRegion& region) {
    const auto rows = detail::read_csv(path, "row,col,value");
    std::vector<double> values(static_cast<std::size_t>(region.cell_count()), -1.0);
    for (const auto& fields : rows) {
        if (fields.size() != 3) throw IoError("'" + path.string() + "': malformed line");
        const int r = detail::parse_int(fields[0], "row");
        const int c = detail::parse_int(fields[1], "col");
        if (r < 0 || r >= region.rows || c < 0 || c >= region.cols)
            throw IoError("'" + path.string() + "': cell out of range");
        values[static_cast<std::size_t>(region.index(r, c))] =
            detail::parse_double(fields[2], "intensity");
    }
    for (double v : values)
        if (v < 0.0) throw IoError("'" + path.string() + "': missing or negative cell");
    return IntensityField(region, std::move(values));
}

inline void write_count_field(const std::filesystem::path& path, const CountField& field) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << "row,col,value\n";
    const GridRegion& region = field.region;
    for (int c = 0; c < region.cell_count(); ++c)
        out << region.row_of(c) << ',' << region.col_of(c) << ','
            << field.counts[static_cast<std::size_t>(c)] << '\n';
}

inline void write_intensity_field(const std::filesystem::path& path, const IntensityField& field) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << "row,col,value\n";
    const GridRegion& region = field.region;
    for (int c = 0; c < region.cell_count(); ++c)
        out << region.row_of(c) << ',' << region.col_of(c) << ','
            << fmt_double(field.values[static_cast<std::size_t>(c)]) << '\n';
}

/// Prediction output: `method,source_id,target_id,value`, table order.
inline void write_predictions(const std::filesystem::path& path, const PredictionSet& pred,
                              const IntersectionTable& table) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << "method,source_id,target_id,value\n";
    for (std::size_t i = 0; i < table.entries.size(); ++i)
        out << method_name(pred.method) << ',' << table.entries[i].source_id << ','
            << table.entries[i].target_id << ',' << fmt_double(pred.values[i]) << '\n';
}

/// Error report: `scope,scope_id,method,bias,variance,mse,relative,std_error,replicates`.
inline void write_error_report(const std::filesystem::path& path,
                               const std::vector<McErrorEstimate>& rows) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << "scope,scope_id,method,bias,variance,mse,relative,std_error,replicates\n";
    for (const McErrorEstimate& r : rows)
        out << scope_name(r.scope) << ',' << r.scope_id << ',' << method_name(r.method) << ','
            << fmt_double(r.bias) << ',' << fmt_double(r.variance) << ',' << fmt_double(r.mse)
            << ',' << fmt_double(r.relative) << ',' << fmt_double(r.std_error) << ','
            << r.replicates_used << '\n';
}

inline void write_fit_json(const std::filesystem::path& path, const FitResult& fit_result) {
    nlohmann::json j;
    j["gamma_hat"] = fit_result.gamma_hat;
    j["loglik"] = fit_result.loglik;
    j["iterations"] = fit_result.iterations;
    j["converged"] = fit_result.converged;
    j["boundary"] = fit_result.boundary;
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << j.dump(2) << '\n';
}

inline FitResult read_fit_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("'" + path.string() + "': " + e.what());
    }
    FitResult fit_result;
    try {
        fit_result.gamma_hat = j.at("gamma_hat").get<std::vector<double>>();
        fit_result.loglik = j.at("loglik").get<double>();
        fit_result.iterations = j.at("iterations").get<int>();
        fit_result.converged = j.at("converged").get<bool>();
        fit_result.boundary = j.at("boundary").get<bool>();
    } catch (const nlohmann::json::exception& e) {
        throw IoError("'" + path.string() + "': " + e.what());
    }
    return fit_result;
}

// --- strict JSON config helpers (unknown keys are errors) -------------------

namespace cfg {

using json = nlohmann::json;

inline json load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
    try {
        json j;
        in >> j;
        return j;
    } catch (const json::exception& e) {
        throw ConfigError("config '" + path.string() + "': " + e.what());
    }
}

inline void check_keys(const json& j, const std::string& where,
                       std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& item : j.items()) {
        bool known = false;
        for (const char* k : allowed)
            if (item.key() == k) known = true;
        if (!known) throw ConfigError(where + ": unknown key '" + item.key() + "'");
    }
}

inline const json& require(const json& j, const std::string& where, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) throw ConfigError(where + ": missing key '" + std::string(key) + "'");
    return *it;
}

inline double number(const json& j, const std::string& where, const char* key) {
    const json& v = require(j, where, key);
    if (!v.is_number()) throw ConfigError(where + ": '" + key + "' must be a number");
    return v.get<double>();
}

inline double number_or(const json& j, const std::string& where, const char* key, double dflt) {
    if (!j.contains(key)) return dflt;
    return number(j, where, key);
}

inline std::int64_t integer(const json& j, const std::string& where, const char* key) {
    const json& v = require(j, where, key);
    if (!v.is_number_integer()) throw ConfigError(where + ": '" + key + "' must be an integer");
    return v.get<std::int64_t>();
}

inline std::string text(const json& j, const std::string& where, const char* key) {
    const json& v = require(j, where, key);
    if (!v.is_string()) throw ConfigError(where + ": '" + key + "' must be a string");
    return v.get<std::string>();
}

inline void check_schema(const json& j, const std::string& where) {
    if (integer(j, where, "schema") != 1)
        throw ConfigError(where + ": unsupported schema version");
}

} // namespace cfg

} // namespace areal
