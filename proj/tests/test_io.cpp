#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "areal/experiment.hpp"
#include "areal/field.hpp"
#include "areal/grid.hpp"
#include "areal/intersection.hpp"
#include "areal/interpolate.hpp"
#include "areal/io.hpp"
#include "areal/svg.hpp"

using namespace areal;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("areal_io_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int n = 0;
        return n;
    }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("zone label round trip") {
    TempDir tmp;
    GridRegion region(2, 3);
    ZoneSystem zs = build_zone_system(region, {"a", "a", "b", "b", "c", "c"}, ZoneKind::source);
    write_zone_labels(tmp.path / "zones.csv", zs);
    ZoneSystem back = read_zone_labels(tmp.path / "zones.csv", region, ZoneKind::source);
    REQUIRE(back.size() == 3);
    for (std::size_t i = 0; i < zs.size(); ++i) {
        REQUIRE(back.zone(i).id == zs.zone(i).id);
        REQUIRE(back.zone(i).cells == zs.zone(i).cells);
    }
}

TEST_CASE("zone label file validation") {
    TempDir tmp;
    GridRegion region(1, 2);
    SECTION("missing cell") {
        std::ofstream(tmp.path / "bad.csv") << "row,col,label\n0,0,a\n";
        REQUIRE_THROWS_AS(read_zone_labels(tmp.path / "bad.csv", region, ZoneKind::source),
                          IoError);
    }
    SECTION("duplicate cell") {
        std::ofstream(tmp.path / "bad.csv") << "row,col,label\n0,0,a\n0,0,a\n0,1,a\n";
        REQUIRE_THROWS_AS(read_zone_labels(tmp.path / "bad.csv", region, ZoneKind::source),
                          IoError);
    }
    SECTION("wrong header") {
        std::ofstream(tmp.path / "bad.csv") << "r,c,l\n0,0,a\n0,1,a\n";
        REQUIRE_THROWS_AS(read_zone_labels(tmp.path / "bad.csv", region, ZoneKind::source),
                          IoError);
    }
    SECTION("out-of-range cell") {
        std::ofstream(tmp.path / "bad.csv") << "row,col,label\n0,0,a\n0,2,a\n";
        REQUIRE_THROWS_AS(read_zone_labels(tmp.path / "bad.csv", region, ZoneKind::source),
                          IoError);
    }
    SECTION("missing file") {
        REQUIRE_THROWS_AS(read_zone_labels(tmp.path / "nope.csv", region, ZoneKind::source),
                          IoError);
    }
}

TEST_CASE("count and intensity field round trips") {
    TempDir tmp;
    GridRegion region(2, 2);
    CountField counts(region, {0, 3, 9, 2});
    write_count_field(tmp.path / "counts.csv", counts);
    CountField back = read_count_field(tmp.path / "counts.csv", region);
    REQUIRE(back.counts == counts.counts);

    IntensityField intensity(region, {0.25, 3.5, 0.0, 80.125});
    write_intensity_field(tmp.path / "intensity.csv", intensity);
    IntensityField iback = read_intensity_field(tmp.path / "intensity.csv", region);
    REQUIRE(iback.values == intensity.values);
}

TEST_CASE("prediction and error report files") {
    TempDir tmp;
    GridRegion region(1, 2);
    ZoneSystem sources = build_zone_system(region, {"s", "s"}, ZoneKind::source);
    ZoneSystem targets = build_zone_system(region, {"a", "b"}, ZoneKind::target);
    IntersectionTable table = intersect(sources, targets);
    std::vector<std::int64_t> y{10};
    PredictionSet pred = predict_daw(y, table);
    write_predictions(tmp.path / "pred.csv", pred, table);
    const std::string body = slurp(tmp.path / "pred.csv");
    REQUIRE(body == "method,source_id,target_id,value\nDAW,s,a,5\nDAW,s,b,5\n");

    McErrorEstimate est;
    est.scope = Scope::region;
    est.scope_id = "region";
    est.method = Method::DAX;
    est.replicates_used = 5;
    est.bias = -0.5;
    est.variance = 2.0;
    est.mse = 2.25;
    est.relative = 0.1;
    est.std_error = 0.02;
    write_error_report(tmp.path / "report.csv", {est});
    const std::string report = slurp(tmp.path / "report.csv");
    REQUIRE(report ==
            "scope,scope_id,method,bias,variance,mse,relative,std_error,replicates\n"
            "region,region,DAX,-0.5,2,2.25,0.1,0.02,5\n");
}

TEST_CASE("fit JSON round trip carries the five contract fields") {
    TempDir tmp;
    FitResult f;
    f.gamma_hat = {3.0, 1.0};
    f.loglik = -12.5;
    f.iterations = 4;
    f.converged = true;
    f.boundary = false;
    write_fit_json(tmp.path / "fit.json", f);
    const FitResult back = read_fit_json(tmp.path / "fit.json");
    REQUIRE(back.gamma_hat == f.gamma_hat);
    REQUIRE(back.loglik == f.loglik);
    REQUIRE(back.iterations == 4);
    REQUIRE(back.converged);
    REQUIRE_FALSE(back.boundary);

    nlohmann::json j;
    {
        std::ifstream in(tmp.path / "fit.json");
        in >> j;
    }
    REQUIRE(j.size() == 5);
    REQUIRE(j.contains("gamma_hat"));
    REQUIRE(j.contains("loglik"));
    REQUIRE(j.contains("iterations"));
    REQUIRE(j.contains("converged"));
    REQUIRE(j.contains("boundary"));
}

TEST_CASE("strict config parsing") {
    SECTION("unknown keys are rejected") {
        cfg::json j = {{"schema", 1},
                       {"experiment", "toy1"},
                       {"grid", {{"rows", 5}, {"cols", 5}}},
                       {"sources_csv", "s.csv"},
                       {"targets_csv", "t.csv"},
                       {"x_intensity", {{"type", "homogeneous"}, {"value", 1.0}}},
                       {"cases", cfg::json::array({{{"name", "Y1"}, {"alpha", 1.0},
                                                    {"betas", {1.0}}}})},
                       {"replicates", 2},
                       {"base_seed", 1},
                       {"unexpected", true}};
        REQUIRE_THROWS_AS(parse_toy1_config(j, "."), ConfigError);
    }
    SECTION("schema version is checked") {
        cfg::json j = {{"schema", 2}};
        REQUIRE_THROWS_AS(cfg::check_schema(j, "test"), ConfigError);
    }
    SECTION("intensity specs") {
        GridRegion region(2, 2);
        cfg::json homog = {{"type", "homogeneous"}, {"value", 2.0}};
        REQUIRE(parse_intensity(homog, "t", region, ".").values ==
                std::vector<double>(4, 2.0));
        cfg::json two = {{"type", "two_level"}, {"low", 1.0}, {"high", 9.0},
                         {"mask_stride", 2}, {"mask_offset", 0}};
        REQUIRE(parse_intensity(two, "t", region, ".").values ==
                std::vector<double>{9.0, 1.0, 9.0, 1.0});
        cfg::json bad = {{"type", "two_level"}, {"low", 1.0}, {"high", 9.0},
                         {"mask_stride", 2}, {"mask_offset", 5}};
        REQUIRE_THROWS_AS(parse_intensity(bad, "t", region, "."), ConfigError);
        cfg::json unknown = {{"type", "mystery"}};
        REQUIRE_THROWS_AS(parse_intensity(unknown, "t", region, "."), ConfigError);
        cfg::json extra = {{"type", "homogeneous"}, {"value", 2.0}, {"oops", 1}};
        REQUIRE_THROWS_AS(parse_intensity(extra, "t", region, "."), ConfigError);
    }
    SECTION("negative parameters are rejected") {
        cfg::json j = {{"alpha", -1.0}, {"betas", {1.0}}};
        REQUIRE_THROWS_AS(parse_params(j, "t"), ConfigError);
    }
}

TEST_CASE("svg heatmap writer emits one rect per cell") {
    TempDir tmp;
    GridRegion region(2, 3);
    write_svg_heatmap(tmp.path / "map.svg", region, {0, 1, 2, 3, 4, 5}, "demo");
    const std::string body = slurp(tmp.path / "map.svg");
    REQUIRE(body.find("<svg") != std::string::npos);
    std::size_t rects = 0, pos = 0;
    while ((pos = body.find("<rect", pos)) != std::string::npos) {
        ++rects;
        pos += 5;
    }
    REQUIRE(rects == 6);
}
