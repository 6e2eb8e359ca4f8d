#include "mixgen/cli.hpp"
#include "mixgen/error.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace mixgen;
using namespace mixgen::cli;

namespace {

Json base_config() {
    return Json::parse(R"({
        "process": {"kind": "plain-markov", "transition": [[0.9, 0.1], [0.1, 0.9]]},
        "loss": {"losses": [[1, 0], [0, 1]]},
        "learner": {"kind": "gibbs", "beta": 0.1},
        "online": {"algorithm": "ewa", "eta": 0.1, "delay": 4},
        "experiment": {"n": 300, "replicates": 3, "delta": 0.1, "seed": 2}
    })");
}

std::string read(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string error_of(const Json& j) {
    try {
        parse_config(j);
    } catch (const ValidationError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("config errors name the field") {
    auto j = base_config();
    j["experiment"]["delta"] = 1.5;
    CHECK(error_of(j).find("experiment.delta") == 0);
    j = base_config();
    j["online"]["delay"] = "sometimes";
    CHECK(error_of(j).find("online.delay") == 0);
    j = base_config();
    j["online"]["eta"] = "fast";
    CHECK(error_of(j).find("online.eta") == 0);
    j = base_config();
    j.erase("process");
    CHECK(error_of(j).find("process") == 0);
    j = base_config();
    j["experiment"]["d_grid"] = Json::array({1, 400});
    CHECK(error_of(j).find("experiment.d_grid") == 0);
    j = base_config();
    j["learner"]["kind"] = "bayes";
    CHECK(error_of(j).find("learner.kind") == 0);
}

TEST_CASE("delay resolution") {
    auto j = base_config();
    j["online"]["delay"] = "auto-geometric";
    auto c = parse_config(j);
    const auto s = build_setup(c);
    // phi_d = 0.4 * 0.8^d, so tau = 1 / ln(1.25).
    CHECK(resolve_delay(c, s) == std::size_t(std::ceil(std::log(300.0) / std::log(1.25))));
    j["online"]["delay"] = "auto-algebraic";
    j["online"]["mixing"] = Json::parse(R"({"kind": "algebraic", "C": 1, "r": 1})");
    c = parse_config(j);
    CHECK(resolve_delay(c, build_setup(c)) == 7);
}

TEST_CASE("table rendering") {
    Table t({"a", "b"});
    t.add_row({std::uint64_t(1), 0.5});
    t.add_row({std::string("x"), std::int64_t(-2)});
    CHECK(t.to_csv() == "a,b\n1,0.5\nx,-2\n");
    const Json j = Json::parse(t.to_json());
    CHECK(j[0]["b"] == 0.5);
    CHECK(j[1]["a"] == "x");
    CHECK_THROWS(t.add_row({0.1}));
}

TEST_CASE("svg plot") {
    const std::string svg = line_plot_svg("t", "x", "y", {1, 2, 3}, {{"a", {1, 2, 3}}, {"b", {3, 2, 1}}});
    CHECK(svg.find("<svg") != std::string::npos);
    std::size_t polylines = 0;
    for (auto pos = svg.find("<polyline"); pos != std::string::npos; pos = svg.find("<polyline", pos + 1)) ++polylines;
    CHECK(polylines == 2);
    CHECK(svg.find("href") == std::string::npos);
}

TEST_CASE("exit codes") {
    CHECK(exit_code_for(ValidationError("x")) == 2);
    CHECK(exit_code_for(ConfigError("x")) == 2);
    CHECK(exit_code_for(ConsistencyError("x")) == 3);
}

TEST_CASE("constant losses simulate to zero generalization error") {
    auto j = base_config();
    j["loss"]["losses"] = Json::parse("[[0.3, 0.3], [0.7, 0.7]]");
    const auto dir = std::filesystem::temp_directory_path() / "mixgen_cli_const";
    std::filesystem::remove_all(dir);
    j["output"] = dir.string();
    j["experiment"]["replicates"] = 1;
    const auto paths = cmd_simulate(parse_config(j), OutputFormat::json);
    REQUIRE_FALSE(paths.empty());
    const Json summary = Json::parse(read(dir / "summary.json"));
    CHECK(std::abs(summary[0]["gen"].get<double>()) < 1e-15);
    const Json bounds = Json::parse(read(dir / "bounds.json"));
    for (const auto& b : bounds) {
        if (b["total"].is_number()) CHECK(b["total"].get<double>() >= 0.0);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("coverage with one replicate flags the standard error") {
    auto j = base_config();
    j["experiment"]["replicates"] = 1;
    auto c = parse_config(j);
    const auto r = coverage_experiment(c, build_setup(c));
    CHECK((r.violation_rate == 0.0 || r.violation_rate == 1.0));
    CHECK(r.standard_error == 0.0);
    CHECK_FALSE(r.standard_error_defined);
}

TEST_CASE("mixing command skips the fit for an i.i.d. chain") {
    auto j = base_config();
    j["process"]["transition"] = Json::parse("[[0.4, 0.6], [0.4, 0.6]]");
    const auto dir = std::filesystem::temp_directory_path() / "mixgen_cli_iid";
    std::filesystem::remove_all(dir);
    j["output"] = dir.string();
    cmd_mixing(parse_config(j), OutputFormat::json);
    const Json phi = Json::parse(read(dir / "phi.json"));
    for (const auto& row : phi) CHECK(row["phi"] == 0.0);
    const Json fits = Json::parse(read(dir / "fits.json"));
    for (const auto& row : fits) CHECK(row["skipped"] == 1);
    std::filesystem::remove_all(dir);
}

TEST_CASE("run returns 2 on a bad config") {
    const auto dir = std::filesystem::temp_directory_path() / "mixgen_cli_bad";
    std::filesystem::create_directories(dir);
    auto j = base_config();
    j["experiment"]["n"] = 0;
    write_text_file(dir / "bad.json", j.dump());
    const std::string cfg = (dir / "bad.json").string();
    const char* argv[] = {"mixgen", "simulate", "--config", cfg.c_str()};
    CHECK(run(4, const_cast<char**>(argv)) == 2);
    const char* missing[] = {"mixgen", "simulate", "--config", "/nonexistent.json"};
    CHECK(run(4, const_cast<char**>(missing)) == 3);
    std::filesystem::remove_all(dir);
}
