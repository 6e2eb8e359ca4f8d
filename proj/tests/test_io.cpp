#include "mixgen/error.hpp"
#include "mixgen/io.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>

using namespace mixgen;

TEST_CASE("matrices and vectors") {
    const auto m = matrix_from_json(Json::parse("[[1, 2], [3, 4]]"), "x");
    CHECK(m(1, 0) == 3.0);
    CHECK_THROWS_AS(matrix_from_json(Json::parse("[[1, 2], [3]]"), "x"), ValidationError);
    CHECK_THROWS_AS(matrix_from_json(Json::parse("[]"), "x"), ValidationError);
    CHECK(vector_from_json(Json::parse("[0.5, 0.25]"), "v")(1) == 0.25);
    CHECK_THROWS_AS(vector_from_json(Json::parse("[\"a\"]"), "v"), ValidationError);
}

TEST_CASE("plain Markov process") {
    const auto p = process_from_json(Json::parse(R"({"kind": "plain-markov", "transition": [[0.9, 0.1], [0.3, 0.7]],
                                                     "states": ["x", "y"]})"));
    CHECK(p.model.states()[1] == "y");
    CHECK(std::abs(p.model.stationary()(0) - 0.75) < 1e-13);
    CHECK_FALSE(p.space.has_value());
    CHECK_THROWS_AS(process_from_json(Json::parse(R"({"kind": "semi-markov"})")), ValidationError);
}

TEST_CASE("contaminated process") {
    const HypothesisSpace clean(Eigen::MatrixXd::Constant(2, 2, 0.5));
    const auto j = Json::parse(R"({"kind": "contaminated", "clean_probabilities": [0.5, 0.5],
        "noise": {"transition": [[0.75, 0.25], [0.25, 0.75]], "values": [-1, 1]}, "alpha": 0.2})");
    const auto p = process_from_json(j, &clean);
    CHECK(p.model.size() == 4);
    REQUIRE(p.space.has_value());
    CHECK(p.space->alphabet_size() == 4);
    CHECK_THROWS(process_from_json(j));
}

TEST_CASE("posterior round trip") {
    const auto p = PosteriorDist::dirac(3, 1);
    const Json j = posterior_to_json(p);
    CHECK(j["log_weights"][0].is_null());
    const auto back = posterior_from_json(j);
    CHECK(back.probability(1) == 1.0);
    CHECK(back.probability(0) == 0.0);
}

TEST_CASE("dynamic loss specs") {
    const auto mem = dynamic_loss_from_json(Json::parse(R"({"kind": "memory-table", "m": 2, "table": [[0, 1, 1, 0]]})"));
    CHECK(mem.memory() == 2);
    CHECK(mem.alphabet_size() == 2);
    const HypothesisSpace base(Eigen::MatrixXd::Identity(2, 2));
    const auto disc = dynamic_loss_from_json(Json::parse(R"({"kind": "discounted", "gamma": 0.5, "scale": 0.3})"), &base);
    CHECK(disc.kind() == DynamicKind::discounted);
    CHECK(disc.table()(1, 1) == 1.0);
    CHECK_THROWS_AS(
        dynamic_loss_from_json(Json::parse(R"({"kind": "memory-table", "m": 2, "table": [[0, 1, 1]]})")),
        ValidationError);
}

TEST_CASE("numbers and files") {
    CHECK(number_to_json(std::numeric_limits<double>::quiet_NaN()) == "nan");
    CHECK(number_to_json(-std::numeric_limits<double>::infinity()) == "-inf");
    CHECK(number_to_json(0.5) == 0.5);
    CHECK_THROWS_AS(read_json_file("/nonexistent/config.json"), IoError);
    const auto dir = std::filesystem::temp_directory_path() / "mixgen_io_test";
    std::filesystem::create_directories(dir);
    write_text_file(dir / "x.json", "{\"a\": 1}");
    CHECK(read_json_file(dir / "x.json")["a"] == 1);
    write_text_file(dir / "bad.json", "{");
    CHECK_THROWS_AS(read_json_file(dir / "bad.json"), IoError);
    CHECK_THROWS_AS(write_text_file("/nonexistent/dir/x.txt", "x"), IoError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("bound report json") {
    BoundReport r{100, 3, 0.05, 0.1, 0.2, 0.3, 0.6, "delayed:realized-regret"};
    const Json j = bound_report_to_json(r);
    CHECK(j["d"] == 3);
    CHECK(j["total"] == 0.6);
    CHECK(j["provenance"] == "delayed:realized-regret");
}
