#pragma once

#include "mixgen/bounds.hpp"
#include "mixgen/dynamic.hpp"
#include "mixgen/hypothesis.hpp"
#include "mixgen/process.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>

namespace mixgen {

using Json = nlohmann::json;

/// Throws IoError when the file is missing or not valid JSON.
Json read_json_file(const std::filesystem::path& path);
/// Replaces the file with `text`; IoError when it cannot be written.
void write_text_file(const std::filesystem::path& path, const std::string& text);

Eigen::MatrixXd matrix_from_json(const Json& j, const std::string& field);
Eigen::VectorXd vector_from_json(const Json& j, const std::string& field);

/// {"losses": [[..]]}, one row per hypothesis.
HypothesisSpace losses_from_json(const Json& j);

/// A process and, for the contaminated kind, the composite loss table it
/// induces on the product chain.
struct LoadedProcess {
    ProcessModel model;
    std::optional<HypothesisSpace> space;
};

/// {"kind": "plain-markov", "transition": [[..]], "states": [..]} or
/// {"kind": "contaminated", "clean_probabilities": [..],
///  "noise": {"transition": [[..]], "values": [..]}, "alpha": x,
///  "max_states": k}. The contaminated kind needs the clean loss table.
LoadedProcess process_from_json(const Json& j, const HypothesisSpace* clean_losses = nullptr);

/// {"log_weights": [..]}; null entries stand for -inf.
PosteriorDist posterior_from_json(const Json& j);
Json posterior_to_json(const PosteriorDist& p);

/// {"kind": "memory-table", "m": k, "table": [[..]]} or
/// {"kind": "discounted", "gamma": g, "scale": s, "weights": [[..]], "bias": [..]}.
/// Discounted weights default to the static loss table when omitted.
DynamicLoss dynamic_loss_from_json(const Json& j, const HypothesisSpace* static_losses = nullptr);

Json bound_report_to_json(const BoundReport& r);

/// Finite doubles as numbers, non-finite as the strings "nan", "inf", "-inf".
Json number_to_json(double v);

}  // namespace mixgen
