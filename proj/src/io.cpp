#include "mixgen/io.hpp"

#include "mixgen/error.hpp"

#include <cmath>
#include <fstream>
#include <limits>

namespace mixgen {

namespace {

const Json& require(const Json& j, const std::string& field) {
    if (!j.is_object() || !j.contains(field)) throw ValidationError("missing field '" + field + "'");
    return j.at(field);
}

double number_at(const Json& v, const std::string& field) {
    if (!v.is_number()) throw ValidationError("field '" + field + "' must be a number");
    return v.get<double>();
}

}  // namespace

Json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw IoError("invalid JSON in " + path.string() + ": " + e.what());
    }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    out.flush();
    if (!out) throw IoError("write failed for " + path.string());
}

Eigen::MatrixXd matrix_from_json(const Json& j, const std::string& field) {
    if (!j.is_array() || j.empty()) throw ValidationError("field '" + field + "' must be a non-empty matrix");
    const std::size_t rows = j.size();
    if (!j[0].is_array() || j[0].empty()) throw ValidationError("field '" + field + "' must be a non-empty matrix");
    const std::size_t cols = j[0].size();
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows; ++i) {
        if (!j[i].is_array() || j[i].size() != cols) throw ValidationError("field '" + field + "' has ragged rows");
        for (std::size_t k = 0; k < cols; ++k) m(Eigen::Index(i), Eigen::Index(k)) = number_at(j[i][k], field);
    }
    return m;
}

Eigen::VectorXd vector_from_json(const Json& j, const std::string& field) {
    if (!j.is_array() || j.empty()) throw ValidationError("field '" + field + "' must be a non-empty array");
    Eigen::VectorXd v(Eigen::Index(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(Eigen::Index(i)) = number_at(j[i], field);
    return v;
}

HypothesisSpace losses_from_json(const Json& j) {
    return HypothesisSpace(matrix_from_json(require(j, "losses"), "losses"));
}

LoadedProcess process_from_json(const Json& j, const HypothesisSpace* clean_losses) {
    const std::string kind = j.value("kind", std::string("plain-markov"));
    if (kind == "plain-markov") {
        std::vector<std::string> states;
        if (j.contains("states")) {
            if (!j.at("states").is_array()) throw ValidationError("field 'states' must be an array");
            for (const Json& s : j.at("states")) states.push_back(s.is_string() ? s.get<std::string>() : s.dump());
        }
        return {build_markov(matrix_from_json(require(j, "transition"), "transition"), std::move(states)), {}};
    }
    if (kind == "contaminated") {
        if (clean_losses == nullptr) throw ValidationError("contaminated process needs a loss table");
        const Json& noise = require(j, "noise");
        ContaminationSpec spec{
            vector_from_json(require(j, "clean_probabilities"), "clean_probabilities"),
            build_markov(matrix_from_json(require(noise, "transition"), "noise.transition")),
            vector_from_json(require(noise, "values"), "noise.values"),
            number_at(require(j, "alpha"), "alpha"),
        };
        const std::size_t cap = j.value("max_states", kDefaultMaxProductStates);
        ContaminatedModel cm = build_contaminated(spec, clean_losses->table(), cap);
        return {std::move(cm.model), std::move(cm.space)};
    }
    throw ValidationError("unknown process kind '" + kind + "'");
}

PosteriorDist posterior_from_json(const Json& j) {
    const Json& lw = require(j, "log_weights");
    if (!lw.is_array() || lw.empty()) throw ValidationError("field 'log_weights' must be a non-empty array");
    Eigen::VectorXd v(Eigen::Index(lw.size()));
    for (std::size_t i = 0; i < lw.size(); ++i) {
        v(Eigen::Index(i)) = lw[i].is_null() ? -std::numeric_limits<double>::infinity() : number_at(lw[i], "log_weights");
    }
    return PosteriorDist::from_log_weights(std::move(v));
}

Json posterior_to_json(const PosteriorDist& p) {
    Json lw = Json::array();
    for (double v : p.log_weights()) lw.push_back(std::isfinite(v) ? Json(v) : Json(nullptr));
    return Json{{"log_weights", lw}};
}

DynamicLoss dynamic_loss_from_json(const Json& j, const HypothesisSpace* static_losses) {
    const std::string kind = require(j, "kind").get<std::string>();
    if (kind == "memory-table") {
        const Json& m = require(j, "m");
        if (!m.is_number_integer() || m.get<long long>() < 1) throw ValidationError("field 'm' must be an integer >= 1");
        const Eigen::MatrixXd table = matrix_from_json(require(j, "table"), "table");
        // Alphabet is the integer A with A^m = number of columns.
        const auto memory = m.get<std::size_t>();
        const double root = std::pow(double(table.cols()), 1.0 / double(memory));
        const std::size_t alphabet = static_cast<std::size_t>(std::llround(root));
        std::size_t check = 1;
        for (std::size_t i = 0; i < memory && check <= std::size_t(table.cols()); ++i) check *= alphabet;
        if (alphabet < 1 || check != std::size_t(table.cols())) {
            throw ValidationError("field 'table' needs A^m columns for some alphabet size A");
        }
        return DynamicLoss::memory_table(memory, alphabet, table);
    }
    if (kind == "discounted") {
        const double gamma = number_at(require(j, "gamma"), "gamma");
        const double scale = number_at(require(j, "scale"), "scale");
        Eigen::MatrixXd weights;
        if (j.contains("weights")) {
            weights = matrix_from_json(j.at("weights"), "weights");
        } else if (static_losses != nullptr) {
            weights = static_losses->table();
        } else {
            throw ValidationError("discounted loss needs 'weights' or a static loss table");
        }
        Eigen::VectorXd bias;
        if (j.contains("bias")) bias = vector_from_json(j.at("bias"), "bias");
        return DynamicLoss::discounted(gamma, scale, std::move(weights), std::move(bias));
    }
    throw ValidationError("unknown dynamic loss kind '" + kind + "'");
}

Json number_to_json(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

Json bound_report_to_json(const BoundReport& r) {
    return Json{
        {"n", r.n},
        {"d", r.d},
        {"delta", number_to_json(r.delta)},
        {"regret_term", number_to_json(r.regret_term)},
        {"phi_term", number_to_json(r.phi_term)},
        {"deviation_term", number_to_json(r.deviation_term)},
        {"total", number_to_json(r.total)},
        {"provenance", r.provenance},
    };
}

}  // namespace mixgen
