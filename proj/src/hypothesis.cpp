#include "mixgen/hypothesis.hpp"

#include "mixgen/error.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace mixgen {

HypothesisSpace::HypothesisSpace(Eigen::MatrixXd loss_table) : table_(std::move(loss_table)) {
    if (table_.rows() == 0 || table_.cols() == 0) {
        throw ValidationError("loss table must have at least one hypothesis and one symbol");
    }
    for (Eigen::Index w = 0; w < table_.rows(); ++w) {
        for (Eigen::Index z = 0; z < table_.cols(); ++z) {
            const double v = table_(w, z);
            if (!(v >= 0.0 && v <= 1.0)) {
                throw ValidationError("loss(" + std::to_string(w) + ", " + std::to_string(z) +
                                      ") = " + std::to_string(v) + " is outside [0, 1]");
            }
        }
    }
}

double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& v) {
    if (v.size() == 0) return -std::numeric_limits<double>::infinity();
    const double top = v.maxCoeff();
    if (std::isinf(top)) return top;
    return top + std::log((v.array() - top).exp().sum());
}

PosteriorDist PosteriorDist::uniform(std::size_t size) {
    if (size == 0) throw ValidationError("posterior over an empty hypothesis set");
    return PosteriorDist(Eigen::VectorXd::Constant(Eigen::Index(size), -std::log(double(size))));
}

PosteriorDist PosteriorDist::dirac(std::size_t size, std::size_t w) {
    if (w >= size) throw ValidationError("dirac index out of range");
    Eigen::VectorXd lw = Eigen::VectorXd::Constant(Eigen::Index(size), -std::numeric_limits<double>::infinity());
    lw(Eigen::Index(w)) = 0.0;
    return PosteriorDist(std::move(lw));
}

PosteriorDist PosteriorDist::from_log_weights(Eigen::VectorXd log_weights) {
    if (log_weights.size() == 0) throw ValidationError("posterior over an empty hypothesis set");
    for (double v : log_weights) {
        if (std::isnan(v) || v == std::numeric_limits<double>::infinity()) {
            throw ValidationError("log weights must be finite or -inf");
        }
    }
    // Shift by the maximum first so large offsets do not cost precision.
    const double top = log_weights.maxCoeff();
    if (std::isinf(top)) throw ValidationError("log weights are all -inf");
    log_weights.array() -= top;
    log_weights.array() -= std::log(log_weights.array().exp().sum());
    return PosteriorDist(std::move(log_weights));
}

PosteriorDist PosteriorDist::from_probabilities(const Eigen::VectorXd& probs) {
    if (probs.size() == 0) throw ValidationError("posterior over an empty hypothesis set");
    for (double p : probs) {
        if (!(p >= 0.0) || std::isinf(p)) throw ValidationError("probabilities must be finite and non-negative");
    }
    if (std::abs(probs.sum() - 1.0) > 1e-10) {
        throw ValidationError("probabilities must sum to 1 within 1e-10");
    }
    Eigen::VectorXd lw = probs.array().log().matrix();
    lw.array() -= log_sum_exp(lw);
    return PosteriorDist(std::move(lw));
}

PosteriorDist PosteriorDist::unchecked(Eigen::VectorXd log_weights) {
    return PosteriorDist(std::move(log_weights));
}

double PosteriorDist::probability(std::size_t w) const {
    return std::exp(log_weights_(Eigen::Index(w)));
}

bool PosteriorDist::is_valid(double tol) const {
    if (log_weights_.size() == 0) return false;
    double total = 0.0;
    for (double v : log_weights_) {
        if (std::isnan(v) || v == std::numeric_limits<double>::infinity()) return false;
        total += std::exp(v);
    }
    return std::abs(total - 1.0) <= tol;
}

}  // namespace mixgen
