#pragma once

#include <Eigen/Dense>

#include <cstddef>

namespace mixgen {

/// Finite hypothesis class with a loss table: entry (w, z) is the loss of
/// hypothesis w on data symbol z, always in [0, 1].
class HypothesisSpace {
public:
    explicit HypothesisSpace(Eigen::MatrixXd loss_table);

    std::size_t size() const noexcept { return static_cast<std::size_t>(table_.rows()); }
    std::size_t alphabet_size() const noexcept { return static_cast<std::size_t>(table_.cols()); }
    double loss(std::size_t w, std::size_t z) const { return table_(Eigen::Index(w), Eigen::Index(z)); }
    const Eigen::MatrixXd& table() const noexcept { return table_; }

private:
    Eigen::MatrixXd table_;
};

/// Numerically stable log(sum(exp(v))); returns -inf for an all -inf input.
double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& v);

/// A point of the probability simplex over hypotheses, stored as normalized
/// natural-log weights. Zero-probability hypotheses carry -inf.
class PosteriorDist {
public:
    static PosteriorDist uniform(std::size_t size);
    static PosteriorDist dirac(std::size_t size, std::size_t w);
    /// Normalizes arbitrary finite-or-(-inf) log weights.
    static PosteriorDist from_log_weights(Eigen::VectorXd log_weights);
    /// Requires entries >= 0 summing to 1 within 1e-10.
    static PosteriorDist from_probabilities(const Eigen::VectorXd& probs);
    /// Wraps log weights as given, without normalizing or validating. Use
    /// is_valid() before trusting the result.
    static PosteriorDist unchecked(Eigen::VectorXd log_weights);

    std::size_t size() const noexcept { return static_cast<std::size_t>(log_weights_.size()); }
    const Eigen::VectorXd& log_weights() const noexcept { return log_weights_; }
    Eigen::VectorXd probabilities() const { return log_weights_.array().exp().matrix(); }
    double probability(std::size_t w) const;

    /// No NaN or +inf weights and probabilities summing to one within tol.
    bool is_valid(double tol = 1e-10) const;

private:
    explicit PosteriorDist(Eigen::VectorXd log_weights) : log_weights_(std::move(log_weights)) {}

    Eigen::VectorXd log_weights_;
};

}  // namespace mixgen
