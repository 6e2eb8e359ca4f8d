#pragma once

#include "mixgen/hypothesis.hpp"
#include "mixgen/online_learner.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <memory>
#include <string_view>
#include <vector>

namespace mixgen {

enum class Algorithm { ewa, ftrl_entropy, ftrl_sqnorm };

Algorithm parse_algorithm(std::string_view name);
std::string_view to_string(Algorithm algorithm);

enum class RegularizerKind { negative_entropy, half_squared_norm };

/// Norm used for strong convexity and its dual, used to measure costs.
enum class NormPair { l1_linf, l2_l2 };

/// Strongly convex regularizer anchored at the prior P_1:
///   negative entropy       h(P) = KL(P || P_1),      1-strongly convex in L1
///   half squared norm      h(P) = 0.5 |P - P_1|_2^2, 1-strongly convex in L2
/// Both are minimized at P_1 with h(P_1) = 0.
struct Regularizer {
    RegularizerKind kind = RegularizerKind::negative_entropy;
    double alpha = 1.0;
    NormPair norms = NormPair::l1_linf;

    static Regularizer negative_entropy() { return {RegularizerKind::negative_entropy, 1.0, NormPair::l1_linf}; }
    static Regularizer half_squared_norm() { return {RegularizerKind::half_squared_norm, 1.0, NormPair::l2_l2}; }

    double value(const PosteriorDist& p, const PosteriorDist& prior) const;
    /// ||c||_* for the norm pair: L-infinity or L2.
    double dual_norm(const Eigen::VectorXd& cost) const;
};

Regularizer regularizer_for(Algorithm algorithm);

struct OnlineLearnerConfig {
    Algorithm algorithm = Algorithm::ewa;
    double eta = 1.0;
    PosteriorDist prior = PosteriorDist::uniform(1);
    std::size_t delay = 1;

    void validate() const;
};

/// One multiplicative-weights step: log P <- log P - eta c - logZ.
PosteriorDist ewa_step(const PosteriorDist& current, const Eigen::VectorXd& cost, double eta);

/// argmin over the simplex of <P, cumulative_cost> + h(P) / eta.
PosteriorDist ftrl_step(const PosteriorDist& prior, const Eigen::VectorXd& cumulative_cost, double eta,
                        const Regularizer& reg);

/// Euclidean projection onto the probability simplex (sort and threshold).
PosteriorDist project_simplex(const Eigen::VectorXd& v);

class EwaLearner final : public OnlineLearner {
public:
    EwaLearner(PosteriorDist prior, double eta);

    void reset() override { current_ = prior_; }
    PosteriorDist act(std::size_t) override { return current_; }
    void feedback(std::size_t, const Eigen::VectorXd& cost) override { current_ = ewa_step(current_, cost, eta_); }
    std::size_t size() const override { return prior_.size(); }

private:
    PosteriorDist prior_;
    PosteriorDist current_;
    double eta_;
};

class FtrlLearner final : public OnlineLearner {
public:
    FtrlLearner(PosteriorDist prior, double eta, Regularizer reg);

    void reset() override;
    PosteriorDist act(std::size_t) override;
    void feedback(std::size_t, const Eigen::VectorXd& cost) override;
    std::size_t size() const override { return prior_.size(); }

private:
    PosteriorDist prior_;
    double eta_;
    Regularizer reg_;
    Eigen::VectorXd cumulative_;
};

using LearnerFactory = std::function<std::unique_ptr<OnlineLearner>()>;

/// Round-robin reduction from delay d to d undelayed problems: instance i
/// (0-based) plays and learns on rounds i+1, i+1+d, i+1+2d, ... With delay d,
/// the cost of an instance's previous round always arrives before its next
/// turn, so every instance runs as an ordinary undelayed learner.
class DelayedWrapper final : public OnlineLearner {
public:
    DelayedWrapper(const LearnerFactory& factory, std::size_t d);

    void reset() override;
    PosteriorDist act(std::size_t round) override;
    void feedback(std::size_t round, const Eigen::VectorXd& cost) override;
    std::size_t size() const override { return instances_.front()->size(); }

    std::size_t delay() const noexcept { return instances_.size(); }
    /// 0-based instance that owns `round`.
    std::size_t instance_of(std::size_t round) const noexcept { return (round - 1) % instances_.size(); }
    const OnlineLearner& instance(std::size_t i) const { return *instances_.at(i); }

private:
    std::vector<std::unique_ptr<OnlineLearner>> instances_;
};

std::unique_ptr<OnlineLearner> make_base_learner(const OnlineLearnerConfig& config);
/// d = 1 returns the base learner itself.
std::unique_ptr<OnlineLearner> delayed_wrap(const OnlineLearnerConfig& base_config, std::size_t d);
/// delayed_wrap(config, config.delay).
std::unique_ptr<OnlineLearner> make_learner(const OnlineLearnerConfig& config);

/// KL(P* || P_1) / eta + (eta / 2) sum_t ||c_t||_inf^2.
double ewa_regret_bound(double kl, double eta, double sup_norm_sq_sum);

/// (h(P*) - h(P_1)) / eta + (eta / (2 alpha)) sum_t ||c_t||_*^2.
double ftrl_regret_bound(double h_gap, double eta, double alpha, double dual_norm_sq_sum);

/// d * R(ceil(n / d)).
double delayed_regret_bound(const std::function<double(double)>& base_bound, std::size_t d, std::size_t n);

/// Per-instance sum for the round-robin wrapper around EWA / FTRL:
/// d * gap / eta + (eta / (2 alpha)) sum_t ||c_t||_*^2. With ||c_t|| <= 1 and
/// alpha = 1 this is d KL / eta + eta n / 2.
double delayed_composite_regret_bound(double gap, double eta, double alpha, std::size_t d, double dual_norm_sq_sum);

}  // namespace mixgen
