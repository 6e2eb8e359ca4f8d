#include "mixgen/online.hpp"

#include "mixgen/error.hpp"
#include "mixgen/learner.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

namespace mixgen {

Algorithm parse_algorithm(std::string_view name) {
    if (name == "ewa") return Algorithm::ewa;
    if (name == "ftrl-entropy") return Algorithm::ftrl_entropy;
    if (name == "ftrl-sqnorm") return Algorithm::ftrl_sqnorm;
    throw ValidationError("unknown online algorithm '" + std::string(name) + "'");
}

std::string_view to_string(Algorithm algorithm) {
    switch (algorithm) {
        case Algorithm::ewa: return "ewa";
        case Algorithm::ftrl_entropy: return "ftrl-entropy";
        case Algorithm::ftrl_sqnorm: return "ftrl-sqnorm";
    }
    return "?";
}

double Regularizer::value(const PosteriorDist& p, const PosteriorDist& prior) const {
    if (kind == RegularizerKind::negative_entropy) return kl_divergence(p, prior);
    return 0.5 * (p.probabilities() - prior.probabilities()).squaredNorm();
}

double Regularizer::dual_norm(const Eigen::VectorXd& cost) const {
    return norms == NormPair::l1_linf ? cost.cwiseAbs().maxCoeff() : cost.norm();
}

Regularizer regularizer_for(Algorithm algorithm) {
    return algorithm == Algorithm::ftrl_sqnorm ? Regularizer::half_squared_norm() : Regularizer::negative_entropy();
}

void OnlineLearnerConfig::validate() const {
    if (!(eta > 0.0) || !std::isfinite(eta)) throw ValidationError("learning rate eta must be > 0");
    if (!prior.is_valid()) throw ValidationError("prior is not a simplex point");
    if (delay < 1) throw ValidationError("delay must be >= 1");
}

PosteriorDist ewa_step(const PosteriorDist& current, const Eigen::VectorXd& cost, double eta) {
    if (!(eta > 0.0)) throw DomainError("learning rate eta must be > 0");
    if (cost.size() != Eigen::Index(current.size())) throw ValidationError("cost size mismatch");
    return PosteriorDist::from_log_weights(current.log_weights() - eta * cost);
}

PosteriorDist project_simplex(const Eigen::VectorXd& v) {
    const Eigen::Index w = v.size();
    if (w == 0) throw ValidationError("projection of an empty vector");
    for (double x : v) {
        if (!std::isfinite(x)) throw ValidationError("projection input must be finite");
    }
    std::vector<double> sorted(v.data(), v.data() + w);
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double cumulative = 0.0;
    double threshold = 0.0;
    for (Eigen::Index j = 0; j < w; ++j) {
        cumulative += sorted[std::size_t(j)];
        const double candidate = (cumulative - 1.0) / double(j + 1);
        if (sorted[std::size_t(j)] - candidate > 0.0) threshold = candidate;
    }
    Eigen::VectorXd p = (v.array() - threshold).cwiseMax(0.0).matrix();
    p /= p.sum();
    return PosteriorDist::from_probabilities(p);
}

PosteriorDist ftrl_step(const PosteriorDist& prior, const Eigen::VectorXd& cumulative_cost, double eta,
                        const Regularizer& reg) {
    if (!(eta > 0.0)) throw DomainError("learning rate eta must be > 0");
    if (cumulative_cost.size() != Eigen::Index(prior.size())) throw ValidationError("cost size mismatch");
    if (reg.kind == RegularizerKind::negative_entropy) {
        return PosteriorDist::from_log_weights(prior.log_weights() - eta * cumulative_cost);
    }
    return project_simplex(prior.probabilities() - eta * cumulative_cost);
}

EwaLearner::EwaLearner(PosteriorDist prior, double eta) : prior_(prior), current_(std::move(prior)), eta_(eta) {
    if (!(eta_ > 0.0)) throw ValidationError("learning rate eta must be > 0");
}

FtrlLearner::FtrlLearner(PosteriorDist prior, double eta, Regularizer reg)
    : prior_(std::move(prior)), eta_(eta), reg_(reg), cumulative_(Eigen::VectorXd::Zero(Eigen::Index(prior_.size()))) {
    if (!(eta_ > 0.0)) throw ValidationError("learning rate eta must be > 0");
}

void FtrlLearner::reset() { cumulative_.setZero(); }

PosteriorDist FtrlLearner::act(std::size_t) { return ftrl_step(prior_, cumulative_, eta_, reg_); }

void FtrlLearner::feedback(std::size_t, const Eigen::VectorXd& cost) {
    if (cost.size() != cumulative_.size()) throw ValidationError("cost size mismatch");
    cumulative_ += cost;
}

DelayedWrapper::DelayedWrapper(const LearnerFactory& factory, std::size_t d) {
    if (d < 1) throw ValidationError("delay must be >= 1");
    instances_.reserve(d);
    for (std::size_t i = 0; i < d; ++i) instances_.push_back(factory());
}

void DelayedWrapper::reset() {
    for (auto& inst : instances_) inst->reset();
}

PosteriorDist DelayedWrapper::act(std::size_t round) {
    const std::size_t d = instances_.size();
    return instances_[(round - 1) % d]->act((round - 1) / d + 1);
}

void DelayedWrapper::feedback(std::size_t round, const Eigen::VectorXd& cost) {
    const std::size_t d = instances_.size();
    instances_[(round - 1) % d]->feedback((round - 1) / d + 1, cost);
}

std::unique_ptr<OnlineLearner> make_base_learner(const OnlineLearnerConfig& config) {
    config.validate();
    if (config.algorithm == Algorithm::ewa) return std::make_unique<EwaLearner>(config.prior, config.eta);
    return std::make_unique<FtrlLearner>(config.prior, config.eta, regularizer_for(config.algorithm));
}

std::unique_ptr<OnlineLearner> delayed_wrap(const OnlineLearnerConfig& base_config, std::size_t d) {
    if (d == 1) return make_base_learner(base_config);
    return std::make_unique<DelayedWrapper>([&] { return make_base_learner(base_config); }, d);
}

std::unique_ptr<OnlineLearner> make_learner(const OnlineLearnerConfig& config) {
    return delayed_wrap(config, config.delay);
}

double ewa_regret_bound(double kl, double eta, double sup_norm_sq_sum) {
    if (!(kl >= 0.0)) throw DomainError("KL must be >= 0");
    if (!(eta > 0.0)) throw DomainError("learning rate eta must be > 0");
    return kl / eta + 0.5 * eta * sup_norm_sq_sum;
}

double ftrl_regret_bound(double h_gap, double eta, double alpha, double dual_norm_sq_sum) {
    if (!(eta > 0.0)) throw DomainError("learning rate eta must be > 0");
    if (!(alpha > 0.0)) throw DomainError("strong convexity modulus must be > 0");
    return h_gap / eta + eta / (2.0 * alpha) * dual_norm_sq_sum;
}

double delayed_regret_bound(const std::function<double(double)>& base_bound, std::size_t d, std::size_t n) {
    if (d < 1 || n < 1) throw DomainError("delayed regret bound needs d >= 1 and n >= 1");
    const std::size_t horizon = (n + d - 1) / d;
    return static_cast<double>(d) * base_bound(static_cast<double>(horizon));
}

double delayed_composite_regret_bound(double gap, double eta, double alpha, std::size_t d, double dual_norm_sq_sum) {
    if (d < 1) throw DomainError("delay must be >= 1");
    return ftrl_regret_bound(static_cast<double>(d) * gap, eta, alpha, dual_norm_sq_sum);
}

}  // namespace mixgen
