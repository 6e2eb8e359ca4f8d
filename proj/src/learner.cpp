#include "mixgen/learner.hpp"

#include "mixgen/error.hpp"

#include <cmath>
#include <limits>

namespace mixgen {

namespace {

void check_compatible(const HypothesisSpace& space, const ProcessModel& model) {
    if (space.alphabet_size() != model.size()) {
        throw ValidationError("loss table columns do not match the model's state count");
    }
}

Eigen::VectorXd symbol_counts(std::size_t alphabet, const SamplePath& path) {
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(Eigen::Index(alphabet));
    for (std::size_t z : path.symbols) {
        if (z >= alphabet) throw ValidationError("path symbol outside the loss table's alphabet");
        counts(Eigen::Index(z)) += 1.0;
    }
    return counts;
}

}  // namespace

double test_loss(const HypothesisSpace& space, const ProcessModel& model, std::size_t w) {
    check_compatible(space, model);
    if (w >= space.size()) throw ValidationError("hypothesis index out of range");
    return space.table().row(Eigen::Index(w)).dot(model.stationary());
}

Eigen::VectorXd test_losses(const HypothesisSpace& space, const ProcessModel& model) {
    check_compatible(space, model);
    return space.table() * model.stationary();
}

double empirical_loss(const HypothesisSpace& space, const SamplePath& path, std::size_t w) {
    if (path.symbols.empty()) throw ValidationError("empirical loss of an empty path");
    if (w >= space.size()) throw ValidationError("hypothesis index out of range");
    return empirical_losses(space, path)(Eigen::Index(w));
}

Eigen::VectorXd empirical_losses(const HypothesisSpace& space, const SamplePath& path) {
    if (path.symbols.empty()) throw ValidationError("empirical loss of an empty path");
    const Eigen::VectorXd counts = symbol_counts(space.alphabet_size(), path);
    return space.table() * counts / static_cast<double>(path.size());
}

PosteriorDist gibbs_from_losses(const PosteriorDist& prior, const Eigen::VectorXd& empirical, std::size_t n,
                                double beta) {
    if (!(beta >= 0.0)) throw DomainError("inverse temperature must be >= 0");
    if (empirical.size() != Eigen::Index(prior.size())) throw ValidationError("prior size mismatch");
    if (beta == 0.0) return prior;
    // Subtracting the minimum leaves the normalized result unchanged and keeps
    // the exponent range small.
    const Eigen::VectorXd shifted = (empirical.array() - empirical.minCoeff()).matrix();
    Eigen::VectorXd lw = prior.log_weights() - beta * static_cast<double>(n) * shifted;
    return PosteriorDist::from_log_weights(std::move(lw));
}

PosteriorDist gibbs_posterior(const HypothesisSpace& space, const SamplePath& path, double beta,
                              const PosteriorDist& prior) {
    return gibbs_from_losses(prior, empirical_losses(space, path), path.size(), beta);
}

PosteriorDist erm_from_losses(const Eigen::VectorXd& empirical) {
    Eigen::Index best = 0;
    for (Eigen::Index w = 1; w < empirical.size(); ++w) {
        if (empirical(w) < empirical(best)) best = w;
    }
    return PosteriorDist::dirac(std::size_t(empirical.size()), std::size_t(best));
}

PosteriorDist erm(const HypothesisSpace& space, const SamplePath& path) {
    return erm_from_losses(empirical_losses(space, path));
}

double exact_generalization_error(const PosteriorDist& posterior, const HypothesisSpace& space,
                                  const SamplePath& path, const ProcessModel& model) {
    if (posterior.size() != space.size()) throw ValidationError("posterior size mismatch");
    const Eigen::VectorXd gap = test_losses(space, model) - empirical_losses(space, path);
    return posterior.probabilities().dot(gap);
}

double kl_divergence(const PosteriorDist& p, const PosteriorDist& q) {
    if (p.size() != q.size()) throw ValidationError("KL between distributions of different sizes");
    const auto& lp = p.log_weights();
    const auto& lq = q.log_weights();
    double total = 0.0;
    for (Eigen::Index w = 0; w < lp.size(); ++w) {
        if (std::isinf(lp(w))) continue;
        if (std::isinf(lq(w))) return std::numeric_limits<double>::infinity();
        total += std::exp(lp(w)) * (lp(w) - lq(w));
    }
    // Rounding can push an exact zero slightly negative.
    return total > 0.0 ? total : 0.0;
}

}  // namespace mixgen
