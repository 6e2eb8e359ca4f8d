#pragma once

#include "mixgen/hypothesis.hpp"
#include "mixgen/process.hpp"

#include <Eigen/Dense>

#include <cstddef>

namespace mixgen {

/// L(w) = E_{Z ~ pi}[loss(w, Z)].
double test_loss(const HypothesisSpace& space, const ProcessModel& model, std::size_t w);
Eigen::VectorXd test_losses(const HypothesisSpace& space, const ProcessModel& model);

/// Training loss (1/n) sum_t loss(w, Z_t) along the path.
double empirical_loss(const HypothesisSpace& space, const SamplePath& path, std::size_t w);
Eigen::VectorXd empirical_losses(const HypothesisSpace& space, const SamplePath& path);

/// Gibbs tilt of a prior: log P(w) = log prior(w) - beta * n * lhat(w) - logZ.
PosteriorDist gibbs_from_losses(const PosteriorDist& prior, const Eigen::VectorXd& empirical, std::size_t n,
                                double beta);
PosteriorDist gibbs_posterior(const HypothesisSpace& space, const SamplePath& path, double beta,
                              const PosteriorDist& prior);

/// Dirac on the empirical minimizer, lowest index on ties.
PosteriorDist erm_from_losses(const Eigen::VectorXd& empirical);
PosteriorDist erm(const HypothesisSpace& space, const SamplePath& path);

/// sum_w P(w) (L(w) - lhat(w)) with no sampling of W_n.
double exact_generalization_error(const PosteriorDist& posterior, const HypothesisSpace& space,
                                  const SamplePath& path, const ProcessModel& model);

/// KL(p || q) = sum_w p(w) (ln p(w) - ln q(w)) with 0 ln 0 = 0. Returns +inf
/// when p is not absolutely continuous with respect to q.
double kl_divergence(const PosteriorDist& p, const PosteriorDist& q);

}  // namespace mixgen
