#include "helpers.hpp"

#include "mixgen/error.hpp"
#include "mixgen/learner.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace mixgen;
using testing::two_state;

TEST_CASE("test loss") {
    Eigen::MatrixXd t(2, 2);
    t << 0.9, 0.1, 0.3, 0.7;
    const auto m = build_markov(t);
    Eigen::MatrixXd l(2, 2);
    l << 0.0, 1.0, 0.3, 0.3;
    const HypothesisSpace space(l);
    CHECK(std::abs(test_loss(space, m, 0) - 0.25) < 1e-13);
    CHECK(std::abs(test_loss(space, m, 1) - 0.3) < 1e-15);

    Eigen::MatrixXd u = Eigen::MatrixXd::Constant(4, 4, 0.25);
    const auto uni = build_markov(u);
    Eigen::MatrixXd ind = Eigen::MatrixXd::Zero(1, 4);
    ind(0, 2) = 1.0;
    CHECK(std::abs(test_loss(HypothesisSpace(ind), uni, 0) - 0.25) < 1e-15);
}

TEST_CASE("empirical loss") {
    Eigen::MatrixXd l(1, 2);
    l << 0.0, 1.0;
    const HypothesisSpace space(l);
    CHECK(empirical_loss(space, SamplePath{{0, 1}, 0}, 0) == 0.5);
    CHECK(empirical_loss(space, SamplePath{{1, 1, 1}, 0}, 0) == 1.0);

    const auto m = build_markov(two_state(0.2, 0.3));
    const auto path = sample_path(m, 100000, 9);
    CHECK(std::abs(empirical_loss(space, path, 0) - test_loss(space, m, 0)) < 0.01);
}

TEST_CASE("hypothesis space rejects losses outside [0, 1]") {
    Eigen::MatrixXd l(1, 2);
    l << 0.0, 1.5;
    CHECK_THROWS_AS(HypothesisSpace{l}, ValidationError);
}

TEST_CASE("gibbs posterior") {
    const auto prior = PosteriorDist::uniform(2);
    const Eigen::Vector2d lhat(0.0, 0.1);
    const auto g = gibbs_from_losses(prior, lhat, 10, 1.0);
    CHECK(std::abs(g.probability(0) - 0.7310585786300049) < 1e-15);
    CHECK(std::abs(g.probability(1) - 0.2689414213699951) < 1e-15);

    const auto flat = gibbs_from_losses(prior, lhat, 10, 0.0);
    CHECK(std::abs(flat.probability(0) - 0.5) < 1e-15);

    const Eigen::Vector3d losses(0.4, 0.1, 0.3);
    const auto sharp = gibbs_from_losses(PosteriorDist::uniform(3), losses, 100, 1e6);
    CHECK(std::abs(sharp.probability(1) - 1.0) < 1e-9);
    const auto limit = gibbs_from_losses(PosteriorDist::uniform(3), losses, 100, 1e8);
    const auto e = erm_from_losses(losses);
    CHECK((limit.probabilities() - e.probabilities()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(limit.is_valid());
}

TEST_CASE("erm tie-break") {
    CHECK(erm_from_losses(Eigen::Vector3d(0.5, 0.2, 0.7)).probability(1) == 1.0);
    CHECK(erm_from_losses(Eigen::Vector3d(0.3, 0.3, 0.3)).probability(0) == 1.0);
}

TEST_CASE("exact generalization error") {
    const auto m = build_markov(two_state(0.2, 0.3));
    const auto path = sample_path(m, 200, 1);
    const HypothesisSpace constant(Eigen::MatrixXd::Constant(3, 2, 0.4));
    CHECK(std::abs(exact_generalization_error(PosteriorDist::uniform(3), constant, path, m)) < 1e-15);

    CounterRng rng(4);
    const HypothesisSpace space(testing::random_losses(3, 2, rng));
    const auto dirac = PosteriorDist::dirac(3, 2);
    CHECK(std::abs(exact_generalization_error(dirac, space, path, m) -
                   (test_loss(space, m, 2) - empirical_loss(space, path, 2))) < 1e-15);

    // Sampling oracle: average of L(W) - Lhat(W) over draws of W.
    const auto post = PosteriorDist::from_probabilities(Eigen::Vector3d(0.2, 0.5, 0.3));
    const Eigen::VectorXd p = post.probabilities();
    const int draws = 1000000;
    double sum = 0.0, sum_sq = 0.0;
    CounterRng draw(17);
    for (int i = 0; i < draws; ++i) {
        const double u = draw.uniform();
        const std::size_t w = u < p(0) ? 0 : (u < p(0) + p(1) ? 1 : 2);
        const double v = test_loss(space, m, w) - empirical_loss(space, path, w);
        sum += v;
        sum_sq += v * v;
    }
    const double mean = sum / draws;
    const double se = std::sqrt((sum_sq / draws - mean * mean) / draws);
    CHECK(std::abs(exact_generalization_error(post, space, path, m) - mean) < 3.0 * se + 1e-15);
}

TEST_CASE("kl divergence") {
    const auto q = PosteriorDist::uniform(4);
    CHECK(kl_divergence(q, q) == 0.0);
    CHECK(std::abs(kl_divergence(PosteriorDist::dirac(4, 1), q) - std::log(4.0)) < 1e-15);
    const auto p = PosteriorDist::from_probabilities(Eigen::Vector2d(0.7310585786300049, 0.2689414213699951));
    CHECK(std::abs(kl_divergence(p, PosteriorDist::uniform(2)) - 0.11094407167172735) < 1e-12);
    CHECK(kl_divergence(q, PosteriorDist::dirac(4, 0)) == std::numeric_limits<double>::infinity());

    CounterRng rng(8);
    for (int k = 0; k < 100; ++k) {
        Eigen::VectorXd a(5), b(5);
        for (int i = 0; i < 5; ++i) a(i) = rng.uniform() + 1e-3, b(i) = rng.uniform() + 1e-3;
        CHECK(kl_divergence(PosteriorDist::from_probabilities(a / a.sum()),
                            PosteriorDist::from_probabilities(b / b.sum())) > 0.0);
    }
}

TEST_CASE("posterior constructors") {
    CHECK(PosteriorDist::uniform(3).is_valid());
    CHECK(std::isinf(PosteriorDist::dirac(3, 0).log_weights()(1)));
    CHECK_THROWS(PosteriorDist::from_probabilities(Eigen::Vector2d(0.6, 0.6)));
    const auto p = PosteriorDist::from_log_weights(Eigen::Vector2d(1000.0, 1000.0));
    CHECK(std::abs(p.probability(0) - 0.5) < 1e-15);
    CHECK_FALSE(PosteriorDist::unchecked(Eigen::Vector2d(0.0, 0.0)).is_valid());
}
