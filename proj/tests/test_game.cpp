#include "helpers.hpp"

#include "mixgen/error.hpp"
#include "mixgen/game.hpp"
#include "mixgen/learner.hpp"
#include "mixgen/online.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>

using namespace mixgen;
using testing::two_state;

namespace {

class FixedLearner final : public OnlineLearner {
public:
    explicit FixedLearner(PosteriorDist p) : p_(std::move(p)) {}
    void reset() override {}
    PosteriorDist act(std::size_t) override { return p_; }
    void feedback(std::size_t, const Eigen::VectorXd&) override {}
    std::size_t size() const override { return p_.size(); }

private:
    PosteriorDist p_;
};

class BrokenLearner final : public OnlineLearner {
public:
    void reset() override {}
    PosteriorDist act(std::size_t) override { return PosteriorDist::unchecked(Eigen::Vector2d(0.0, 0.0)); }
    void feedback(std::size_t, const Eigen::VectorXd&) override {}
    std::size_t size() const override { return 2; }
};

// Records which rounds were fed before each action.
class ProbeLearner final : public OnlineLearner {
public:
    std::vector<std::size_t> fed_before;
    void reset() override { fed_ = 0, fed_before.clear(); }
    PosteriorDist act(std::size_t) override {
        fed_before.push_back(fed_);
        return PosteriorDist::uniform(2);
    }
    void feedback(std::size_t round, const Eigen::VectorXd&) override {
        CHECK(round == fed_ + 1);
        ++fed_;
    }
    std::size_t size() const override { return 2; }

private:
    std::size_t fed_ = 0;
};

}  // namespace

TEST_CASE("zero costs give zero regret and martingale term") {
    const auto m = build_markov(two_state(0.2, 0.3));
    const HypothesisSpace space(Eigen::MatrixXd::Constant(3, 2, 0.6));
    const auto path = sample_path(m, 50, 3);
    EwaLearner learner(PosteriorDist::uniform(3), 0.5);
    const auto trace = run_game(m, space, path, learner, 2);
    CHECK(std::abs(martingale_term(trace)) < 1e-15);
    CHECK(std::abs(regret(trace, PosteriorDist::dirac(3, 1))) < 1e-15);
    const auto dec = decompose(trace, PosteriorDist::uniform(3), space, path, m);
    CHECK(std::abs(dec.gen) < 1e-15);
    CHECK(std::abs(dec.regret_over_n) < 1e-15);
    CHECK(std::abs(dec.martingale) < 1e-15);
}

TEST_CASE("feedback protocol respects the delay") {
    const auto m = build_markov(two_state(0.2, 0.3));
    const HypothesisSpace space(testing::indicator_losses());
    const auto path = sample_path(m, 30, 1);
    ProbeLearner probe;
    for (std::size_t d : {1u, 3u, 30u}) {
        run_game(m, space, path, probe, d);
        for (std::size_t t = 1; t <= 30; ++t) CHECK(probe.fed_before[t - 1] == (t > d ? t - d : 0));
    }
    CHECK_THROWS_AS(run_game(m, space, path, probe, 31), ConfigError);
    CHECK_THROWS_AS(run_game(m, space, path, probe, 0), ConfigError);
    BrokenLearner broken;
    CHECK_THROWS_AS(run_game(m, space, path, broken, 1), ProtocolError);
}

TEST_CASE("full delay starves feedback") {
    const auto m = build_markov(two_state(0.2, 0.3));
    const HypothesisSpace space(testing::indicator_losses());
    const auto path = sample_path(m, 40, 2);
    EwaLearner learner(PosteriorDist::uniform(2), 1.0);
    const auto trace = run_game(m, space, path, learner, 40);
    for (Eigen::Index t = 0; t < 40; ++t) CHECK((trace.actions.col(t).array() - 0.5).abs().maxCoeff() < 1e-15);
}

TEST_CASE("actions depend only on symbols up to t - d") {
    const auto m = build_markov(two_state(0.2, 0.3));
    CounterRng rng(6);
    const HypothesisSpace space(testing::random_losses(3, 2, rng));
    const auto path = sample_path(m, 60, 4);
    const std::size_t d = 5, t = 31;
    EwaLearner learner(PosteriorDist::uniform(3), 0.7);
    const auto base = run_game(m, space, path, learner, d);
    SamplePath perturbed = path;
    for (std::size_t s = t - d; s < perturbed.size(); ++s) perturbed.symbols[s] = 1 - perturbed.symbols[s];
    const auto other = run_game(m, space, perturbed, learner, d);
    for (std::size_t r = 1; r <= t; ++r) {
        CHECK((base.actions.col(Eigen::Index(r - 1)) - other.actions.col(Eigen::Index(r - 1))).cwiseAbs().maxCoeff() ==
              0.0);
    }
}

TEST_CASE("comparator as learner has zero regret") {
    const auto m = build_markov(two_state(0.2, 0.3));
    CounterRng rng(7);
    const HypothesisSpace space(testing::random_losses(3, 2, rng));
    const auto path = sample_path(m, 100, 5);
    const auto comp = gibbs_posterior(space, path, 0.5, PosteriorDist::uniform(3));
    FixedLearner learner(comp);
    const auto trace = run_game(m, space, path, learner, 3);
    const auto dec = decompose(trace, comp, space, path, m);
    CHECK(std::abs(dec.regret_over_n) < 1e-15);
    CHECK(std::abs(dec.gen - dec.martingale) < 1e-15);
}

TEST_CASE("decomposition identity on a random chain") {
    CounterRng rng(12);
    const auto m = build_markov(testing::random_stochastic(4, rng));
    const HypothesisSpace space(testing::random_losses(3, 4, rng));
    const auto path = sample_path(m, 200, 8);
    const auto comp = gibbs_posterior(space, path, 1.0, PosteriorDist::uniform(3));
    for (std::size_t d : {1u, 2u, 7u}) {
        EwaLearner learner(PosteriorDist::uniform(3), 0.3);
        const auto trace = run_game(m, space, path, learner, d);
        const auto dec = decompose(trace, comp, space, path, m);
        CHECK(std::abs(dec.residual) < 1e-12);
        const auto parts = regret_by_residue(trace, comp, d);
        double sum = 0.0;
        for (double v : parts) sum += v;
        CHECK(std::abs(sum - regret(trace, comp)) < 1e-12);
    }
    EwaLearner learner(PosteriorDist::uniform(3), 0.3);
    const auto trace = run_game(m, space, path, learner, 1);
    CHECK_THROWS_AS(decompose_with_gen(trace, comp, exact_generalization_error(comp, space, path, m) + 1e-6),
                    ConsistencyError);
}

TEST_CASE("martingale term has mean zero on i.i.d. data") {
    Eigen::MatrixXd t(2, 2);
    t << 0.3, 0.7, 0.3, 0.7;
    const auto m = build_markov(t);
    const HypothesisSpace space(testing::indicator_losses());
    const int reps = 10000;
    double sum = 0.0, sum_sq = 0.0;
    EwaLearner learner(PosteriorDist::uniform(2), 0.5);
    for (int r = 0; r < reps; ++r) {
        const auto path = sample_path(m, 50, stream_seed(99, std::uint64_t(r)));
        const double v = martingale_term(run_game(m, space, path, learner, 1));
        sum += v;
        sum_sq += v * v;
    }
    const double mean = sum / reps;
    const double se = std::sqrt((sum_sq / reps - mean * mean) / reps);
    CHECK(std::abs(mean) < 3.0 * se);
}

TEST_CASE("martingale term mean is bounded by phi on a mixing chain") {
    const auto m = build_markov(two_state(0.1, 0.1));
    const HypothesisSpace space(testing::indicator_losses());
    const std::size_t d = 4;
    const int reps = 2000;
    double sum = 0.0, sum_sq = 0.0;
    for (int r = 0; r < reps; ++r) {
        const auto path = sample_path(m, 200, stream_seed(5, std::uint64_t(r)));
        auto learner = delayed_wrap(OnlineLearnerConfig{Algorithm::ewa, 0.5, PosteriorDist::uniform(2), d}, d);
        const double v = martingale_term(run_game(m, space, path, *learner, d));
        sum += v;
        sum_sq += v * v;
    }
    const double mean = sum / reps;
    const double se = std::sqrt((sum_sq / reps - mean * mean) / reps);
    CHECK(mean <= exact_phi(m, space, d) + 3.0 * se);
}

TEST_CASE("trace csv ends with regret and martingale term") {
    const auto m = build_markov(two_state(0.2, 0.3));
    const HypothesisSpace space(testing::indicator_losses());
    const auto path = sample_path(m, 20, 3);
    EwaLearner learner(PosteriorDist::uniform(2), 0.5);
    const auto trace = run_game(m, space, path, learner, 2);
    const auto comp = PosteriorDist::dirac(2, 0);
    std::ostringstream out;
    write_trace_csv(out, trace, comp);
    std::istringstream in(out.str());
    std::string line, last;
    std::getline(in, line);
    CHECK(line == "t,z_t,cost_dot_Pt,regret_partial,mn_partial");
    int rows = 0;
    while (std::getline(in, line)) last = line, ++rows;
    CHECK(rows == 20);
    const auto pos3 = last.find(',', last.find(',', last.find(',') + 1) + 1);
    const auto pos4 = last.find(',', pos3 + 1);
    CHECK(std::abs(std::stod(last.substr(pos3 + 1, pos4 - pos3 - 1)) - regret(trace, comp)) < 1e-14);
    CHECK(std::abs(std::stod(last.substr(pos4 + 1)) - martingale_term(trace)) < 1e-14);
}
