#include "helpers.hpp"

#include "mixgen/bounds.hpp"
#include "mixgen/error.hpp"
#include "mixgen/learner.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace mixgen;

TEST_CASE("blocking tail bound") {
    CHECK(std::abs(blocking_tail_bound(0.05, 4, 400, 0.05) - 0.29477468306808163) < 1e-12);
    CHECK(blocking_tail_bound(0.0, 1, 100000000, 0.05) < 1e-3);
    CHECK_THROWS_AS(blocking_tail_bound(0.1, 1, 100, 0.0), DomainError);
    CHECK_THROWS_AS(blocking_tail_bound(0.1, 1, 100, 1.0), DomainError);
}

TEST_CASE("delayed bound terms") {
    const auto pure = delayed_bound(0.0, 0.0, 3, 500, 0.1);
    CHECK(pure.total == doctest::Approx(deviation_term(3, 500, 0.1)).epsilon(1e-15));
    const auto r = delayed_bound(20.0, 0.05, 4, 400, 0.05);
    CHECK(std::abs(r.regret_term - 0.05) < 1e-15);
    CHECK(std::abs(r.total - (0.05 + 0.29477468306808163)) < 1e-12);
    CHECK(r.provenance == "delayed:realized-regret");
}

TEST_CASE("delay tuning") {
    CHECK(tune_delay_geometric(2.0, 1000) == 14);
    CHECK(tune_delay_geometric(1e-9, 1000) == 1);
    CHECK(tune_delay_algebraic(1.0, 1.0, 1000) == 10);
    CHECK(tune_delay_algebraic(1.0, 1e12, 1000) == 1);
    CHECK(tune_delay_algebraic(1.0, 1.0, 1) == 1);
    for (double tau : {0.5, 2.0, 9.5}) {
        for (std::size_t n : {10u, 1000u, 100000u}) {
            const auto d = tune_delay_geometric(tau, n);
            if (d < n) CHECK(std::exp(-double(d) / tau) <= 1.0 / double(n) * (1.0 + 1e-12));
        }
    }
}

TEST_CASE("tuned bounds") {
    const auto g = geometric_tuned_bound(0.0, 1.0, 2.0, 1000, 0.05);
    CHECK(std::abs(g.total - 0.2989372522115134) < 1e-12);
    CHECK(g.provenance == "geometric-tuned");

    const auto a = algebraic_tuned_bound(0.0, 1.0, 1.0, 1000, std::exp(-1.0));
    CHECK(std::abs(a.total - 0.2) < 1e-12);
    CHECK(std::abs(a.phi_term + a.deviation_term - a.total) < 1e-15);

    for (double r : {0.5, 1.0, 2.0}) {
        const double slope = (std::log(algebraic_main_term(1.0, r, 100000, 0.05)) -
                              std::log(algebraic_main_term(1.0, r, 1000, 0.05))) /
                             (std::log(100000.0) - std::log(1000.0));
        CHECK(std::abs(slope + r / (1.0 + 2.0 * r)) < 1e-12);
    }
}

TEST_CASE("learner-specific bounds") {
    const auto e = ewa_geometric_bound(std::log(2.0), 0.1, 1.0, 2.0, 10000, 0.05);
    CHECK(std::abs(e.total - 0.17143090394098026) < 1e-12);
    const auto zero = ewa_geometric_bound(0.0, 0.1, 1.0, 2.0, 10000, 0.05);
    CHECK(std::abs(zero.total - (0.05 + 1e-4 + std::sqrt(2.0 * (2.0 * std::log(1e4) + 1.0) * std::log(20.0) / 1e4))) <
          1e-12);
    const auto f = ftrl_geometric_bound(std::log(2.0), 0.1, 1.0, 1.0, 1.0, 2.0, 10000, 0.05);
    CHECK(std::abs(f.total - e.total) < 1e-15);
    const auto s = ftrl_geometric_bound(0.4, 0.05, 1.0, std::sqrt(5.0), 1.0, 1.0, 10000, 0.1);
    CHECK(std::abs(s.total - 0.20183966215502458) < 1e-12);

    const double iid = iid_ewa_bound(std::log(2.0), 0.1, 1000, 0.05);
    CHECK(std::abs(iid - (std::log(2.0) / 100.0 + 0.05 + std::sqrt(2.0 * std::log(20.0) / 1000.0))) < 1e-15);
}

TEST_CASE("learning-rate grid") {
    const auto grid = EtaGrid::for_horizon(1.0, 1000, 0.05);
    CHECK(grid.count == 10);
    CHECK(grid.etas().back() == doctest::Approx(1.0 / 512.0));
    CHECK(grid.per_point_delta() == doctest::Approx(0.005));

    auto base = [](double kl, double eta, double delta) { return iid_ewa_bound(kl, eta, 1000, delta); };
    const EtaGrid single{0.1, 1, 0.05};
    CHECK(union_bound_eta_grid(std::log(2.0), base, single).value == base(std::log(2.0), 0.1, 0.05));

    // The grid penalty grows like ln K while the best grid point tracks the
    // optimal eta: the excess over kl = 0 scales like sqrt(kl).
    const auto small = union_bound_eta_grid(0.5, base, grid);
    const auto large = union_bound_eta_grid(8.0, base, grid);
    const auto none = union_bound_eta_grid(0.0, base, grid);
    CHECK(large.value > small.value);
    CHECK(small.value > none.value);
    CHECK_THROWS(EtaGrid{1.0, 0, 0.05}.validate());
}

TEST_CASE("delay sweep on an i.i.d. chain is minimized at d = 1") {
    Eigen::MatrixXd t(2, 2);
    t << 0.4, 0.6, 0.4, 0.6;
    const auto m = build_markov(t);
    const HypothesisSpace space(testing::indicator_losses());
    SweepSetup setup;
    setup.model = &m;
    setup.space = &space;
    setup.posterior = [&](const SamplePath& p) { return gibbs_posterior(space, p, 0.05, PosteriorDist::uniform(2)); };
    setup.online = OnlineLearnerConfig{Algorithm::ewa, 0.1, PosteriorDist::uniform(2), 1};
    setup.n = 1000;
    setup.delta = 0.1;
    setup.d_grid = {1, 2, 4, 8, 16};
    setup.seed = 3;
    const auto rows = sweep_delay(setup);
    REQUIRE(rows.size() == 5);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(rows[i].phi_term == 0.0);
        CHECK(rows[i].total_bound > rows[0].total_bound);
    }
    std::ostringstream out;
    write_sweep_csv(out, rows);
    CHECK(out.str().rfind("d,phi_term,deviation_term,regret_term,total_bound,empirical_gen\n", 0) == 0);
}

TEST_CASE("delay sweep at the tuned delay is near the grid minimum") {
    const auto m = build_markov(testing::two_state(0.05, 0.05));
    const HypothesisSpace space(testing::indicator_losses());
    const double tau = 1.0 / std::log(1.0 / 0.9);
    const std::size_t n = 5000;
    const std::size_t tuned = tune_delay_geometric(tau, n);
    SweepSetup setup;
    setup.model = &m;
    setup.space = &space;
    setup.posterior = [&](const SamplePath& p) { return gibbs_posterior(space, p, 0.05, PosteriorDist::uniform(2)); };
    setup.online = OnlineLearnerConfig{Algorithm::ewa, 0.1, PosteriorDist::uniform(2), 1};
    setup.n = n;
    setup.delta = 0.1;
    for (std::size_t d = 1; d <= 128; ++d) setup.d_grid.push_back(d);
    setup.d_grid.push_back(tuned);
    const auto rows = sweep_delay(setup);
    double best = rows[0].total_bound;
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) best = std::min(best, rows[i].total_bound);
    CHECK(rows.back().total_bound <= 2.0 * best);
}
