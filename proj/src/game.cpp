#include "mixgen/game.hpp"

#include "mixgen/csv.hpp"
#include "mixgen/error.hpp"
#include "mixgen/learner.hpp"

#include <cmath>
#include <ostream>
#include <string>

namespace mixgen {

GameTrace play_game(OnlineLearner& learner, const Eigen::MatrixXd& costs, std::vector<std::size_t> symbols,
                    std::size_t delay) {
    const std::size_t n = static_cast<std::size_t>(costs.cols());
    if (n == 0) throw ConfigError("game needs at least one round");
    if (delay < 1 || delay > n) {
        throw ConfigError("delay " + std::to_string(delay) + " outside [1, n = " + std::to_string(n) + "]");
    }
    if (static_cast<std::size_t>(costs.rows()) != learner.size()) {
        throw ConfigError("learner size does not match the number of hypotheses");
    }
    if (symbols.size() != n) throw ConfigError("symbol record does not match the round count");
    if (costs.cwiseAbs().maxCoeff() > 1.0 + 1e-12) throw ValidationError("costs must lie in [-1, 1]");

    GameTrace trace;
    trace.n = n;
    trace.delay = delay;
    trace.symbols = std::move(symbols);
    trace.costs = costs;
    trace.actions.resize(costs.rows(), costs.cols());
    trace.learner_costs.resize(n);

    for (std::size_t t = 1; t <= n; ++t) {
        if (t > delay) {
            const std::size_t s = t - delay;
            learner.feedback(s, costs.col(Eigen::Index(s - 1)));
        }
        const PosteriorDist p = learner.act(t);
        if (p.size() != learner.size() || !p.is_valid()) {
            throw ProtocolError("learner played a point outside the simplex at round " + std::to_string(t));
        }
        const Eigen::VectorXd probs = p.probabilities();
        trace.actions.col(Eigen::Index(t - 1)) = probs;
        trace.learner_costs[t - 1] = probs.dot(costs.col(Eigen::Index(t - 1)));
    }
    return trace;
}

Eigen::MatrixXd static_costs(const HypothesisSpace& space, const ProcessModel& model, const SamplePath& path) {
    const Eigen::VectorXd test = test_losses(space, model);
    Eigen::MatrixXd costs(Eigen::Index(space.size()), Eigen::Index(path.size()));
    for (std::size_t t = 0; t < path.size(); ++t) {
        const std::size_t z = path.symbols[t];
        if (z >= space.alphabet_size()) throw ValidationError("path symbol outside the loss table's alphabet");
        costs.col(Eigen::Index(t)) = space.table().col(Eigen::Index(z)) - test;
    }
    return costs;
}

GameTrace run_game(const ProcessModel& model, const HypothesisSpace& space, const SamplePath& path,
                   OnlineLearner& learner, std::size_t delay) {
    learner.reset();
    return play_game(learner, static_costs(space, model, path), path.symbols, delay);
}

double martingale_term(const GameTrace& trace) {
    double total = 0.0;
    for (double v : trace.learner_costs) total += v;
    return -total / static_cast<double>(trace.n);
}

double regret(const GameTrace& trace, const PosteriorDist& comparator) {
    if (comparator.size() != static_cast<std::size_t>(trace.costs.rows())) {
        throw ValidationError("comparator size mismatch");
    }
    const Eigen::VectorXd q = comparator.probabilities();
    double total = 0.0;
    for (std::size_t t = 0; t < trace.n; ++t) {
        total += trace.learner_costs[t] - q.dot(trace.costs.col(Eigen::Index(t)));
    }
    return total;
}

std::vector<double> regret_by_residue(const GameTrace& trace, const PosteriorDist& comparator, std::size_t d) {
    if (d == 0) throw DomainError("residue count must be >= 1");
    if (comparator.size() != static_cast<std::size_t>(trace.costs.rows())) {
        throw ValidationError("comparator size mismatch");
    }
    const Eigen::VectorXd q = comparator.probabilities();
    std::vector<double> out(d, 0.0);
    for (std::size_t t = 0; t < trace.n; ++t) {
        out[t % d] += trace.learner_costs[t] - q.dot(trace.costs.col(Eigen::Index(t)));
    }
    return out;
}

double sum_sup_norm_sq(const GameTrace& trace) {
    double total = 0.0;
    for (Eigen::Index t = 0; t < trace.costs.cols(); ++t) {
        const double s = trace.costs.col(t).cwiseAbs().maxCoeff();
        total += s * s;
    }
    return total;
}

double sum_l2_norm_sq(const GameTrace& trace) {
    return trace.costs.squaredNorm();
}

Decomposition decompose_with_gen(const GameTrace& trace, const PosteriorDist& comparator, double gen) {
    Decomposition out;
    out.gen = gen;
    out.regret_over_n = regret(trace, comparator) / static_cast<double>(trace.n);
    out.martingale = martingale_term(trace);
    out.residual = gen - out.regret_over_n - out.martingale;
    if (!(std::abs(out.residual) <= kDecompositionTolerance)) {
        throw ConsistencyError("regret decomposition identity violated: residual " + format_number(out.residual));
    }
    return out;
}

Decomposition decompose(const GameTrace& trace, const PosteriorDist& comparator, const HypothesisSpace& space,
                        const SamplePath& path, const ProcessModel& model) {
    return decompose_with_gen(trace, comparator, exact_generalization_error(comparator, space, path, model));
}

void write_trace_csv(std::ostream& out, const GameTrace& trace, const PosteriorDist& comparator) {
    const Eigen::VectorXd q = comparator.probabilities();
    CsvWriter csv(out, {"t", "z_t", "cost_dot_Pt", "regret_partial", "mn_partial"});
    double regret_sum = 0.0;
    double cost_sum = 0.0;
    for (std::size_t t = 0; t < trace.n; ++t) {
        regret_sum += trace.learner_costs[t] - q.dot(trace.costs.col(Eigen::Index(t)));
        cost_sum += trace.learner_costs[t];
        csv.cell(std::uint64_t(t + 1))
            .cell(std::uint64_t(trace.symbols[t]))
            .cell(trace.learner_costs[t])
            .cell(regret_sum)
            .cell(-cost_sum / static_cast<double>(trace.n));
        csv.end_row();
    }
}

}  // namespace mixgen
