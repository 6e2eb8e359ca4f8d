#pragma once

#include "mixgen/hypothesis.hpp"
#include "mixgen/online_learner.hpp"
#include "mixgen/process.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <iosfwd>
#include <vector>

namespace mixgen {

/// Record of one generalization game. Column t-1 of `actions` is P_t and of
/// `costs` is c_t.
struct GameTrace {
    std::size_t n = 0;
    std::size_t delay = 1;
    std::vector<std::size_t> symbols;
    Eigen::MatrixXd actions;  // W x n
    Eigen::MatrixXd costs;    // W x n
    std::vector<double> learner_costs;  // <P_t, c_t>
};

/// Plays the delayed game on precomputed costs (W x n). At round t the
/// learner has been fed c_1..c_{t-d}. Throws ConfigError for d outside
/// [1, n] and ProtocolError when the learner plays a non-simplex point.
GameTrace play_game(OnlineLearner& learner, const Eigen::MatrixXd& costs, std::vector<std::size_t> symbols,
                    std::size_t delay);

/// c_t(w) = loss(w, Z_t) - L(w) for every round of the path.
Eigen::MatrixXd static_costs(const HypothesisSpace& space, const ProcessModel& model, const SamplePath& path);

/// Delayed generalization game with static losses. Resets the learner first.
GameTrace run_game(const ProcessModel& model, const HypothesisSpace& space, const SamplePath& path,
                   OnlineLearner& learner, std::size_t delay);

/// M_n = -(1/n) sum_t <P_t, c_t>.
double martingale_term(const GameTrace& trace);

/// Regret(P*) = sum_t <P_t - P*, c_t>.
double regret(const GameTrace& trace, const PosteriorDist& comparator);

/// Regret restricted to rounds i, i+d, i+2d, ... for i = 1..d; sums to regret().
std::vector<double> regret_by_residue(const GameTrace& trace, const PosteriorDist& comparator, std::size_t d);

/// sum_t ||c_t||_inf^2 and sum_t ||c_t||_2^2.
double sum_sup_norm_sq(const GameTrace& trace);
double sum_l2_norm_sq(const GameTrace& trace);

struct Decomposition {
    double gen = 0.0;
    double regret_over_n = 0.0;
    double martingale = 0.0;
    double residual = 0.0;  // gen - regret_over_n - martingale
};

inline constexpr double kDecompositionTolerance = 1e-10;

/// Splits a generalization error computed independently of the trace into
/// regret / n + M_n; throws ConsistencyError if the identity fails.
Decomposition decompose_with_gen(const GameTrace& trace, const PosteriorDist& comparator, double gen);

/// Static-loss decomposition with gen from exact_generalization_error.
Decomposition decompose(const GameTrace& trace, const PosteriorDist& comparator, const HypothesisSpace& space,
                        const SamplePath& path, const ProcessModel& model);

/// CSV columns t, z_t, cost_dot_Pt, regret_partial, mn_partial. The partial
/// sums run over rounds 1..t and are normalized so the last row holds
/// Regret(P*) and M_n.
void write_trace_csv(std::ostream& out, const GameTrace& trace, const PosteriorDist& comparator);

}  // namespace mixgen
