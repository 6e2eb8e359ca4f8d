#pragma once

#include "mixgen/game.hpp"
#include "mixgen/hypothesis.hpp"
#include "mixgen/online_learner.hpp"
#include "mixgen/process.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace mixgen {

enum class DynamicKind { memory_table, discounted };

/// Largest number of blocks enumerated by the exact evaluators.
inline constexpr std::size_t kBlockEnumerationCap = 1000000;

/// Sequence loss l(w, z_t, ..., z_1) with values in [0, 1].
///
/// memory_table: reads the last m symbols. Column index of the table is
///   sum_j z_{t-j} A^j for j = 0..m-1, so the newest symbol is the lowest
///   digit. Shorter prefixes are padded with symbol 0 in the older slots.
/// discounted: clip(bias_w + scale * sum_j gamma^j u(w, z_{t-j}), 0, 1) over
///   the whole prefix, with u = weights in [0, 1]. Changing symbols older
///   than d moves the value by at most scale gamma^d / (1 - gamma).
class DynamicLoss {
public:
    static DynamicLoss memory_table(std::size_t m, std::size_t alphabet, Eigen::MatrixXd table);
    static DynamicLoss discounted(double gamma, double scale, Eigen::MatrixXd weights, Eigen::VectorXd bias);
    /// Memory-1 loss with the static table.
    static DynamicLoss from_static(const HypothesisSpace& space);

    DynamicKind kind() const noexcept { return kind_; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(table_.rows()); }
    std::size_t alphabet_size() const noexcept { return alphabet_; }
    std::size_t memory() const noexcept { return memory_; }
    double gamma() const noexcept { return gamma_; }
    double scale() const noexcept { return scale_; }
    /// Memory table (W x A^m) or discounted weights (W x A).
    const Eigen::MatrixXd& table() const noexcept { return table_; }
    const Eigen::VectorXd& bias() const noexcept { return bias_; }

    /// prefix[0] is z_1 and prefix.back() is z_t. Throws ValidationError on
    /// an empty prefix or an out-of-range symbol.
    double eval(std::size_t w, std::span<const std::size_t> prefix) const;
    Eigen::VectorXd eval_all(std::span<const std::size_t> prefix) const;

    /// Table column for the trailing window of a memory-m prefix.
    std::size_t window_key(std::span<const std::size_t> prefix) const;

    /// scale gamma^d / (1 - gamma) for the discounted kind. Memory-m gives 0
    /// for d >= m and the trivial bound 1 below; exact values come from
    /// forgetting_profile.
    double forgetting_envelope(std::size_t d) const;

private:
    DynamicLoss() = default;
    void check_prefix(std::span<const std::size_t> prefix) const;

    DynamicKind kind_ = DynamicKind::memory_table;
    std::size_t memory_ = 1;
    std::size_t alphabet_ = 1;
    double gamma_ = 0.0;
    double scale_ = 0.0;
    Eigen::MatrixXd table_;
    Eigen::VectorXd bias_;
};

/// A^k, throwing SizeError once it exceeds `cap`.
std::size_t block_count(std::size_t alphabet, std::size_t k, std::size_t cap = kBlockEnumerationCap);

/// W x n matrix of l(w, z_1..z_t) along the path.
Eigen::MatrixXd path_losses(const DynamicLoss& loss, const SamplePath& path);

/// Test loss under the stationary law, truncated to the last M symbols.
struct TildeLoss {
    Eigen::VectorXd values;
    /// Bound on |truncated - untruncated|: 0 for memory-m with M >= m,
    /// B_M otherwise.
    double truncation_error = 0.0;
    /// Monte Carlo standard error (max over w); 0 for exact enumeration.
    double standard_error = 0.0;
    bool exact = true;
};

/// Exact over all A^M blocks weighted by pi(z_1) prod P. Memory-m losses need
/// M >= m (DomainError otherwise). Throws SizeError past the block cap; use
/// tilde_test_loss_mc then.
TildeLoss tilde_test_loss(const DynamicLoss& loss, const ProcessModel& model, std::size_t horizon);
double tilde_test_loss(const DynamicLoss& loss, const ProcessModel& model, std::size_t w, std::size_t horizon);

/// Monte Carlo estimate from `samples` stationary M-blocks.
TildeLoss tilde_test_loss_mc(const DynamicLoss& loss, const ProcessModel& model, std::size_t horizon,
                             std::size_t samples, std::uint64_t seed);

/// m for memory-m, otherwise the longest horizon within the block cap.
std::size_t default_tilde_horizon(const DynamicLoss& loss, const ProcessModel& model);

/// Exact enumeration when feasible, Monte Carlo otherwise.
TildeLoss stationary_test_loss(const DynamicLoss& loss, const ProcessModel& model, std::size_t horizon = 0,
                               std::size_t mc_samples = 200000, std::uint64_t seed = 0);

/// Forgetting coefficients B_1..B_D.
struct ForgettingProfile {
    std::vector<double> values;
    /// Largest difference found by enumeration; equals values for memory-m.
    std::vector<double> lower_bound;
    /// values are the exact supremum (memory-m) rather than an envelope.
    bool exact = false;
    /// Per-d flag: the enumeration lower bound was computed.
    std::vector<bool> enumerated;
};

/// memory-m: exact supremum by comparing table columns that share the last d
/// digits (0 for d >= m). discounted: the analytic envelope plus an
/// enumeration lower bound over sequences up to `cap` evaluations; when the
/// probe does not fit, the lower bound is NaN and the flag is cleared.
ForgettingProfile forgetting_profile(const DynamicLoss& loss, std::size_t max_d,
                                     std::size_t cap = kBlockEnumerationCap);

/// Sign of a one-sided conditional gap.
enum class GapSign {
    /// E[l | past] - test loss, the dynamic mixing condition as stated.
    loss_minus_test,
    /// test loss - E[l | past], the static convention and the direction the
    /// forgetting-plus-block-mixing argument controls.
    test_minus_loss,
};

/// Location of a maximal gap. For conditioning on a single state, `state` is
/// the state index; for memory-m loss with d < m it is the window key of the
/// known symbols z_{t-m+1}..z_{t-d}.
struct GapMax {
    double value = 0.0;
    double standard_error = 0.0;
    bool exact = true;
    std::size_t w = 0;
    std::size_t state = 0;
};

/// beta_d = max over w in w_set and states s of
/// E[l(w, block')] - E[l(w, Z_{t-d+1..t}) | Z_{t-2d} = s], clamped at 0, where
/// block' comes from an independent stationary copy and the loss sees only
/// the d-block. Empty w_set means all hypotheses.
GapMax exact_block_beta(const ProcessModel& model, const DynamicLoss& loss, const std::vector<std::size_t>& w_set,
                        std::size_t d);

struct DynamicPhiOptions {
    GapSign sign = GapSign::loss_minus_test;
    /// Monte Carlo settings for losses without an exact path.
    std::size_t horizon = 0;
    std::size_t samples = 20000;
    std::uint64_t seed = 0;
};

/// max over w and conditioning state of the signed gap between
/// E[l(w, Z_t, ...) | F_{t-d}] and the test loss, clamped at 0, in the
/// stationary regime. Exact for memory-m losses (any d >= 1); Monte Carlo
/// with a standard error for the discounted kind, where the past before
/// Z_{t-d} is drawn from the time-reversed chain.
GapMax dynamic_phi(const ProcessModel& model, const DynamicLoss& loss, const std::vector<std::size_t>& w_set,
                   std::size_t d, const DynamicPhiOptions& options = {});

struct MixingBoundRow {
    std::size_t d = 0;
    std::size_t half = 0;
    double lhs = 0.0;
    double forgetting = 0.0;
    double beta = 0.0;
    double rhs = 0.0;
    double slack = 0.0;
    std::size_t w = 0;
    std::size_t state = 0;
    bool exact = true;
};

inline constexpr double kDynamicBoundTolerance = 1e-9;

/// Half lag h used for odd d. With ceil, beta_h conditions at lag d + 1,
/// further back than the lag d of the left side, so the bound can fail by a
/// factor of the chain's contraction; floor keeps 2h <= d.
enum class HalfRounding { ceil, floor };

inline std::size_t half_lag(std::size_t d, HalfRounding rounding) {
    return rounding == HalfRounding::ceil ? (d + 1) / 2 : d / 2;
}

/// lhs = dynamic_phi(d), rhs = 2 B_h + beta_h with h = half_lag(d). Needs
/// d >= 2 with floor rounding.
std::vector<MixingBoundRow> dynamic_mixing_report(const ProcessModel& model, const DynamicLoss& loss,
                                     const std::vector<std::size_t>& w_set, const std::vector<std::size_t>& d_grid,
                                     const DynamicPhiOptions& options = {},
                                     HalfRounding rounding = HalfRounding::ceil);

/// dynamic_mixing_report, throwing ConsistencyError naming (w, state, d) when
/// lhs > rhs + 1e-9.
std::vector<MixingBoundRow> verify_dynamic_mixing_bound(const ProcessModel& model, const DynamicLoss& loss,
                                     const std::vector<std::size_t>& w_set, const std::vector<std::size_t>& d_grid,
                                     const DynamicPhiOptions& options = {},
                                     HalfRounding rounding = HalfRounding::ceil);

/// c_t(w) = l(w, z_1..z_t) - test(w).
Eigen::MatrixXd dynamic_costs(const DynamicLoss& loss, const SamplePath& path, const Eigen::VectorXd& test);

/// Delayed game with dynamic costs. `test` is the stationary test loss
/// vector, usually stationary_test_loss(...).values.
GameTrace run_dynamic_game(const DynamicLoss& loss, const SamplePath& path, const Eigen::VectorXd& test,
                           OnlineLearner& learner, std::size_t delay);

/// sum_w P(w) (test(w) - (1/n) sum_t l(w, z_1..z_t)).
double dynamic_generalization_error(const PosteriorDist& posterior, const DynamicLoss& loss, const SamplePath& path,
                                    const Eigen::VectorXd& test);

Decomposition decompose_dynamic(const GameTrace& trace, const PosteriorDist& comparator, const DynamicLoss& loss,
                                const SamplePath& path, const Eigen::VectorXd& test);

}  // namespace mixgen
