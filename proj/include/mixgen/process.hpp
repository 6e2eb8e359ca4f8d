#pragma once

#include "mixgen/hypothesis.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mixgen {

enum class ProcessKind { plain_markov, contaminated };

/// Stationary finite-state Markov chain. Paths always start from the
/// stationary law, so every block marginal is shift invariant.
///
/// Conditioning on the past sigma-algebra at lag d reduces to conditioning on
/// the state at lag d (Markov property); every mixing quantity in this library
/// is computed under that restriction.
class ProcessModel {
public:
    std::size_t size() const noexcept { return static_cast<std::size_t>(transition_.rows()); }
    const Eigen::MatrixXd& transition() const noexcept { return transition_; }
    const Eigen::VectorXd& stationary() const noexcept { return stationary_; }
    const std::vector<std::string>& states() const noexcept { return states_; }
    ProcessKind kind() const noexcept { return kind_; }

private:
    friend ProcessModel build_markov(const Eigen::MatrixXd&, std::vector<std::string>, ProcessKind);
    ProcessModel() = default;

    Eigen::MatrixXd transition_;
    Eigen::VectorXd stationary_;
    std::vector<std::string> states_;
    ProcessKind kind_ = ProcessKind::plain_markov;
};

/// Validates a row-stochastic matrix (tolerance 1e-9) and computes its unique
/// stationary distribution to residual < 1e-12.
///
/// Throws ValidationError for a malformed matrix and ModelError when the
/// chain is reducible or periodic, i.e. powers of the matrix do not converge
/// to a rank-one limit.
ProcessModel build_markov(const Eigen::MatrixXd& transition, std::vector<std::string> states = {},
                          ProcessKind kind = ProcessKind::plain_markov);

/// Loss process l0(w, Z'_t) + alpha * eps_t with Z'_t i.i.d. over a clean
/// alphabet and eps_t driven by a Markov noise chain.
struct ContaminationSpec {
    Eigen::VectorXd clean_distribution;  // law of Z'_t
    ProcessModel noise_chain;
    Eigen::VectorXd noise_values;        // eps value attached to each noise state
    double alpha = 0.0;
};

struct ContaminatedModel {
    ProcessModel model;
    HypothesisSpace space;
};

inline constexpr std::size_t kDefaultMaxProductStates = 10000;

/// Product chain over (clean symbol, noise state); product state index is
/// clean * |noise| + noise. Composite losses are clip(l0 + alpha * eps, 0, 1).
ContaminatedModel build_contaminated(const ContaminationSpec& spec, const Eigen::MatrixXd& base_losses,
                                     std::size_t max_states = kDefaultMaxProductStates);

/// Composite loss table before clipping (may leave [0, 1]).
Eigen::MatrixXd contaminated_losses_unclipped(const ContaminationSpec& spec, const Eigen::MatrixXd& base_losses);

struct SamplePath {
    std::vector<std::size_t> symbols;
    std::uint64_t seed = 0;

    std::size_t size() const noexcept { return symbols.size(); }
};

/// Stationary path of length n; bit-exact in (model, n, seed).
SamplePath sample_path(const ProcessModel& model, std::size_t n, std::uint64_t seed);

/// Largest exponent accepted by matrix_power and the lag-based mixing routines.
inline constexpr std::uint64_t kMaxMatrixPower = std::uint64_t{1} << 40;

/// Conditional gaps at or below this level are rounding noise of the matrix
/// products and are reported as exactly zero.
inline constexpr double kGapNoiseFloor = 1e-14;

/// transition^d by repeated squaring.
Eigen::MatrixXd matrix_power(const Eigen::MatrixXd& transition, std::uint64_t d);

/// Signed conditional gap (W x m): entry (w, s) is
/// L(w) - E[loss(w, Z_t) | Z_{t-d} = s]. Accepts any real-valued loss table.
Eigen::MatrixXd conditional_gap(const ProcessModel& model, const Eigen::MatrixXd& losses, std::uint64_t d);

/// phi_d = max(0, max_{w, s} conditional_gap(w, s)).
double exact_phi(const ProcessModel& model, const HypothesisSpace& space, std::uint64_t d);

/// phi_1 .. phi_D computed incrementally.
std::vector<double> exact_phi_table(const ProcessModel& model, const HypothesisSpace& space, std::size_t max_delay);

enum class MixingKind { table, geometric, algebraic };

/// Non-increasing, non-negative sequence of mixing coefficients.
class MixingProfile {
public:
    /// Values for d = 1..D; lags past D reuse the last value.
    static MixingProfile table(std::vector<double> values);
    /// C * exp(-d / tau).
    static MixingProfile geometric(double C, double tau);
    /// C * d^(-r).
    static MixingProfile algebraic(double C, double r);

    MixingKind kind() const noexcept { return kind_; }
    double phi(std::uint64_t d) const;
    double C() const noexcept { return c_; }
    double tau() const noexcept { return tau_; }
    double r() const noexcept { return r_; }
    const std::vector<double>& values() const noexcept { return values_; }

private:
    MixingProfile() = default;

    MixingKind kind_ = MixingKind::table;
    std::vector<double> values_;
    double c_ = 0.0;
    double tau_ = 0.0;
    double r_ = 0.0;
};

struct MixingFit {
    MixingProfile profile;
    double residual = 0.0;  // root-mean-square residual in the log domain
};

/// Least-squares fit of ln(phi_d) against d (geometric) or ln d (algebraic).
/// Requires D >= 3 positive, non-increasing values; throws DomainError otherwise.
MixingFit fit_mixing_profile(std::span<const double> phi_table, MixingKind kind);

}  // namespace mixgen
