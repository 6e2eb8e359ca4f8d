#pragma once

#include "mixgen/hypothesis.hpp"
#include "mixgen/online.hpp"
#include "mixgen/process.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace mixgen {

/// High-probability generalization bound split into its three terms.
/// The regret term is already divided by n and may be negative when it is a
/// realized regret.
struct BoundReport {
    std::size_t n = 0;
    std::size_t d = 1;
    double delta = 0.0;
    double regret_term = 0.0;
    double phi_term = 0.0;
    double deviation_term = 0.0;
    double total = 0.0;
    std::string provenance;
};

/// sqrt(2 d ln(1/delta) / n).
double deviation_term(std::size_t d, std::size_t n, double delta);

/// High-probability bound on M_n for the delayed game:
/// phi_d + sqrt(2 d ln(1/delta) / n).
double blocking_tail_bound(double phi_d, std::size_t d, std::size_t n, double delta);

/// Gen <= regret / n + phi_d + sqrt(2 d ln(1/delta) / n). `regret_value` is
/// either a realized regret or an a-priori regret bound; `provenance` says which.
BoundReport delayed_bound(double regret_value, double phi_d, std::size_t d, std::size_t n, double delta,
                          std::string provenance = "delayed:realized-regret");

/// ceil(tau ln n) clamped to [1, n]; then C e^{-d/tau} <= C / n.
std::size_t tune_delay_geometric(double tau, std::size_t n);

/// ceil((C^2 n)^{1/(1+2r)}) clamped to [1, n]. A power within 1e-9 of an
/// integer is snapped to it before rounding up, so 1000^{1/3} gives 10.
std::size_t tune_delay_algebraic(double C, double r, std::size_t n);

/// Geometric mixing with the tuned delay:
/// regret / n + C / n + sqrt(2 (tau ln n + 1) ln(1/delta) / n).
BoundReport geometric_tuned_bound(double regret_value, double C, double tau, std::size_t n, double delta);

/// C (1 + sqrt(ln(1/delta))) n^{-r/(1+2r)}.
double algebraic_main_term(double C, double r, std::size_t n, double delta);

/// Algebraic mixing with the tuned delay: regret / n + algebraic_main_term.
/// The main term is reported as phi_term = C n^{-r/(1+2r)} and
/// deviation_term = C sqrt(ln(1/delta)) n^{-r/(1+2r)}.
BoundReport algebraic_tuned_bound(double regret_value, double C, double r, std::size_t n, double delta);

/// Delayed EWA on a geometric process:
/// KL (tau ln n + 1) / (eta n) + eta / 2 + C / n + sqrt(2 (tau ln n + 1) ln(1/delta) / n).
BoundReport ewa_geometric_bound(double kl, double eta, double C, double tau, std::size_t n, double delta);

/// Delayed FTRL on a geometric process:
/// h_gap (tau ln n + 1) / (eta n) + eta B^2 / (2 alpha) + C / n + deviation.
BoundReport ftrl_geometric_bound(double h_gap, double eta, double alpha, double B, double C, double tau,
                                 std::size_t n, double delta);

/// Undelayed EWA on i.i.d. data: KL / (eta n) + eta / 2 + sqrt(2 ln(1/delta) / n).
double iid_ewa_bound(double kl, double eta, std::size_t n, double delta);

/// Geometric learning-rate grid eta_k = eta0 2^{-k}, k = 0..count-1, each
/// point held at confidence delta / count.
struct EtaGrid {
    double eta0 = 1.0;
    std::size_t count = 1;
    double delta = 0.05;

    /// count = max(1, ceil(log2 n)).
    static EtaGrid for_horizon(double eta0, std::size_t n, double delta);

    std::vector<double> etas() const;
    double per_point_delta() const { return delta / static_cast<double>(count); }
    void validate() const;
};

struct EtaGridResult {
    double value = 0.0;
    double eta = 0.0;
    std::size_t index = 0;
};

/// Minimum over the grid of base_bound(kl, eta_k, delta / K).
EtaGridResult union_bound_eta_grid(double kl, const std::function<double(double, double, double)>& base_bound,
                                   const EtaGrid& grid);

/// One row of a delay sweep.
struct SweepRow {
    std::size_t d = 1;
    double phi_term = 0.0;
    double deviation_term = 0.0;
    double regret_term = 0.0;
    double total_bound = 0.0;
    double empirical_gen = 0.0;
};

using PosteriorSource = std::function<PosteriorDist(const SamplePath&)>;

struct SweepSetup {
    const ProcessModel* model = nullptr;
    const HypothesisSpace* space = nullptr;
    PosteriorSource posterior;
    OnlineLearnerConfig online;
    std::size_t n = 0;
    double delta = 0.05;
    std::vector<std::size_t> d_grid;
    std::uint64_t seed = 0;
};

/// Delay trade-off on one stationary path. For each d: exact phi_d, the
/// deviation term, the round-robin wrapper's a-priori regret bound against
/// the learner's posterior (per-instance sum, divided by n), their total,
/// and the posterior's exact generalization error.
std::vector<SweepRow> sweep_delay(const SweepSetup& setup);

/// Columns d, phi_term, deviation_term, regret_term, total_bound, empirical_gen.
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

}  // namespace mixgen
