#include "mixgen/bounds.hpp"

#include "mixgen/csv.hpp"
#include "mixgen/error.hpp"
#include "mixgen/game.hpp"
#include "mixgen/learner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace mixgen {

namespace {

void check_delta(double delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw DomainError("confidence delta must lie in (0, 1)");
}

void check_dn(std::size_t d, std::size_t n) {
    if (n < 1) throw DomainError("sample size n must be >= 1");
    if (d < 1 || d > n) throw DomainError("delay d must lie in [1, n]");
}

BoundReport assemble(std::size_t n, std::size_t d, double delta, double regret_term, double phi_term,
                     double deviation, std::string provenance) {
    BoundReport r;
    r.n = n;
    r.d = d;
    r.delta = delta;
    r.regret_term = regret_term;
    r.phi_term = phi_term;
    r.deviation_term = deviation;
    r.total = regret_term + phi_term + deviation;
    r.provenance = std::move(provenance);
    return r;
}

// tau ln n + 1, the delay proxy of the geometric bounds.
double geometric_delay_proxy(double tau, std::size_t n) {
    return tau * std::log(static_cast<double>(n)) + 1.0;
}

std::size_t clamp_delay(double raw, std::size_t n) {
    if (!(raw >= 1.0)) return 1;
    if (raw >= static_cast<double>(n)) return n;
    return static_cast<std::size_t>(raw);
}

}  // namespace

double deviation_term(std::size_t d, std::size_t n, double delta) {
    check_delta(delta);
    check_dn(d, n);
    return std::sqrt(2.0 * static_cast<double>(d) * std::log(1.0 / delta) / static_cast<double>(n));
}

double blocking_tail_bound(double phi_d, std::size_t d, std::size_t n, double delta) {
    if (!(phi_d >= 0.0)) throw DomainError("phi_d must be >= 0");
    return phi_d + deviation_term(d, n, delta);
}

BoundReport delayed_bound(double regret_value, double phi_d, std::size_t d, std::size_t n, double delta,
                          std::string provenance) {
    if (!(phi_d >= 0.0)) throw DomainError("phi_d must be >= 0");
    return assemble(n, d, delta, regret_value / static_cast<double>(n), phi_d, deviation_term(d, n, delta),
                    std::move(provenance));
}

std::size_t tune_delay_geometric(double tau, std::size_t n) {
    if (!(tau > 0.0)) throw DomainError("tau must be > 0");
    if (n < 2) throw DomainError("geometric tuning needs n >= 2");
    return clamp_delay(std::ceil(tau * std::log(static_cast<double>(n))), n);
}

std::size_t tune_delay_algebraic(double C, double r, std::size_t n) {
    if (!(C > 0.0) || !(r > 0.0)) throw DomainError("algebraic tuning needs C > 0 and r > 0");
    if (n < 1) throw DomainError("sample size n must be >= 1");
    double raw = std::pow(C * C * static_cast<double>(n), 1.0 / (1.0 + 2.0 * r));
    const double nearest = std::round(raw);
    if (std::abs(raw - nearest) <= 1e-9 * std::max(1.0, nearest)) raw = nearest;
    return clamp_delay(std::ceil(raw), n);
}

BoundReport geometric_tuned_bound(double regret_value, double C, double tau, std::size_t n, double delta) {
    check_delta(delta);
    if (!(C >= 0.0)) throw DomainError("C must be >= 0");
    const std::size_t d = tune_delay_geometric(tau, n);
    const double nn = static_cast<double>(n);
    const double deviation = std::sqrt(2.0 * geometric_delay_proxy(tau, n) * std::log(1.0 / delta) / nn);
    return assemble(n, d, delta, regret_value / nn, C / nn, deviation, "geometric-tuned");
}

double algebraic_main_term(double C, double r, std::size_t n, double delta) {
    check_delta(delta);
    if (!(C > 0.0) || !(r > 0.0)) throw DomainError("algebraic bound needs C > 0 and r > 0");
    return C * (1.0 + std::sqrt(std::log(1.0 / delta))) * std::pow(static_cast<double>(n), -r / (1.0 + 2.0 * r));
}

BoundReport algebraic_tuned_bound(double regret_value, double C, double r, std::size_t n, double delta) {
    check_delta(delta);
    const std::size_t d = tune_delay_algebraic(C, r, n);
    const double rate = std::pow(static_cast<double>(n), -r / (1.0 + 2.0 * r));
    return assemble(n, d, delta, regret_value / static_cast<double>(n), C * rate,
                    C * std::sqrt(std::log(1.0 / delta)) * rate, "algebraic-tuned");
}

BoundReport ewa_geometric_bound(double kl, double eta, double C, double tau, std::size_t n, double delta) {
    if (!(kl >= 0.0)) throw DomainError("KL must be >= 0");
    BoundReport r = ftrl_geometric_bound(kl, eta, 1.0, 1.0, C, tau, n, delta);
    r.provenance = "ewa-geometric";
    return r;
}

BoundReport ftrl_geometric_bound(double h_gap, double eta, double alpha, double B, double C, double tau,
                                 std::size_t n, double delta) {
    check_delta(delta);
    if (!(eta > 0.0) || !(alpha > 0.0)) throw DomainError("eta and alpha must be > 0");
    if (!(B >= 0.0)) throw DomainError("cost bound B must be >= 0");
    if (!(C >= 0.0)) throw DomainError("C must be >= 0");
    const std::size_t d = tune_delay_geometric(tau, n);
    const double nn = static_cast<double>(n);
    const double proxy = geometric_delay_proxy(tau, n);
    const double regret_term = h_gap * proxy / (eta * nn) + eta * B * B / (2.0 * alpha);
    const double deviation = std::sqrt(2.0 * proxy * std::log(1.0 / delta) / nn);
    return assemble(n, d, delta, regret_term, C / nn, deviation, "ftrl-geometric");
}

double iid_ewa_bound(double kl, double eta, std::size_t n, double delta) {
    check_delta(delta);
    if (!(kl >= 0.0)) throw DomainError("KL must be >= 0");
    if (!(eta > 0.0)) throw DomainError("learning rate eta must be > 0");
    if (n < 1) throw DomainError("sample size n must be >= 1");
    const double nn = static_cast<double>(n);
    return kl / (eta * nn) + eta / 2.0 + std::sqrt(2.0 * std::log(1.0 / delta) / nn);
}

EtaGrid EtaGrid::for_horizon(double eta0, std::size_t n, double delta) {
    EtaGrid g;
    g.eta0 = eta0;
    g.delta = delta;
    g.count = n > 1 ? static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(n)))) : 1;
    g.count = std::max<std::size_t>(g.count, 1);
    return g;
}

std::vector<double> EtaGrid::etas() const {
    validate();
    std::vector<double> out(count);
    for (std::size_t k = 0; k < count; ++k) out[k] = std::ldexp(eta0, -static_cast<int>(k));
    return out;
}

void EtaGrid::validate() const {
    if (count < 1) throw DomainError("learning-rate grid is empty");
    if (!(eta0 > 0.0) || !std::isfinite(eta0)) throw DomainError("grid start eta0 must be > 0");
    check_delta(delta);
}

EtaGridResult union_bound_eta_grid(double kl, const std::function<double(double, double, double)>& base_bound,
                                   const EtaGrid& grid) {
    const std::vector<double> etas = grid.etas();
    EtaGridResult best;
    best.value = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < etas.size(); ++k) {
        const double v = base_bound(kl, etas[k], grid.per_point_delta());
        if (v < best.value) best = {v, etas[k], k};
    }
    return best;
}

std::vector<SweepRow> sweep_delay(const SweepSetup& setup) {
    if (setup.model == nullptr || setup.space == nullptr || !setup.posterior) {
        throw ConfigError("sweep needs a model, a loss table and a posterior source");
    }
    setup.online.validate();
    for (std::size_t d : setup.d_grid) {
        if (d < 1 || d > setup.n) throw ConfigError("sweep delay " + std::to_string(d) + " outside [1, n]");
    }
    const SamplePath path = sample_path(*setup.model, setup.n, setup.seed);
    const PosteriorDist posterior = setup.posterior(path);
    const double gen = exact_generalization_error(posterior, *setup.space, path, *setup.model);

    const Regularizer reg = regularizer_for(setup.online.algorithm);
    const double gap = reg.value(posterior, setup.online.prior);
    const Eigen::MatrixXd costs = static_costs(*setup.space, *setup.model, path);
    double dual_sq = 0.0;
    for (Eigen::Index t = 0; t < costs.cols(); ++t) {
        const double c = reg.dual_norm(costs.col(t));
        dual_sq += c * c;
    }

    const double nn = static_cast<double>(setup.n);
    std::vector<SweepRow> rows;
    rows.reserve(setup.d_grid.size());
    for (std::size_t d : setup.d_grid) {
        SweepRow row;
        row.d = d;
        row.phi_term = exact_phi(*setup.model, *setup.space, d);
        row.deviation_term = deviation_term(d, setup.n, setup.delta);
        row.regret_term = delayed_composite_regret_bound(gap, setup.online.eta, reg.alpha, d, dual_sq) / nn;
        row.total_bound = row.regret_term + row.phi_term + row.deviation_term;
        row.empirical_gen = gen;
        rows.push_back(row);
    }
    return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    CsvWriter csv(out, {"d", "phi_term", "deviation_term", "regret_term", "total_bound", "empirical_gen"});
    for (const SweepRow& r : rows) {
        csv.cell(std::uint64_t(r.d))
            .cell(r.phi_term)
            .cell(r.deviation_term)
            .cell(r.regret_term)
            .cell(r.total_bound)
            .cell(r.empirical_gen);
        csv.end_row();
    }
}

}  // namespace mixgen
