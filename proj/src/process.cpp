#include "mixgen/process.hpp"

#include "mixgen/error.hpp"
#include "mixgen/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace mixgen {

namespace {

constexpr double kRowSumTolerance = 1e-9;
constexpr double kStationaryResidual = 1e-12;
constexpr int kPolishIterations = 100000;
constexpr int kMaxSquarings = 64;
// Row spread below which P^(2^k) is considered rank one.
constexpr double kRankOneSpread = 1e-11;
constexpr Eigen::Index kDirectSolveStates = 2000;

void normalize_rows(Eigen::MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) m.row(i) /= m.row(i).sum();
}

double row_spread(const Eigen::MatrixXd& q) {
    double spread = 0.0;
    for (Eigen::Index i = 1; i < q.rows(); ++i) {
        spread = std::max(spread, (q.row(i) - q.row(0)).cwiseAbs().maxCoeff());
    }
    return spread;
}

double stationary_residual(const Eigen::MatrixXd& p, const Eigen::RowVectorXd& pi) {
    return (pi * p - pi).cwiseAbs().maxCoeff();
}

std::size_t draw(const Eigen::RowVectorXd& cumulative, double u) {
    const auto* begin = cumulative.data();
    const auto* end = begin + cumulative.size();
    const auto* it = std::upper_bound(begin, end, u);
    if (it == end) --it;
    return static_cast<std::size_t>(it - begin);
}

// Cumulative row sums with the tail pinned to exactly 1 from the last
// positive entry onward, so zero-probability states are never drawn.
Eigen::RowVectorXd cumulative_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
    Eigen::RowVectorXd c(row.size());
    double acc = 0.0;
    Eigen::Index last_positive = 0;
    for (Eigen::Index j = 0; j < row.size(); ++j) {
        acc += row(j);
        c(j) = acc;
        if (row(j) > 0.0) last_positive = j;
    }
    for (Eigen::Index j = last_positive; j < row.size(); ++j) c(j) = 1.0;
    return c;
}

void check_lag(std::uint64_t d) {
    if (d == 0) throw DomainError("lag d must be >= 1");
    if (d > kMaxMatrixPower) throw SizeError("lag d = " + std::to_string(d) + " exceeds the matrix-power budget");
}

}  // namespace

ProcessModel build_markov(const Eigen::MatrixXd& transition, std::vector<std::string> states, ProcessKind kind) {
    const Eigen::Index m = transition.rows();
    if (m == 0 || transition.cols() != m) throw ValidationError("transition matrix must be square and non-empty");
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) {
            const double v = transition(i, j);
            if (!std::isfinite(v) || v < 0.0) {
                throw ValidationError("transition entry (" + std::to_string(i) + ", " + std::to_string(j) +
                                      ") must be finite and non-negative");
            }
        }
        if (std::abs(transition.row(i).sum() - 1.0) > kRowSumTolerance) {
            throw ValidationError("transition row " + std::to_string(i) + " does not sum to 1");
        }
    }
    if (states.empty()) {
        for (Eigen::Index i = 0; i < m; ++i) states.push_back(std::to_string(i));
    } else if (states.size() != static_cast<std::size_t>(m)) {
        throw ValidationError("state labels do not match the transition size");
    }

    ProcessModel model;
    model.transition_ = transition;
    normalize_rows(model.transition_);
    model.states_ = std::move(states);
    model.kind_ = kind;

    // A unique limiting law exists iff P^(2^k) becomes rank one.
    Eigen::MatrixXd q = model.transition_;
    bool converged = false;
    for (int k = 0; k <= kMaxSquarings; ++k) {
        if (row_spread(q) <= kRankOneSpread) {
            converged = true;
            break;
        }
        q = (q * q).eval();
        normalize_rows(q);
    }
    if (!converged) {
        throw ModelError("chain has no unique limiting distribution (reducible or periodic)");
    }

    // Direct solve of pi (P - I) = 0, sum(pi) = 1; the squared power's row is
    // only accurate to the rank-one spread. Large chains keep that row.
    Eigen::RowVectorXd pi = q.row(0);
    if (m <= kDirectSolveStates) {
        Eigen::MatrixXd a = model.transition_.transpose() - Eigen::MatrixXd::Identity(m, m);
        a.row(m - 1).setOnes();
        Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
        b(m - 1) = 1.0;
        const Eigen::VectorXd solved = a.partialPivLu().solve(b);
        if (solved.allFinite()) pi = solved.transpose().cwiseMax(0.0);
    }
    pi /= pi.sum();
    int iterations = 0;
    while (stationary_residual(model.transition_, pi) >= kStationaryResidual) {
        if (++iterations > kPolishIterations) {
            throw ModelError("power iteration did not reach the stationary residual");
        }
        pi = pi * model.transition_;
        pi /= pi.sum();
    }
    model.stationary_ = pi.transpose();
    return model;
}

Eigen::MatrixXd contaminated_losses_unclipped(const ContaminationSpec& spec, const Eigen::MatrixXd& base_losses) {
    const Eigen::Index clean = spec.clean_distribution.size();
    const Eigen::Index noise = static_cast<Eigen::Index>(spec.noise_chain.size());
    if (base_losses.cols() != clean) throw ValidationError("base losses must have one column per clean symbol");
    if (spec.noise_values.size() != noise) throw ValidationError("noise values must have one entry per noise state");
    Eigen::MatrixXd out(base_losses.rows(), clean * noise);
    for (Eigen::Index w = 0; w < base_losses.rows(); ++w) {
        for (Eigen::Index a = 0; a < clean; ++a) {
            for (Eigen::Index e = 0; e < noise; ++e) {
                out(w, a * noise + e) = base_losses(w, a) + spec.alpha * spec.noise_values(e);
            }
        }
    }
    return out;
}

ContaminatedModel build_contaminated(const ContaminationSpec& spec, const Eigen::MatrixXd& base_losses,
                                     std::size_t max_states) {
    if (!(spec.alpha >= 0.0 && spec.alpha <= 1.0)) throw ValidationError("alpha must lie in [0, 1]");
    const Eigen::VectorXd& q = spec.clean_distribution;
    if (q.size() == 0) throw ValidationError("clean alphabet is empty");
    for (double v : q) {
        if (!std::isfinite(v) || v < 0.0) throw ValidationError("clean distribution entries must be non-negative");
    }
    if (std::abs(q.sum() - 1.0) > kRowSumTolerance) throw ValidationError("clean distribution must sum to 1");
    for (double v : spec.noise_values) {
        if (!std::isfinite(v)) throw ValidationError("noise values must be finite");
    }

    const std::size_t clean = static_cast<std::size_t>(q.size());
    const std::size_t noise = spec.noise_chain.size();
    if (clean > max_states / noise) {
        throw SizeError("product state space " + std::to_string(clean) + " x " + std::to_string(noise) +
                        " exceeds the cap of " + std::to_string(max_states));
    }

    const Eigen::MatrixXd& n = spec.noise_chain.transition();
    const Eigen::Index k = static_cast<Eigen::Index>(clean * noise);
    Eigen::MatrixXd p(k, k);
    std::vector<std::string> labels;
    labels.reserve(clean * noise);
    for (Eigen::Index a = 0; a < Eigen::Index(clean); ++a) {
        for (Eigen::Index e = 0; e < Eigen::Index(noise); ++e) {
            labels.push_back(std::to_string(a) + "|" + spec.noise_chain.states()[std::size_t(e)]);
            for (Eigen::Index b = 0; b < Eigen::Index(clean); ++b) {
                for (Eigen::Index f = 0; f < Eigen::Index(noise); ++f) {
                    p(a * Eigen::Index(noise) + e, b * Eigen::Index(noise) + f) = q(b) * n(e, f);
                }
            }
        }
    }

    Eigen::MatrixXd losses = contaminated_losses_unclipped(spec, base_losses).cwiseMax(0.0).cwiseMin(1.0);
    return ContaminatedModel{build_markov(p, std::move(labels), ProcessKind::contaminated),
                             HypothesisSpace(std::move(losses))};
}

SamplePath sample_path(const ProcessModel& model, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw ValidationError("path length must be >= 1");
    const Eigen::Index m = static_cast<Eigen::Index>(model.size());
    Eigen::MatrixXd cumulative(m, m);
    for (Eigen::Index i = 0; i < m; ++i) cumulative.row(i) = cumulative_row(model.transition().row(i));
    const Eigen::RowVectorXd start = cumulative_row(model.stationary().transpose());

    CounterRng rng(seed);
    SamplePath path;
    path.seed = seed;
    path.symbols.resize(n);
    path.symbols[0] = draw(start, rng.uniform());
    for (std::size_t t = 1; t < n; ++t) {
        path.symbols[t] = draw(cumulative.row(Eigen::Index(path.symbols[t - 1])), rng.uniform());
    }
    return path;
}

Eigen::MatrixXd matrix_power(const Eigen::MatrixXd& transition, std::uint64_t d) {
    if (d > kMaxMatrixPower) throw SizeError("exponent exceeds the matrix-power budget");
    Eigen::MatrixXd result = Eigen::MatrixXd::Identity(transition.rows(), transition.cols());
    Eigen::MatrixXd base = transition;
    while (d > 0) {
        if (d & 1U) result = (result * base).eval();
        d >>= 1U;
        if (d > 0) base = (base * base).eval();
    }
    return result;
}

Eigen::MatrixXd conditional_gap(const ProcessModel& model, const Eigen::MatrixXd& losses, std::uint64_t d) {
    check_lag(d);
    if (static_cast<std::size_t>(losses.cols()) != model.size()) {
        throw ValidationError("loss table columns do not match the model's state count");
    }
    const Eigen::VectorXd test = losses * model.stationary();
    const Eigen::MatrixXd conditional = losses * matrix_power(model.transition(), d).transpose();
    return (-conditional).colwise() + test;
}

double exact_phi(const ProcessModel& model, const HypothesisSpace& space, std::uint64_t d) {
    const double top = conditional_gap(model, space.table(), d).maxCoeff();
    return top > kGapNoiseFloor ? top : 0.0;
}

std::vector<double> exact_phi_table(const ProcessModel& model, const HypothesisSpace& space, std::size_t max_delay) {
    if (space.alphabet_size() != model.size()) {
        throw ValidationError("loss table columns do not match the model's state count");
    }
    const Eigen::VectorXd test = space.table() * model.stationary();
    const Eigen::MatrixXd pt = model.transition().transpose();
    Eigen::MatrixXd conditional = space.table();
    std::vector<double> out;
    out.reserve(max_delay);
    for (std::size_t d = 1; d <= max_delay; ++d) {
        conditional = (conditional * pt).eval();
        const double top = ((-conditional).colwise() + test).maxCoeff();
        out.push_back(top > kGapNoiseFloor ? top : 0.0);
    }
    return out;
}

MixingProfile MixingProfile::table(std::vector<double> values) {
    if (values.empty()) throw DomainError("mixing table is empty");
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i]) || values[i] < 0.0) throw DomainError("mixing coefficients must be non-negative");
        if (i > 0 && values[i] > values[i - 1] + 1e-12) throw DomainError("mixing coefficients must be non-increasing");
    }
    MixingProfile p;
    p.kind_ = MixingKind::table;
    p.values_ = std::move(values);
    return p;
}

MixingProfile MixingProfile::geometric(double C, double tau) {
    if (!(C >= 0.0) || !(tau > 0.0)) throw DomainError("geometric mixing needs C >= 0 and tau > 0");
    MixingProfile p;
    p.kind_ = MixingKind::geometric;
    p.c_ = C;
    p.tau_ = tau;
    return p;
}

MixingProfile MixingProfile::algebraic(double C, double r) {
    if (!(C >= 0.0) || !(r >= 0.0)) throw DomainError("algebraic mixing needs C >= 0 and r >= 0");
    MixingProfile p;
    p.kind_ = MixingKind::algebraic;
    p.c_ = C;
    p.r_ = r;
    return p;
}

double MixingProfile::phi(std::uint64_t d) const {
    if (d == 0) throw DomainError("lag d must be >= 1");
    switch (kind_) {
        case MixingKind::table:
            return values_[std::min<std::size_t>(d, values_.size()) - 1];
        case MixingKind::geometric:
            return c_ * std::exp(-static_cast<double>(d) / tau_);
        case MixingKind::algebraic:
            return c_ * std::pow(static_cast<double>(d), -r_);
    }
    return 0.0;
}

MixingFit fit_mixing_profile(std::span<const double> phi_table, MixingKind kind) {
    if (phi_table.size() < 3) throw DomainError("mixing fit needs at least 3 coefficients");
    if (kind == MixingKind::table) throw DomainError("fit kind must be geometric or algebraic");
    for (std::size_t i = 0; i < phi_table.size(); ++i) {
        if (!(phi_table[i] > 0.0) || !std::isfinite(phi_table[i])) {
            throw DomainError("mixing fit needs strictly positive coefficients (cannot take logs)");
        }
        if (i > 0 && phi_table[i] > phi_table[i - 1] * (1.0 + 1e-12)) {
            throw DomainError("mixing fit needs a non-increasing table");
        }
    }

    const std::size_t count = phi_table.size();
    std::vector<double> x(count), y(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double d = static_cast<double>(i + 1);
        x[i] = kind == MixingKind::geometric ? d : std::log(d);
        y[i] = std::log(phi_table[i]);
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= double(count);
    my /= double(count);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    const double slope = sxy / sxx;
    const double intercept = my - slope * mx;
    double ss = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        const double e = y[i] - (intercept + slope * x[i]);
        ss += e * e;
    }
    const double residual = std::sqrt(ss / double(count));
    const double C = std::exp(intercept);
    if (kind == MixingKind::geometric) {
        const double tau = slope < 0.0 ? -1.0 / slope : std::numeric_limits<double>::infinity();
        return {MixingProfile::geometric(C, tau), residual};
    }
    return {MixingProfile::algebraic(C, std::max(0.0, -slope)), residual};
}

}  // namespace mixgen
