#include "mixgen/dynamic.hpp"

#include "mixgen/csv.hpp"
#include "mixgen/error.hpp"
#include "mixgen/parallel.hpp"
#include "mixgen/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace mixgen {

namespace {

void check_entries_unit(const Eigen::MatrixXd& m, const char* what) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            const double v = m(i, j);
            if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
                throw ValidationError(std::string(what) + " entries must lie in [0, 1]");
            }
        }
    }
}

std::vector<std::size_t> resolve_w_set(const DynamicLoss& loss, const std::vector<std::size_t>& w_set) {
    if (w_set.empty()) {
        std::vector<std::size_t> all(loss.size());
        std::iota(all.begin(), all.end(), std::size_t{0});
        return all;
    }
    for (std::size_t w : w_set) {
        if (w >= loss.size()) throw ValidationError("hypothesis index " + std::to_string(w) + " out of range");
    }
    return w_set;
}

void check_model(const DynamicLoss& loss, const ProcessModel& model) {
    if (model.size() != loss.alphabet_size()) {
        throw ValidationError("dynamic loss alphabet does not match the model's state count");
    }
}

double clamp_gap(double v) { return v > kGapNoiseFloor ? v : 0.0; }

// Law of a block of `length` symbols whose first symbol has law `first` and
// which then follows the chain. Index is sum_j z_{t-j} A^j with the newest
// symbol in the lowest digit, matching the memory-table layout.
Eigen::VectorXd block_distribution(const Eigen::MatrixXd& transition, const Eigen::VectorXd& first,
                                   std::size_t length) {
    const std::size_t a = static_cast<std::size_t>(transition.rows());
    Eigen::VectorXd dist = first;
    for (std::size_t step = 1; step < length; ++step) {
        Eigen::VectorXd next = Eigen::VectorXd::Zero(dist.size() * Eigen::Index(a));
        for (Eigen::Index key = 0; key < dist.size(); ++key) {
            const double p = dist(key);
            if (p == 0.0) continue;
            const std::size_t newest = std::size_t(key) % a;
            for (std::size_t z = 0; z < a; ++z) {
                next(key * Eigen::Index(a) + Eigen::Index(z)) = p * transition(Eigen::Index(newest), Eigen::Index(z));
            }
        }
        dist = std::move(next);
    }
    return dist;
}

// Memory-table expectation under a block law over the first dist.size() columns.
Eigen::VectorXd memory_expectation(const DynamicLoss& loss, const Eigen::VectorXd& dist) {
    return loss.table().leftCols(dist.size()) * dist;
}

double discounted_value(const DynamicLoss& loss, std::size_t w, double acc) {
    return std::clamp(loss.bias()(Eigen::Index(w)) + loss.scale() * acc, 0.0, 1.0);
}

// E[l(w, block)] for all w over a block of `length` symbols with first-symbol
// law `first`.
Eigen::VectorXd block_expectation(const DynamicLoss& loss, const ProcessModel& model, const Eigen::VectorXd& first,
                                  std::size_t length) {
    const Eigen::MatrixXd& p = model.transition();
    const std::size_t a = model.size();
    if (loss.kind() == DynamicKind::memory_table) {
        const std::size_t m = loss.memory();
        if (length <= m) return memory_expectation(loss, block_distribution(p, first, length));
        // Only the trailing m symbols matter; their first one has law first P^{length-m}.
        const Eigen::VectorXd shifted = matrix_power(p, length - m).transpose() * first;
        return memory_expectation(loss, block_distribution(p, shifted, m));
    }
    block_count(a, length);
    const std::size_t wn = loss.size();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(Eigen::Index(wn));
    // acc.col(k) holds sum_i gamma^{k-i} u(w, z_i) after k+1 symbols.
    Eigen::MatrixXd acc(static_cast<Eigen::Index>(wn), static_cast<Eigen::Index>(length));
    const Eigen::MatrixXd& u = loss.table();
    const double g = loss.gamma();
    auto visit = [&](auto&& self, std::size_t depth, std::size_t prev, double prob) -> void {
        for (std::size_t z = 0; z < a; ++z) {
            const double q = depth == 0 ? first(Eigen::Index(z)) : p(Eigen::Index(prev), Eigen::Index(z));
            if (q == 0.0) continue;
            const double pz = prob * q;
            if (depth == 0) {
                acc.col(0) = u.col(Eigen::Index(z));
            } else {
                acc.col(Eigen::Index(depth)) = g * acc.col(Eigen::Index(depth - 1)) + u.col(Eigen::Index(z));
            }
            if (depth + 1 == length) {
                for (std::size_t w = 0; w < wn; ++w) {
                    out(Eigen::Index(w)) += pz * discounted_value(loss, w, acc(Eigen::Index(w), Eigen::Index(depth)));
                }
            } else {
                self(self, depth + 1, z, pz);
            }
        }
    };
    if (length > 0) visit(visit, 0, 0, 1.0);
    return out;
}

std::size_t draw(CounterRng& rng, const Eigen::Ref<const Eigen::VectorXd>& probs) {
    const double u = rng.uniform();
    double cumulative = 0.0;
    std::size_t last_positive = 0;
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
        if (probs(i) <= 0.0) continue;
        last_positive = std::size_t(i);
        cumulative += probs(i);
        if (u < cumulative) return std::size_t(i);
    }
    return last_positive;
}

// Running mean and variance per hypothesis.
struct Moments {
    Eigen::VectorXd sum;
    Eigen::VectorXd sum_sq;
    std::size_t count = 0;

    explicit Moments(std::size_t w) : sum(Eigen::VectorXd::Zero(Eigen::Index(w))), sum_sq(sum) {}
    void add(const Eigen::VectorXd& v) {
        sum += v;
        sum_sq += v.cwiseProduct(v);
        ++count;
    }
    Eigen::VectorXd mean() const { return sum / double(count); }
    Eigen::VectorXd standard_error() const {
        const double c = double(count);
        if (count < 2) return Eigen::VectorXd::Constant(sum.size(), std::numeric_limits<double>::quiet_NaN());
        Eigen::VectorXd var = (sum_sq - sum.cwiseProduct(sum) / c) / (c - 1.0);
        return (var.cwiseMax(0.0) / c).cwiseSqrt();
    }
};

}  // namespace

std::size_t block_count(std::size_t alphabet, std::size_t k, std::size_t cap) {
    std::size_t count = 1;
    for (std::size_t i = 0; i < k; ++i) {
        if (alphabet != 0 && count > cap / alphabet) {
            throw SizeError("block enumeration of " + std::to_string(alphabet) + "^" + std::to_string(k) +
                            " exceeds the cap of " + std::to_string(cap) + "; use the Monte Carlo evaluator");
        }
        count *= alphabet;
    }
    if (count > cap) throw SizeError("block enumeration exceeds the cap; use the Monte Carlo evaluator");
    return count;
}

DynamicLoss DynamicLoss::memory_table(std::size_t m, std::size_t alphabet, Eigen::MatrixXd table) {
    if (m < 1) throw ValidationError("memory m must be >= 1");
    if (alphabet < 1) throw ValidationError("alphabet must be non-empty");
    if (table.rows() < 1) throw ValidationError("memory table needs at least one hypothesis");
    std::size_t cols = 0;
    try {
        cols = block_count(alphabet, m, std::numeric_limits<std::size_t>::max() / 2);
    } catch (const SizeError&) {
        throw SizeError("memory table A^m overflows");
    }
    if (static_cast<std::size_t>(table.cols()) != cols) {
        throw ValidationError("memory table needs A^m = " + std::to_string(cols) + " columns, got " +
                              std::to_string(table.cols()));
    }
    check_entries_unit(table, "memory table");
    DynamicLoss out;
    out.kind_ = DynamicKind::memory_table;
    out.memory_ = m;
    out.alphabet_ = alphabet;
    out.table_ = std::move(table);
    out.bias_ = Eigen::VectorXd::Zero(out.table_.rows());
    return out;
}

DynamicLoss DynamicLoss::discounted(double gamma, double scale, Eigen::MatrixXd weights, Eigen::VectorXd bias) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw ValidationError("discount gamma must lie in (0, 1)");
    if (!(scale > 0.0) || !std::isfinite(scale)) throw ValidationError("discount scale must be > 0");
    if (weights.rows() < 1 || weights.cols() < 1) throw ValidationError("discount weights must be non-empty");
    check_entries_unit(weights, "discount weights");
    if (bias.size() == 0) bias = Eigen::VectorXd::Zero(weights.rows());
    if (bias.size() != weights.rows()) throw ValidationError("discount bias needs one entry per hypothesis");
    for (double b : bias) {
        if (!std::isfinite(b)) throw ValidationError("discount bias must be finite");
    }
    DynamicLoss out;
    out.kind_ = DynamicKind::discounted;
    out.memory_ = 0;
    out.alphabet_ = static_cast<std::size_t>(weights.cols());
    out.gamma_ = gamma;
    out.scale_ = scale;
    out.table_ = std::move(weights);
    out.bias_ = std::move(bias);
    return out;
}

DynamicLoss DynamicLoss::from_static(const HypothesisSpace& space) {
    return memory_table(1, space.alphabet_size(), space.table());
}

void DynamicLoss::check_prefix(std::span<const std::size_t> prefix) const {
    if (prefix.empty()) throw ValidationError("dynamic loss needs a non-empty prefix");
    for (std::size_t z : prefix) {
        if (z >= alphabet_) throw ValidationError("prefix symbol outside the loss alphabet");
    }
}

std::size_t DynamicLoss::window_key(std::span<const std::size_t> prefix) const {
    check_prefix(prefix);
    const std::size_t len = std::min(memory_, prefix.size());
    std::size_t key = 0;
    for (std::size_t i = prefix.size() - len; i < prefix.size(); ++i) key = key * alphabet_ + prefix[i];
    return key;
}

double DynamicLoss::eval(std::size_t w, std::span<const std::size_t> prefix) const {
    if (w >= size()) throw ValidationError("hypothesis index out of range");
    if (kind_ == DynamicKind::memory_table) return table_(Eigen::Index(w), Eigen::Index(window_key(prefix)));
    check_prefix(prefix);
    double acc = 0.0;
    for (std::size_t z : prefix) acc = gamma_ * acc + table_(Eigen::Index(w), Eigen::Index(z));
    return discounted_value(*this, w, acc);
}

Eigen::VectorXd DynamicLoss::eval_all(std::span<const std::size_t> prefix) const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(size()));
    for (std::size_t w = 0; w < size(); ++w) out(Eigen::Index(w)) = eval(w, prefix);
    return out;
}

double DynamicLoss::forgetting_envelope(std::size_t d) const {
    if (kind_ == DynamicKind::memory_table) return d >= memory_ ? 0.0 : 1.0;
    return scale_ * std::pow(gamma_, double(d)) / (1.0 - gamma_);
}

Eigen::MatrixXd path_losses(const DynamicLoss& loss, const SamplePath& path) {
    const std::size_t n = path.size();
    const std::size_t a = loss.alphabet_size();
    for (std::size_t z : path.symbols) {
        if (z >= a) throw ValidationError("path symbol outside the loss alphabet");
    }
    Eigen::MatrixXd out(Eigen::Index(loss.size()), Eigen::Index(n));
    if (loss.kind() == DynamicKind::memory_table) {
        const std::size_t modulus = block_count(a, loss.memory(), std::numeric_limits<std::size_t>::max() / 2);
        std::size_t key = 0;
        for (std::size_t t = 0; t < n; ++t) {
            key = (key * a + path.symbols[t]) % modulus;
            out.col(Eigen::Index(t)) = loss.table().col(Eigen::Index(key));
        }
        return out;
    }
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(Eigen::Index(loss.size()));
    for (std::size_t t = 0; t < n; ++t) {
        acc = loss.gamma() * acc + loss.table().col(Eigen::Index(path.symbols[t]));
        for (std::size_t w = 0; w < loss.size(); ++w) {
            out(Eigen::Index(w), Eigen::Index(t)) = discounted_value(loss, w, acc(Eigen::Index(w)));
        }
    }
    return out;
}

TildeLoss tilde_test_loss(const DynamicLoss& loss, const ProcessModel& model, std::size_t horizon) {
    check_model(loss, model);
    if (horizon < 1) throw DomainError("test-loss horizon must be >= 1");
    TildeLoss out;
    if (loss.kind() == DynamicKind::memory_table) {
        if (horizon < loss.memory()) {
            throw DomainError("memory-" + std::to_string(loss.memory()) + " loss needs horizon >= m");
        }
        out.truncation_error = 0.0;
    } else {
        out.truncation_error = loss.forgetting_envelope(horizon);
    }
    out.values = block_expectation(loss, model, model.stationary(), horizon);
    return out;
}

double tilde_test_loss(const DynamicLoss& loss, const ProcessModel& model, std::size_t w, std::size_t horizon) {
    if (w >= loss.size()) throw ValidationError("hypothesis index out of range");
    return tilde_test_loss(loss, model, horizon).values(Eigen::Index(w));
}

TildeLoss tilde_test_loss_mc(const DynamicLoss& loss, const ProcessModel& model, std::size_t horizon,
                             std::size_t samples, std::uint64_t seed) {
    check_model(loss, model);
    if (horizon < 1) throw DomainError("test-loss horizon must be >= 1");
    if (samples < 2) throw DomainError("Monte Carlo needs at least two samples");
    CounterRng rng(seed);
    Moments moments(loss.size());
    std::vector<std::size_t> block(horizon);
    const Eigen::MatrixXd& p = model.transition();
    for (std::size_t k = 0; k < samples; ++k) {
        block[0] = draw(rng, model.stationary());
        for (std::size_t i = 1; i < horizon; ++i) block[i] = draw(rng, p.row(Eigen::Index(block[i - 1])).transpose());
        moments.add(loss.eval_all(block));
    }
    TildeLoss out;
    out.values = moments.mean();
    out.standard_error = moments.standard_error().maxCoeff();
    out.truncation_error = loss.kind() == DynamicKind::memory_table && horizon >= loss.memory()
                               ? 0.0
                               : loss.forgetting_envelope(horizon);
    out.exact = false;
    return out;
}

std::size_t default_tilde_horizon(const DynamicLoss& loss, const ProcessModel& model) {
    check_model(loss, model);
    if (loss.kind() == DynamicKind::memory_table) return loss.memory();
    const std::size_t a = loss.alphabet_size();
    if (a == 1) return 64;
    std::size_t horizon = 1;
    std::size_t count = a;
    while (count <= kBlockEnumerationCap / a) {
        count *= a;
        ++horizon;
    }
    return horizon;
}

TildeLoss stationary_test_loss(const DynamicLoss& loss, const ProcessModel& model, std::size_t horizon,
                               std::size_t mc_samples, std::uint64_t seed) {
    if (horizon == 0) horizon = default_tilde_horizon(loss, model);
    try {
        return tilde_test_loss(loss, model, horizon);
    } catch (const SizeError&) {
        return tilde_test_loss_mc(loss, model, horizon, mc_samples, seed);
    }
}

ForgettingProfile forgetting_profile(const DynamicLoss& loss, std::size_t max_d, std::size_t cap) {
    if (max_d < 1) throw DomainError("forgetting profile needs max_d >= 1");
    ForgettingProfile out;
    out.values.resize(max_d);
    out.lower_bound.resize(max_d);
    out.enumerated.assign(max_d, false);
    const std::size_t a = loss.alphabet_size();
    const Eigen::MatrixXd& t = loss.table();

    if (loss.kind() == DynamicKind::memory_table) {
        out.exact = true;
        for (std::size_t d = 1; d <= max_d; ++d) {
            double sup = 0.0;
            if (d < loss.memory()) {
                const std::size_t groups = block_count(a, d, std::numeric_limits<std::size_t>::max() / 2);
                Eigen::MatrixXd lo = Eigen::MatrixXd::Constant(t.rows(), Eigen::Index(groups), 2.0);
                Eigen::MatrixXd hi = Eigen::MatrixXd::Constant(t.rows(), Eigen::Index(groups), -1.0);
                for (Eigen::Index key = 0; key < t.cols(); ++key) {
                    const Eigen::Index g = key % Eigen::Index(groups);
                    lo.col(g) = lo.col(g).cwiseMin(t.col(key));
                    hi.col(g) = hi.col(g).cwiseMax(t.col(key));
                }
                sup = (hi - lo).maxCoeff();
            }
            out.values[d - 1] = sup;
            out.lower_bound[d - 1] = sup;
            out.enumerated[d - 1] = true;
        }
        return out;
    }

    out.exact = false;
    const double g = loss.gamma();
    const Eigen::Index wn = t.rows();
    for (std::size_t d = 1; d <= max_d; ++d) {
        out.values[d - 1] = loss.forgetting_envelope(d);
        out.lower_bound[d - 1] = std::numeric_limits<double>::quiet_NaN();

        // Older symbols probed per suffix, as many as fit in the cap.
        std::size_t suffixes = 0;
        try {
            suffixes = block_count(a, d, cap);
        } catch (const SizeError&) {
            continue;
        }
        std::size_t extra = 0;
        std::size_t nodes_per_suffix = 1;
        std::size_t level = 1;
        while (extra < 30) {
            if (a != 0 && level > std::numeric_limits<std::size_t>::max() / a) break;
            const std::size_t next_level = level * a;
            if (nodes_per_suffix + next_level > cap / suffixes) break;
            nodes_per_suffix += next_level;
            level = next_level;
            ++extra;
        }
        if (extra == 0) continue;

        double sup = 0.0;
        Eigen::MatrixXd acc(wn, Eigen::Index(extra + 1));
        Eigen::VectorXd lo(wn), hi(wn);
        for (std::size_t key = 0; key < suffixes; ++key) {
            // Newest symbol is the lowest digit of key, at discount power 0.
            Eigen::VectorXd base = Eigen::VectorXd::Zero(wn);
            std::size_t rest = key;
            double power = 1.0;
            for (std::size_t j = 0; j < d; ++j) {
                base += power * t.col(Eigen::Index(rest % a));
                rest /= a;
                power *= g;
            }
            acc.col(0) = base;
            for (Eigen::Index w = 0; w < wn; ++w) lo(w) = hi(w) = discounted_value(loss, std::size_t(w), base(w));
            auto visit = [&](auto&& self, std::size_t depth, double pw) -> void {
                for (std::size_t z = 0; z < a; ++z) {
                    acc.col(Eigen::Index(depth)) = acc.col(Eigen::Index(depth - 1)) + pw * t.col(Eigen::Index(z));
                    for (Eigen::Index w = 0; w < wn; ++w) {
                        const double v = discounted_value(loss, std::size_t(w), acc(w, Eigen::Index(depth)));
                        lo(w) = std::min(lo(w), v);
                        hi(w) = std::max(hi(w), v);
                    }
                    if (depth < extra) self(self, depth + 1, pw * g);
                }
            };
            visit(visit, 1, power);
            sup = std::max(sup, (hi - lo).maxCoeff());
        }
        out.lower_bound[d - 1] = sup;
        out.enumerated[d - 1] = true;
    }
    return out;
}

GapMax exact_block_beta(const ProcessModel& model, const DynamicLoss& loss, const std::vector<std::size_t>& w_set,
                        std::size_t d) {
    check_model(loss, model);
    if (d < 1) throw DomainError("block length d must be >= 1");
    const std::vector<std::size_t> ws = resolve_w_set(loss, w_set);
    // The loss sees only the d-block; a memory-m loss only its last min(d, m)
    // symbols, the first of which sits 2d - len + 1 steps after Z_{t-2d}.
    const std::size_t len = loss.kind() == DynamicKind::memory_table ? std::min(d, loss.memory()) : d;
    const std::size_t lag = 2 * d - len + 1;
    const Eigen::VectorXd independent = block_expectation(loss, model, model.stationary(), len);
    const Eigen::MatrixXd power = matrix_power(model.transition(), lag);

    const std::size_t states = model.size();
    std::vector<Eigen::VectorXd> conditional(states);
    parallel_for(states, [&](std::size_t s) {
        conditional[s] = block_expectation(loss, model, power.row(Eigen::Index(s)).transpose(), len);
    });

    GapMax best;
    best.value = -std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < states; ++s) {
        for (std::size_t w : ws) {
            const double gap = independent(Eigen::Index(w)) - conditional[s](Eigen::Index(w));
            if (gap > best.value) {
                best.value = gap;
                best.w = w;
                best.state = s;
            }
        }
    }
    best.value = clamp_gap(best.value);
    return best;
}

namespace {

double signed_gap(GapSign sign, double conditional, double test) {
    return sign == GapSign::loss_minus_test ? conditional - test : test - conditional;
}

GapMax memory_dynamic_phi(const ProcessModel& model, const DynamicLoss& loss, const std::vector<std::size_t>& ws,
                          std::size_t d, GapSign sign) {
    const std::size_t m = loss.memory();
    const std::size_t a = model.size();
    const Eigen::MatrixXd& p = model.transition();
    const Eigen::VectorXd test = memory_expectation(loss, block_distribution(p, model.stationary(), m));

    GapMax best;
    best.value = -std::numeric_limits<double>::infinity();
    auto consider = [&](const Eigen::VectorXd& conditional, std::size_t state) {
        for (std::size_t w : ws) {
            const double gap = signed_gap(sign, conditional(Eigen::Index(w)), test(Eigen::Index(w)));
            if (gap > best.value) {
                best.value = gap;
                best.w = w;
                best.state = state;
            }
        }
    };

    if (d >= m) {
        // Window z_{t-m+1..t} lies strictly after Z_{t-d}.
        const Eigen::MatrixXd power = matrix_power(p, d - m + 1);
        std::vector<Eigen::VectorXd> conditional(a);
        parallel_for(a, [&](std::size_t s) {
            conditional[s] = memory_expectation(loss, block_distribution(p, power.row(Eigen::Index(s)).transpose(), m));
        });
        for (std::size_t s = 0; s < a; ++s) consider(conditional[s], s);
    } else {
        // The oldest m - d window symbols are already observed at time t - d.
        const std::size_t known = m - d;
        const std::size_t known_count = block_count(a, known, std::numeric_limits<std::size_t>::max() / 2);
        const std::size_t tail_count = block_count(a, d, std::numeric_limits<std::size_t>::max() / 2);
        std::vector<Eigen::VectorXd> continuation(a);
        for (std::size_t s = 0; s < a; ++s) {
            continuation[s] = block_distribution(p, p.row(Eigen::Index(s)).transpose(), d);
        }
        std::vector<Eigen::VectorXd> conditional(known_count);
        std::vector<char> feasible(known_count, 0);
        parallel_for(known_count, [&](std::size_t key) {
            // Digits of key, oldest first; skip histories the chain cannot produce.
            std::vector<std::size_t> digits(known);
            std::size_t rest = key;
            for (std::size_t j = 0; j < known; ++j) {
                digits[known - 1 - j] = rest % a;
                rest /= a;
            }
            for (std::size_t j = 1; j < known; ++j) {
                if (p(Eigen::Index(digits[j - 1]), Eigen::Index(digits[j])) == 0.0) return;
            }
            const Eigen::VectorXd& cont = continuation[digits.back()];
            Eigen::VectorXd e = Eigen::VectorXd::Zero(Eigen::Index(loss.size()));
            for (std::size_t c = 0; c < tail_count; ++c) {
                const double q = cont(Eigen::Index(c));
                if (q != 0.0) e += q * loss.table().col(Eigen::Index(key * tail_count + c));
            }
            conditional[key] = std::move(e);
            feasible[key] = 1;
        });
        for (std::size_t key = 0; key < known_count; ++key) {
            if (feasible[key]) consider(conditional[key], key);
        }
    }
    best.value = clamp_gap(best.value);
    best.exact = true;
    return best;
}

GapMax discounted_dynamic_phi(const ProcessModel& model, const DynamicLoss& loss, const std::vector<std::size_t>& ws,
                              std::size_t d, const DynamicPhiOptions& options) {
    const std::size_t a = model.size();
    std::size_t horizon = options.horizon != 0 ? options.horizon : default_tilde_horizon(loss, model);
    horizon = std::max(horizon, d + 1);
    if (options.samples < 2) throw DomainError("Monte Carlo needs at least two samples");
    const TildeLoss test = stationary_test_loss(loss, model, horizon, std::max<std::size_t>(options.samples, 200000),
                                                stream_seed(options.seed, a));
    const Eigen::MatrixXd& p = model.transition();
    const Eigen::VectorXd& pi = model.stationary();

    // Time reversal R(x, y) = pi(y) P(y, x) / pi(x).
    Eigen::MatrixXd reversed = Eigen::MatrixXd::Zero(Eigen::Index(a), Eigen::Index(a));
    for (std::size_t x = 0; x < a; ++x) {
        if (pi(Eigen::Index(x)) <= 0.0) continue;
        for (std::size_t y = 0; y < a; ++y) {
            reversed(Eigen::Index(x), Eigen::Index(y)) =
                pi(Eigen::Index(y)) * p(Eigen::Index(y), Eigen::Index(x)) / pi(Eigen::Index(x));
        }
        reversed.row(Eigen::Index(x)) /= reversed.row(Eigen::Index(x)).sum();
    }

    const std::size_t anchor = horizon - 1 - d;
    std::vector<Eigen::VectorXd> means(a), errors(a);
    std::vector<char> used(a, 0);
    parallel_for(a, [&](std::size_t s) {
        if (pi(Eigen::Index(s)) <= 0.0) return;
        CounterRng rng(stream_seed(options.seed, s));
        Moments moments(loss.size());
        std::vector<std::size_t> block(horizon);
        for (std::size_t k = 0; k < options.samples; ++k) {
            block[anchor] = s;
            for (std::size_t i = anchor; i-- > 0;) block[i] = draw(rng, reversed.row(Eigen::Index(block[i + 1])).transpose());
            for (std::size_t i = anchor + 1; i < horizon; ++i) {
                block[i] = draw(rng, p.row(Eigen::Index(block[i - 1])).transpose());
            }
            moments.add(loss.eval_all(block));
        }
        means[s] = moments.mean();
        errors[s] = moments.standard_error();
        used[s] = 1;
    });

    GapMax best;
    best.value = -std::numeric_limits<double>::infinity();
    best.exact = false;
    for (std::size_t s = 0; s < a; ++s) {
        if (!used[s]) continue;
        for (std::size_t w : ws) {
            const double gap = signed_gap(options.sign, means[s](Eigen::Index(w)), test.values(Eigen::Index(w)));
            if (gap > best.value) {
                best.value = gap;
                best.w = w;
                best.state = s;
                const double se = errors[s](Eigen::Index(w));
                best.standard_error = std::sqrt(se * se + test.standard_error * test.standard_error);
            }
        }
    }
    best.value = clamp_gap(best.value);
    return best;
}

}  // namespace

GapMax dynamic_phi(const ProcessModel& model, const DynamicLoss& loss, const std::vector<std::size_t>& w_set,
                   std::size_t d, const DynamicPhiOptions& options) {
    check_model(loss, model);
    if (d < 1) throw DomainError("lag d must be >= 1");
    const std::vector<std::size_t> ws = resolve_w_set(loss, w_set);
    if (loss.kind() == DynamicKind::memory_table) return memory_dynamic_phi(model, loss, ws, d, options.sign);
    return discounted_dynamic_phi(model, loss, ws, d, options);
}

std::vector<MixingBoundRow> dynamic_mixing_report(const ProcessModel& model, const DynamicLoss& loss,
                                     const std::vector<std::size_t>& w_set, const std::vector<std::size_t>& d_grid,
                                     const DynamicPhiOptions& options, HalfRounding rounding) {
    if (d_grid.empty()) return {};
    std::size_t max_half = 1;
    for (std::size_t d : d_grid) {
        if (half_lag(d, rounding) < 1) throw DomainError("lag d is too small for the half-lag rounding");
        max_half = std::max(max_half, half_lag(d, rounding));
    }
    const ForgettingProfile forgetting = forgetting_profile(loss, max_half);
    std::vector<MixingBoundRow> rows;
    rows.reserve(d_grid.size());
    for (std::size_t d : d_grid) {
        MixingBoundRow row;
        row.d = d;
        row.half = half_lag(d, rounding);
        const GapMax lhs = dynamic_phi(model, loss, w_set, d, options);
        row.lhs = lhs.value;
        row.w = lhs.w;
        row.state = lhs.state;
        row.exact = lhs.exact;
        row.forgetting = forgetting.values[row.half - 1];
        row.beta = exact_block_beta(model, loss, w_set, row.half).value;
        row.rhs = 2.0 * row.forgetting + row.beta;
        row.slack = row.rhs - row.lhs;
        rows.push_back(row);
    }
    return rows;
}

std::vector<MixingBoundRow> verify_dynamic_mixing_bound(const ProcessModel& model, const DynamicLoss& loss,
                                     const std::vector<std::size_t>& w_set, const std::vector<std::size_t>& d_grid,
                                     const DynamicPhiOptions& options, HalfRounding rounding) {
    std::vector<MixingBoundRow> rows = dynamic_mixing_report(model, loss, w_set, d_grid, options, rounding);
    for (const MixingBoundRow& r : rows) {
        if (r.lhs > r.rhs + kDynamicBoundTolerance) {
            throw ConsistencyError("dynamic mixing bound violated at w = " + std::to_string(r.w) +
                                   ", state = " + std::to_string(r.state) + ", d = " + std::to_string(r.d) +
                                   ": phi " + format_number(r.lhs) + " > " + format_number(r.rhs));
        }
    }
    return rows;
}

Eigen::MatrixXd dynamic_costs(const DynamicLoss& loss, const SamplePath& path, const Eigen::VectorXd& test) {
    if (test.size() != Eigen::Index(loss.size())) throw ValidationError("test-loss vector size mismatch");
    return path_losses(loss, path).colwise() - test;
}

GameTrace run_dynamic_game(const DynamicLoss& loss, const SamplePath& path, const Eigen::VectorXd& test,
                           OnlineLearner& learner, std::size_t delay) {
    learner.reset();
    return play_game(learner, dynamic_costs(loss, path, test), path.symbols, delay);
}

double dynamic_generalization_error(const PosteriorDist& posterior, const DynamicLoss& loss, const SamplePath& path,
                                    const Eigen::VectorXd& test) {
    if (posterior.size() != loss.size()) throw ValidationError("posterior size mismatch");
    if (path.size() == 0) throw ValidationError("empty sample path");
    const Eigen::VectorXd train = path_losses(loss, path).rowwise().mean();
    return posterior.probabilities().dot(test - train);
}

Decomposition decompose_dynamic(const GameTrace& trace, const PosteriorDist& comparator, const DynamicLoss& loss,
                                const SamplePath& path, const Eigen::VectorXd& test) {
    return decompose_with_gen(trace, comparator, dynamic_generalization_error(comparator, loss, path, test));
}

}  // namespace mixgen
