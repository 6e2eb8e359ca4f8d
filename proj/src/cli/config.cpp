#include "mixgen/cli.hpp"

#include "mixgen/error.hpp"
#include "mixgen/game.hpp"
#include "mixgen/learner.hpp"
#include "mixgen/parallel.hpp"
#include "mixgen/rng.hpp"

#include <cmath>
#include <limits>

namespace mixgen::cli {

namespace {

// Field accessors that name the full path of the offending field.
const Json* find(const Json& j, const std::string& key) {
    if (!j.is_object()) return nullptr;
    auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
}

double get_number(const Json& v, const std::string& path) {
    if (!v.is_number()) throw ValidationError(path + ": expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ValidationError(path + ": expected a finite number");
    return x;
}

std::uint64_t get_unsigned(const Json& v, const std::string& path) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer()) {
        if (v.get<std::int64_t>() < 0) throw ValidationError(path + ": expected a non-negative integer");
        return static_cast<std::uint64_t>(v.get<std::int64_t>());
    }
    throw ValidationError(path + ": expected a non-negative integer");
}

std::string get_string(const Json& v, const std::string& path) {
    if (!v.is_string()) throw ValidationError(path + ": expected a string");
    return v.get<std::string>();
}

const Json& section(const Json& j, const std::string& key) {
    const Json* s = find(j, key);
    if (s == nullptr) throw ValidationError(key + ": missing section");
    if (!s->is_object()) throw ValidationError(key + ": expected an object");
    return *s;
}

// Re-raises a loader error with the section name in front.
template <class Fn>
auto in_section(const std::string& name, Fn&& fn) {
    try {
        return fn();
    } catch (const ValidationError& e) {
        throw ValidationError(name + ": " + e.what());
    }
}

MixingProfile parse_mixing(const Json& j) {
    const std::string kind = get_string(j.value("kind", Json("geometric")), "online.mixing.kind");
    const Json* c = find(j, "C");
    if (c == nullptr) throw ValidationError("online.mixing.C: missing");
    const double C = get_number(*c, "online.mixing.C");
    try {
        if (kind == "geometric") {
            const Json* tau = find(j, "tau");
            if (tau == nullptr) throw ValidationError("online.mixing.tau: missing");
            return MixingProfile::geometric(C, get_number(*tau, "online.mixing.tau"));
        }
        if (kind == "algebraic") {
            const Json* r = find(j, "r");
            if (r == nullptr) throw ValidationError("online.mixing.r: missing");
            return MixingProfile::algebraic(C, get_number(*r, "online.mixing.r"));
        }
    } catch (const DomainError& e) {
        throw ValidationError(std::string("online.mixing: ") + e.what());
    }
    throw ValidationError("online.mixing.kind: expected 'geometric' or 'algebraic'");
}

}  // namespace

ExperimentConfig parse_config(const Json& j) {
    if (!j.is_object()) throw ValidationError("config: expected a JSON object");
    ExperimentConfig c;

    c.process = section(j, "process");

    const Json& loss = section(j, "loss");
    if (const Json* l = find(loss, "losses")) c.losses = Json{{"losses", *l}};
    if (const Json* d = find(loss, "dynamic")) c.dynamic_loss = *d;
    if (c.losses.is_null() && c.dynamic_loss.is_null()) {
        throw ValidationError("loss: needs 'losses' or 'dynamic'");
    }

    if (const Json* learner = find(j, "learner")) {
        const std::string kind = get_string(learner->value("kind", Json("gibbs")), "learner.kind");
        if (kind == "gibbs") {
            c.learner = LearnerKind::gibbs;
            if (const Json* b = find(*learner, "beta")) c.beta = get_number(*b, "learner.beta");
            if (!(c.beta >= 0.0)) throw ValidationError("learner.beta: must be >= 0");
        } else if (kind == "erm") {
            c.learner = LearnerKind::erm;
        } else {
            throw ValidationError("learner.kind: expected 'gibbs' or 'erm'");
        }
    }

    if (const Json* online = find(j, "online")) {
        if (const Json* a = find(*online, "algorithm")) {
            c.algorithm = in_section("online.algorithm", [&] { return parse_algorithm(get_string(*a, "online.algorithm")); });
        }
        if (const Json* e = find(*online, "eta")) c.eta = get_number(*e, "online.eta");
        if (!(c.eta > 0.0)) throw ValidationError("online.eta: must be > 0");
        if (const Json* g = find(*online, "eta_grid")) {
            EtaGrid grid;
            grid.eta0 = get_number(g->value("eta0", Json(1.0)), "online.eta_grid.eta0");
            if (!(grid.eta0 > 0.0)) throw ValidationError("online.eta_grid.eta0: must be > 0");
            if (const Json* k = find(*g, "count")) {
                grid.count = get_unsigned(*k, "online.eta_grid.count");
                if (grid.count < 1) throw ValidationError("online.eta_grid.count: must be >= 1");
            } else {
                grid.count = 0;  // resolved from n below
            }
            c.eta_grid = grid;
        }
        if (const Json* d = find(*online, "delay")) {
            if (d->is_string()) {
                const std::string mode = d->get<std::string>();
                if (mode == "auto-geometric") {
                    c.delay_mode = DelayMode::auto_geometric;
                } else if (mode == "auto-algebraic") {
                    c.delay_mode = DelayMode::auto_algebraic;
                } else {
                    throw ValidationError("online.delay: expected an integer, 'auto-geometric' or 'auto-algebraic'");
                }
            } else {
                c.delay_mode = DelayMode::fixed;
                c.delay = get_unsigned(*d, "online.delay");
            }
        }
        if (const Json* m = find(*online, "mixing")) c.mixing = parse_mixing(*m);
    }

    const Json& ex = section(j, "experiment");
    if (const Json* v = find(ex, "n")) c.n = get_unsigned(*v, "experiment.n");
    if (const Json* v = find(ex, "replicates")) c.replicates = get_unsigned(*v, "experiment.replicates");
    if (const Json* v = find(ex, "delta")) c.delta = get_number(*v, "experiment.delta");
    if (const Json* v = find(ex, "seed")) c.seed = get_unsigned(*v, "experiment.seed");
    if (const Json* v = find(ex, "max_lag")) c.max_lag = get_unsigned(*v, "experiment.max_lag");
    if (const Json* v = find(ex, "threads")) c.threads = get_unsigned(*v, "experiment.threads");
    if (const Json* v = find(ex, "coverage_mode")) {
        const std::string mode = get_string(*v, "experiment.coverage_mode");
        if (mode == "martingale") {
            c.coverage_mode = CoverageMode::martingale;
        } else if (mode == "generalization") {
            c.coverage_mode = CoverageMode::generalization;
        } else {
            throw ValidationError("experiment.coverage_mode: expected 'martingale' or 'generalization'");
        }
    }
    if (const Json* v = find(ex, "d_grid")) {
        if (!v->is_array() || v->empty()) throw ValidationError("experiment.d_grid: expected a non-empty array");
        for (const Json& d : *v) c.d_grid.push_back(get_unsigned(d, "experiment.d_grid"));
    }

    if (c.n < 1) throw ValidationError("experiment.n: must be >= 1");
    if (c.replicates < 1) throw ValidationError("experiment.replicates: must be >= 1");
    if (!(c.delta > 0.0 && c.delta < 1.0)) throw ValidationError("experiment.delta: must lie in (0, 1)");
    if (c.max_lag < 1) throw ValidationError("experiment.max_lag: must be >= 1");
    for (std::size_t d : c.d_grid) {
        if (d < 1 || d > c.n) throw ValidationError("experiment.d_grid: delay " + std::to_string(d) + " outside [1, n]");
    }
    if (c.delay_mode == DelayMode::fixed && (c.delay < 1 || c.delay > c.n)) {
        throw ValidationError("online.delay: must lie in [1, n]");
    }
    if (c.eta_grid && c.eta_grid->count == 0) {
        *c.eta_grid = EtaGrid::for_horizon(c.eta_grid->eta0, c.n, c.delta);
    }
    if (c.eta_grid) c.eta_grid->delta = c.delta;

    if (const Json* out = find(j, "output")) c.output_dir = get_string(*out, "output");
    return c;
}

const HypothesisSpace& Setup::static_space() const {
    if (!space) throw ConfigError("loss.losses: this command needs a static loss table");
    return *space;
}

const DynamicLoss& Setup::dynamic_loss() const {
    if (!dynamic) throw ConfigError("loss.dynamic: this command needs a dynamic loss");
    return *dynamic;
}

Setup build_setup(const ExperimentConfig& config) {
    std::optional<HypothesisSpace> base;
    if (!config.losses.is_null()) base = in_section("loss", [&] { return losses_from_json(config.losses); });
    LoadedProcess loaded =
        in_section("process", [&] { return process_from_json(config.process, base ? &*base : nullptr); });
    Setup setup{std::move(loaded.model), loaded.space ? std::move(loaded.space) : std::move(base), {}};
    if (!config.dynamic_loss.is_null()) {
        setup.dynamic = in_section("loss.dynamic", [&] {
            return dynamic_loss_from_json(config.dynamic_loss, setup.space ? &*setup.space : nullptr);
        });
        if (setup.dynamic->alphabet_size() != setup.model.size()) {
            throw ValidationError("loss.dynamic: alphabet does not match the process state count");
        }
    }
    if (setup.space && setup.space->alphabet_size() != setup.model.size()) {
        throw ValidationError("loss.losses: columns do not match the process state count");
    }
    return setup;
}

std::optional<MixingProfile> mixing_profile(const ExperimentConfig& config, const Setup& setup, MixingKind kind) {
    if (config.mixing) {
        if (config.mixing->kind() == kind) return config.mixing;
        return std::nullopt;
    }
    if (!setup.space) return std::nullopt;
    const std::vector<double> table = exact_phi_table(setup.model, *setup.space, config.max_lag);
    std::size_t positive = 0;
    while (positive < table.size() && table[positive] > 0.0) ++positive;
    if (positive < 3) return std::nullopt;
    try {
        return fit_mixing_profile(std::span<const double>(table.data(), positive), kind).profile;
    } catch (const DomainError&) {
        return std::nullopt;
    }
}

std::size_t resolve_delay(const ExperimentConfig& config, const Setup& setup) {
    if (config.delay_mode == DelayMode::fixed) {
        if (config.delay < 1 || config.delay > config.n) throw ConfigError("online.delay: must lie in [1, n]");
        return config.delay;
    }
    const bool geometric = config.delay_mode == DelayMode::auto_geometric;
    const auto profile = mixing_profile(config, setup, geometric ? MixingKind::geometric : MixingKind::algebraic);
    if (!profile) {
        if (!config.mixing && setup.space && exact_phi(setup.model, *setup.space, 1) == 0.0) return 1;
        throw ConfigError("online.delay: no usable mixing profile to tune the delay");
    }
    if (profile->C() == 0.0) return 1;
    if (geometric) {
        if (config.n < 2) return 1;
        return tune_delay_geometric(profile->tau(), config.n);
    }
    if (profile->r() == 0.0) return config.n;
    return tune_delay_algebraic(profile->C(), profile->r(), config.n);
}

PosteriorDist fit_posterior(const ExperimentConfig& config, const HypothesisSpace& space, const SamplePath& path) {
    if (config.learner == LearnerKind::erm) return erm(space, path);
    return gibbs_posterior(space, path, config.beta, PosteriorDist::uniform(space.size()));
}

OnlineLearnerConfig online_config(const ExperimentConfig& config, std::size_t hypotheses, std::size_t delay) {
    OnlineLearnerConfig oc;
    oc.algorithm = config.algorithm;
    oc.eta = config.eta;
    oc.prior = PosteriorDist::uniform(hypotheses);
    oc.delay = delay;
    return oc;
}

namespace {

ReplicateResult replicate_with_phi(const ExperimentConfig& config, const Setup& setup, std::size_t index,
                                   std::size_t delay, double phi_d) {
    const HypothesisSpace& space = setup.static_space();
    ReplicateResult r;
    r.index = index;
    r.seed = stream_seed(config.seed, index);
    r.d = delay;
    const SamplePath path = sample_path(setup.model, config.n, r.seed);
    const PosteriorDist posterior = fit_posterior(config, space, path);
    const OnlineLearnerConfig oc = online_config(config, space.size(), delay);
    auto learner = make_learner(oc);
    const GameTrace trace = run_game(setup.model, space, path, *learner, delay);
    r.decomposition = decompose(trace, posterior, space, path, setup.model);
    r.kl = kl_divergence(posterior, oc.prior);
    const Regularizer reg = regularizer_for(config.algorithm);
    r.gap = reg.value(posterior, oc.prior);
    for (Eigen::Index t = 0; t < trace.costs.cols(); ++t) {
        const double c = reg.dual_norm(trace.costs.col(t));
        r.dual_norm_sq += c * c;
    }
    r.bound = delayed_bound(regret(trace, posterior), phi_d, delay, config.n, config.delta);
    r.violated = r.decomposition.gen > r.bound.total;
    return r;
}

}  // namespace

ReplicateResult run_replicate(const ExperimentConfig& config, const Setup& setup, std::size_t index,
                              std::size_t delay) {
    return replicate_with_phi(config, setup, index, delay, exact_phi(setup.model, setup.static_space(), delay));
}

std::vector<ReplicateResult> run_replicates(const ExperimentConfig& config, const Setup& setup, std::size_t delay) {
    const double phi_d = exact_phi(setup.model, setup.static_space(), delay);
    std::vector<ReplicateResult> out(config.replicates);
    parallel_for(
        config.replicates, [&](std::size_t k) { out[k] = replicate_with_phi(config, setup, k, delay, phi_d); },
        config.threads);
    return out;
}

CoverageResult coverage_experiment(const ExperimentConfig& config, const Setup& setup) {
    const std::size_t d = resolve_delay(config, setup);
    const std::vector<ReplicateResult> reps = run_replicates(config, setup, d);
    CoverageResult result;
    result.mode = config.coverage_mode;
    result.d = d;
    for (const ReplicateResult& r : reps) {
        CoverageRow row;
        row.index = r.index;
        row.seed = r.seed;
        if (config.coverage_mode == CoverageMode::martingale) {
            row.value = r.decomposition.martingale;
            row.bound = blocking_tail_bound(r.bound.phi_term, d, config.n, config.delta);
        } else {
            row.value = r.decomposition.gen;
            row.bound = r.bound.total;
        }
        row.violated = row.value > row.bound;
        result.violations += row.violated ? 1 : 0;
        result.rows.push_back(row);
    }
    const double count = static_cast<double>(result.rows.size());
    result.violation_rate = static_cast<double>(result.violations) / count;
    result.standard_error_defined = result.rows.size() >= 2;
    result.standard_error =
        result.standard_error_defined ? std::sqrt(result.violation_rate * (1.0 - result.violation_rate) / count) : 0.0;
    return result;
}

std::vector<BoundReport> bound_reports(const ExperimentConfig& config, const Setup& setup,
                                       const ReplicateResult& replicate) {
    std::vector<BoundReport> out;
    out.push_back(replicate.bound);
    const Regularizer reg = regularizer_for(config.algorithm);
    auto apriori = [&](std::size_t d) {
        return delayed_composite_regret_bound(replicate.gap, config.eta, reg.alpha, d, replicate.dual_norm_sq);
    };
    out.push_back(delayed_bound(apriori(replicate.d), replicate.bound.phi_term, replicate.d, config.n, config.delta,
                                "delayed:a-priori-regret"));

    if (config.n >= 2) {
        if (auto geo = mixing_profile(config, setup, MixingKind::geometric); geo && std::isfinite(geo->tau())) {
            const std::size_t d = tune_delay_geometric(geo->tau(), config.n);
            out.push_back(geometric_tuned_bound(apriori(d), geo->C(), geo->tau(), config.n, config.delta));
            if (config.algorithm == Algorithm::ewa) {
                out.push_back(ewa_geometric_bound(replicate.kl, config.eta, geo->C(), geo->tau(), config.n, config.delta));
            } else {
                const double B = reg.norms == NormPair::l1_linf
                                     ? 1.0
                                     : std::sqrt(static_cast<double>(setup.static_space().size()));
                out.push_back(ftrl_geometric_bound(replicate.gap, config.eta, reg.alpha, B, geo->C(), geo->tau(),
                                                   config.n, config.delta));
            }
        }
    }
    if (auto alg = mixing_profile(config, setup, MixingKind::algebraic); alg && alg->C() > 0.0 && alg->r() > 0.0) {
        const std::size_t d = tune_delay_algebraic(alg->C(), alg->r(), config.n);
        out.push_back(algebraic_tuned_bound(apriori(d), alg->C(), alg->r(), config.n, config.delta));
    }
    return out;
}

}  // namespace mixgen::cli
