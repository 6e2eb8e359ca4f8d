#include "mixgen/cli.hpp"

#include "mixgen/csv.hpp"
#include "mixgen/error.hpp"
#include "mixgen/game.hpp"
#include "mixgen/learner.hpp"
#include "mixgen/parallel.hpp"
#include "mixgen/rng.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <sstream>

namespace mixgen::cli {

void Table::add_row(std::vector<Cell> row) {
    if (row.size() != columns_.size()) throw ConsistencyError("table row does not match its columns");
    rows_.push_back(std::move(row));
}

std::string Table::to_csv() const {
    std::ostringstream out;
    CsvWriter csv(out, columns_);
    for (const auto& row : rows_) {
        for (const Cell& cell : row) {
            std::visit([&](const auto& v) {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, std::string>) {
                    csv.cell(std::string_view(v));
                } else {
                    csv.cell(v);
                }
            }, cell);
        }
        csv.end_row();
    }
    return out.str();
}

std::string Table::to_json() const {
    Json arr = Json::array();
    for (const auto& row : rows_) {
        Json obj = Json::object();
        for (std::size_t i = 0; i < columns_.size(); ++i) {
            std::visit([&](const auto& v) {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, double>) {
                    obj[columns_[i]] = number_to_json(v);
                } else {
                    obj[columns_[i]] = v;
                }
            }, row[i]);
        }
        arr.push_back(std::move(obj));
    }
    return arr.dump(2) + "\n";
}

std::string Table::render(OutputFormat format) const {
    return format == OutputFormat::csv ? to_csv() : to_json();
}

namespace {

using Paths = std::vector<std::filesystem::path>;

std::filesystem::path prepare_output(const ExperimentConfig& config) {
    std::error_code ec;
    std::filesystem::create_directories(config.output_dir, ec);
    if (ec || !std::filesystem::is_directory(config.output_dir)) {
        throw IoError("cannot create output directory " + config.output_dir.string());
    }
    return config.output_dir;
}

std::string extension(OutputFormat format) { return format == OutputFormat::csv ? ".csv" : ".json"; }

std::filesystem::path write_table(const std::filesystem::path& dir, const std::string& stem, const Table& table,
                                  OutputFormat format) {
    const auto path = dir / (stem + extension(format));
    write_text_file(path, table.render(format));
    return path;
}

std::uint64_t u64(std::size_t v) { return static_cast<std::uint64_t>(v); }
std::uint64_t flag(bool b) { return b ? 1 : 0; }

std::vector<std::size_t> default_grid(const ExperimentConfig& config, std::size_t top) {
    if (!config.d_grid.empty()) return config.d_grid;
    std::vector<std::size_t> grid;
    for (std::size_t d = 1; d <= std::min(top, config.n); ++d) grid.push_back(d);
    return grid;
}

Table replicate_table() {
    return Table({"replicate", "seed", "d", "gen", "regret_over_n", "martingale", "residual", "kl", "phi_term",
                  "deviation_term", "bound_total", "violated"});
}

void add_replicate_row(Table& t, const ReplicateResult& r) {
    t.add_row({u64(r.index), r.seed, u64(r.d), r.decomposition.gen, r.decomposition.regret_over_n,
               r.decomposition.martingale, r.decomposition.residual, r.kl, r.bound.phi_term, r.bound.deviation_term,
               r.bound.total, flag(r.violated)});
}

Table bounds_table(const std::vector<BoundReport>& reports) {
    Table t({"provenance", "n", "d", "delta", "regret_term", "phi_term", "deviation_term", "total"});
    for (const BoundReport& r : reports) {
        t.add_row({r.provenance, u64(r.n), u64(r.d), r.delta, r.regret_term, r.phi_term, r.deviation_term, r.total});
    }
    return t;
}

std::string bounds_json(const std::vector<BoundReport>& reports) {
    Json arr = Json::array();
    for (const BoundReport& r : reports) arr.push_back(bound_report_to_json(r));
    return arr.dump(2) + "\n";
}

}  // namespace

Paths cmd_simulate(const ExperimentConfig& config, OutputFormat format) {
    const Setup setup = build_setup(config);
    const HypothesisSpace& space = setup.static_space();
    const std::size_t d = resolve_delay(config, setup);
    const std::vector<ReplicateResult> reps = run_replicates(config, setup, d);
    const auto dir = prepare_output(config);
    Paths written;

    Table summary = replicate_table();
    for (const ReplicateResult& r : reps) add_replicate_row(summary, r);
    written.push_back(write_table(dir, "summary", summary, format));

    // Full trace of replicate 0.
    const SamplePath path = sample_path(setup.model, config.n, reps.front().seed);
    const PosteriorDist posterior = fit_posterior(config, space, path);
    auto learner = make_learner(online_config(config, space.size(), d));
    const GameTrace trace = run_game(setup.model, space, path, *learner, d);
    std::ostringstream trace_csv;
    write_trace_csv(trace_csv, trace, posterior);
    written.push_back(dir / "trace_0.csv");
    write_text_file(written.back(), trace_csv.str());

    written.push_back(dir / "bounds.json");
    write_text_file(written.back(), bounds_json(bound_reports(config, setup, reps.front())));
    return written;
}

Paths cmd_coverage(const ExperimentConfig& config, OutputFormat format) {
    const Setup setup = build_setup(config);
    const CoverageResult result = coverage_experiment(config, setup);
    const auto dir = prepare_output(config);
    Paths written;

    Table rows({"replicate", "seed", "value", "bound", "violated"});
    for (const CoverageRow& r : result.rows) rows.add_row({u64(r.index), r.seed, r.value, r.bound, flag(r.violated)});
    written.push_back(write_table(dir, "coverage", rows, format));

    Table summary({"mode", "d", "delta", "replicates", "violations", "violation_rate", "standard_error",
                   "standard_error_defined"});
    summary.add_row({std::string(result.mode == CoverageMode::martingale ? "martingale" : "generalization"),
                     u64(result.d), config.delta, u64(result.rows.size()), u64(result.violations),
                     result.violation_rate, result.standard_error, flag(result.standard_error_defined)});
    written.push_back(write_table(dir, "coverage_summary", summary, format));
    return written;
}

Paths cmd_sweep_delay(const ExperimentConfig& config, OutputFormat format) {
    const Setup setup = build_setup(config);
    const HypothesisSpace& space = setup.static_space();
    SweepSetup sweep;
    sweep.model = &setup.model;
    sweep.space = &space;
    sweep.posterior = [&](const SamplePath& path) { return fit_posterior(config, space, path); };
    sweep.online = online_config(config, space.size(), 1);
    sweep.n = config.n;
    sweep.delta = config.delta;
    sweep.d_grid = default_grid(config, 64);
    sweep.seed = stream_seed(config.seed, 0);
    const std::vector<SweepRow> rows = sweep_delay(sweep);
    const auto dir = prepare_output(config);
    Paths written;

    Table t({"d", "phi_term", "deviation_term", "regret_term", "total_bound", "empirical_gen"});
    std::vector<double> x, total, gen;
    for (const SweepRow& r : rows) {
        t.add_row({u64(r.d), r.phi_term, r.deviation_term, r.regret_term, r.total_bound, r.empirical_gen});
        x.push_back(double(r.d));
        total.push_back(r.total_bound);
        gen.push_back(r.empirical_gen);
    }
    written.push_back(write_table(dir, "sweep", t, format));
    written.push_back(dir / "sweep.svg");
    write_text_file(written.back(), line_plot_svg("Bound versus delay", "d", "value", x,
                                                  {{"total_bound", total}, {"empirical_gen", gen}}));
    return written;
}

Paths cmd_mixing(const ExperimentConfig& config, OutputFormat format) {
    const Setup setup = build_setup(config);
    const std::vector<double> phi = exact_phi_table(setup.model, setup.static_space(), config.max_lag);
    for (std::size_t i = 1; i < phi.size(); ++i) {
        if (phi[i] > phi[i - 1] + 1e-12) {
            throw ConsistencyError("phi table increases at d = " + std::to_string(i + 1));
        }
    }
    const auto dir = prepare_output(config);
    Paths written;

    Table t({"d", "phi"});
    for (std::size_t i = 0; i < phi.size(); ++i) t.add_row({u64(i + 1), phi[i]});
    written.push_back(write_table(dir, "phi", t, format));

    std::size_t positive = 0;
    while (positive < phi.size() && phi[positive] > 0.0) ++positive;
    Table fits({"kind", "C", "shape", "residual", "fit_points", "skipped"});
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (MixingKind kind : {MixingKind::geometric, MixingKind::algebraic}) {
        const std::string name = kind == MixingKind::geometric ? "geometric" : "algebraic";
        if (positive < 3) {
            fits.add_row({name, nan, nan, nan, u64(positive), flag(true)});
            continue;
        }
        const MixingFit fit = fit_mixing_profile(std::span<const double>(phi.data(), positive), kind);
        const double shape = kind == MixingKind::geometric ? fit.profile.tau() : fit.profile.r();
        fits.add_row({name, fit.profile.C(), shape, fit.residual, u64(positive), flag(false)});
    }
    written.push_back(write_table(dir, "fits", fits, format));
    return written;
}

Paths cmd_bounds(const ExperimentConfig& config, OutputFormat format) {
    const Setup setup = build_setup(config);
    const std::size_t d = resolve_delay(config, setup);
    const ReplicateResult rep = run_replicate(config, setup, 0, d);
    std::vector<BoundReport> reports = bound_reports(config, setup, rep);

    if (config.eta_grid) {
        const Regularizer reg = regularizer_for(config.algorithm);
        const double phi_d = rep.bound.phi_term;
        const double nn = double(config.n);
        auto regret_term = [&](double eta) {
            return delayed_composite_regret_bound(rep.gap, eta, reg.alpha, d, rep.dual_norm_sq) / nn;
        };
        const EtaGridResult best = union_bound_eta_grid(
            rep.gap,
            [&](double, double eta, double delta) { return regret_term(eta) + phi_d + deviation_term(d, config.n, delta); },
            *config.eta_grid);
        BoundReport r;
        r.n = config.n;
        r.d = d;
        r.delta = config.delta;
        r.regret_term = regret_term(best.eta);
        r.phi_term = phi_d;
        r.deviation_term = deviation_term(d, config.n, config.eta_grid->per_point_delta());
        r.total = best.value;
        r.provenance = "eta-grid:a-priori-regret";
        reports.push_back(r);
    }
    const auto dir = prepare_output(config);
    Paths written;
    written.push_back(write_table(dir, "bounds", bounds_table(reports), format));
    return written;
}

Paths cmd_dynamic(const ExperimentConfig& config, OutputFormat format) {
    const Setup setup = build_setup(config);
    const DynamicLoss& loss = setup.dynamic_loss();
    const std::vector<std::size_t> grid = default_grid(config, 20);
    std::size_t max_half = 1;
    for (std::size_t d : grid) max_half = std::max(max_half, (d + 1) / 2);

    DynamicPhiOptions options;
    options.seed = stream_seed(config.seed, 1);
    const std::vector<MixingBoundRow> mixing = dynamic_mixing_report(setup.model, loss, {}, grid, options);
    DynamicPhiOptions mirror = options;
    mirror.sign = GapSign::test_minus_loss;
    const ForgettingProfile forgetting = forgetting_profile(loss, max_half);

    // Dynamic game replicates.
    std::size_t d = config.delay;
    if (config.delay_mode != DelayMode::fixed) d = resolve_delay(config, setup);
    const TildeLoss test = stationary_test_loss(loss, setup.model, 0, 200000, stream_seed(config.seed, 2));
    const GapMax phi_d = dynamic_phi(setup.model, loss, {}, d, options);
    std::vector<ReplicateResult> reps(config.replicates);
    parallel_for(config.replicates, [&](std::size_t k) {
        ReplicateResult& r = reps[k];
        r.index = k;
        r.seed = stream_seed(config.seed, k);
        r.d = d;
        const SamplePath path = sample_path(setup.model, config.n, r.seed);
        const Eigen::VectorXd train = path_losses(loss, path).rowwise().mean();
        const PosteriorDist prior = PosteriorDist::uniform(loss.size());
        const PosteriorDist posterior = config.learner == LearnerKind::erm
                                            ? erm_from_losses(train)
                                            : gibbs_from_losses(prior, train, config.n, config.beta);
        auto learner = make_learner(online_config(config, loss.size(), d));
        const GameTrace trace = run_dynamic_game(loss, path, test.values, *learner, d);
        r.decomposition = decompose_dynamic(trace, posterior, loss, path, test.values);
        r.kl = kl_divergence(posterior, prior);
        r.bound = delayed_bound(regret(trace, posterior), phi_d.value, d, config.n, config.delta,
                                "dynamic:realized-regret");
        r.violated = r.decomposition.gen > r.bound.total;
    }, config.threads);

    const auto dir = prepare_output(config);
    Paths written;

    Table f({"d", "forgetting", "lower_bound", "enumerated", "exact"});
    for (std::size_t i = 0; i < forgetting.values.size(); ++i) {
        f.add_row({u64(i + 1), forgetting.values[i], forgetting.lower_bound[i], flag(forgetting.enumerated[i]),
                   flag(forgetting.exact)});
    }
    written.push_back(write_table(dir, "forgetting", f, format));

    // The floor-rounded half lag is reported next to the default ceiling.
    Table m({"d", "half", "phi", "phi_mirror", "forgetting", "beta", "rhs", "slack", "holds", "rhs_floor",
             "holds_floor", "w", "state", "exact"});
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (const MixingBoundRow& r : mixing) {
        const double mirrored = dynamic_phi(setup.model, loss, {}, r.d, mirror).value;
        const std::size_t low = half_lag(r.d, HalfRounding::floor);
        const double rhs_floor = low == 0 ? nan
                                          : 2.0 * forgetting.values[low - 1] +
                                                exact_block_beta(setup.model, loss, {}, low).value;
        m.add_row({u64(r.d), u64(r.half), r.lhs, mirrored, r.forgetting, r.beta, r.rhs, r.slack,
                   flag(r.lhs <= r.rhs + kDynamicBoundTolerance), rhs_floor,
                   flag(low > 0 && r.lhs <= rhs_floor + kDynamicBoundTolerance), u64(r.w), u64(r.state),
                   flag(r.exact)});
    }
    written.push_back(write_table(dir, "dynamic_mixing", m, format));

    Table s = replicate_table();
    for (const ReplicateResult& r : reps) add_replicate_row(s, r);
    written.push_back(write_table(dir, "dynamic_summary", s, format));
    return written;
}

int exit_code_for(const std::exception& e) {
    if (const auto* err = dynamic_cast<const Error*>(&e)) {
        switch (err->kind()) {
            case ErrorKind::validation:
            case ErrorKind::model:
            case ErrorKind::size:
            case ErrorKind::domain:
            case ErrorKind::config:
                return 2;
            default:
                return 3;
        }
    }
    if (dynamic_cast<const Json::exception*>(&e) != nullptr) return 2;
    return 3;
}

int run(int argc, char** argv) {
    CLI::App app{"Delayed online-to-PAC generalization experiments on finite Markov chains"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string format = "csv";

    using Command = Paths (*)(const ExperimentConfig&, OutputFormat);
    const std::vector<std::tuple<std::string, std::string, Command>> commands = {
        {"simulate", "Replicated delayed games with per-replicate decomposition and bounds", cmd_simulate},
        {"coverage", "Violation rate of the blocking or full generalization bound", cmd_coverage},
        {"sweep-delay", "Bound terms over a grid of delays, with an SVG plot", cmd_sweep_delay},
        {"mixing", "Exact mixing coefficients and geometric / algebraic fits", cmd_mixing},
        {"bounds", "Bound reports for one replicate", cmd_bounds},
        {"dynamic", "Dynamic-loss mixing check and dynamic games", cmd_dynamic},
    };
    std::vector<std::pair<CLI::App*, Command>> subs;
    for (const auto& [name, help, fn] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path, "Experiment JSON file")->required();
        sub->add_option("--seed", seed, "Master seed (overrides the config)");
        sub->add_option("--out", out, "Output directory (overrides the config)");
        sub->add_option("--format", format, "Table format")->check(CLI::IsMember({"csv", "json"}));
        subs.emplace_back(sub, fn);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        ExperimentConfig config = parse_config(read_json_file(config_path));
        if (seed) config.seed = *seed;
        if (!out.empty()) config.output_dir = out;
        const OutputFormat fmt = format == "json" ? OutputFormat::json : OutputFormat::csv;
        for (const auto& [sub, fn] : subs) {
            if (!sub->parsed()) continue;
            for (const auto& path : fn(config, fmt)) std::cout << path.string() << '\n';
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "mixgen: " << e.what() << '\n';
        return exit_code_for(e);
    }
}

}  // namespace mixgen::cli
