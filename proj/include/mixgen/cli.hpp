#pragma once

#include "mixgen/bounds.hpp"
#include "mixgen/dynamic.hpp"
#include "mixgen/io.hpp"
#include "mixgen/online.hpp"
#include "mixgen/process.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace mixgen::cli {

enum class DelayMode { fixed, auto_geometric, auto_algebraic };
enum class LearnerKind { gibbs, erm };
enum class CoverageMode { martingale, generalization };
enum class OutputFormat { csv, json };

/// Parsed experiment description. Raw process and loss JSON are kept and
/// turned into models by build_setup.
struct ExperimentConfig {
    Json process;
    Json losses;                 // {"losses": [[..]]} or null
    Json dynamic_loss;           // dynamic loss spec or null

    LearnerKind learner = LearnerKind::gibbs;
    double beta = 1.0;

    Algorithm algorithm = Algorithm::ewa;
    double eta = 0.1;
    std::optional<EtaGrid> eta_grid;
    DelayMode delay_mode = DelayMode::fixed;
    std::size_t delay = 1;
    /// Known mixing profile, used instead of fitting exact phi values.
    std::optional<MixingProfile> mixing;

    std::size_t n = 1000;
    std::size_t replicates = 1;
    double delta = 0.05;
    std::uint64_t seed = 0;
    std::vector<std::size_t> d_grid;
    std::size_t max_lag = 30;
    CoverageMode coverage_mode = CoverageMode::martingale;
    std::size_t threads = 0;

    std::filesystem::path output_dir = "out";
};

/// Throws ValidationError naming the offending field, e.g. "experiment.delta".
ExperimentConfig parse_config(const Json& j);

/// Models built from a config.
struct Setup {
    ProcessModel model;
    std::optional<HypothesisSpace> space;
    std::optional<DynamicLoss> dynamic;

    const HypothesisSpace& static_space() const;
    const DynamicLoss& dynamic_loss() const;
};

Setup build_setup(const ExperimentConfig& config);

/// Mixing profile from the config, else a fit to exact phi_1..phi_max_lag.
/// Empty when the exact values vanish or cannot be fitted.
std::optional<MixingProfile> mixing_profile(const ExperimentConfig& config, const Setup& setup, MixingKind kind);

/// Delay in [1, n] for the configured mode. Throws ConfigError when an
/// automatic mode has no usable mixing profile.
std::size_t resolve_delay(const ExperimentConfig& config, const Setup& setup);

PosteriorDist fit_posterior(const ExperimentConfig& config, const HypothesisSpace& space, const SamplePath& path);
OnlineLearnerConfig online_config(const ExperimentConfig& config, std::size_t hypotheses, std::size_t delay);

/// One replicate of the delayed game against the learner's posterior.
struct ReplicateResult {
    std::size_t index = 0;
    std::uint64_t seed = 0;
    std::size_t d = 1;
    Decomposition decomposition;
    double kl = 0.0;
    double gap = 0.0;
    double dual_norm_sq = 0.0;
    BoundReport bound;
    bool violated = false;
};

ReplicateResult run_replicate(const ExperimentConfig& config, const Setup& setup, std::size_t index,
                              std::size_t delay);
std::vector<ReplicateResult> run_replicates(const ExperimentConfig& config, const Setup& setup, std::size_t delay);

struct CoverageRow {
    std::size_t index = 0;
    std::uint64_t seed = 0;
    double value = 0.0;
    double bound = 0.0;
    bool violated = false;
};

struct CoverageResult {
    CoverageMode mode = CoverageMode::martingale;
    std::size_t d = 1;
    std::vector<CoverageRow> rows;
    std::size_t violations = 0;
    double violation_rate = 0.0;
    /// sqrt(rate (1 - rate) / N); reported as 0 and flagged undefined for N < 2.
    double standard_error = 0.0;
    bool standard_error_defined = false;
};

CoverageResult coverage_experiment(const ExperimentConfig& config, const Setup& setup);

/// Bound reports for one replicate: realized and a-priori delayed bounds,
/// plus the tuned geometric / algebraic and learner-specific bounds when a
/// profile is available.
std::vector<BoundReport> bound_reports(const ExperimentConfig& config, const Setup& setup,
                                       const ReplicateResult& replicate);

/// A small table that renders as CSV or as a JSON array of row objects.
class Table {
public:
    using Cell = std::variant<double, std::uint64_t, std::int64_t, std::string>;

    explicit Table(std::vector<std::string> columns) : columns_(std::move(columns)) {}
    void add_row(std::vector<Cell> row);

    const std::vector<std::string>& columns() const noexcept { return columns_; }
    const std::vector<std::vector<Cell>>& rows() const noexcept { return rows_; }

    std::string to_csv() const;
    std::string to_json() const;
    std::string render(OutputFormat format) const;

private:
    std::vector<std::string> columns_;
    std::vector<std::vector<Cell>> rows_;
};

struct Series {
    std::string name;
    std::vector<double> y;
};

/// Self-contained SVG line plot, one polyline per series.
std::string line_plot_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                          const std::vector<double>& x, const std::vector<Series>& series);

/// Subcommands write files into the output directory and return the paths
/// written, in order.
std::vector<std::filesystem::path> cmd_simulate(const ExperimentConfig& config, OutputFormat format);
std::vector<std::filesystem::path> cmd_coverage(const ExperimentConfig& config, OutputFormat format);
std::vector<std::filesystem::path> cmd_sweep_delay(const ExperimentConfig& config, OutputFormat format);
std::vector<std::filesystem::path> cmd_mixing(const ExperimentConfig& config, OutputFormat format);
std::vector<std::filesystem::path> cmd_bounds(const ExperimentConfig& config, OutputFormat format);
std::vector<std::filesystem::path> cmd_dynamic(const ExperimentConfig& config, OutputFormat format);

/// Exit code for an exception: 2 for input problems (validation, domain,
/// config, size, model), 3 for everything else.
int exit_code_for(const std::exception& e);

/// Entry point of the mixgen executable.
int run(int argc, char** argv);

}  // namespace mixgen::cli
