#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lepm/config.hpp"
#include "lepm/network.hpp"

namespace lepm {

/// Draws an integer delay for every connection. Each draw serves both
/// directions of its connection, so delay(i->j) == delay(j->i).
DelayAssignment sample_delays(const DelaySpec& spec, std::span<const int> layer_sizes, Rng& rng);

CompensatorFactory make_compensator_factory(const RunConfig& cfg);

/// Steps excluded from summary statistics while delay lines still hold fill.
Step burn_in_steps(const RunConfig& cfg);

enum class Phase { train, test };

struct MetricsRow {
    Step step = 0;
    double time_ms = 0.0;
    Phase phase = Phase::train;
    bool burn_in = false;
    double loss = 0.0;
    double pm_loss = 0.0;
    std::vector<double> predictions;
    std::vector<double> targets;
};

struct RunSummary {
    std::string task;
    std::string compensator;
    std::uint64_t seed = 0;
    Step steps_completed = 0;
    Step burn_in = 0;
    bool diverged = false;
    std::optional<Step> divergence_step;
    std::string divergence_reason;
    std::optional<double> train_loss_tail;   // mean over the last window of training steps
    std::optional<double> test_loss;         // mean over [t_beta_off, t_max)
    std::optional<double> initial_window_loss;  // first window after burn-in
    std::optional<double> final_window_loss;    // last completed window
    double wall_ms = 0.0;
    std::filesystem::path metrics_path;
    std::filesystem::path summary_path;

    nlohmann::json to_json() const;
};

struct RunOptions {
    /// Overrides cfg.output_dir when set; an empty directory writes nothing.
    std::optional<std::filesystem::path> output_dir;
    std::optional<Step> record_every;
    /// Keep recorded rows in memory (tests, acceptance).
    bool keep_rows = false;
};

struct RunResult {
    RunSummary summary;
    std::vector<MetricsRow> rows;
    std::vector<double> losses;  // every step's loss, in memory
};

/// Runs one experiment: steps 0..t_max with nudging switched off from
/// t_beta_off on. Divergence ends the run early and is reported in the
/// summary rather than thrown.
RunResult run_experiment(const RunConfig& cfg, const RunOptions& opts = {});

/// Writes the CSV header comment and column line for a run.
std::string metrics_header(std::size_t outputs, bool with_predictions);

struct SweepCell {
    nlohmann::json params;              // dotted key -> value
    std::vector<RunSummary> runs;       // one per seed
    std::optional<double> median, min, max, mean, stddev;
    std::size_t diverged = 0;
};

struct SweepOptions {
    std::filesystem::path output_dir;
    unsigned workers = 0;  // 0: hardware concurrency
    std::optional<Step> record_every;
};

/// Runs every grid cell for every seed, then aggregates the test losses of
/// the non-diverged runs per cell. `grid` maps dotted config keys to lists.
std::vector<SweepCell> sweep(const nlohmann::json& base, const nlohmann::json& grid,
                             const std::vector<std::uint64_t>& seeds, const SweepOptions& opts);

}  // namespace lepm
