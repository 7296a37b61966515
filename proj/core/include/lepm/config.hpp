#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lepm/compensator.hpp"
#include "lepm/network.hpp"
#include "lepm/tasks.hpp"

namespace lepm {

enum class DelayKind { constant, uniform };

/// Per-connection delay distribution, in steps. Sampled delays are shared by
/// the forward and feedback direction of each connection.
struct DelaySpec {
    DelayKind kind = DelayKind::constant;
    Step steps = 0;  // constant
    Step lo = 0;     // uniform, inclusive
    Step hi = 0;
};

enum class CompensatorKind { none, linex, pmnet };

struct CompensatorConfig {
    CompensatorKind kind = CompensatorKind::none;
    LinexOptions linex{};
    PredictorOptions pmnet{};
    std::optional<Step> pm_train_until;  // PM plasticity switched off from this step on
};

struct ScheduleConfig {
    Step t_max = 0;
    Step t_beta_off = 0;
    std::optional<Step> burn_in;  // default: 2 * max delay + largest lag
    Step record_every = 1;
    bool record_predictions = true;
    Step window = 1000;            // steps averaged for the tail/initial/final window losses
};

struct RunConfig {
    tasks::TaskOptions task{};
    NetworkSpec network{};
    std::vector<int> hidden;       // hidden layer widths
    double s_bar_alpha = 1.0;      // smoothing on received signals for uncompensated runs
    DelaySpec delays{};
    CompensatorConfig compensator{};
    ScheduleConfig schedule{};
    std::uint64_t seed = 0;
    std::string output_dir;

    nlohmann::json source;         // validated input document
};

/// Every schema violation in `doc`, one message each. Empty means valid.
std::vector<std::string> validate_config(const nlohmann::json& doc);

/// Throws ConfigError listing all violations.
RunConfig config_from_json(const nlohmann::json& doc);

/// Reads and validates a config file. An empty file is treated as {}.
RunConfig parse_config(const std::filesystem::path& path);
nlohmann::json read_config_document(const std::filesystem::path& path);

/// round(ms / dt), the step count a physical delay maps to.
Step delay_steps_from_ms(double delay_ms, double dt_ms);

/// Sets a dotted key ("network.hidden") inside a config document, creating
/// intermediate objects.
void set_dotted(nlohmann::json& doc, const std::string& dotted_key, const nlohmann::json& value);

std::string to_string(CompensatorKind k);

}  // namespace lepm
