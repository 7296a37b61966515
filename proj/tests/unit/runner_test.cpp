#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "lepm/config.hpp"
#include "lepm/runner.hpp"

using namespace lepm;
using nlohmann::json;

namespace {

json small_run() {
    return json::parse(R"({
      "task": {"name": "two_sine"},
      "network": {"hidden": [4], "eta_w": 0.01},
      "delays": {"kind": "uniform", "lo": 1, "hi": 4},
      "compensator": {"kind": "pmnet", "pmnet": {"hidden": [8], "buffer": 50, "batch": 2}},
      "schedule": {"t_max": 600, "t_beta_off": 500, "window": 50},
      "seed": 11
    })");
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("constant delays fill every connection") {
    const std::vector<int> sizes{3, 5, 2};
    Rng rng(1);
    const auto d = sample_delays({DelayKind::constant, 50}, sizes, rng);
    CHECK(d.layers[0].minCoeff() == 50);
    CHECK(d.layers[0].maxCoeff() == 50);
    CHECK(d.layers[1].minCoeff() == 50);
    CHECK(d.loss == std::vector<Step>{50, 50});
}

TEST_CASE("uniform delays are reproducible and within range") {
    const std::vector<int> sizes{6, 10, 3};
    const DelaySpec spec{DelayKind::uniform, 0, 40, 60};
    Rng a(9), b(9);
    const auto da = sample_delays(spec, sizes, a);
    const auto db = sample_delays(spec, sizes, b);
    for (std::size_t l = 0; l < da.layers.size(); ++l) {
        CHECK(da.layers[l] == db.layers[l]);
        CHECK(da.layers[l].minCoeff() >= 40);
        CHECK(da.layers[l].maxCoeff() <= 60);
    }
    CHECK(da.loss == db.loss);
    CHECK(da.layers[0].minCoeff() < da.layers[0].maxCoeff());

    Rng c(9);
    const auto zero = sample_delays({DelayKind::uniform, 0, 0, 0}, sizes, c);
    CHECK(zero.max() == 0);
}

TEST_CASE("runs are deterministic down to the CSV bytes") {
    const auto root = std::filesystem::temp_directory_path() / "lepm_runner_test";
    std::filesystem::remove_all(root);
    const auto cfg = config_from_json(small_run());
    const auto r1 = run_experiment(cfg, {.output_dir = root / "a"});
    const auto r2 = run_experiment(cfg, {.output_dir = root / "b"});
    REQUIRE(!r1.summary.diverged);
    CHECK(r1.losses == r2.losses);
    CHECK(slurp(root / "a" / "metrics.csv") == slurp(root / "b" / "metrics.csv"));
    CHECK(std::filesystem::exists(root / "a" / "summary.json"));

    // Test loss is the mean over [t_beta_off, t_max).
    double sum = 0.0;
    for (std::size_t n = 500; n < 600; ++n) sum += r1.losses[n];
    CHECK(*r1.summary.test_loss == doctest::Approx(sum / 100.0).epsilon(1e-12));
    std::filesystem::remove_all(root);
}

TEST_CASE("metrics rows follow the schedule") {
    auto doc = small_run();
    doc["schedule"]["record_every"] = 25;
    const auto res = run_experiment(config_from_json(doc), {.output_dir = std::filesystem::path{}, .keep_rows = true});
    REQUIRE(res.rows.size() == 24);
    for (std::size_t i = 0; i < res.rows.size(); ++i) {
        CHECK(res.rows[i].step == static_cast<Step>(25 * i));
        CHECK(res.rows[i].time_ms == doctest::Approx(125.0 * i));
        CHECK((res.rows[i].phase == Phase::test) == (res.rows[i].step >= 500));
        CHECK(res.rows[i].predictions.size() == 1);
    }
    CHECK(metrics_header(1, true).find("step,time_ms,phase,burn_in,loss,pm_loss,pred_0,target_0") !=
          std::string::npos);
}

TEST_CASE("divergence ends the run with a marker") {
    auto doc = small_run();
    doc["network"]["eta_w"] = 100.0;
    doc["compensator"] = json{{"kind", "none"}};
    const auto res = run_experiment(config_from_json(doc), {.output_dir = std::filesystem::path{}});
    CHECK(res.summary.diverged);
    REQUIRE(res.summary.divergence_step.has_value());
    CHECK(res.summary.steps_completed == *res.summary.divergence_step);
}

TEST_CASE("a one-cell sweep equals a single run") {
    const auto root = std::filesystem::temp_directory_path() / "lepm_sweep_test";
    std::filesystem::remove_all(root);
    auto base = small_run();
    const json grid = {{"network.hidden", json::array({json::array({4})})}};
    const auto cells = sweep(base, grid, {11}, {.output_dir = root, .workers = 1});
    REQUIRE(cells.size() == 1);
    REQUIRE(cells[0].runs.size() == 1);
    const auto single = run_experiment(config_from_json(base), {.output_dir = std::filesystem::path{}});
    CHECK(*cells[0].runs[0].test_loss == *single.summary.test_loss);
    CHECK(*cells[0].median == *single.summary.test_loss);
    std::filesystem::remove_all(root);
}
