// Command line front end: run, sweep, demo, validate, frames.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "lepm/config.hpp"
#include "lepm/demo.hpp"
#include "lepm/errors.hpp"
#include "lepm/runner.hpp"
#include "lepm/tasks.hpp"

namespace {

using nlohmann::json;

// "network.hidden=[30]" -> set network.hidden to [30]; bare words become strings.
void apply_overrides(json& doc, const std::vector<std::string>& sets) {
    for (const auto& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) throw lepm::ConfigError("--set expects key=value, got '" + s + "'");
        const std::string key = s.substr(0, eq);
        const std::string raw = s.substr(eq + 1);
        json value;
        try {
            value = json::parse(raw);
        } catch (const json::parse_error&) {
            value = raw;
        }
        lepm::set_dotted(doc, key, value);
    }
}

std::vector<std::uint64_t> parse_seeds(const std::string& list) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(list);
    for (std::string item; std::getline(ss, item, ',');) {
        if (item.empty()) continue;
        seeds.push_back(std::stoull(item));
    }
    return seeds;
}

void write_pgm(const std::string& path, const lepm::tasks::Frame& f) {
    std::ofstream out(path, std::ios::binary);
    out << "P2\n" << lepm::tasks::kFrameSide << ' ' << lepm::tasks::kFrameSide << "\n255\n";
    for (int r = 0; r < lepm::tasks::kFrameSide; ++r) {
        for (int c = 0; c < lepm::tasks::kFrameSide; ++c) {
            const double v = f[static_cast<std::size_t>(r * lepm::tasks::kFrameSide + c)];
            out << (c ? " " : "") << static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
        }
        out << '\n';
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Latent Equilibrium networks with communication delays and prospective messaging"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "Run one experiment from a config file");
    std::string run_config;
    std::string run_out;
    std::optional<std::uint64_t> run_seed;
    std::optional<long long> run_thin;
    std::vector<std::string> run_sets;
    run->add_option("config", run_config, "Config file (JSON)")->required()->check(CLI::ExistingFile);
    run->add_option("-o,--out", run_out, "Output directory (overrides output_dir)");
    run->add_option("--seed", run_seed, "Seed override");
    run->add_option("--thin", run_thin, "Record every k-th step")->check(CLI::PositiveNumber);
    run->add_option("--set", run_sets, "Override a config key, e.g. --set network.hidden=[30]");

    // sweep
    auto* sw = app.add_subcommand("sweep", "Run a parameter grid over several seeds");
    std::string sw_config;
    std::string sw_grid;
    std::string sw_seeds = "1,2,3,4,5";
    std::string sw_out;
    unsigned sw_workers = 0;
    std::optional<long long> sw_thin;
    std::vector<std::string> sw_sets;
    sw->add_option("config", sw_config, "Base config file (JSON)")->required()->check(CLI::ExistingFile);
    sw->add_option("-g,--grid", sw_grid, "Grid file: {\"dotted.key\": [values...]}")->required()->check(CLI::ExistingFile);
    sw->add_option("--seeds", sw_seeds, "Comma-separated seeds");
    sw->add_option("-o,--out", sw_out, "Output directory")->required();
    sw->add_option("-j,--workers", sw_workers, "Parallel runs (0: all cores)");
    sw->add_option("--thin", sw_thin, "Record every k-th step")->check(CLI::PositiveNumber);
    sw->add_option("--set", sw_sets, "Override a base config key");

    // demo
    auto* dm = app.add_subcommand("demo", "Three-neuron streaming gradient descent with delays");
    double dm_delay_ms = 0.0;
    double dm_dt = 1.0;
    double dm_lr = 0.01;
    long long dm_steps = 10000;
    double dm_w1 = 0.5, dm_w2 = 0.5;
    std::string dm_out;
    dm->add_option("--delay-ms", dm_delay_ms, "Delay of every signal, ms")->check(CLI::NonNegativeNumber);
    dm->add_option("--dt", dm_dt, "Step size, ms")->check(CLI::PositiveNumber);
    dm->add_option("--lr", dm_lr, "Learning rate");
    dm->add_option("--steps", dm_steps, "Number of steps")->check(CLI::PositiveNumber);
    dm->add_option("--w1", dm_w1, "Initial w1");
    dm->add_option("--w2", dm_w2, "Initial w2");
    dm->add_option("-o,--out", dm_out, "CSV output (default: stdout)");

    // validate
    auto* val = app.add_subcommand("validate", "Check a config file and report every violation");
    std::string val_config;
    val->add_option("config", val_config, "Config file (JSON)")->required()->check(CLI::ExistingFile);

    // frames
    auto* fr = app.add_subcommand("frames", "Dump bouncing-ball frames as CSV or PGM");
    long long fr_from = 0, fr_to = 10, fr_every = 1;
    std::string fr_format = "csv";
    std::string fr_out;
    std::string fr_config;
    fr->add_option("--from", fr_from, "First step");
    fr->add_option("--to", fr_to, "Last step (exclusive)");
    fr->add_option("--every", fr_every, "Step stride")->check(CLI::PositiveNumber);
    fr->add_option("--format", fr_format, "csv or pgm")->check(CLI::IsMember({"csv", "pgm"}));
    fr->add_option("--config", fr_config, "Take ball parameters from this config")->check(CLI::ExistingFile);
    fr->add_option("-o,--out", fr_out, "CSV file or PGM directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            json doc = lepm::read_config_document(run_config);
            apply_overrides(doc, run_sets);
            if (run_seed) doc["seed"] = *run_seed;
            lepm::RunConfig cfg = lepm::config_from_json(doc);
            lepm::RunOptions ro;
            if (!run_out.empty()) ro.output_dir = run_out;
            if (run_thin) ro.record_every = *run_thin;
            const auto result = lepm::run_experiment(cfg, ro);
            std::cout << result.summary.to_json().dump(2) << '\n';
            return result.summary.diverged ? 3 : 0;
        }
        if (*sw) {
            json doc = lepm::read_config_document(sw_config);
            apply_overrides(doc, sw_sets);
            const json grid = lepm::read_config_document(sw_grid);
            lepm::SweepOptions so;
            so.output_dir = sw_out;
            so.workers = sw_workers;
            if (sw_thin) so.record_every = *sw_thin;
            const auto cells = lepm::sweep(doc, grid, parse_seeds(sw_seeds), so);
            for (std::size_t c = 0; c < cells.size(); ++c) {
                std::cout << fmt::format("cell {} {} median={} diverged={}/{}\n", c, cells[c].params.dump(),
                                         cells[c].median ? fmt::format("{:.6g}", *cells[c].median) : "n/a",
                                         cells[c].diverged, cells[c].runs.size());
            }
            return 0;
        }
        if (*dm) {
            lepm::demo::DemoOptions opts;
            opts.dt = dm_dt;
            opts.delay = lepm::delay_steps_from_ms(dm_delay_ms, dm_dt);
            opts.lr = dm_lr;
            opts.w1 = dm_w1;
            opts.w2 = dm_w2;
            const auto trace = lepm::demo::run_identity_demo(opts, dm_steps);
            std::ofstream file;
            std::ostream* out = &std::cout;
            if (!dm_out.empty()) {
                file.open(dm_out);
                out = &file;
            }
            *out << "# lepm-demo v1\nstep,grad_w1,grad_w2,w1,w2,loss\n";
            for (const auto& t : trace)
                *out << fmt::format("{},{},{},{},{},{}\n", t.step, t.grad_w1, t.grad_w2, t.w1, t.w2, t.loss);
            return 0;
        }
        if (*val) {
            const json doc = lepm::read_config_document(val_config);
            const auto errors = lepm::validate_config(doc);
            if (errors.empty()) {
                std::cout << "ok\n";
                return 0;
            }
            for (const auto& e : errors) std::cerr << e << '\n';
            return 2;
        }
        if (*fr) {
            lepm::tasks::BallOptions ball;
            if (!fr_config.empty()) ball = lepm::parse_config(fr_config).task.ball;
            if (fr_format == "csv") {
                std::ofstream out(fr_out);
                out << "# lepm-frames v1\nstep";
                for (int i = 0; i < lepm::tasks::kFramePixels; ++i) out << ",p" << i;
                out << '\n';
                for (long long t = fr_from; t < fr_to; t += fr_every) {
                    const auto f = lepm::tasks::bouncing_ball_frame(t, ball);
                    out << t;
                    for (double v : f) out << ',' << fmt::format("{}", v);
                    out << '\n';
                }
            } else {
                std::filesystem::create_directories(fr_out);
                for (long long t = fr_from; t < fr_to; t += fr_every)
                    write_pgm(fmt::format("{}/frame_{:08d}.pgm", fr_out, t), lepm::tasks::bouncing_ball_frame(t, ball));
            }
            return 0;
        }
    } catch (const lepm::ConfigError& e) {
        std::cerr << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
