#include "lepm/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iterator>
#include <mutex>
#include <numeric>
#include <thread>

#include <fmt/format.h>

#include "lepm/errors.hpp"
#include "lepm/tasks.hpp"

namespace lepm {

using nlohmann::json;

DelayAssignment sample_delays(const DelaySpec& spec, std::span<const int> layer_sizes, Rng& rng) {
    if (spec.kind == DelayKind::constant) {
        if (spec.steps < 0) throw ConfigError("delays must be non-negative");
        return DelayAssignment::constant(layer_sizes, spec.steps);
    }
    if (spec.lo < 0 || spec.lo > spec.hi) throw ConfigError("uniform delays need 0 <= lo <= hi");
    std::uniform_int_distribution<Step> dist(spec.lo, spec.hi);
    DelayAssignment a;
    for (std::size_t l = 1; l < layer_sizes.size(); ++l) {
        StepMatrix m(layer_sizes[l], layer_sizes[l - 1]);
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = dist(rng);
        a.layers.push_back(std::move(m));
    }
    for (int o = 0; o < layer_sizes.back(); ++o) a.loss.push_back(dist(rng));
    return a;
}

CompensatorFactory make_compensator_factory(const RunConfig& cfg) {
    switch (cfg.compensator.kind) {
        case CompensatorKind::none: {
            const double alpha = cfg.s_bar_alpha;
            return [alpha](NeuronId, std::size_t channels) {
                return std::make_unique<IdentityCompensator>(channels, alpha);
            };
        }
        case CompensatorKind::linex: {
            const LinexOptions opts = cfg.compensator.linex;
            return [opts](NeuronId, std::size_t channels) {
                return std::make_unique<LinearExtrapolator>(channels, opts);
            };
        }
        case CompensatorKind::pmnet: {
            const PredictorOptions opts = cfg.compensator.pmnet;
            const std::uint64_t seed = cfg.seed;
            return [opts, seed](NeuronId id, std::size_t channels) {
                const std::string name = id.is_loss_node()
                                             ? std::string("pm/loss")
                                             : fmt::format("pm/{}/{}", id.layer, id.index);
                return std::make_unique<PredictorNet>(channels, opts, substream(seed, name));
            };
        }
    }
    throw ConfigError("unknown compensator kind");
}

Step burn_in_steps(const RunConfig& cfg) {
    if (cfg.schedule.burn_in) return *cfg.schedule.burn_in;
    const Step max_delay = cfg.delays.kind == DelayKind::constant ? cfg.delays.steps : cfg.delays.hi;
    Step lag = 0;
    if (cfg.compensator.kind == CompensatorKind::pmnet) lag = cfg.compensator.pmnet.lags.back();
    if (cfg.compensator.kind == CompensatorKind::linex) lag = cfg.compensator.linex.h;
    return 2 * max_delay + lag;
}

std::string metrics_header(std::size_t outputs, bool with_predictions) {
    std::string h = "# lepm-metrics v1\nstep,time_ms,phase,burn_in,loss,pm_loss";
    if (with_predictions) {
        for (std::size_t o = 0; o < outputs; ++o) h += fmt::format(",pred_{}", o);
        for (std::size_t o = 0; o < outputs; ++o) h += fmt::format(",target_{}", o);
    }
    h += '\n';
    return h;
}

namespace {

std::optional<double> mean_over(const std::vector<double>& v, Step begin, Step end) {
    begin = std::max<Step>(begin, 0);
    end = std::min<Step>(end, static_cast<Step>(v.size()));
    if (end <= begin) return std::nullopt;
    double s = 0.0;
    for (Step i = begin; i < end; ++i) s += v[static_cast<std::size_t>(i)];
    return s / static_cast<double>(end - begin);
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

void append_row(fmt::memory_buffer& buf, const MetricsRow& r) {
    fmt::format_to(std::back_inserter(buf), "{},{},{},{},{},{}", r.step, r.time_ms,
                   r.phase == Phase::train ? "train" : "test", r.burn_in ? 1 : 0, r.loss, r.pm_loss);
    for (double p : r.predictions) fmt::format_to(std::back_inserter(buf), ",{}", p);
    for (double t : r.targets) fmt::format_to(std::back_inserter(buf), ",{}", t);
    buf.push_back('\n');
}

}  // namespace

json RunSummary::to_json() const {
    json j;
    j["task"] = task;
    j["compensator"] = compensator;
    j["seed"] = seed;
    j["steps_completed"] = steps_completed;
    j["burn_in"] = burn_in;
    j["diverged"] = diverged;
    j["divergence_step"] = divergence_step ? json(*divergence_step) : json(nullptr);
    j["divergence_reason"] = divergence_reason;
    j["train_loss_tail"] = optional_json(train_loss_tail);
    j["test_loss"] = optional_json(test_loss);
    j["initial_window_loss"] = optional_json(initial_window_loss);
    j["final_window_loss"] = optional_json(final_window_loss);
    j["wall_ms"] = wall_ms;
    return j;
}

RunResult run_experiment(const RunConfig& cfg, const RunOptions& opts) {
    const auto started = std::chrono::steady_clock::now();
    RunResult result;
    RunSummary& summary = result.summary;
    summary.task = tasks::to_string(cfg.task.kind);
    summary.compensator = to_string(cfg.compensator.kind);
    summary.seed = cfg.seed;
    summary.burn_in = burn_in_steps(cfg);

    tasks::TaskStream stream(cfg.task);
    Rng weight_rng = substream(cfg.seed, "weights");
    Rng delay_rng = substream(cfg.seed, "delays");
    const DelayAssignment delays = sample_delays(cfg.delays, cfg.network.layer_sizes, delay_rng);
    Network net(cfg.network, delays, make_compensator_factory(cfg), weight_rng);

    const std::filesystem::path out_dir = opts.output_dir ? *opts.output_dir : std::filesystem::path(cfg.output_dir);
    const Step record_every = opts.record_every ? *opts.record_every : cfg.schedule.record_every;
    const bool with_pred = cfg.schedule.record_predictions;
    const auto outputs = static_cast<std::size_t>(stream.output_dim());

    std::ofstream csv;
    fmt::memory_buffer buf;
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        summary.metrics_path = out_dir / "metrics.csv";
        summary.summary_path = out_dir / "summary.json";
        csv.open(summary.metrics_path, std::ios::binary);
        if (!csv) throw std::runtime_error("cannot write " + summary.metrics_path.string());
        csv << metrics_header(outputs, with_pred);
    }
    auto flush = [&] {
        if (csv.is_open()) csv.write(buf.data(), static_cast<std::streamsize>(buf.size()));
        buf.clear();
    };

    const Step t_max = cfg.schedule.t_max;
    const Step t_off = cfg.schedule.t_beta_off;
    result.losses.reserve(static_cast<std::size_t>(t_max));
    for (Step n = 0; n < t_max; ++n) {
        net.set_beta_active(n < t_off);
        if (cfg.compensator.pm_train_until && n >= *cfg.compensator.pm_train_until) net.set_pm_plastic(false);
        const tasks::Sample s = stream.at(n);
        StepReport rep;
        try {
            rep = net.step(std::span<const double>(s.x.data(), static_cast<std::size_t>(s.x.size())),
                           std::span<const double>(s.y.data(), static_cast<std::size_t>(s.y.size())));
        } catch (const DivergenceError& e) {
            summary.diverged = true;
            summary.divergence_step = e.step();
            summary.divergence_reason = e.what();
            break;
        }
        result.losses.push_back(rep.loss);
        if (n % record_every == 0) {
            MetricsRow row;
            row.step = n;
            row.time_ms = static_cast<double>(n) * cfg.network.dt;
            row.phase = n < t_off ? Phase::train : Phase::test;
            row.burn_in = n < summary.burn_in;
            row.loss = rep.loss;
            row.pm_loss = rep.pm_loss;
            if (with_pred) {
                row.predictions.assign(rep.received_output.data(), rep.received_output.data() + rep.received_output.size());
                row.targets.assign(s.y.data(), s.y.data() + s.y.size());
            }
            if (csv.is_open()) {
                append_row(buf, row);
                if (buf.size() > (1u << 20)) flush();
            }
            if (opts.keep_rows) result.rows.push_back(std::move(row));
        }
    }
    flush();

    const Step done = static_cast<Step>(result.losses.size());
    const Step window = cfg.schedule.window;
    summary.steps_completed = done;
    summary.train_loss_tail = mean_over(result.losses, std::max(summary.burn_in, t_off - window), t_off);
    summary.test_loss = mean_over(result.losses, std::max(summary.burn_in, t_off), t_max);
    summary.initial_window_loss = mean_over(result.losses, summary.burn_in, summary.burn_in + window);
    summary.final_window_loss = mean_over(result.losses, std::max(summary.burn_in, done - window), done);
    summary.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();

    if (!out_dir.empty()) {
        std::ofstream js(summary.summary_path);
        js << summary.to_json().dump(2) << '\n';
    }
    return result;
}

namespace {

std::vector<json> expand_grid(const json& grid) {
    if (!grid.is_object()) throw ConfigError("sweep grid must be an object of dotted keys to lists");
    std::vector<json> cells{json::object()};
    for (auto it = grid.begin(); it != grid.end(); ++it) {
        if (!it.value().is_array() || it.value().empty())
            throw ConfigError("sweep grid entry '" + it.key() + "' must be a non-empty list");
        std::vector<json> next;
        for (const auto& cell : cells)
            for (const auto& v : it.value()) {
                json c = cell;
                c[it.key()] = v;
                next.push_back(std::move(c));
            }
        cells = std::move(next);
    }
    return cells;
}

std::string csv_field(const json& v) {
    std::string s = v.is_string() ? v.get<std::string>() : v.dump();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + "\"";
}

}  // namespace

std::vector<SweepCell> sweep(const json& base, const json& grid, const std::vector<std::uint64_t>& seeds,
                             const SweepOptions& opts) {
    if (seeds.empty()) throw ConfigError("sweep needs at least one seed");
    const std::vector<json> params = expand_grid(grid);

    struct Job {
        std::size_t cell;
        std::size_t seed_index;
        RunConfig cfg;
    };
    std::vector<Job> jobs;
    for (std::size_t c = 0; c < params.size(); ++c) {
        for (std::size_t s = 0; s < seeds.size(); ++s) {
            json doc = base;
            for (auto it = params[c].begin(); it != params[c].end(); ++it) set_dotted(doc, it.key(), it.value());
            doc["seed"] = seeds[s];
            doc.erase("output_dir");
            jobs.push_back({c, s, config_from_json(doc)});
        }
    }

    std::vector<SweepCell> cells(params.size());
    for (std::size_t c = 0; c < params.size(); ++c) {
        cells[c].params = params[c];
        cells[c].runs.resize(seeds.size());
    }

    std::atomic<std::size_t> next{0};
    std::mutex err_mu;
    std::exception_ptr first_error;
    auto worker = [&] {
        for (std::size_t j; (j = next.fetch_add(1)) < jobs.size();) {
            const Job& job = jobs[j];
            RunOptions ro;
            ro.record_every = opts.record_every;
            ro.output_dir = opts.output_dir.empty()
                                ? std::filesystem::path()
                                : opts.output_dir / fmt::format("cell_{}", job.cell) / fmt::format("seed_{}", seeds[job.seed_index]);
            try {
                cells[job.cell].runs[job.seed_index] = run_experiment(job.cfg, ro).summary;
            } catch (...) {
                std::lock_guard lock(err_mu);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    unsigned n_workers = opts.workers ? opts.workers : std::max(1u, std::thread::hardware_concurrency());
    n_workers = static_cast<unsigned>(std::min<std::size_t>(n_workers, jobs.size()));
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < n_workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);

    for (auto& cell : cells) {
        std::vector<double> losses;
        for (const auto& r : cell.runs) {
            if (r.diverged) {
                ++cell.diverged;
            } else if (r.test_loss) {
                losses.push_back(*r.test_loss);
            }
        }
        if (losses.empty()) continue;
        std::sort(losses.begin(), losses.end());
        const std::size_t m = losses.size();
        cell.median = (m % 2) ? losses[m / 2] : 0.5 * (losses[m / 2 - 1] + losses[m / 2]);
        cell.min = losses.front();
        cell.max = losses.back();
        const double mean = std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(m);
        double var = 0.0;
        for (double l : losses) var += (l - mean) * (l - mean);
        cell.mean = mean;
        cell.stddev = m > 1 ? std::sqrt(var / static_cast<double>(m - 1)) : 0.0;
    }

    if (!opts.output_dir.empty()) {
        std::filesystem::create_directories(opts.output_dir);
        std::vector<std::string> keys;
        for (auto it = grid.begin(); it != grid.end(); ++it) keys.push_back(it.key());
        auto num = [](const std::optional<double>& v) { return v ? fmt::format("{}", *v) : std::string(); };

        std::ofstream agg(opts.output_dir / "aggregate.csv");
        agg << "# lepm-sweep-aggregate v1\ncell";
        for (const auto& k : keys) agg << ',' << k;
        agg << ",runs,diverged,median,min,max,mean,std\n";
        for (std::size_t c = 0; c < cells.size(); ++c) {
            agg << c;
            for (const auto& k : keys) agg << ',' << csv_field(cells[c].params[k]);
            agg << ',' << cells[c].runs.size() << ',' << cells[c].diverged << ',' << num(cells[c].median) << ','
                << num(cells[c].min) << ',' << num(cells[c].max) << ',' << num(cells[c].mean) << ','
                << num(cells[c].stddev) << '\n';
        }

        std::ofstream runs(opts.output_dir / "runs.csv");
        runs << "# lepm-sweep-runs v1\ncell,seed,test_loss,train_loss_tail,diverged,divergence_step,wall_ms\n";
        for (std::size_t c = 0; c < cells.size(); ++c)
            for (const auto& r : cells[c].runs)
                runs << c << ',' << r.seed << ',' << num(r.test_loss) << ',' << num(r.train_loss_tail) << ','
                     << (r.diverged ? 1 : 0) << ',' << (r.divergence_step ? std::to_string(*r.divergence_step) : "")
                     << ',' << r.wall_ms << '\n';
    }
    return cells;
}

}  // namespace lepm
