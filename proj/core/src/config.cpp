#include "lepm/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "lepm/errors.hpp"

namespace lepm {

using nlohmann::json;

namespace {

// Walks one JSON object, recording violations instead of throwing so that a
// single pass reports everything wrong with a document.
class ObjectReader {
public:
    ObjectReader(const json* obj, std::string path, std::vector<std::string>& errors)
        : obj_(obj), path_(std::move(path)), errors_(errors) {
        if (obj_ && !obj_->is_object()) {
            errors_.push_back(where() + ": expected an object");
            obj_ = nullptr;
        }
    }

    bool valid() const { return obj_ != nullptr; }

    const json* find(const std::string& key) {
        known_.insert(key);
        if (!obj_) return nullptr;
        auto it = obj_->find(key);
        return it == obj_->end() ? nullptr : &*it;
    }

    const json* require(const std::string& key) {
        const json* v = find(key);
        if (!v) errors_.push_back("missing required field '" + qualify(key) + "'");
        return v;
    }

    ObjectReader child(const std::string& key, bool required) {
        const json* v = required ? require(key) : find(key);
        return ObjectReader(v, qualify(key), errors_);
    }

    template <typename T>
    std::optional<T> number(const std::string& key, bool required, std::optional<double> lo = {},
                            std::optional<double> hi = {}, bool lo_open = false) {
        const json* v = required ? require(key) : find(key);
        if (!v) return std::nullopt;
        if (!v->is_number()) {
            errors_.push_back(qualify(key) + ": expected a number");
            return std::nullopt;
        }
        const double d = v->get<double>();
        if constexpr (std::is_integral_v<T>) {
            if (!v->is_number_integer() && std::floor(d) != d) {
                errors_.push_back(qualify(key) + ": expected an integer");
                return std::nullopt;
            }
        }
        if (lo && (lo_open ? !(d > *lo) : !(d >= *lo))) {
            errors_.push_back(qualify(key) + ": must be " + (lo_open ? "> " : ">= ") + fmt(*lo));
            return std::nullopt;
        }
        if (hi && !(d <= *hi)) {
            errors_.push_back(qualify(key) + ": must be <= " + fmt(*hi));
            return std::nullopt;
        }
        if constexpr (std::is_integral_v<T>) {
            return v->is_number_integer() ? v->get<T>() : static_cast<T>(d);
        } else {
            return static_cast<T>(d);
        }
    }

    std::optional<std::string> string(const std::string& key, bool required) {
        const json* v = required ? require(key) : find(key);
        if (!v) return std::nullopt;
        if (!v->is_string()) {
            errors_.push_back(qualify(key) + ": expected a string");
            return std::nullopt;
        }
        return v->get<std::string>();
    }

    std::optional<bool> boolean(const std::string& key) {
        const json* v = find(key);
        if (!v) return std::nullopt;
        if (!v->is_boolean()) {
            errors_.push_back(qualify(key) + ": expected true or false");
            return std::nullopt;
        }
        return v->get<bool>();
    }

    template <typename T>
    std::optional<std::vector<T>> list(const std::string& key, bool required, double lo) {
        const json* v = required ? require(key) : find(key);
        if (!v) return std::nullopt;
        if (!v->is_array()) {
            errors_.push_back(qualify(key) + ": expected a list");
            return std::nullopt;
        }
        std::vector<T> out;
        for (const auto& e : *v) {
            if (!e.is_number() || (std::is_integral_v<T> && !e.is_number_integer()) || e.get<double>() < lo) {
                errors_.push_back(qualify(key) + ": entries must be " + (std::is_integral_v<T> ? "integers" : "numbers") +
                                  " >= " + fmt(lo));
                return std::nullopt;
            }
            out.push_back(e.get<T>());
        }
        return out;
    }

    /// Reports keys present in the object that no accessor asked for.
    void finish() {
        if (!obj_) return;
        for (auto it = obj_->begin(); it != obj_->end(); ++it)
            if (!known_.count(it.key())) errors_.push_back("unknown key '" + qualify(it.key()) + "'");
    }

private:
    static std::string fmt(double d) {
        std::ostringstream os;
        os << d;
        return os.str();
    }
    std::string where() const { return path_.empty() ? "<root>" : path_; }
    std::string qualify(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const json* obj_;
    std::string path_;
    std::vector<std::string>& errors_;
    std::set<std::string> known_;
};

struct Parsed {
    RunConfig cfg;
    std::vector<std::string> errors;
};

Parsed parse(const json& doc) {
    Parsed p;
    auto& cfg = p.cfg;
    auto& errors = p.errors;
    ObjectReader root(&doc, "", errors);
    if (!root.valid()) return p;

    // task
    {
        auto t = root.child("task", true);
        if (auto name = t.string("name", true)) {
            try {
                cfg.task.kind = tasks::parse_task_kind(*name);
            } catch (const ConfigError& e) {
                errors.push_back(std::string("task.name: ") + e.what());
            }
        }
        if (auto v = t.number<double>("sawtooth_period_ms", false, 0.0, {}, true)) cfg.task.sawtooth_period_ms = *v;
        if (auto v = t.number<double>("identity_period_ms", false, 0.0, {}, true)) cfg.task.identity_period_ms = *v;
        auto b = t.child("ball", false);
        if (auto v = b.number<Step>("period_x", false, 1.0)) cfg.task.ball.period_x = *v;
        if (auto v = b.number<Step>("period_y", false, 1.0)) cfg.task.ball.period_y = *v;
        if (auto v = b.number<Step>("phase_x", false, 0.0)) cfg.task.ball.phase_x = *v;
        if (auto v = b.number<Step>("phase_y", false, 0.0)) cfg.task.ball.phase_y = *v;
        if (auto v = b.number<Step>("lag_far", false, 0.0)) cfg.task.ball.lag_far = *v;
        if (auto v = b.number<Step>("lag_near", false, 0.0)) cfg.task.ball.lag_near = *v;
        b.finish();
        t.finish();
    }

    // network
    {
        auto n = root.child("network", true);
        if (auto v = n.list<int>("hidden", true, 1.0)) cfg.hidden = *v;
        if (auto v = n.number<double>("tau", false, 0.0, {}, true)) cfg.network.tau = *v;
        if (auto v = n.number<double>("dt", false, 0.0, {}, true)) cfg.network.dt = *v;
        std::optional<double> eta_w = n.number<double>("eta_w", true, 0.0);
        if (eta_w) cfg.network.eta_w = *eta_w;
        if (auto v = n.number<double>("eta_b", false, 0.0)) {
            cfg.network.eta_b = *v;
        } else if (eta_w) {
            cfg.network.eta_b = *eta_w;
        }
        if (auto v = n.number<double>("beta", false, 0.0)) cfg.network.beta = *v;
        if (auto v = n.number<double>("u_dot_smoothing", false, 0.0, 1.0, true)) cfg.network.u_dot_alpha = *v;
        if (auto v = n.number<double>("s_bar_smoothing", false, 0.0, 1.0, true)) cfg.s_bar_alpha = *v;
        if (auto v = n.number<double>("max_abs_state", false, 0.0, {}, true)) cfg.network.max_abs_state = *v;
        n.finish();
        cfg.task.dt = cfg.network.dt;
    }

    // delays
    {
        auto d = root.child("delays", true);
        if (auto kind = d.string("kind", true)) {
            if (*kind == "constant") {
                cfg.delays.kind = DelayKind::constant;
                auto steps = d.number<Step>("steps", false, 0.0);
                auto ms = d.number<double>("ms", false, 0.0);
                if (steps && ms) {
                    errors.push_back("delays: give either 'steps' or 'ms', not both");
                } else if (steps) {
                    cfg.delays.steps = *steps;
                } else if (ms) {
                    cfg.delays.steps = delay_steps_from_ms(*ms, cfg.network.dt);
                } else {
                    errors.push_back("missing required field 'delays.steps'");
                }
            } else if (*kind == "uniform") {
                cfg.delays.kind = DelayKind::uniform;
                auto lo = d.number<Step>("lo", true, 0.0);
                auto hi = d.number<Step>("hi", true, 0.0);
                if (lo) cfg.delays.lo = *lo;
                if (hi) cfg.delays.hi = *hi;
                if (lo && hi && *lo > *hi) errors.push_back("delays: lo must not exceed hi");
            } else {
                errors.push_back("delays.kind: expected 'constant' or 'uniform', got '" + *kind + "'");
            }
        }
        d.finish();
    }

    // compensator
    {
        auto c = root.child("compensator", true);
        if (auto kind = c.string("kind", true)) {
            if (*kind == "none") {
                cfg.compensator.kind = CompensatorKind::none;
            } else if (*kind == "linex") {
                cfg.compensator.kind = CompensatorKind::linex;
            } else if (*kind == "pmnet") {
                cfg.compensator.kind = CompensatorKind::pmnet;
            } else {
                errors.push_back("compensator.kind: expected 'none', 'linex' or 'pmnet', got '" + *kind + "'");
            }
        }
        auto lx = c.child("linex", false);
        if (auto v = lx.number<Step>("h", false, 1.0)) cfg.compensator.linex.h = *v;
        if (auto v = lx.number<double>("velocity_smoothing", false, 0.0, 1.0, true))
            cfg.compensator.linex.velocity_alpha = *v;
        if (auto v = lx.number<double>("output_smoothing", false, 0.0, 1.0, true))
            cfg.compensator.linex.output_alpha = *v;
        lx.finish();
        cfg.compensator.linex.dt = cfg.network.dt;

        auto pm = c.child("pmnet", false);
        auto& po = cfg.compensator.pmnet;
        if (auto v = pm.list<Step>("lags", false, 0.0)) {
            if (v->empty() || !std::is_sorted(v->begin(), v->end()))
                errors.push_back("compensator.pmnet.lags: must be a non-empty ascending list");
            else
                po.lags = *v;
        }
        if (auto v = pm.list<int>("hidden", false, 1.0)) po.hidden = *v;
        if (auto v = pm.number<std::size_t>("buffer", false, 1.0)) po.buffer_capacity = *v;
        if (auto v = pm.number<std::size_t>("batch", false, 1.0)) po.batch_size = *v;
        if (auto v = pm.number<double>("lr", false, 0.0)) po.lr = *v;
        if (auto v = pm.number<double>("gain", false, 0.0, {}, true)) po.gain = *v;
        if (auto v = pm.number<double>("output_smoothing", false, 0.0, 1.0, true)) po.output_alpha = *v;
        if (auto v = pm.string("optimizer", false)) {
            if (*v == "sgd") po.optimizer = PmOptimizer::sgd;
            else if (*v == "adam") po.optimizer = PmOptimizer::adam;
            else errors.push_back("compensator.pmnet.optimizer: expected 'sgd' or 'adam'");
        }
        if (auto v = pm.number<Step>("train_until", false, 0.0)) cfg.compensator.pm_train_until = *v;
        pm.finish();
        c.finish();
    }

    // schedule
    {
        auto s = root.child("schedule", true);
        auto t_max = s.number<Step>("t_max", true, 1.0);
        auto t_off = s.number<Step>("t_beta_off", true, 0.0);
        if (t_max) cfg.schedule.t_max = *t_max;
        if (t_off) cfg.schedule.t_beta_off = *t_off;
        if (t_max && t_off && *t_off >= *t_max) errors.push_back("schedule: t_beta_off must be smaller than t_max");
        if (auto v = s.number<Step>("burn_in", false, 0.0)) cfg.schedule.burn_in = *v;
        if (auto v = s.number<Step>("record_every", false, 1.0)) cfg.schedule.record_every = *v;
        if (auto v = s.boolean("record_predictions")) cfg.schedule.record_predictions = *v;
        if (auto v = s.number<Step>("window", false, 1.0)) cfg.schedule.window = *v;
        s.finish();
    }

    if (auto v = root.number<std::uint64_t>("seed", true, 0.0)) cfg.seed = *v;
    if (auto v = root.string("output_dir", false)) cfg.output_dir = *v;
    root.finish();

    if (errors.empty()) {
        cfg.network.layer_sizes.clear();
        try {
            tasks::TaskStream stream(cfg.task);
            cfg.network.layer_sizes.push_back(stream.input_dim());
            cfg.network.layer_sizes.insert(cfg.network.layer_sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
            cfg.network.layer_sizes.push_back(stream.output_dim());
            cfg.network.validate();
        } catch (const std::exception& e) {
            errors.push_back(e.what());
        }
    }
    cfg.source = doc;
    return p;
}

}  // namespace

std::vector<std::string> validate_config(const json& doc) { return parse(doc).errors; }

RunConfig config_from_json(const json& doc) {
    Parsed p = parse(doc);
    if (!p.errors.empty()) {
        std::string msg = "invalid configuration:";
        for (const auto& e : p.errors) msg += "\n  " + e;
        throw ConfigError(msg);
    }
    return std::move(p.cfg);
}

json read_config_document(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) return json::object();
    try {
        return json::parse(text, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError("config file '" + path.string() + "' is not valid JSON: " + e.what());
    }
}

RunConfig parse_config(const std::filesystem::path& path) { return config_from_json(read_config_document(path)); }

Step delay_steps_from_ms(double delay_ms, double dt_ms) {
    if (!(delay_ms >= 0.0) || !(dt_ms > 0.0)) throw ConfigError("delay and dt must be non-negative and positive");
    return static_cast<Step>(std::llround(delay_ms / dt_ms));
}

void set_dotted(json& doc, const std::string& dotted_key, const json& value) {
    json* node = &doc;
    std::size_t start = 0;
    while (true) {
        const auto dot = dotted_key.find('.', start);
        const std::string part = dotted_key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw ConfigError("bad parameter path '" + dotted_key + "'");
        if (dot == std::string::npos) {
            (*node)[part] = value;
            return;
        }
        if (!node->contains(part) || !(*node)[part].is_object()) (*node)[part] = json::object();
        node = &(*node)[part];
        start = dot + 1;
    }
}

std::string to_string(CompensatorKind k) {
    switch (k) {
        case CompensatorKind::none: return "none";
        case CompensatorKind::linex: return "linex";
        case CompensatorKind::pmnet: return "pmnet";
    }
    return "unknown";
}

}  // namespace lepm
