#include "lepm/tasks.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include "lepm/errors.hpp"

namespace lepm::tasks {

namespace {

// sin(2*pi*t/period) with the argument reduced first, so that t and t + k*period
// produce the same value.
double periodic_sine(double t_ms, double period_ms) {
    const double phase = std::fmod(t_ms, period_ms) / period_ms;
    return std::sin(2.0 * std::numbers::pi * phase);
}

Step floor_mod(Step a, Step m) { return ((a % m) + m) % m; }

// 0 at s = 0, 1 at s = period/2, back to 0 at s = period.
double triangle(Step t, Step period) {
    const Step s = floor_mod(t, period);
    const double frac = static_cast<double>(s) / static_cast<double>(period);
    return 1.0 - std::abs(2.0 * frac - 1.0);
}

}  // namespace

Eigen::VectorXd fourier_input(double t_ms, std::span<const double> periods_ms) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(periods_ms.size()));
    for (std::size_t k = 0; k < periods_ms.size(); ++k) {
        if (!(periods_ms[k] > 0.0)) throw ContractError("fourier_input: periods must be positive");
        x(static_cast<Eigen::Index>(k)) = periodic_sine(t_ms, periods_ms[k]);
    }
    return x;
}

double two_sine_target(double t_ms, double dt_ms) {
    return periodic_sine(t_ms, 200.0 * dt_ms) + periodic_sine(t_ms, 400.0 * dt_ms);
}

double sawtooth_target(double t_ms, double period_ms) {
    if (!(period_ms > 0.0)) throw ContractError("sawtooth_target: period must be positive");
    double frac = std::fmod(t_ms, period_ms) / period_ms;
    if (frac < 0.0) frac += 1.0;
    return 2.0 * frac - 1.0;
}

std::vector<double> sawtooth_periods() {
    std::vector<double> p;
    for (int k = 1; k <= 50; ++k) p.push_back(2.0 * k);
    return p;
}

IdentitySample identity_sine(double t_ms, double period_ms) {
    const double v = periodic_sine(t_ms, period_ms);
    return {v, v};
}

BallPosition ball_position(Step t, const BallOptions& opts) {
    constexpr double span = kFrameSide - 1;
    return {span * triangle(t + opts.phase_x, opts.period_x), span * triangle(t + opts.phase_y, opts.period_y)};
}

Frame bouncing_ball_frame(Step t, const BallOptions& opts) {
    Frame f{};
    const BallPosition p = ball_position(t, opts);
    const int c0 = std::min(static_cast<int>(std::floor(p.x)), kFrameSide - 1);
    const int r0 = std::min(static_cast<int>(std::floor(p.y)), kFrameSide - 1);
    const double fx = p.x - c0;
    const double fy = p.y - r0;
    auto put = [&](int r, int c, double w) {
        if (w == 0.0) return;
        f[static_cast<std::size_t>(r * kFrameSide + c)] += w;
    };
    put(r0, c0, (1.0 - fx) * (1.0 - fy));
    if (c0 + 1 < kFrameSide) put(r0, c0 + 1, fx * (1.0 - fy));
    if (r0 + 1 < kFrameSide) put(r0 + 1, c0, (1.0 - fx) * fy);
    if (r0 + 1 < kFrameSide && c0 + 1 < kFrameSide) put(r0 + 1, c0 + 1, fx * fy);
    return f;
}

Step ball_trajectory_period(const BallOptions& opts) { return std::lcm(opts.period_x, opts.period_y); }

TaskKind parse_task_kind(const std::string& name) {
    if (name == "two_sine") return TaskKind::two_sine;
    if (name == "sawtooth") return TaskKind::sawtooth;
    if (name == "bouncing_ball") return TaskKind::bouncing_ball;
    if (name == "identity_sine") return TaskKind::identity_sine;
    throw ConfigError("unknown task '" + name + "'");
}

std::string to_string(TaskKind k) {
    switch (k) {
        case TaskKind::two_sine: return "two_sine";
        case TaskKind::sawtooth: return "sawtooth";
        case TaskKind::bouncing_ball: return "bouncing_ball";
        case TaskKind::identity_sine: return "identity_sine";
    }
    return "unknown";
}

TaskStream::TaskStream(TaskOptions opts) : opts_(opts) {
    if (!(opts_.dt > 0.0)) throw ConfigError("task dt must be positive");
    switch (opts_.kind) {
        case TaskKind::two_sine:
            periods_ = {200.0 * opts_.dt, 400.0 * opts_.dt};
            input_dim_ = 2;
            output_dim_ = 1;
            break;
        case TaskKind::sawtooth:
            periods_ = sawtooth_periods();
            input_dim_ = static_cast<int>(periods_.size());
            output_dim_ = 1;
            break;
        case TaskKind::bouncing_ball:
            if (opts_.ball.period_x <= 0 || opts_.ball.period_y <= 0)
                throw ConfigError("ball periods must be positive");
            input_dim_ = 2 * kFramePixels;
            output_dim_ = kFramePixels;
            break;
        case TaskKind::identity_sine:
            input_dim_ = 1;
            output_dim_ = 1;
            break;
    }
}

Sample TaskStream::at(Step step) const {
    const double t = static_cast<double>(step) * opts_.dt;
    Sample s;
    switch (opts_.kind) {
        case TaskKind::two_sine:
            s.x = fourier_input(t, periods_);
            s.y = Eigen::VectorXd::Constant(1, s.x.sum());
            break;
        case TaskKind::sawtooth:
            s.x = fourier_input(t, periods_);
            s.y = Eigen::VectorXd::Constant(1, sawtooth_target(t, opts_.sawtooth_period_ms));
            break;
        case TaskKind::bouncing_ball: {
            const Frame far = bouncing_ball_frame(step - opts_.ball.lag_far, opts_.ball);
            const Frame near = bouncing_ball_frame(step - opts_.ball.lag_near, opts_.ball);
            const Frame now = bouncing_ball_frame(step, opts_.ball);
            s.x.resize(2 * kFramePixels);
            s.y.resize(kFramePixels);
            for (int i = 0; i < kFramePixels; ++i) {
                s.x(i) = far[static_cast<std::size_t>(i)];
                s.x(kFramePixels + i) = near[static_cast<std::size_t>(i)];
                s.y(i) = now[static_cast<std::size_t>(i)];
            }
            break;
        }
        case TaskKind::identity_sine: {
            const auto v = identity_sine(t, opts_.identity_period_ms);
            s.x = Eigen::VectorXd::Constant(1, v.x);
            s.y = Eigen::VectorXd::Constant(1, v.y);
            break;
        }
    }
    return s;
}

Step TaskStream::period_steps() const {
    auto steps_of = [&](double period_ms) {
        const double s = period_ms / opts_.dt;
        const auto r = static_cast<Step>(std::llround(s));
        if (std::abs(s - static_cast<double>(r)) > 1e-9)
            throw ContractError("stream period is not a whole number of steps");
        return r;
    };
    switch (opts_.kind) {
        case TaskKind::two_sine: return 400;
        case TaskKind::sawtooth: return steps_of(opts_.sawtooth_period_ms);
        case TaskKind::bouncing_ball: return ball_trajectory_period(opts_.ball);
        case TaskKind::identity_sine: return steps_of(opts_.identity_period_ms);
    }
    return 0;
}

}  // namespace lepm::tasks
