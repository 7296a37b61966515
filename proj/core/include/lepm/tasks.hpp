#pragma once

#include <Eigen/Dense>
#include <array>
#include <span>
#include <string>
#include <vector>

#include "lepm/delay_line.hpp"

namespace lepm::tasks {

/// sin(2*pi*t/period) per component; t and periods in ms.
Eigen::VectorXd fourier_input(double t_ms, std::span<const double> periods_ms);

/// Sum of the two unit sines with periods 200*dt and 400*dt.
double two_sine_target(double t_ms, double dt_ms);

/// Rising ramp 2*frac(t/period) - 1 in [-1, 1).
double sawtooth_target(double t_ms, double period_ms);

/// The 50 sawtooth input periods, 2, 4, ..., 100 ms.
std::vector<double> sawtooth_periods();

struct IdentitySample {
    double x;
    double y;
};
IdentitySample identity_sine(double t_ms, double period_ms = 100.0);

inline constexpr int kFrameSide = 8;
inline constexpr int kFramePixels = kFrameSide * kFrameSide;
using Frame = std::array<double, kFramePixels>;  // row-major, [row * 8 + col]

/// Bouncing-ball video. Each axis coordinate is a triangle wave between the
/// first and last pixel centres with an integer period in steps, so the
/// trajectory repeats after lcm(period_x, period_y) steps. The ball is drawn
/// as a bilinear footprint of unit total intensity.
struct BallOptions {
    Step period_x = 300;
    Step period_y = 151;
    Step phase_x = 0;
    Step phase_y = 37;
    Step lag_far = 800;
    Step lag_near = 500;
};

struct BallPosition {
    double x;  // column coordinate in [0, 7]
    double y;  // row coordinate in [0, 7]
};

BallPosition ball_position(Step t, const BallOptions& opts);
Frame bouncing_ball_frame(Step t, const BallOptions& opts);
Step ball_trajectory_period(const BallOptions& opts);

enum class TaskKind { two_sine, sawtooth, bouncing_ball, identity_sine };

TaskKind parse_task_kind(const std::string& name);
std::string to_string(TaskKind k);

struct TaskOptions {
    TaskKind kind = TaskKind::two_sine;
    double dt = 5.0;                       // ms per step
    double sawtooth_period_ms = 50000.0;   // 10^4 steps at 5 ms
    double identity_period_ms = 100.0;
    BallOptions ball{};
};

struct Sample {
    Eigen::VectorXd x;
    Eigen::VectorXd y;
};

/// Deterministic (x, y) stream indexed by step.
class TaskStream {
public:
    explicit TaskStream(TaskOptions opts);

    Sample at(Step step) const;
    int input_dim() const noexcept { return input_dim_; }
    int output_dim() const noexcept { return output_dim_; }
    const TaskOptions& options() const noexcept { return opts_; }

    /// Period of the target in steps. The sawtooth inputs are not periodic
    /// over it; every other stream repeats as a whole.
    Step period_steps() const;

private:
    TaskOptions opts_;
    std::vector<double> periods_;
    int input_dim_ = 0;
    int output_dim_ = 0;
};

}  // namespace lepm::tasks
