#pragma once

#include <vector>

#include "lepm/delay_line.hpp"

namespace lepm::demo {

struct DemoOptions {
    Step delay = 0;         // steps, shared by every forward and backward signal
    double lr = 0.01;
    double w1 = 0.5;
    double w2 = 0.5;
    double dt = 1.0;        // ms per step
    double period_ms = 100.0;
};

struct DemoTrace {
    Step step;
    double grad_w1;
    double grad_w2;
    double w1;  // after the update
    double w2;
    double loss;
};

/// Three scalar neurons x -> w1 -> w2 trained by streaming gradient descent
/// with every signal delayed by the same number of steps.
///
/// Neuron 2 owns w1 and neuron 3 owns w2. Neuron 3 sees the target
/// instantly and sends the residual and its weight back to neuron 2.
class ThreeNeuronDemo {
public:
    explicit ThreeNeuronDemo(DemoOptions opts);

    DemoTrace step(double x, double y);

    double w1() const noexcept { return w1_; }
    double w2() const noexcept { return w2_; }
    Step current_step() const noexcept { return step_; }
    const DemoOptions& options() const noexcept { return opts_; }

    /// Lines feeding the w1 gradient, exposed for read-log inspection.
    DelayLine& u1_line() noexcept { return u1_; }
    DelayLine& residual_line() noexcept { return r_; }
    DelayLine& w2_line() noexcept { return w2_line_; }

private:
    DemoOptions opts_;
    double w1_, w2_;
    Step step_ = 0;
    DelayLine u1_, u2_, r_, w2_line_;
};

/// Runs the identity task x = y = sin(2*pi*t/period) for `steps` steps.
std::vector<DemoTrace> run_identity_demo(const DemoOptions& opts, Step steps);

}  // namespace lepm::demo
