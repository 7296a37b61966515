#include "lepm/demo.hpp"

#include "lepm/errors.hpp"
#include "lepm/tasks.hpp"

namespace lepm::demo {

ThreeNeuronDemo::ThreeNeuronDemo(DemoOptions opts)
    : opts_(opts), w1_(opts.w1), w2_(opts.w2),
      u1_(static_cast<std::size_t>(opts.delay) + 1), u2_(static_cast<std::size_t>(opts.delay) + 1),
      r_(static_cast<std::size_t>(opts.delay) + 1), w2_line_(static_cast<std::size_t>(opts.delay) + 1) {
    if (opts.delay < 0) throw ContractError("demo delay must be non-negative");
}

DemoTrace ThreeNeuronDemo::step(double x, double y) {
    const Step t = step_;
    const Step d = opts_.delay;

    u1_.push(t, x);
    const double u2 = w1_ * u1_.read(t, d).value;
    u2_.push(t, u2);
    const double u2_received = u2_.read(t, d).value;
    const double u3 = w2_ * u2_received;
    const double r = u3 - y;
    r_.push(t, r);
    w2_line_.push(t, w2_);

    const double grad_w2 = r * u2_received;
    const double grad_w1 = r_.read(t, d).value * w2_line_.read(t, d).value * u1_.read(t, d).value;

    w1_ -= opts_.lr * grad_w1;
    w2_ -= opts_.lr * grad_w2;
    ++step_;
    return {t, grad_w1, grad_w2, w1_, w2_, 0.5 * r * r};
}

std::vector<DemoTrace> run_identity_demo(const DemoOptions& opts, Step steps) {
    ThreeNeuronDemo demo(opts);
    std::vector<DemoTrace> trace;
    trace.reserve(static_cast<std::size_t>(steps));
    for (Step s = 0; s < steps; ++s) {
        const auto v = tasks::identity_sine(static_cast<double>(s) * opts.dt, opts.period_ms);
        trace.push_back(demo.step(v.x, v.y));
    }
    return trace;
}

}  // namespace lepm::demo
