#include <doctest.h>

#include <cmath>

#include "lepm/demo.hpp"
#include "lepm/tasks.hpp"

using namespace lepm;
using namespace lepm::demo;

TEST_CASE("undelayed demo is plain streaming gradient descent") {
    DemoOptions opts;
    ThreeNeuronDemo demo(opts);
    double w1 = opts.w1, w2 = opts.w2;
    for (Step s = 0; s < 2000; ++s) {
        const auto v = tasks::identity_sine(static_cast<double>(s) * opts.dt);
        const auto tr = demo.step(v.x, v.y);
        const double h = w1 * v.x;
        const double r = w2 * h - v.y;
        const double g1 = r * w2 * v.x, g2 = r * h;
        w1 -= opts.lr * g1;
        w2 -= opts.lr * g2;
        REQUIRE(tr.grad_w1 == doctest::Approx(g1).epsilon(1e-12));
        REQUIRE(tr.grad_w2 == doctest::Approx(g2).epsilon(1e-12));
        REQUIRE(demo.w1() == doctest::Approx(w1).epsilon(1e-12));
        REQUIRE(demo.w2() == doctest::Approx(w2).epsilon(1e-12));
    }
}

TEST_CASE("undelayed demo converges") {
    const auto trace = run_identity_demo({}, 10000);
    Step below = 0;
    for (const auto& t : trace) below = std::abs(t.grad_w1) < 1e-3 ? below + 1 : 0;
    CHECK(below > 100);
    CHECK(trace.back().w1 * trace.back().w2 == doctest::Approx(1.0).epsilon(1e-2));
}

TEST_CASE("delayed demo gradients use stale signals") {
    DemoOptions opts;
    opts.delay = 33;
    ThreeNeuronDemo demo(opts);
    demo.residual_line().enable_read_log(true);
    demo.u1_line().enable_read_log(true);
    for (Step s = 0; s < 200; ++s) {
        const auto v = tasks::identity_sine(static_cast<double>(s));
        demo.step(v.x, v.y);
    }
    for (const auto& rec : demo.residual_line().read_log()) CHECK(rec.at - rec.source == 33);
    for (const auto& rec : demo.u1_line().read_log()) CHECK(rec.at - rec.source == 33);
    CHECK(demo.residual_line().read_log().size() == 200);
}

TEST_CASE("delayed demo oscillates") {
    DemoOptions opts;
    opts.delay = 33;
    const auto trace = run_identity_demo(opts, 100000);
    int flips = 0;
    for (std::size_t i = 1; i < trace.size(); ++i)
        if ((trace[i].grad_w1 > 0) != (trace[i - 1].grad_w1 > 0)) ++flips;
    CHECK(flips >= 100);
}
