#include <benchmark/benchmark.h>

#include <random>

#include "lepm/compensator.hpp"
#include "lepm/delay_line.hpp"
#include "lepm/mlp.hpp"
#include "lepm/network.hpp"
#include "lepm/random.hpp"
#include "lepm/tasks.hpp"

using namespace lepm;

namespace {

void BM_DelayLinePushRead(benchmark::State& state) {
    const auto delay = static_cast<Step>(state.range(0));
    DelayLine line(static_cast<std::size_t>(delay) + 1);
    Step t = 0;
    double acc = 0.0;
    for (auto _ : state) {
        line.push(t, static_cast<double>(t));
        acc += line.read(t, delay).value;
        ++t;
    }
    benchmark::DoNotOptimize(acc);
}
BENCHMARK(BM_DelayLinePushRead)->Arg(0)->Arg(50)->Arg(10000);

// One predictor update: batch of training pairs through a 3-lag, 2x100 net.
void BM_PredictorUpdate(benchmark::State& state) {
    const auto channels = static_cast<std::size_t>(state.range(0));
    const auto batch = static_cast<std::size_t>(state.range(1));
    PredictorOptions opts;
    opts.optimizer = PmOptimizer::adam;
    PredictorNet pm(channels, opts, Rng(1));
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n01;
    std::vector<TrainingPair> pairs(batch);
    for (auto& p : pairs) {
        p.input = Eigen::VectorXd::NullaryExpr(static_cast<Eigen::Index>(3 * channels), [&] { return n01(rng); });
        p.target = Eigen::VectorXd::NullaryExpr(static_cast<Eigen::Index>(channels), [&] { return n01(rng); });
    }
    for (auto _ : state) benchmark::DoNotOptimize(pm.update(pairs, opts.lr));
}
BENCHMARK(BM_PredictorUpdate)->Args({2, 5})->Args({50, 5})->Args({128, 10})->Unit(benchmark::kMicrosecond);

void BM_DenseBackward(benchmark::State& state) {
    Rng rng(3);
    const int in = static_cast<int>(state.range(0));
    auto net = mlp::DenseNet::init(std::vector<int>{in, 100, 100, in / 3}, 0.1, rng);
    const Eigen::MatrixXd x = Eigen::MatrixXd::Random(in, 5);
    const Eigen::MatrixXd t = Eigen::MatrixXd::Random(in / 3, 5);
    for (auto _ : state) benchmark::DoNotOptimize(net.backward(x, t).loss);
}
BENCHMARK(BM_DenseBackward)->Arg(6)->Arg(150)->Arg(384)->Unit(benchmark::kMicrosecond);

// Network step with identity compensation; width and delay vary.
void BM_NetworkStep(benchmark::State& state) {
    NetworkSpec spec;
    spec.layer_sizes = {50, static_cast<int>(state.range(0)), 1};
    spec.eta_w = spec.eta_b = 0.005;
    Rng rng(4);
    Network net(spec, DelayAssignment::constant(spec.layer_sizes, state.range(1)), identity_factory(), rng);
    tasks::TaskStream stream({tasks::TaskKind::sawtooth, spec.dt});
    Step n = 0;
    for (auto _ : state) {
        const auto s = stream.at(n++);
        benchmark::DoNotOptimize(net.step(std::span(s.x.data(), 50), std::span(s.y.data(), 1)).loss);
    }
}
BENCHMARK(BM_NetworkStep)->Args({30, 0})->Args({30, 50})->Args({200, 50})->Unit(benchmark::kMicrosecond);

}  // namespace
BENCHMARK_MAIN();
