#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <unordered_map>

#include "lepm/compensator.hpp"
#include "lepm/errors.hpp"
#include "lepm/network.hpp"
#include "lepm/tasks.hpp"
#include "undelayed_le.hpp"

namespace lepm_check {

using namespace lepm;

std::size_t delay_line_fuzz(std::uint64_t seed, std::size_t operations) {
    std::mt19937_64 rng(seed);
    std::size_t ops = 0, mismatches = 0;
    while (ops < operations) {
        const std::size_t cap = std::uniform_int_distribution<std::size_t>(1, 300)(rng);
        const Step first = std::uniform_int_distribution<Step>(0, 1000)(rng);
        DelayLine line(cap, 0.0, first);
        std::unordered_map<Step, double> sent;
        std::uniform_real_distribution<double> val(-1e6, 1e6);
        Step next = first;
        const std::size_t local_ops = std::uniform_int_distribution<std::size_t>(1000, 20000)(rng);
        for (std::size_t k = 0; k < local_ops && ops < operations; ++k, ++ops) {
            if (next == first || rng() % 3 == 0) {
                const double v = val(rng);
                line.push(next, v);
                sent[next] = v;
                ++next;
                continue;
            }
            const Step latest = next - 1;
            const Step step = latest + std::uniform_int_distribution<Step>(0, 3)(rng);
            const Step delay = std::uniform_int_distribution<Step>(step - latest, static_cast<Step>(cap) - 1 + 5)(rng);
            if (delay >= static_cast<Step>(cap)) {
                bool threw = false;
                try {
                    (void)line.read(step, delay);
                } catch (const CapacityError&) {
                    threw = true;
                }
                mismatches += !threw;
                continue;
            }
            const auto r = line.read(step, delay);
            const Step source = step - delay;
            const bool retained = source >= first && source > latest - static_cast<Step>(cap);
            if (retained) {
                mismatches += (r.pre_history || r.value != sent.at(source));
            } else {
                mismatches += (!r.pre_history || r.value != 0.0);
            }
        }
    }
    return mismatches;
}

double gradient_check(mlp::DenseNet net, const Eigen::MatrixXd& x, const Eigen::MatrixXd& t, double eps) {
    const auto analytic = net.backward(x, t).grads;
    double worst = 0.0;
    auto probe = [&](double& p, double g) {
        const double keep = p;
        p = keep + eps;
        const double lp = net.backward(x, t).loss;
        p = keep - eps;
        const double lm = net.backward(x, t).loss;
        p = keep;
        const double fd = (lp - lm) / (2.0 * eps);
        // The floor keeps roundoff on near-zero gradients from dominating.
        const double denom = std::max({std::abs(fd), std::abs(g), 1e-6});
        worst = std::max(worst, std::abs(fd - g) / denom);
    };
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
        auto& layer = net.layers()[l];
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
            for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) probe(layer.weight(r, c), analytic[l].weight(r, c));
        for (Eigen::Index r = 0; r < layer.bias.size(); ++r) probe(layer.bias(r), analytic[l].bias(r));
    }
    return worst;
}

double gradient_check_random_nets(std::uint64_t seed, int count) {
    Rng rng(seed);
    std::uniform_int_distribution<int> width(1, 6), depth(1, 3), batch(1, 4);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    auto random = [&](Eigen::Index r, Eigen::Index c, double scale) {
        return Eigen::MatrixXd(Eigen::MatrixXd::NullaryExpr(r, c, [&] { return scale * unit(rng); }));
    };
    double worst = 0.0;
    for (int trial = 0; trial < count; ++trial) {
        std::vector<int> dims{width(rng)};
        const int hidden = depth(rng);
        for (int h = 0; h < hidden; ++h) dims.push_back(width(rng));
        dims.push_back(width(rng));
        auto net = mlp::DenseNet::init(dims, 1.0, rng);
        for (auto& l : net.layers()) l.bias = random(l.bias.size(), 1, 0.5);
        const int b = batch(rng);
        worst = std::max(worst, gradient_check(net, random(dims.front(), b, 1.0), random(dims.back(), b, 1.0)));
    }
    return worst;
}

namespace {

std::vector<std::vector<double>> row_major_weights(const Network& net) {
    std::vector<std::vector<double>> out;
    for (std::size_t l = 1; l < net.params().size(); ++l) {
        const auto& w = net.params()[l].weight;
        std::vector<double> flat;
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) flat.push_back(w(r, c));
        out.push_back(std::move(flat));
    }
    return out;
}

double state_gap(const Network& net, const lepm_ref::ReferenceLE& ref) {
    double gap = 0.0;
    for (std::size_t l = 1; l < net.layers().size(); ++l) {
        const auto& s = net.layers()[l];
        for (Eigen::Index j = 0; j < s.u.size(); ++j) {
            const auto ju = static_cast<std::size_t>(j);
            gap = std::max({gap, std::abs(s.u(j) - ref.u(l)[ju]), std::abs(s.breve_u(j) - ref.breve_u(l)[ju]),
                            std::abs(s.e(j) - ref.e(l)[ju]), std::abs(net.params()[l].bias(j) - ref.bias(l)[ju])});
        }
        const auto& w = net.params()[l].weight;
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c)
                gap = std::max(gap, std::abs(w(r, c) - ref.weight(l)[static_cast<std::size_t>(r * w.cols() + c)]));
    }
    return gap;
}

}  // namespace

double reference_gap(Step delay, Step steps, Step beta_off) {
    NetworkSpec spec;
    spec.layer_sizes = {2, 10, 1};
    spec.eta_w = spec.eta_b = 0.01;
    Rng rng(7);
    Network net(spec, DelayAssignment::constant(spec.layer_sizes, delay), identity_factory(), rng);
    lepm_ref::Config cfg{spec.layer_sizes, spec.tau, spec.dt, spec.eta_w, spec.eta_b, spec.beta,
                         static_cast<int>(delay)};
    lepm_ref::ReferenceLE ref(cfg, row_major_weights(net));
    tasks::TaskStream stream({tasks::TaskKind::two_sine, spec.dt});
    double worst = 0.0;
    for (Step n = 0; n < steps; ++n) {
        const auto s = stream.at(n);
        const bool on = n < beta_off;
        net.set_beta_active(on);
        const auto report = net.step(std::span(s.x.data(), 2), std::span(s.y.data(), 1));
        const double ref_loss = ref.step({s.x(0), s.x(1)}, {s.y(0)}, on);
        worst = std::max({worst, state_gap(net, ref), std::abs(report.loss - ref_loss)});
    }
    return worst;
}

double residual_deviation(double gain) {
    DelayLine line(1024);
    for (Step s = 0; s <= 600; ++s) line.push(s, std::sin(2.0 * std::numbers::pi * static_cast<double>(s) / 200.0));
    SignalHistory hist({{&line, 5}});
    PredictorOptions opts;
    opts.gain = gain;
    opts.output_alpha = 1.0;
    opts.hidden = {100, 100};
    PredictorNet pm(1, opts, Rng(17));
    double dev = 0.0, sig = 0.0;
    int n = 0;
    for (Step s = 100; s <= 600; ++s) {
        const auto w = pmnet_input_window(hist, s, opts.lags);
        const double d = pm.infer(w)(0) - w(0);
        dev += d * d;
        sig += w(0) * w(0);
        ++n;
    }
    return std::sqrt(dev / n) / std::sqrt(sig / n);
}

}  // namespace lepm_check
