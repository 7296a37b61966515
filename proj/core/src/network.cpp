#include "lepm/network.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lepm/errors.hpp"

namespace lepm {

Step DelayAssignment::max() const {
    Step m = 0;
    for (const auto& d : layers)
        if (d.size() > 0) m = std::max(m, d.maxCoeff());
    for (Step d : loss) m = std::max(m, d);
    return m;
}

DelayAssignment DelayAssignment::constant(std::span<const int> layer_sizes, Step delay) {
    DelayAssignment a;
    for (std::size_t l = 1; l < layer_sizes.size(); ++l)
        a.layers.push_back(StepMatrix::Constant(layer_sizes[l], layer_sizes[l - 1], delay));
    a.loss.assign(static_cast<std::size_t>(layer_sizes.back()), delay);
    return a;
}

void NetworkSpec::validate() const {
    if (layer_sizes.size() < 2) throw ConfigError("network needs an input and an output layer");
    for (int n : layer_sizes)
        if (n <= 0) throw ConfigError("layer sizes must be positive");
    if (!(tau > 0.0)) throw ConfigError("tau must be positive");
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    if (!(beta >= 0.0)) throw ConfigError("beta must be non-negative");
    if (!(eta_w >= 0.0) || !(eta_b >= 0.0)) throw ConfigError("learning rates must be non-negative");
    if (!(u_dot_alpha > 0.0 && u_dot_alpha <= 1.0)) throw ConfigError("u_dot smoothing must lie in (0, 1]");
}

Activation NetworkSpec::activation(std::size_t layer) const {
    return (layer == 0 || layer + 1 == layer_sizes.size()) ? Activation::identity : Activation::tanh;
}

CompensatorFactory identity_factory() {
    return [](NeuronId, std::size_t channels) { return std::make_unique<IdentityCompensator>(channels); };
}

LossResult loss_module_step(const Eigen::VectorXd& received, const Eigen::VectorXd& target, bool beta_active) {
    if (received.size() != target.size())
        throw ConfigError("loss module: output dimension " + std::to_string(received.size()) +
                          " does not match target dimension " + std::to_string(target.size()));
    Eigen::VectorXd residual = received - target;
    LossResult r{0.5 * residual.squaredNorm(), Eigen::VectorXd::Zero(residual.size())};
    if (beta_active) r.gradient = std::move(residual);
    return r;
}

Network::Network(NetworkSpec spec, DelayAssignment delays, const CompensatorFactory& make_compensator,
                 Rng& weight_rng)
    : spec_(std::move(spec)), delays_(std::move(delays)) {
    spec_.validate();
    const auto& sizes = spec_.layer_sizes;
    const std::size_t n_layers = sizes.size();
    const std::size_t out = n_layers - 1;

    if (delays_.layers.size() != n_layers - 1) throw ConfigError("delay assignment: wrong number of layers");
    for (std::size_t l = 1; l < n_layers; ++l) {
        const auto& d = delays_.layers[l - 1];
        if (d.rows() != sizes[l] || d.cols() != sizes[l - 1])
            throw ConfigError("delay assignment: layer " + std::to_string(l) + " has wrong shape");
        if (d.size() > 0 && d.minCoeff() < 0) throw ConfigError("delays must be non-negative");
    }
    if (delays_.loss.size() != static_cast<std::size_t>(sizes[out]))
        throw ConfigError("delay assignment: loss links do not match output size");
    for (Step d : delays_.loss)
        if (d < 0) throw ConfigError("delays must be non-negative");

    state_.resize(n_layers);
    for (std::size_t l = 0; l < n_layers; ++l) {
        const auto n = sizes[l];
        state_[l] = {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n),
                     Eigen::VectorXd::Zero(n)};
    }

    params_.resize(n_layers);
    w_dot_.resize(n_layers - 1);
    u_dot_smooth_.resize(n_layers);
    for (std::size_t l = 1; l < n_layers; ++l) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(sizes[l - 1]));
        std::uniform_real_distribution<double> dist(-bound, bound);
        Eigen::MatrixXd w(sizes[l], sizes[l - 1]);
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = dist(weight_rng);
        params_[l] = {std::move(w), Eigen::VectorXd::Zero(sizes[l])};
        w_dot_[l - 1] = Eigen::MatrixXd::Zero(sizes[l], sizes[l - 1]);
        u_dot_smooth_[l].assign(static_cast<std::size_t>(sizes[l]), Smoother(spec_.u_dot_alpha));
    }

    // Compensators first: their history needs decide how long lines must be.
    const Step max_delay = delays_.max();
    std::size_t capacity = static_cast<std::size_t>(max_delay) + 2;
    compensators_.resize(n_layers);
    for (std::size_t l = 1; l < n_layers; ++l) {
        const auto fan_in = static_cast<std::size_t>(sizes[l - 1]);
        const std::size_t feedback = (l == out) ? 1 : static_cast<std::size_t>(sizes[l + 1]);
        for (int j = 0; j < sizes[l]; ++j) {
            auto comp = make_compensator({l, static_cast<std::size_t>(j)}, fan_in + feedback);
            capacity = std::max(capacity, static_cast<std::size_t>(comp->history_depth(max_delay)) + 1);
            compensators_[l].push_back(std::move(comp));
        }
    }
    loss_compensator_ = make_compensator({0, 0}, static_cast<std::size_t>(sizes[out]));
    capacity = std::max(capacity, static_cast<std::size_t>(loss_compensator_->history_depth(max_delay)) + 1);
    line_capacity_ = capacity;

    input_lines_.assign(static_cast<std::size_t>(sizes[0]), DelayLine(capacity));
    breve_lines_.resize(n_layers);
    error_lines_.resize(n_layers);
    for (std::size_t l = 1; l < n_layers; ++l) {
        breve_lines_[l].assign(static_cast<std::size_t>(sizes[l]), DelayLine(capacity));
        for (auto& line : breve_lines_[l]) line.push(0, 0.0);
        if (l >= 2) {
            error_lines_[l].assign(static_cast<std::size_t>(sizes[l]), DelayLine(capacity));
            for (auto& line : error_lines_[l]) line.push(0, 0.0);
        }
    }
    gradient_lines_.assign(static_cast<std::size_t>(sizes[out]), DelayLine(capacity));

    histories_.resize(n_layers);
    std::size_t max_channels = static_cast<std::size_t>(sizes[out]);
    for (std::size_t l = 1; l < n_layers; ++l) {
        const auto& d_in = delays_.layers[l - 1];
        for (int j = 0; j < sizes[l]; ++j) {
            std::vector<Channel> ch;
            for (int i = 0; i < sizes[l - 1]; ++i) {
                const DelayLine* line = (l == 1) ? &input_lines_[static_cast<std::size_t>(i)]
                                                 : &breve_lines_[l - 1][static_cast<std::size_t>(i)];
                ch.push_back({line, d_in(j, i)});
            }
            if (l == out) {
                ch.push_back({&gradient_lines_[static_cast<std::size_t>(j)], delays_.loss[static_cast<std::size_t>(j)]});
            } else {
                const auto& d_out = delays_.layers[l];
                for (int k = 0; k < sizes[l + 1]; ++k)
                    ch.push_back({&error_lines_[l + 1][static_cast<std::size_t>(k)], d_out(k, j)});
            }
            max_channels = std::max(max_channels, ch.size());
            histories_[l].emplace_back(std::move(ch));
        }
    }
    std::vector<Channel> loss_ch;
    for (int o = 0; o < sizes[out]; ++o)
        loss_ch.push_back({&breve_lines_[out][static_cast<std::size_t>(o)], delays_.loss[static_cast<std::size_t>(o)]});
    loss_history_ = SignalHistory(std::move(loss_ch));
    scratch_.resize(max_channels);
}

const Compensator& Network::compensator(NeuronId id) const {
    if (id.is_loss_node()) return *loss_compensator_;
    return *compensators_.at(id.layer).at(id.index);
}

StepReport Network::step(std::span<const double> x, std::span<const double> y) {
    const auto& sizes = spec_.layer_sizes;
    const std::size_t n_layers = sizes.size();
    const std::size_t out = n_layers - 1;
    if (x.size() != static_cast<std::size_t>(sizes[0])) throw ConfigError("input dimension mismatch");
    if (y.size() != static_cast<std::size_t>(sizes[out])) throw ConfigError("target dimension mismatch");
    const Step n = step_;
    const double beta = beta_active_ ? spec_.beta : 0.0;

    StepReport report;
    report.step = n;
    double pm_loss_sum = 0.0;
    auto learn = [&](Compensator& comp, const SignalHistory& hist) {
        if (!pm_plastic_) return;
        if (auto l = comp.learn(hist, n)) {
            pm_loss_sum += *l;
            ++report.pm_updates;
        }
    };

    // Inputs and loss node.
    for (std::size_t i = 0; i < x.size(); ++i) {
        input_lines_[i].push(n, x[i]);
        state_[0].u(static_cast<Eigen::Index>(i)) = x[i];
        state_[0].breve_u(static_cast<Eigen::Index>(i)) = x[i];
    }
    {
        std::span<double> received(scratch_.data(), loss_history_.size());
        loss_compensator_->compensate(loss_history_, n, received);
        report.received_output = Eigen::Map<const Eigen::VectorXd>(received.data(), static_cast<Eigen::Index>(received.size()));
        report.target = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
        learn(*loss_compensator_, loss_history_);
        LossResult lr = loss_module_step(report.received_output, report.target, beta_active_);
        report.loss = lr.loss;
        for (std::size_t o = 0; o < gradient_lines_.size(); ++o)
            gradient_lines_[o].push(n, lr.gradient(static_cast<Eigen::Index>(o)));
    }

    for (std::size_t l = 1; l < n_layers; ++l) {
        LayerState& s = state_[l];
        LayerParams& p = params_[l];
        Eigen::MatrixXd& w_dot = w_dot_[l - 1];
        const auto fan_in = static_cast<Eigen::Index>(sizes[l - 1]);
        const Activation act = spec_.activation(l);
        const Activation act_in = spec_.activation(l - 1);
        Eigen::VectorXd b_dot(sizes[l]);

        for (Eigen::Index j = 0; j < sizes[l]; ++j) {
            const auto ju = static_cast<std::size_t>(j);
            const SignalHistory& hist = histories_[l][ju];
            std::span<double> sbar(scratch_.data(), hist.size());
            compensators_[l][ju]->compensate(hist, n, sbar);
            learn(*compensators_[l][ju], hist);

            for (Eigen::Index i = 0; i < fan_in; ++i) sbar[static_cast<std::size_t>(i)] = activate(act_in, sbar[static_cast<std::size_t>(i)]);
            std::span<const double> phi_ubar = sbar.first(static_cast<std::size_t>(fan_in));
            std::span<const double> ebar = sbar.subspan(static_cast<std::size_t>(fan_in));

            double e = 0.0;
            if (l == out) {
                e = output_error(beta, ebar[0]);
            } else {
                const Eigen::MatrixXd& w_next = params_[l + 1].weight;
                double acc = 0.0;
                for (Eigen::Index k = 0; k < w_next.rows(); ++k) acc += w_next(k, j) * ebar[static_cast<std::size_t>(k)];
                e = activate_prime(act, s.breve_u(j)) * acc;
            }

            double drive = p.bias(j);
            for (Eigen::Index i = 0; i < fan_in; ++i) drive += p.weight(j, i) * phi_ubar[static_cast<std::size_t>(i)];
            const double u = s.u(j);
            const double u_dot = u_dot_smooth_[l][ju].update((-u + e + drive) / spec_.tau);

            for (Eigen::Index i = 0; i < fan_in; ++i)
                w_dot(j, i) = spec_.eta_w * phi_ubar[static_cast<std::size_t>(i)] * e;
            b_dot(j) = spec_.eta_b * e;

            s.e(j) = e;
            s.u_dot(j) = u_dot;
            s.u(j) = u + spec_.dt * u_dot;
            s.breve_u(j) = prospective_activation(u, u_dot, spec_.tau);
        }
        if (le_plastic_) {
            p.weight.noalias() += spec_.dt * w_dot;
            p.bias.noalias() += spec_.dt * b_dot;
        }
    }

    for (std::size_t l = 1; l < n_layers; ++l) {
        for (std::size_t j = 0; j < breve_lines_[l].size(); ++j) {
            breve_lines_[l][j].push(n + 1, state_[l].breve_u(static_cast<Eigen::Index>(j)));
            if (l >= 2) error_lines_[l][j].push(n + 1, state_[l].e(static_cast<Eigen::Index>(j)));
        }
    }

    if (report.pm_updates > 0) report.pm_loss = pm_loss_sum / static_cast<double>(report.pm_updates);
    step_ = n + 1;
    if (!std::isfinite(report.loss)) throw DivergenceError(n, "non-finite loss");
    check_finite();
    return report;
}

void Network::check_finite() const {
    for (std::size_t l = 1; l < state_.size(); ++l) {
        const auto& s = state_[l];
        if (!s.u.allFinite() || !s.breve_u.allFinite() || !s.e.allFinite())
            throw DivergenceError(step_ - 1, "non-finite state in layer " + std::to_string(l));
        if (s.u.cwiseAbs().maxCoeff() > spec_.max_abs_state || s.breve_u.cwiseAbs().maxCoeff() > spec_.max_abs_state)
            throw DivergenceError(step_ - 1, "state magnitude exceeded guard in layer " + std::to_string(l));
        if (!params_[l].weight.allFinite() || !params_[l].bias.allFinite())
            throw DivergenceError(step_ - 1, "non-finite parameters in layer " + std::to_string(l));
    }
}

}  // namespace lepm
