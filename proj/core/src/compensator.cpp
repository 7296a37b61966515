#include "lepm/compensator.hpp"

#include <algorithm>
#include <string>

#include "lepm/errors.hpp"

namespace lepm {

SignalHistory::SignalHistory(std::vector<Channel> channels) : channels_(std::move(channels)) {
    for (const auto& c : channels_) {
        if (c.line == nullptr) throw ContractError("SignalHistory: null line");
        if (c.delay < 0) throw ContractError("SignalHistory: negative delay");
        max_delay_ = std::max(max_delay_, c.delay);
    }
}

Received SignalHistory::received(std::size_t c, Step step) const {
    return channels_[c].line->read(step, channels_[c].delay);
}

Received SignalHistory::received(std::size_t c, Step step, Step extra) const {
    return channels_[c].line->read(step, channels_[c].delay + extra);
}

void compensate_identity(const SignalHistory& hist, Step step, std::span<double> out) {
    if (out.size() != hist.size()) throw ContractError("compensate_identity: output size mismatch");
    for (std::size_t c = 0; c < hist.size(); ++c) out[c] = hist.received(c, step).value;
}

IdentityCompensator::IdentityCompensator(std::size_t channels, double output_alpha)
    : out_smooth_(channels, Smoother(output_alpha)) {}

void IdentityCompensator::compensate(const SignalHistory& hist, Step step, std::span<double> out) {
    compensate_identity(hist, step, out);
    for (std::size_t c = 0; c < out.size(); ++c) out[c] = out_smooth_[c].update(out[c]);
}

LinearExtrapolator::LinearExtrapolator(std::size_t channels, LinexOptions opts)
    : opts_(opts), vel_smooth_(channels, Smoother(opts.velocity_alpha)),
      out_smooth_(channels, Smoother(opts.output_alpha)) {
    if (opts_.h < 1) throw ContractError("LinearExtrapolator: h must be at least one step");
    if (!(opts_.dt > 0.0)) throw ContractError("LinearExtrapolator: dt must be positive");
}

void LinearExtrapolator::compensate(const SignalHistory& hist, Step step, std::span<double> out) {
    if (out.size() != hist.size()) throw ContractError("LinearExtrapolator: output size mismatch");
    const double h_ms = static_cast<double>(opts_.h) * opts_.dt;
    for (std::size_t c = 0; c < hist.size(); ++c) {
        const Received now = hist.received(c, step);
        const Received before = hist.received(c, step, opts_.h);
        const double raw_velocity = before.pre_history ? 0.0 : (now.value - before.value) / h_ms;
        const double velocity = vel_smooth_[c].update(raw_velocity);
        const double lead_ms = static_cast<double>(hist.channel(c).delay) * opts_.dt;
        out[c] = out_smooth_[c].update(now.value + lead_ms * velocity);
    }
}

std::optional<TrainingPair> pmnet_training_pair(const SignalHistory& hist, Step step,
                                                std::span<const Step> lags) {
    const auto channels = static_cast<Eigen::Index>(hist.size());
    TrainingPair pair{Eigen::VectorXd(channels * static_cast<Eigen::Index>(lags.size())),
                      Eigen::VectorXd(channels)};
    for (Eigen::Index c = 0; c < channels; ++c) {
        const Channel& ch = hist.channel(static_cast<std::size_t>(c));
        const Received target = ch.line->at(step - ch.delay);
        if (target.pre_history) return std::nullopt;
        pair.target(c) = target.value;
        for (std::size_t k = 0; k < lags.size(); ++k) {
            const Received in = ch.line->at(step - 2 * ch.delay - lags[k]);
            if (in.pre_history) return std::nullopt;
            pair.input(static_cast<Eigen::Index>(k) * channels + c) = in.value;
        }
    }
    return pair;
}

Eigen::VectorXd pmnet_input_window(const SignalHistory& hist, Step step, std::span<const Step> lags) {
    const auto channels = static_cast<Eigen::Index>(hist.size());
    Eigen::VectorXd window(channels * static_cast<Eigen::Index>(lags.size()));
    for (std::size_t k = 0; k < lags.size(); ++k)
        for (Eigen::Index c = 0; c < channels; ++c)
            window(static_cast<Eigen::Index>(k) * channels + c) =
                hist.received(static_cast<std::size_t>(c), step, lags[k]).value;
    return window;
}

namespace {

std::vector<int> predictor_dims(std::size_t channels, const PredictorOptions& opts) {
    std::vector<int> dims{static_cast<int>(channels * opts.lags.size())};
    dims.insert(dims.end(), opts.hidden.begin(), opts.hidden.end());
    dims.push_back(static_cast<int>(channels));
    return dims;
}

}  // namespace

PredictorNet::PredictorNet(std::size_t channels, PredictorOptions opts, Rng rng)
    : channels_(channels), opts_(std::move(opts)), rng_(std::move(rng)), buffer_(opts_.buffer_capacity),
      out_smooth_(channels, Smoother(opts_.output_alpha)) {
    if (channels == 0) throw ContractError("PredictorNet: no channels");
    if (opts_.lags.empty() || !std::is_sorted(opts_.lags.begin(), opts_.lags.end()) || opts_.lags.front() < 0)
        throw ContractError("PredictorNet: lags must be non-negative and ascending");
    if (opts_.batch_size == 0) throw ContractError("PredictorNet: batch size must be positive");
    const auto dims = predictor_dims(channels, opts_);
    net_ = mlp::DenseNet::init(dims, opts_.gain, rng_);
    if (opts_.optimizer == PmOptimizer::adam) adam_ = std::make_unique<mlp::Adam>(net_);
}

Step PredictorNet::history_depth(Step max_delay) const {
    return static_cast<Step>(opts_.buffer_capacity) + 2 * max_delay + opts_.lags.back() + 1;
}

Eigen::VectorXd PredictorNet::infer(const Eigen::VectorXd& window) const {
    const auto c = static_cast<Eigen::Index>(channels_);
    return net_.forward(window) + window.head(c);
}

void PredictorNet::compensate(const SignalHistory& hist, Step step, std::span<double> out) {
    if (out.size() != channels_ || hist.size() != channels_)
        throw ContractError("PredictorNet: channel count mismatch");
    const Eigen::VectorXd pred = infer(pmnet_input_window(hist, step, opts_.lags));
    for (std::size_t c = 0; c < channels_; ++c) out[c] = out_smooth_[c].update(pred(static_cast<Eigen::Index>(c)));
}

double PredictorNet::update(std::span<const TrainingPair> batch, double lr) {
    if (batch.empty()) throw ContractError("PredictorNet::update: empty batch");
    const auto c = static_cast<Eigen::Index>(channels_);
    const auto in_dim = static_cast<Eigen::Index>(net_.input_dim());
    const auto n = static_cast<Eigen::Index>(batch.size());
    Eigen::MatrixXd x(in_dim, n);
    Eigen::MatrixXd residual_target(c, n);
    for (Eigen::Index b = 0; b < n; ++b) {
        const auto& p = batch[static_cast<std::size_t>(b)];
        if (p.input.size() != in_dim || p.target.size() != c)
            throw ContractError("PredictorNet::update: pair shape mismatch");
        x.col(b) = p.input;
        residual_target.col(b) = p.target - p.input.head(c);
    }
    auto result = net_.backward(x, residual_target);
    if (lr != 0.0) {
        if (adam_) {
            adam_->step(net_, result.grads, lr);
        } else {
            net_.step(result.grads, lr);
        }
    }
    return result.loss;
}

std::optional<double> PredictorNet::learn(const SignalHistory& hist, Step step) {
    if (!opts_.plastic) return std::nullopt;
    if (pmnet_training_pair(hist, step, opts_.lags)) buffer_.push(step);
    if (buffer_.empty()) return std::nullopt;
    const auto stamps = buffer_.sample(opts_.batch_size, rng_);
    std::vector<TrainingPair> batch;
    batch.reserve(stamps.size());
    for (Step s : stamps) {
        auto pair = pmnet_training_pair(hist, s, opts_.lags);
        if (!pair) throw ContractError("PredictorNet: replay entry at step " + std::to_string(s) +
                                       " fell out of line history");
        batch.push_back(std::move(*pair));
    }
    last_loss_ = update(batch, opts_.lr);
    return last_loss_;
}

}  // namespace lepm
