#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "lepm/delay_line.hpp"
#include "lepm/mlp.hpp"
#include "lepm/random.hpp"
#include "lepm/replay_buffer.hpp"

namespace lepm {

/// One incoming signal: the sender's line and this connection's delay.
struct Channel {
    const DelayLine* line = nullptr;
    Step delay = 0;
};

/// The ordered set of channels converging on one neuron (or the loss node).
/// Channel order is fixed and shared by inference and training.
class SignalHistory {
public:
    SignalHistory() = default;
    explicit SignalHistory(std::vector<Channel> channels);

    std::size_t size() const noexcept { return channels_.size(); }
    const Channel& channel(std::size_t c) const { return channels_[c]; }
    Step max_delay() const noexcept { return max_delay_; }

    /// What channel c delivers at `step`: the value sent at step - delay.
    Received received(std::size_t c, Step step) const;
    /// Value sent on channel c `extra` steps before what it delivers at `step`.
    Received received(std::size_t c, Step step, Step extra) const;

private:
    std::vector<Channel> channels_;
    Step max_delay_ = 0;
};

class Compensator {
public:
    virtual ~Compensator() = default;

    /// Writes the predicted current sent value of every channel into `out`.
    virtual void compensate(const SignalHistory& hist, Step step, std::span<double> out) = 0;

    /// Online adaptation after compensate() at the same step. Returns the
    /// training loss when an update happened.
    virtual std::optional<double> learn(const SignalHistory&, Step) { return std::nullopt; }

    /// Steps of history, beyond the channel delay, this compensator reads.
    virtual Step history_depth(Step max_delay) const = 0;

    virtual std::string_view kind() const = 0;
};

/// Delayed baseline: returns the latest received value per channel,
/// optionally passed through an output smoother.
class IdentityCompensator final : public Compensator {
public:
    explicit IdentityCompensator(std::size_t channels, double output_alpha = 1.0);
    void compensate(const SignalHistory& hist, Step step, std::span<double> out) override;
    Step history_depth(Step max_delay) const override { return max_delay + 1; }
    std::string_view kind() const override { return "identity"; }

private:
    std::vector<Smoother> out_smooth_;
};

/// Unsmoothed identity compensation, the plain delayed signal.
void compensate_identity(const SignalHistory& hist, Step step, std::span<double> out);

struct LinexOptions {
    Step h = 1;               // finite-difference step, in steps
    double dt = 5.0;          // ms per step
    double velocity_alpha = 1.0;
    double output_alpha = 1.0;
};

/// Linear extrapolation over the channel delay:
/// v(t-d) + d*dt * [v(t-d) - v(t-d-h)] / (h*dt), velocity optionally smoothed.
/// While v(t-d-h) is still pre-history the velocity is taken as zero.
class LinearExtrapolator final : public Compensator {
public:
    LinearExtrapolator(std::size_t channels, LinexOptions opts);
    void compensate(const SignalHistory& hist, Step step, std::span<double> out) override;
    Step history_depth(Step max_delay) const override { return max_delay + opts_.h + 1; }
    std::string_view kind() const override { return "linex"; }

    const LinexOptions& options() const noexcept { return opts_; }

private:
    LinexOptions opts_;
    std::vector<Smoother> vel_smooth_;
    std::vector<Smoother> out_smooth_;
};

struct TrainingPair {
    Eigen::VectorXd input;   // lag-major window, H * channels
    Eigen::VectorXd target;  // channels
};

/// Pair formed from the most recent data at `step`: inputs sent at
/// step - 2*delay - lag for each lag, target sent at step - delay.
/// Empty if any entry would come from before the stream started.
std::optional<TrainingPair> pmnet_training_pair(const SignalHistory& hist, Step step,
                                                std::span<const Step> lags);

/// Inference window at `step`: inputs sent at step - delay - lag.
Eigen::VectorXd pmnet_input_window(const SignalHistory& hist, Step step, std::span<const Step> lags);

enum class PmOptimizer { sgd, adam };

struct PredictorOptions {
    std::vector<Step> lags{0, 10, 20};  // ascending, lags.front() is the residual source
    std::vector<int> hidden{100, 100};
    std::size_t buffer_capacity = 10000;
    std::size_t batch_size = 5;
    double lr = 0.002;
    double gain = 0.1;
    double output_alpha = 0.5;
    PmOptimizer optimizer = PmOptimizer::sgd;
    bool plastic = true;
};

/// Predictor-network compensation: a small dense net over lagged windows of
/// the received signals plus a residual path from the least-lagged window,
/// trained online from a replay buffer of past training pairs.
///
/// The buffer stores the step at which each pair was formed; pairs are
/// rebuilt from the channel lines on sampling, so the lines must retain
/// buffer_capacity + 2*max_delay + max_lag steps.
class PredictorNet final : public Compensator {
public:
    PredictorNet(std::size_t channels, PredictorOptions opts, Rng rng);

    void compensate(const SignalHistory& hist, Step step, std::span<double> out) override;
    std::optional<double> learn(const SignalHistory& hist, Step step) override;
    Step history_depth(Step max_delay) const override;
    std::string_view kind() const override { return "pmnet"; }

    /// Net output plus residual, before output smoothing.
    Eigen::VectorXd infer(const Eigen::VectorXd& window) const;

    /// One optimizer step on the batch's mean squared prediction error
    /// (residual included). Returns the pre-update loss.
    double update(std::span<const TrainingPair> batch, double lr);

    const mlp::DenseNet& net() const noexcept { return net_; }
    mlp::DenseNet& net() noexcept { return net_; }
    const ReplayBuffer<Step>& buffer() const noexcept { return buffer_; }
    const PredictorOptions& options() const noexcept { return opts_; }
    void set_plastic(bool on) noexcept { opts_.plastic = on; }
    std::optional<double> last_loss() const noexcept { return last_loss_; }

private:
    std::size_t channels_;
    PredictorOptions opts_;
    Rng rng_;
    mlp::DenseNet net_;
    std::unique_ptr<mlp::Adam> adam_;
    ReplayBuffer<Step> buffer_;
    std::vector<Smoother> out_smooth_;
    std::optional<double> last_loss_;
};

}  // namespace lepm
