#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "lepm/compensator.hpp"
#include "lepm/delay_line.hpp"
#include "lepm/le_math.hpp"
#include "lepm/random.hpp"

namespace lepm {

using StepMatrix = Eigen::Matrix<Step, Eigen::Dynamic, Eigen::Dynamic>;

/// Integer-step delays of every connection. layers[l-1] is (n_l x n_{l-1})
/// and serves both the forward link i->j and the feedback link j->i.
/// loss[o] serves output o -> loss node and the gradient link back.
struct DelayAssignment {
    std::vector<StepMatrix> layers;
    std::vector<Step> loss;

    Step max() const;
    static DelayAssignment constant(std::span<const int> layer_sizes, Step delay);
};

struct NetworkSpec {
    std::vector<int> layer_sizes;  // input, hidden..., output
    double tau = 10.0;             // ms
    double dt = 5.0;               // ms
    double eta_w = 0.05;
    double eta_b = 0.05;
    double beta = 0.1;
    double u_dot_alpha = 1.0;      // velocity smoothing inside neurons
    double max_abs_state = 1e8;    // divergence guard on |u|, |breve_u|

    void validate() const;
    std::size_t depth() const { return layer_sizes.size(); }
    Activation activation(std::size_t layer) const;
};

/// Per-layer state vectors.
struct LayerState {
    Eigen::VectorXd u, u_dot, breve_u, e;
};

struct LayerParams {
    Eigen::MatrixXd weight;  // n_l x n_{l-1}
    Eigen::VectorXd bias;
};

/// Identifies a compensator owner. layer == 0 means the loss node.
struct NeuronId {
    std::size_t layer;
    std::size_t index;
    bool is_loss_node() const { return layer == 0; }
};

using CompensatorFactory = std::function<std::unique_ptr<Compensator>(NeuronId, std::size_t channels)>;

/// Identity compensation everywhere.
CompensatorFactory identity_factory();

struct StepReport {
    Step step = 0;
    double loss = 0.0;
    Eigen::VectorXd received_output;  // compensated outputs at the loss node
    Eigen::VectorXd target;
    double pm_loss = 0.0;             // mean training loss over PM nets that updated
    std::size_t pm_updates = 0;
};

/// Loss node: 0.5 * ||received - target||^2 and the gradient it emits,
/// which is zero while nudging is off.
struct LossResult {
    double loss;
    Eigen::VectorXd gradient;
};
LossResult loss_module_step(const Eigen::VectorXd& received, const Eigen::VectorXd& target, bool beta_active);

/// Latent Equilibrium network whose every inter-neuron signal travels over a
/// delay line, with a compensator in front of each non-input neuron and the
/// loss node.
///
/// One call to step() advances the clock by dt. Within a step:
///  1. x(n) enters the input lines; the loss node compensates the received
///     outputs, computes the loss against y(n) and emits its gradient.
///  2. Layer by layer, each neuron compensates its inputs, computes e,
///     u_dot and the parameter velocities, then advances u and breve_u;
///     the layer's parameters are updated after all its neurons.
///  3. New breve_u and e values are pushed and become readable from step n+1.
class Network {
public:
    Network(NetworkSpec spec, DelayAssignment delays, const CompensatorFactory& make_compensator, Rng& weight_rng);

    StepReport step(std::span<const double> x, std::span<const double> y);

    Step current_step() const noexcept { return step_; }
    const NetworkSpec& spec() const noexcept { return spec_; }
    const DelayAssignment& delays() const noexcept { return delays_; }

    void set_beta_active(bool on) noexcept { beta_active_ = on; }
    bool beta_active() const noexcept { return beta_active_; }
    void set_le_plastic(bool on) noexcept { le_plastic_ = on; }
    void set_pm_plastic(bool on) noexcept { pm_plastic_ = on; }

    /// layers()[0] is the input layer.
    const std::vector<LayerState>& layers() const noexcept { return state_; }
    std::vector<LayerParams>& params() noexcept { return params_; }
    const std::vector<LayerParams>& params() const noexcept { return params_; }
    /// Weight velocity of the last step, per non-input layer (index l-1).
    const std::vector<Eigen::MatrixXd>& weight_velocity() const noexcept { return w_dot_; }

    const Compensator& compensator(NeuronId id) const;
    std::size_t line_capacity() const noexcept { return line_capacity_; }

private:
    double phi(std::size_t layer, double v) const { return activate(spec_.activation(layer), v); }
    void check_finite() const;

    NetworkSpec spec_;
    DelayAssignment delays_;
    Step step_ = 0;
    bool beta_active_ = true;
    bool le_plastic_ = true;
    bool pm_plastic_ = true;

    std::vector<LayerState> state_;
    std::vector<LayerParams> params_;   // params_[l] for l >= 1; params_[0] unused
    std::vector<Eigen::MatrixXd> w_dot_;
    std::vector<std::vector<Smoother>> u_dot_smooth_;

    std::size_t line_capacity_ = 0;
    std::vector<DelayLine> input_lines_;
    std::vector<std::vector<DelayLine>> breve_lines_;  // [layer][neuron], layer >= 1
    std::vector<std::vector<DelayLine>> error_lines_;  // [layer][neuron], layer >= 2
    std::vector<DelayLine> gradient_lines_;

    std::vector<std::vector<SignalHistory>> histories_;  // [layer][neuron]
    std::vector<std::vector<std::unique_ptr<Compensator>>> compensators_;
    SignalHistory loss_history_;
    std::unique_ptr<Compensator> loss_compensator_;

    std::vector<double> scratch_;
};

}  // namespace lepm
