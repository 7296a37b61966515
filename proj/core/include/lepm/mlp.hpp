#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "lepm/random.hpp"

namespace lepm::mlp {

/// One affine layer, y = W x + b.
struct Dense {
    Eigen::MatrixXd weight;  // out x in
    Eigen::VectorXd bias;
};

/// Parameter-shaped gradient container.
using Gradients = std::vector<Dense>;

struct BackwardResult {
    Gradients grads;
    double loss = 0.0;
};

/// Dense feed-forward network: tanh on hidden layers, identity on the output.
class DenseNet {
public:
    DenseNet() = default;

    /// Weights ~ gain * U[-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero.
    static DenseNet init(std::span<const int> dims, double gain, Rng& rng);

    /// Builds a net from explicit layers (tests, hand-crafted nets).
    explicit DenseNet(std::vector<Dense> layers);

    int input_dim() const;
    int output_dim() const;
    std::vector<int> dims() const;

    Eigen::VectorXd forward(const Eigen::VectorXd& x) const;
    /// Column-per-sample batch forward.
    Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& x) const;

    /// Loss = mean over batch columns of 0.5 * ||y - target||^2, with
    /// gradients of that loss by reverse accumulation.
    BackwardResult backward(const Eigen::MatrixXd& x, const Eigen::MatrixXd& target) const;

    /// p <- p - lr * grad for every parameter.
    void step(const Gradients& grads, double lr);

    std::vector<Dense>& layers() { return layers_; }
    const std::vector<Dense>& layers() const { return layers_; }

    bool all_finite() const;

private:
    std::vector<Dense> layers_;
};

/// Adaptive-moment optimizer state for one DenseNet.
class Adam {
public:
    explicit Adam(const DenseNet& net, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
    void step(DenseNet& net, const Gradients& grads, double lr);

private:
    double beta1_, beta2_, eps_;
    long t_ = 0;
    Gradients m_, v_;
};

}  // namespace lepm::mlp
