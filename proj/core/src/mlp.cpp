#include "lepm/mlp.hpp"

#include <cmath>
#include <string>

#include "lepm/errors.hpp"

namespace lepm::mlp {

DenseNet DenseNet::init(std::span<const int> dims, double gain, Rng& rng) {
    if (dims.size() < 2) throw ContractError("DenseNet needs at least input and output dims");
    if (!(gain > 0.0)) throw ContractError("DenseNet gain must be positive");
    std::vector<Dense> layers;
    layers.reserve(dims.size() - 1);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const int fan_in = dims[l];
        const int fan_out = dims[l + 1];
        if (fan_in <= 0 || fan_out <= 0) throw ContractError("DenseNet dims must be positive");
        const double bound = gain / std::sqrt(static_cast<double>(fan_in));
        std::uniform_real_distribution<double> dist(-bound, bound);
        Dense d{Eigen::MatrixXd(fan_out, fan_in), Eigen::VectorXd::Zero(fan_out)};
        for (Eigen::Index c = 0; c < d.weight.cols(); ++c)
            for (Eigen::Index r = 0; r < d.weight.rows(); ++r) d.weight(r, c) = dist(rng);
        layers.push_back(std::move(d));
    }
    return DenseNet(std::move(layers));
}

DenseNet::DenseNet(std::vector<Dense> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) throw ContractError("DenseNet needs at least one layer");
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        if (layers_[l].bias.size() != layers_[l].weight.rows())
            throw ContractError("DenseNet layer " + std::to_string(l) + ": bias/weight mismatch");
        if (l > 0 && layers_[l].weight.cols() != layers_[l - 1].weight.rows())
            throw ContractError("DenseNet layer " + std::to_string(l) + ": input dim mismatch");
    }
}

int DenseNet::input_dim() const { return static_cast<int>(layers_.front().weight.cols()); }
int DenseNet::output_dim() const { return static_cast<int>(layers_.back().weight.rows()); }

std::vector<int> DenseNet::dims() const {
    std::vector<int> d{input_dim()};
    for (const auto& l : layers_) d.push_back(static_cast<int>(l.weight.rows()));
    return d;
}

Eigen::VectorXd DenseNet::forward(const Eigen::VectorXd& x) const {
    if (x.size() != input_dim()) throw ContractError("DenseNet::forward: input shape mismatch");
    Eigen::VectorXd a = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        Eigen::VectorXd z = layers_[l].weight * a + layers_[l].bias;
        a = (l + 1 < layers_.size()) ? Eigen::VectorXd(z.array().tanh()) : z;
    }
    return a;
}

Eigen::MatrixXd DenseNet::forward_batch(const Eigen::MatrixXd& x) const {
    if (x.rows() != input_dim()) throw ContractError("DenseNet::forward: input shape mismatch");
    Eigen::MatrixXd a = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        Eigen::MatrixXd z = layers_[l].weight * a;
        z.colwise() += layers_[l].bias;
        a = (l + 1 < layers_.size()) ? Eigen::MatrixXd(z.array().tanh()) : z;
    }
    return a;
}

BackwardResult DenseNet::backward(const Eigen::MatrixXd& x, const Eigen::MatrixXd& target) const {
    if (x.rows() != input_dim() || target.rows() != output_dim() || x.cols() != target.cols() ||
        x.cols() == 0) {
        throw ContractError("DenseNet::backward: shape mismatch");
    }
    const auto n_layers = layers_.size();
    const double inv_batch = 1.0 / static_cast<double>(x.cols());

    // activations[l] is the input to layer l; activations[n_layers] the output
    std::vector<Eigen::MatrixXd> activations(n_layers + 1);
    activations[0] = x;
    for (std::size_t l = 0; l < n_layers; ++l) {
        Eigen::MatrixXd z = layers_[l].weight * activations[l];
        z.colwise() += layers_[l].bias;
        if (l + 1 < n_layers) z = z.array().tanh();
        activations[l + 1] = std::move(z);
    }

    Eigen::MatrixXd delta = activations[n_layers] - target;
    BackwardResult out;
    out.loss = 0.5 * delta.squaredNorm() * inv_batch;
    delta *= inv_batch;

    out.grads.resize(n_layers);
    for (std::size_t l = n_layers; l-- > 0;) {
        out.grads[l].weight = delta * activations[l].transpose();
        out.grads[l].bias = delta.rowwise().sum();
        if (l > 0) {
            Eigen::MatrixXd back = layers_[l].weight.transpose() * delta;
            delta = back.array() * (1.0 - activations[l].array().square());
        }
    }
    return out;
}

void DenseNet::step(const Gradients& grads, double lr) {
    if (grads.size() != layers_.size()) throw ContractError("DenseNet::step: gradient shape mismatch");
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        if (grads[l].weight.rows() != layers_[l].weight.rows() ||
            grads[l].weight.cols() != layers_[l].weight.cols() ||
            grads[l].bias.size() != layers_[l].bias.size()) {
            throw ContractError("DenseNet::step: gradient shape mismatch");
        }
        layers_[l].weight.noalias() -= lr * grads[l].weight;
        layers_[l].bias.noalias() -= lr * grads[l].bias;
    }
}

bool DenseNet::all_finite() const {
    for (const auto& l : layers_)
        if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
    return true;
}

Adam::Adam(const DenseNet& net, double beta1, double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (const auto& l : net.layers()) {
        Dense zero{Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()), Eigen::VectorXd::Zero(l.bias.size())};
        m_.push_back(zero);
        v_.push_back(zero);
    }
}

void Adam::step(DenseNet& net, const Gradients& grads, double lr) {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    auto& layers = net.layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
        m_[l].weight = beta1_ * m_[l].weight + (1.0 - beta1_) * grads[l].weight;
        v_[l].weight = beta2_ * v_[l].weight + (1.0 - beta2_) * grads[l].weight.cwiseAbs2();
        m_[l].bias = beta1_ * m_[l].bias + (1.0 - beta1_) * grads[l].bias;
        v_[l].bias = beta2_ * v_[l].bias + (1.0 - beta2_) * grads[l].bias.cwiseAbs2();
        layers[l].weight.array() -=
            lr * (m_[l].weight.array() / c1) / ((v_[l].weight.array() / c2).sqrt() + eps_);
        layers[l].bias.array() -= lr * (m_[l].bias.array() / c1) / ((v_[l].bias.array() / c2).sqrt() + eps_);
    }
}

}  // namespace lepm::mlp
