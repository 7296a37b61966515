#pragma once

#include <cmath>
#include <span>
#include <utility>

namespace lepm {

enum class Activation { identity, tanh };

inline double activate(Activation a, double x) { return a == Activation::tanh ? std::tanh(x) : x; }

inline double activate_prime(Activation a, double x) {
    if (a == Activation::identity) return 1.0;
    const double t = std::tanh(x);
    return 1.0 - t * t;
}

/// Prospective potential, u + tau * u_dot.
inline double prospective_activation(double u, double u_dot, double tau) { return u + tau * u_dot; }

/// Error of a hidden neuron from the compensated errors of its targets:
/// phi'(breve_u) * sum_k W_jk * ebar_k.
inline double hidden_error(Activation a, double breve_u, std::span<const double> weights,
                           std::span<const double> ebar) {
    double acc = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) acc += weights[k] * ebar[k];
    return activate_prime(a, breve_u) * acc;
}

/// Error of an output neuron, -beta times the received loss gradient.
inline double output_error(double beta, double ebar_loss) { return -beta * ebar_loss; }

/// (-u + e + sum_i W_i * phi(ubar_i) + b) / tau, with phi_ubar = phi(ubar).
inline double activation_velocity(double u, double e, std::span<const double> weights,
                                  std::span<const double> phi_ubar, double b, double tau) {
    double drive = b;
    for (std::size_t i = 0; i < weights.size(); ++i) drive += weights[i] * phi_ubar[i];
    return (-u + e + drive) / tau;
}

struct ParameterVelocity {
    double weight;
    double bias;
};

/// W_dot = eta_w * phi(ubar) * e, b_dot = eta_b * e.
inline ParameterVelocity parameter_velocities(double phi_ubar, double e, double eta_w, double eta_b) {
    return {eta_w * phi_ubar * e, eta_b * e};
}

}  // namespace lepm
