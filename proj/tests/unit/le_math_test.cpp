#include <doctest.h>

#include <vector>

#include "lepm/le_math.hpp"

using namespace lepm;

TEST_CASE("prospective activation") {
    CHECK(prospective_activation(0.5, 0.1, 10.0) == doctest::Approx(1.5));
    CHECK(prospective_activation(0.3, 0.0, 10.0) == 0.3);
    CHECK(prospective_activation(1.0, -0.1, 10.0) == doctest::Approx(0.0));
}

TEST_CASE("hidden error") {
    std::vector<double> w{0.5}, e{0.2};
    CHECK(hidden_error(Activation::tanh, 0.0, w, e) == doctest::Approx(0.1));
    std::vector<double> zero{0.0};
    CHECK(hidden_error(Activation::tanh, 0.3, w, zero) == 0.0);
    CHECK(std::abs(hidden_error(Activation::tanh, 100.0, w, e)) < 1e-12);
}

TEST_CASE("output error") {
    CHECK(output_error(0.1, 1.0) == doctest::Approx(-0.1));
    CHECK(output_error(0.0, 3.0) == 0.0);
    CHECK(output_error(0.1, 0.0) == 0.0);
}

TEST_CASE("activation velocity") {
    std::vector<double> w{1.0}, r{0.5};
    CHECK(activation_velocity(0.0, 0.0, w, r, 0.0, 10.0) == doctest::Approx(0.05));
    // At the fixed point u = e + sum W phi + b nothing moves.
    std::vector<double> w2{0.4, -1.5}, r2{0.3, 0.2};
    const double u = 0.25 + 0.4 * 0.3 - 1.5 * 0.2 + 0.1;
    CHECK(activation_velocity(u, 0.25, w2, r2, 0.1, 10.0) == doctest::Approx(0.0).epsilon(1e-15));
    std::vector<double> zeros{0.0, 0.0};
    CHECK(activation_velocity(0.0, 0.0, zeros, zeros, 0.0, 10.0) == 0.0);
}

TEST_CASE("parameter velocities") {
    auto v = parameter_velocities(0.5, 0.1, 0.05, 0.05);
    CHECK(v.weight == doctest::Approx(0.0025));
    CHECK(v.bias == doctest::Approx(0.005));
    auto z = parameter_velocities(0.9, 0.0, 0.05, 0.05);
    CHECK(z.weight == 0.0);
    CHECK(z.bias == 0.0);
}
