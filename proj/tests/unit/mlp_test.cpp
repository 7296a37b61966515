#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "lepm/errors.hpp"
#include "lepm/mlp.hpp"
#include "oracles.hpp"

using lepm::Rng;
using lepm::mlp::Dense;
using lepm::mlp::DenseNet;

TEST_CASE("init respects gain and fan-in bound") {
    Rng rng(11);
    const std::vector<int> dims{9, 100, 100, 3};
    auto net = DenseNet::init(dims, 0.1, rng);
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
        const double bound = 0.1 / std::sqrt(static_cast<double>(dims[l]));
        CHECK(net.layers()[l].weight.cwiseAbs().maxCoeff() <= bound);
        CHECK(net.layers()[l].bias.isZero());
    }
    CHECK(net.dims() == dims);
}

TEST_CASE("init is deterministic per seed") {
    const std::vector<int> dims{4, 7, 2};
    Rng a(5), b(5);
    auto n1 = DenseNet::init(dims, 1.0, a);
    auto n2 = DenseNet::init(dims, 1.0, b);
    for (std::size_t l = 0; l < n1.layers().size(); ++l) CHECK(n1.layers()[l].weight == n2.layers()[l].weight);
}

TEST_CASE("vanishing gain gives vanishing output") {
    Rng rng(2);
    const std::vector<int> dims{6, 20, 20, 2};
    Eigen::VectorXd x = Eigen::VectorXd::Constant(6, 3.0);
    auto big = DenseNet::init(dims, 1e-3, rng);
    CHECK(big.forward(x).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("forward special cases") {
    SUBCASE("zero parameters") {
        DenseNet net({Dense{Eigen::MatrixXd::Zero(3, 2), Eigen::VectorXd::Zero(3)},
                      Dense{Eigen::MatrixXd::Zero(1, 3), Eigen::VectorXd::Zero(1)}});
        CHECK(net.forward(Eigen::Vector2d(1.0, -4.0)).isZero());
    }
    SUBCASE("single identity layer") {
        DenseNet net({Dense{Eigen::MatrixXd::Identity(3, 3), Eigen::VectorXd::Zero(3)}});
        Eigen::Vector3d x(1.0, -2.0, 0.5);
        CHECK(net.forward(x) == x);
    }
    SUBCASE("1-2-1 tanh net at the origin") {
        DenseNet net({Dense{Eigen::MatrixXd::Ones(2, 1), Eigen::VectorXd::Zero(2)},
                      Dense{Eigen::MatrixXd::Ones(1, 2), Eigen::VectorXd::Zero(1)}});
        CHECK(net.forward(Eigen::VectorXd::Zero(1))(0) == 0.0);
    }
    SUBCASE("shape mismatch") {
        DenseNet net({Dense{Eigen::MatrixXd::Identity(3, 3), Eigen::VectorXd::Zero(3)}});
        CHECK_THROWS_AS(net.forward(Eigen::VectorXd::Zero(2)), lepm::ContractError);
        CHECK_THROWS_AS(DenseNet({Dense{Eigen::MatrixXd::Zero(3, 2), Eigen::VectorXd::Zero(2)}}),
                        lepm::ContractError);
    }
}

TEST_CASE("batch forward matches per-sample forward") {
    Rng rng(9);
    auto net = DenseNet::init(std::vector<int>{5, 8, 3}, 1.0, rng);
    Eigen::MatrixXd xs = Eigen::MatrixXd::Random(5, 7);
    Eigen::MatrixXd ys = net.forward_batch(xs);
    for (Eigen::Index c = 0; c < xs.cols(); ++c)
        CHECK((ys.col(c) - net.forward(Eigen::VectorXd(xs.col(c)))).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("backward at the target has zero loss and gradient") {
    Rng rng(3);
    auto net = DenseNet::init(std::vector<int>{3, 4, 2}, 1.0, rng);
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, 4);
    auto r = net.backward(x, net.forward_batch(x));
    CHECK(r.loss == 0.0);
    for (const auto& g : r.grads) {
        CHECK(g.weight.isZero());
        CHECK(g.bias.isZero());
    }
}

TEST_CASE("gradient check on a 3-4-2 net") {
    Rng rng(4);
    auto net = DenseNet::init(std::vector<int>{3, 4, 2}, 1.0, rng);
    for (auto& l : net.layers()) l.bias = Eigen::VectorXd::Random(l.bias.size());
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, 1);
    Eigen::MatrixXd t = Eigen::MatrixXd::Random(2, 1);
    CHECK(lepm_check::gradient_check(net, x, t) < 1e-4);
}

TEST_CASE("gradient check across 100 random nets") {
    CHECK(lepm_check::gradient_check_random_nets(12345, 100) < 1e-4);
}

TEST_CASE("output bias gradient is linear in the residual") {
    DenseNet net({Dense{Eigen::MatrixXd::Constant(1, 1, 2.0), Eigen::VectorXd::Zero(1)}});
    Eigen::MatrixXd x = Eigen::MatrixXd::Constant(1, 1, 1.0);
    const double g1 = net.backward(x, Eigen::MatrixXd::Constant(1, 1, 1.0)).grads[0].bias(0);  // residual 1
    const double g2 = net.backward(x, Eigen::MatrixXd::Constant(1, 1, 0.0)).grads[0].bias(0);  // residual 2
    CHECK(g2 == doctest::Approx(2.0 * g1));
}

TEST_CASE("sgd step") {
    SUBCASE("lr 0 leaves parameters untouched") {
        Rng rng(1);
        auto net = DenseNet::init(std::vector<int>{2, 3, 1}, 1.0, rng);
        auto before = net.layers();
        auto g = net.backward(Eigen::MatrixXd::Ones(2, 1), Eigen::MatrixXd::Zero(1, 1)).grads;
        net.step(g, 0.0);
        for (std::size_t l = 0; l < before.size(); ++l) CHECK(net.layers()[l].weight == before[l].weight);
    }
    SUBCASE("scalar net y = w x") {
        DenseNet net({Dense{Eigen::MatrixXd::Constant(1, 1, 1.0), Eigen::VectorXd::Zero(1)}});
        auto g = net.backward(Eigen::MatrixXd::Constant(1, 1, 1.0), Eigen::MatrixXd::Zero(1, 1)).grads;
        g[0].bias.setZero();
        net.step(g, 0.5);
        CHECK(net.layers()[0].weight(0, 0) == 0.5);
    }
    SUBCASE("repeated steps do not increase the loss") {
        Rng rng(7);
        auto net = DenseNet::init(std::vector<int>{4, 6, 2}, 1.0, rng);
        Eigen::MatrixXd x = Eigen::MatrixXd::Random(4, 5);
        Eigen::MatrixXd t = Eigen::MatrixXd::Random(2, 5);
        double prev = net.backward(x, t).loss;
        for (int i = 0; i < 200; ++i) {
            auto r = net.backward(x, t);
            net.step(r.grads, 0.01);
            const double now = net.backward(x, t).loss;
            REQUIRE(now <= prev + 1e-15);
            prev = now;
        }
        CHECK(net.all_finite());
    }
}

TEST_CASE("adam reduces the loss on a fixed batch") {
    Rng rng(8);
    auto net = DenseNet::init(std::vector<int>{3, 10, 2}, 0.1, rng);
    lepm::mlp::Adam adam(net);
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, 8);
    Eigen::MatrixXd t = Eigen::MatrixXd::Random(2, 8) * 0.5;
    const double start = net.backward(x, t).loss;
    for (int i = 0; i < 500; ++i) adam.step(net, net.backward(x, t).grads, 0.01);
    CHECK(net.backward(x, t).loss < 0.5 * start);
}

TEST_CASE("hidden units are permutation equivariant") {
    Rng rng(21);
    auto net = DenseNet::init(std::vector<int>{4, 6, 3}, 1.0, rng);
    for (auto& l : net.layers()) l.bias = Eigen::VectorXd::Random(l.bias.size());
    std::vector<int> perm(6);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    auto permuted = net;
    for (int i = 0; i < 6; ++i) {
        permuted.layers()[0].weight.row(i) = net.layers()[0].weight.row(perm[i]);
        permuted.layers()[0].bias(i) = net.layers()[0].bias(perm[i]);
        permuted.layers()[1].weight.col(i) = net.layers()[1].weight.col(perm[i]);
    }
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::VectorXd x = Eigen::VectorXd::Random(4);
        CHECK((net.forward(x) - permuted.forward(x)).cwiseAbs().maxCoeff() < 1e-14);
    }
}
