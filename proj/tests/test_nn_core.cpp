#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fd_check.hpp"
#include "mvhedge/nn/adam.hpp"
#include "mvhedge/nn/layers.hpp"

using namespace mvhedge;
using namespace mvhedge::nn;

namespace {

DenseLayer identity_dense(std::size_t n, Activation act = Activation::Identity) {
    DenseLayer layer;
    layer.in = n;
    layer.out = n;
    layer.activation = act;
    layer.weights.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) layer.weights[i * n + i] = 1.0;
    layer.bias.assign(n, 0.0);
    return layer;
}

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double lo = -2.0,
                     double hi = 2.0) {
    Matrix m(rows, cols);
    for (auto& v : m.data()) v = rng.uniform(lo, hi);
    return m;
}

}  // namespace

TEST_CASE("xavier_init bounds, zero biases and determinism") {
    const auto layer = xavier_init(4, 16, 123);
    CHECK(layer.weights.size() == 64);
    for (double w : layer.weights) {
        CHECK(w >= -0.5);
        CHECK(w <= 0.5);
    }
    for (double b : layer.bias) CHECK(b == 0.0);

    const auto again = xavier_init(4, 16, 123);
    CHECK(again.weights == layer.weights);

    CHECK_THROWS_AS(xavier_init(0, 4, 1), contract_error);
}

TEST_CASE("xavier_init sample mean stays within the moment bound") {
    const auto layer = xavier_init(10000, 1, 77);
    double mean = 0.0;
    for (double w : layer.weights) mean += w;
    mean /= static_cast<double>(layer.weights.size());
    const double range = 2.0 / std::sqrt(10000.0);
    const double bound = 3.0 * range / std::sqrt(12.0 * 10000.0);
    CHECK(std::abs(mean) < bound);
}

TEST_CASE("forward basics") {
    SUBCASE("identity dense layer is the identity map") {
        Network net;
        net.layers.emplace_back(identity_dense(3));
        Rng rng(5);
        const Matrix x = random_matrix(3, 4, rng);
        const Matrix y = infer(net, x);
        CHECK(y.data() == x.data());
    }
    SUBCASE("ReLU dense layer clips negatives") {
        Network net;
        net.layers.emplace_back(identity_dense(1, Activation::ReLU));
        Matrix x(1, 1);
        x(0, 0) = -1.0;
        CHECK(infer(net, x)(0, 0) == 0.0);
    }
    SUBCASE("two-layer net matches hand computation on a 2x3 input") {
        // layer 1: W = [[1, 2], [0, -1]], b = (0.5, 0), ReLU
        // layer 2: W = [[1, 1]], b = (-1), identity
        DenseLayer l1;
        l1.in = 2;
        l1.out = 2;
        l1.activation = Activation::ReLU;
        l1.weights = {1.0, 2.0, 0.0, -1.0};
        l1.bias = {0.5, 0.0};
        DenseLayer l2;
        l2.in = 2;
        l2.out = 1;
        l2.activation = Activation::Identity;
        l2.weights = {1.0, 1.0};
        l2.bias = {-1.0};
        Network net;
        net.layers.emplace_back(l1);
        net.layers.emplace_back(l2);

        Matrix x(2, 3);
        // columns: (1, 1), (-1, 0.25), (0, 2)
        x(0, 0) = 1.0;  x(1, 0) = 1.0;
        x(0, 1) = -1.0; x(1, 1) = 0.25;
        x(0, 2) = 0.0;  x(1, 2) = 2.0;
        const Matrix y = infer(net, x);
        // col 0: h = relu(1+2+0.5, -1) = (3.5, 0) -> 3.5 - 1 = 2.5
        // col 1: h = relu(-1+0.5+0.5, -0.25) = (0, 0) -> -1
        // col 2: h = relu(4+0.5, -2) = (4.5, 0) -> 3.5
        CHECK(y(0, 0) == doctest::Approx(2.5));
        CHECK(y(0, 1) == doctest::Approx(-1.0));
        CHECK(y(0, 2) == doctest::Approx(3.5));
    }
    SUBCASE("dimension mismatch names the layer") {
        Network net;
        net.layers.emplace_back(identity_dense(3));
        Matrix x(2, 1);
        CHECK_THROWS_WITH_AS(infer(net, x), doctest::Contains("layer 0"), contract_error);
    }
}

TEST_CASE("forward in Infer mode is bit-stable across calls") {
    Rng rng(9);
    Network net;
    net.layers.emplace_back(xavier_init(3, 8, rng, Activation::Identity));
    net.layers.emplace_back(BatchNormLayer(8));
    net.layers.emplace_back(ActivationLayer{Activation::ReLU});
    net.layers.emplace_back(xavier_init(8, 1, rng, Activation::Identity));
    const Matrix x = random_matrix(3, 16, rng);
    const Matrix y1 = infer(net, x);
    const Matrix y2 = infer(net, x);
    CHECK(y1.data() == y2.data());
}

TEST_CASE("backward: zero loss gradient gives zero parameter gradients") {
    Rng rng(21);
    Network net;
    net.layers.emplace_back(xavier_init(2, 4, rng, Activation::Identity));
    net.layers.emplace_back(BatchNormLayer(4));
    net.layers.emplace_back(ActivationLayer{Activation::ReLU});
    net.layers.emplace_back(xavier_init(4, 1, rng, Activation::Identity));

    const Matrix x = random_matrix(2, 8, rng);
    ForwardCache cache;
    forward(net, x, Mode::Train, &cache);
    const Matrix zero(1, 8);
    const auto grads = backward(net, cache, zero);
    for (const auto& slot : grads.slots)
        for (double g : slot) CHECK(g == 0.0);
}

TEST_CASE("backward: scalar one-layer net matches the hand derivative") {
    // y = w x + b, L = (y - t)^2; dL/dw = 2 (y - t) x, dL/db = 2 (y - t)
    DenseLayer l;
    l.in = 1;
    l.out = 1;
    l.activation = Activation::Identity;
    l.weights = {1.7};
    l.bias = {-0.3};
    Network net;
    net.layers.emplace_back(l);

    const double xv = 0.8, target = 2.0;
    Matrix x(1, 1);
    x(0, 0) = xv;
    ForwardCache cache;
    const Matrix y = forward(net, x, Mode::Train, &cache);
    Matrix lg(1, 1);
    lg(0, 0) = 2.0 * (y(0, 0) - target);
    const auto grads = backward(net, cache, lg);
    CHECK(grads.slots[0][0] == doctest::Approx(2.0 * (y(0, 0) - target) * xv).epsilon(1e-14));
    CHECK(grads.slots[1][0] == doctest::Approx(2.0 * (y(0, 0) - target)).epsilon(1e-14));
}

TEST_CASE("backward rejects a stale or infer-mode cache") {
    Rng rng(33);
    Network net;
    net.layers.emplace_back(xavier_init(2, 3, rng));
    const Matrix x = random_matrix(2, 4, rng);
    ForwardCache cache;
    forward(net, x, Mode::Infer, &cache);
    Matrix lg(3, 4);
    CHECK_THROWS_AS(backward(net, cache, lg), contract_error);
}

TEST_CASE("gradient check: composite architectures vs central differences") {
    Rng rng(1234);
    for (int trial = 0; trial < 3; ++trial) {
        Network net;
        net.layers.emplace_back(xavier_init(3, 8, rng, Activation::Identity));
        net.layers.emplace_back(BatchNormLayer(8));
        net.layers.emplace_back(ActivationLayer{Activation::ReLU});
        net.layers.emplace_back(xavier_init(8, 6, rng, Activation::Identity));
        net.layers.emplace_back(BatchNormLayer(6));
        net.layers.emplace_back(ActivationLayer{Activation::ReLU});
        net.layers.emplace_back(xavier_init(6, 1, rng, Activation::Identity));

        Matrix x = random_matrix(3, 32, rng);
        int guard = 0;
        while (fd::fnn_batch_near_kink(net, x) && guard++ < 50) x = random_matrix(3, 32, rng);
        REQUIRE(guard < 50);

        const auto res = fd::check_fnn_gradients(net, x, OptionKind::Call, rng);
        CHECK(res.checked > 0);
        CHECK(res.max_rel_err < 1e-4);
    }
}

TEST_CASE("gradient check: fused activations (sigmoid, tanh, relu)") {
    Rng rng(99);
    int guard = 0;
    for (;; ++guard) {
        REQUIRE(guard < 50);
        Network net;
        net.layers.emplace_back(xavier_init(2, 5, rng, Activation::Tanh));
        net.layers.emplace_back(xavier_init(5, 5, rng, Activation::Sigmoid));
        net.layers.emplace_back(xavier_init(5, 4, rng, Activation::ReLU));
        net.layers.emplace_back(xavier_init(4, 1, rng, Activation::Identity));
        Matrix x = random_matrix(2, 32, rng);
        if (fd::fnn_batch_near_kink(net, x) || fd::fnn_batch_clamped(net, x, OptionKind::Put))
            continue;
        const auto res = fd::check_fnn_gradients(net, x, OptionKind::Put, rng);
        CHECK(res.checked > 0);
        CHECK(res.max_rel_err < 1e-4);
        break;
    }
}

TEST_CASE("clip_gradients") {
    GradientSet g;
    g.slots = {{3.0, 0.0}, {0.0, 4.0}};  // norm 5

    SUBCASE("below the threshold: bitwise unchanged") {
        GradientSet a = g;
        clip_gradients(a, 6.0);
        CHECK(a.slots == g.slots);
    }
    SUBCASE("above the threshold: scaled to the threshold") {
        GradientSet a = g;
        clip_gradients(a, 2.5);  // norm 5 -> halved
        CHECK(a.slots[0][0] == doctest::Approx(1.5).epsilon(1e-15));
        CHECK(a.slots[1][1] == doctest::Approx(2.0).epsilon(1e-15));
        CHECK(std::sqrt(a.squared_norm()) == doctest::Approx(2.5).epsilon(1e-12));
    }
    SUBCASE("post-clip norm is min(g, max_norm); magnitudes never grow") {
        Rng rng(3);
        for (int i = 0; i < 50; ++i) {
            GradientSet a;
            a.slots = {std::vector<double>(7), std::vector<double>(5)};
            for (auto& slot : a.slots)
                for (auto& v : slot) v = rng.uniform(-3.0, 3.0);
            const GradientSet before = a;
            const double norm = std::sqrt(a.squared_norm());
            const double max_norm = rng.uniform(0.5, 10.0);
            clip_gradients(a, max_norm);
            CHECK(std::sqrt(a.squared_norm()) ==
                  doctest::Approx(std::min(norm, max_norm)).epsilon(1e-12));
            for (std::size_t s = 0; s < a.slots.size(); ++s)
                for (std::size_t k = 0; k < a.slots[s].size(); ++k)
                    CHECK(std::abs(a.slots[s][k]) <= std::abs(before.slots[s][k]) + 1e-15);
        }
    }
    SUBCASE("non-positive max_norm is rejected") {
        GradientSet a = g;
        CHECK_THROWS_AS(clip_gradients(a, 0.0), contract_error);
    }
}

TEST_CASE("adam_step") {
    std::vector<double> p1 = {1.0, -2.0};
    std::vector<double> p2 = {0.5};
    std::vector<std::vector<double>*> params = {&p1, &p2};

    SUBCASE("zero gradient leaves parameters unchanged") {
        auto state = AdamState::create(params, 0.01);
        GradientSet g = zeros_like(params);
        adam_step(state, params, g);
        CHECK(p1 == std::vector<double>{1.0, -2.0});
        CHECK(p2 == std::vector<double>{0.5});
        CHECK(state.step == 1);
    }
    SUBCASE("first step with constant gradient moves by ~lr in the gradient's direction") {
        auto state = AdamState::create(params, 0.01);
        GradientSet g = zeros_like(params);
        g.slots[0] = {0.3, -0.7};
        g.slots[1] = {2.0};
        adam_step(state, params, g);
        // bias-corrected first step: m_hat = g, v_hat = g^2
        CHECK(p1[0] == doctest::Approx(1.0 - 0.01).epsilon(1e-6));
        CHECK(p1[1] == doctest::Approx(-2.0 + 0.01).epsilon(1e-6));
        CHECK(p2[0] == doctest::Approx(0.5 - 0.01).epsilon(1e-6));
    }
    SUBCASE("identical calls from identical states give identical results") {
        std::vector<double> q1 = p1, q2 = p2;
        std::vector<std::vector<double>*> qparams = {&q1, &q2};
        auto s1 = AdamState::create(params, 0.003);
        auto s2 = AdamState::create(qparams, 0.003);
        GradientSet g = zeros_like(params);
        g.slots[0] = {0.1, 0.2};
        g.slots[1] = {-0.4};
        for (int i = 0; i < 5; ++i) {
            adam_step(s1, params, g);
            adam_step(s2, qparams, g);
        }
        CHECK(p1 == q1);
        CHECK(p2 == q2);
    }
}

TEST_CASE("batchnorm_forward") {
    SUBCASE("constant feature column maps to zero") {
        BatchNormLayer bn(1);
        Matrix x(1, 4, 3.25);
        const Matrix y = batchnorm_forward(bn, x, Mode::Train);
        for (double v : y.data()) CHECK(v == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("train-mode output is standardized per feature") {
        BatchNormLayer bn(2);
        Rng rng(8);
        Matrix x = random_matrix(2, 64, rng, -5.0, 9.0);
        const Matrix y = batchnorm_forward(bn, x, Mode::Train);
        for (std::size_t i = 0; i < 2; ++i) {
            double mean = 0.0;
            for (std::size_t j = 0; j < 64; ++j) mean += y(i, j);
            mean /= 64.0;
            CHECK(std::abs(mean) < 1e-10);
        }
    }
    SUBCASE("gamma and beta relocate the standardized output") {
        BatchNormLayer bn(1);
        bn.gamma = {2.0};
        bn.beta = {3.0};
        Rng rng(12);
        Matrix x = random_matrix(1, 256, rng);
        const Matrix y = batchnorm_forward(bn, x, Mode::Train);
        double mean = 0.0, var = 0.0;
        for (double v : y.data()) mean += v;
        mean /= 256.0;
        for (double v : y.data()) var += (v - mean) * (v - mean);
        var /= 256.0;
        CHECK(mean == doctest::Approx(3.0).epsilon(1e-10));
        CHECK(std::sqrt(var) == doctest::Approx(2.0).epsilon(1e-3));
    }
    SUBCASE("train-mode batch of one is a contract violation") {
        BatchNormLayer bn(1);
        Matrix x(1, 1, 1.0);
        CHECK_THROWS_AS(batchnorm_forward(bn, x, Mode::Train), contract_error);
    }
    SUBCASE("running statistics converge to the data distribution") {
        BatchNormLayer bn(1);
        bn.gamma = {1.5};
        bn.beta = {-0.5};
        Rng rng(31);
        // fixed distribution: mean 2, std 3
        Matrix last_train(1, 1);
        for (int step = 0; step < 400; ++step) {
            Matrix x(1, 128);
            for (auto& v : x.data()) v = 2.0 + 3.0 * rng.normal();
            last_train = batchnorm_forward(bn, x, Mode::Train);
        }
        Matrix probe(1, 4096);
        for (auto& v : probe.data()) v = 2.0 + 3.0 * rng.normal();
        BatchNormLayer frozen = bn;
        const Matrix y = batchnorm_forward(frozen, probe, Mode::Infer);
        double mean = 0.0, var = 0.0;
        for (double v : y.data()) mean += v;
        mean /= static_cast<double>(y.data().size());
        for (double v : y.data()) var += (v - mean) * (v - mean);
        var /= static_cast<double>(y.data().size());
        // infer-mode statistics match the train-mode view within 5%
        CHECK(std::abs(mean - (-0.5)) < 0.05 * 1.5);
        CHECK(std::abs(std::sqrt(var) - 1.5) < 0.05 * 1.5);
    }
}
