#pragma once

#include <variant>
#include <vector>

#include "mvhedge/nn/matrix.hpp"
#include "mvhedge/rng.hpp"

namespace mvhedge::nn {

enum class Activation { ReLU, Sigmoid, Tanh, Identity };
enum class Mode { Train, Infer };

/// Affine map plus activation: y = f(W x + b), W is (out x in).
struct DenseLayer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<double> weights;  // row-major (out x in)
    std::vector<double> bias;     // (out)
    Activation activation = Activation::Identity;
};

/// Per-feature standardization over the mini-batch, y = gamma * x_hat + beta.
/// Train mode uses batch statistics and updates the running estimates;
/// Infer mode uses the running estimates.
struct BatchNormLayer {
    std::vector<double> gamma;
    std::vector<double> beta;
    std::vector<double> running_mean;
    std::vector<double> running_var;
    double momentum = 0.9;
    double epsilon = 1e-5;

    explicit BatchNormLayer(std::size_t width = 0)
        : gamma(width, 1.0), beta(width, 0.0), running_mean(width, 0.0), running_var(width, 1.0) {}
};

/// Standalone activation, used where batch norm sits between the affine map
/// and its nonlinearity.
struct ActivationLayer {
    Activation activation = Activation::ReLU;
};

using Layer = std::variant<DenseLayer, BatchNormLayer, ActivationLayer>;

struct Network {
    std::vector<Layer> layers;
};

/// Xavier initialization: weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)],
/// biases zero. Deterministic given the generator state.
DenseLayer xavier_init(std::size_t fan_in, std::size_t fan_out, Rng& rng,
                       Activation activation = Activation::Identity);
DenseLayer xavier_init(std::size_t fan_in, std::size_t fan_out, std::uint64_t seed,
                       Activation activation = Activation::Identity);

/// Intermediates retained by a Train-mode forward pass for backpropagation.
struct LayerCache {
    Matrix input;            // layer input
    Matrix pre_activation;   // dense: W x + b before the activation
    Matrix output;           // layer output
    std::vector<double> batch_mean;     // batch norm only
    std::vector<double> batch_inv_std;  // 1/sqrt(var + eps)
};

struct ForwardCache {
    std::vector<LayerCache> layers;
    std::size_t batch = 0;
    bool train_mode = false;
};

/// Apply the layers in order. Train mode fills the cache for backward();
/// Infer mode is a pure function of the inputs and parameters.
Matrix forward(Network& net, const Matrix& input, Mode mode, ForwardCache* cache = nullptr);

/// Infer-mode forward that never touches the network; safe to call from any
/// number of threads concurrently.
Matrix infer(const Network& net, const Matrix& input);

/// Per-parameter gradients, slot-aligned with trainable_params().
struct GradientSet {
    std::vector<std::vector<double>> slots;

    double squared_norm() const;
    void scale(double factor);
};

/// Trainable parameter arrays in fixed order: per layer, dense -> weights,
/// bias; batch norm -> gamma, beta. Running statistics are not trainable.
std::vector<std::vector<double>*> trainable_params(Network& net);
std::vector<const std::vector<double>*> trainable_params(const Network& net);

/// Gradient set shaped like the given parameter list, all zeros.
GradientSet zeros_like(const std::vector<std::vector<double>*>& params);

/// Reverse-mode pass. `loss_grad` is dL/d(output), shaped like the forward
/// output. Returns parameter gradients and writes dL/d(input) if requested.
GradientSet backward(Network& net, const ForwardCache& cache, const Matrix& loss_grad,
                     Matrix* input_grad = nullptr);

/// Standalone batch-norm forward, shared by forward(). Train mode requires a
/// batch of at least 2 columns.
Matrix batchnorm_forward(BatchNormLayer& layer, const Matrix& input, Mode mode,
                         LayerCache* cache = nullptr);

}  // namespace mvhedge::nn
