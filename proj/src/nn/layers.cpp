#include "mvhedge/nn/layers.hpp"

#include <cmath>
#include <string>

namespace mvhedge::nn {

namespace {

double apply_activation(Activation act, double z) {
    switch (act) {
        case Activation::ReLU: return z > 0.0 ? z : 0.0;
        case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-z));
        case Activation::Tanh: return std::tanh(z);
        case Activation::Identity: return z;
    }
    return z;
}

/// Derivative in terms of pre-activation z and output y. ReLU subgradient at
/// exactly 0 is 0.
double activation_grad(Activation act, double z, double y) {
    switch (act) {
        case Activation::ReLU: return z > 0.0 ? 1.0 : 0.0;
        case Activation::Sigmoid: return y * (1.0 - y);
        case Activation::Tanh: return 1.0 - y * y;
        case Activation::Identity: return 1.0;
    }
    return 1.0;
}

Matrix dense_forward(const DenseLayer& layer, const Matrix& input, std::size_t layer_index,
                     Matrix* pre_activation) {
    if (input.rows() != layer.in)
        throw contract_error("forward: layer " + std::to_string(layer_index) + " expects " +
                             std::to_string(layer.in) + " input rows, got " +
                             std::to_string(input.rows()));
    Matrix z = multiply(layer.weights, layer.out, layer.in, input);
    for (std::size_t i = 0; i < layer.out; ++i) {
        double* row = z.row_ptr(i);
        const double b = layer.bias[i];
        for (std::size_t j = 0; j < z.cols(); ++j) row[j] += b;
    }
    if (pre_activation) *pre_activation = z;
    if (layer.activation != Activation::Identity) {
        for (std::size_t i = 0; i < z.rows(); ++i) {
            double* row = z.row_ptr(i);
            for (std::size_t j = 0; j < z.cols(); ++j)
                row[j] = apply_activation(layer.activation, row[j]);
        }
    }
    return z;
}

}  // namespace

DenseLayer xavier_init(std::size_t fan_in, std::size_t fan_out, Rng& rng, Activation activation) {
    if (fan_in < 1 || fan_out < 1) throw contract_error("xavier_init: fan_in and fan_out must be >= 1");
    DenseLayer layer;
    layer.in = fan_in;
    layer.out = fan_out;
    layer.activation = activation;
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    layer.weights.resize(fan_out * fan_in);
    for (auto& w : layer.weights) w = rng.uniform(-bound, bound);
    layer.bias.assign(fan_out, 0.0);
    return layer;
}

DenseLayer xavier_init(std::size_t fan_in, std::size_t fan_out, std::uint64_t seed,
                       Activation activation) {
    Rng rng(seed);
    return xavier_init(fan_in, fan_out, rng, activation);
}

Matrix batchnorm_forward(BatchNormLayer& layer, const Matrix& input, Mode mode,
                         LayerCache* cache) {
    const std::size_t width = layer.gamma.size();
    if (input.rows() != width)
        throw contract_error("batchnorm_forward: expected " + std::to_string(width) +
                             " features, got " + std::to_string(input.rows()));
    const std::size_t n = input.cols();
    if (mode == Mode::Train && n < 2)
        throw contract_error("batchnorm_forward: Train mode needs a batch of at least 2");

    Matrix out(width, n);
    std::vector<double> mean(width), inv_std(width);
    for (std::size_t i = 0; i < width; ++i) {
        const double* row = input.row_ptr(i);
        double mu, var;
        if (mode == Mode::Train) {
            mu = 0.0;
            for (std::size_t j = 0; j < n; ++j) mu += row[j];
            mu /= static_cast<double>(n);
            var = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double d = row[j] - mu;
                var += d * d;
            }
            var /= static_cast<double>(n);
            layer.running_mean[i] = layer.momentum * layer.running_mean[i] + (1.0 - layer.momentum) * mu;
            layer.running_var[i] = layer.momentum * layer.running_var[i] + (1.0 - layer.momentum) * var;
        } else {
            mu = layer.running_mean[i];
            var = layer.running_var[i];
        }
        const double is = 1.0 / std::sqrt(var + layer.epsilon);
        mean[i] = mu;
        inv_std[i] = is;
        const double g = layer.gamma[i];
        const double b = layer.beta[i];
        double* out_row = out.row_ptr(i);
        for (std::size_t j = 0; j < n; ++j) out_row[j] = g * (row[j] - mu) * is + b;
    }
    if (cache) {
        cache->batch_mean = std::move(mean);
        cache->batch_inv_std = std::move(inv_std);
    }
    return out;
}

Matrix forward(Network& net, const Matrix& input, Mode mode, ForwardCache* cache) {
    if (cache) {
        cache->layers.clear();
        cache->layers.resize(net.layers.size());
        cache->batch = input.cols();
        cache->train_mode = mode == Mode::Train;
    }
    Matrix current = input;
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        LayerCache* lc = cache ? &cache->layers[li] : nullptr;
        Matrix next;
        std::visit(
            [&](auto& layer) {
                using T = std::decay_t<decltype(layer)>;
                if constexpr (std::is_same_v<T, DenseLayer>) {
                    next = dense_forward(layer, current, li, lc ? &lc->pre_activation : nullptr);
                } else if constexpr (std::is_same_v<T, BatchNormLayer>) {
                    next = batchnorm_forward(layer, current, mode, lc);
                } else {
                    next = current;
                    for (std::size_t i = 0; i < next.rows(); ++i) {
                        double* row = next.row_ptr(i);
                        for (std::size_t j = 0; j < next.cols(); ++j)
                            row[j] = apply_activation(layer.activation, row[j]);
                    }
                }
            },
            net.layers[li]);
        if (lc) {
            lc->input = std::move(current);
            lc->output = next;
        }
        current = std::move(next);
    }
    return current;
}

Matrix infer(const Network& net, const Matrix& input) {
    Matrix current = input;
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        std::visit(
            [&](const auto& layer) {
                using T = std::decay_t<decltype(layer)>;
                if constexpr (std::is_same_v<T, DenseLayer>) {
                    current = dense_forward(layer, current, li, nullptr);
                } else if constexpr (std::is_same_v<T, BatchNormLayer>) {
                    const std::size_t width = layer.gamma.size();
                    if (current.rows() != width)
                        throw contract_error("infer: batch-norm width mismatch at layer " +
                                             std::to_string(li));
                    for (std::size_t i = 0; i < width; ++i) {
                        const double is = 1.0 / std::sqrt(layer.running_var[i] + layer.epsilon);
                        const double mu = layer.running_mean[i];
                        const double g = layer.gamma[i];
                        const double b = layer.beta[i];
                        double* row = current.row_ptr(i);
                        for (std::size_t j = 0; j < current.cols(); ++j)
                            row[j] = g * (row[j] - mu) * is + b;
                    }
                } else {
                    for (std::size_t i = 0; i < current.rows(); ++i) {
                        double* row = current.row_ptr(i);
                        for (std::size_t j = 0; j < current.cols(); ++j)
                            row[j] = apply_activation(layer.activation, row[j]);
                    }
                }
            },
            net.layers[li]);
    }
    return current;
}

double GradientSet::squared_norm() const {
    double total = 0.0;
    for (const auto& slot : slots)
        for (double g : slot) total += g * g;
    return total;
}

void GradientSet::scale(double factor) {
    for (auto& slot : slots)
        for (double& g : slot) g *= factor;
}

std::vector<std::vector<double>*> trainable_params(Network& net) {
    std::vector<std::vector<double>*> params;
    for (auto& layer : net.layers) {
        std::visit(
            [&](auto& l) {
                using T = std::decay_t<decltype(l)>;
                if constexpr (std::is_same_v<T, DenseLayer>) {
                    params.push_back(&l.weights);
                    params.push_back(&l.bias);
                } else if constexpr (std::is_same_v<T, BatchNormLayer>) {
                    params.push_back(&l.gamma);
                    params.push_back(&l.beta);
                }
            },
            layer);
    }
    return params;
}

std::vector<const std::vector<double>*> trainable_params(const Network& net) {
    std::vector<const std::vector<double>*> params;
    for (const auto& layer : net.layers) {
        std::visit(
            [&](const auto& l) {
                using T = std::decay_t<decltype(l)>;
                if constexpr (std::is_same_v<T, DenseLayer>) {
                    params.push_back(&l.weights);
                    params.push_back(&l.bias);
                } else if constexpr (std::is_same_v<T, BatchNormLayer>) {
                    params.push_back(&l.gamma);
                    params.push_back(&l.beta);
                }
            },
            layer);
    }
    return params;
}

GradientSet zeros_like(const std::vector<std::vector<double>*>& params) {
    GradientSet grads;
    grads.slots.reserve(params.size());
    for (const auto* p : params) grads.slots.emplace_back(p->size(), 0.0);
    return grads;
}

GradientSet backward(Network& net, const ForwardCache& cache, const Matrix& loss_grad,
                     Matrix* input_grad) {
    if (!cache.train_mode || cache.layers.size() != net.layers.size())
        throw contract_error("backward: cache does not match a Train-mode forward of this network");

    GradientSet grads;
    grads.slots.resize(trainable_params(net).size());

    Matrix delta = loss_grad;
    std::size_t slot = grads.slots.size();

    for (std::size_t li = net.layers.size(); li-- > 0;) {
        const LayerCache& lc = cache.layers[li];
        if (!delta.same_shape(lc.output))
            throw contract_error("backward: gradient shape does not match layer " +
                                 std::to_string(li) + " output");
        std::visit(
            [&](auto& layer) {
                using T = std::decay_t<decltype(layer)>;
                if constexpr (std::is_same_v<T, DenseLayer>) {
                    // through the activation
                    if (layer.activation != Activation::Identity) {
                        for (std::size_t i = 0; i < delta.rows(); ++i) {
                            double* d_row = delta.row_ptr(i);
                            const double* z_row = lc.pre_activation.row_ptr(i);
                            const double* y_row = lc.output.row_ptr(i);
                            for (std::size_t j = 0; j < delta.cols(); ++j)
                                d_row[j] *= activation_grad(layer.activation, z_row[j], y_row[j]);
                        }
                    }
                    slot -= 2;
                    auto& grad_w = grads.slots[slot];
                    auto& grad_b = grads.slots[slot + 1];
                    grad_w.assign(layer.weights.size(), 0.0);
                    grad_b.assign(layer.bias.size(), 0.0);
                    accumulate_outer(grad_w, delta, lc.input);
                    for (std::size_t i = 0; i < layer.out; ++i) {
                        const double* d_row = delta.row_ptr(i);
                        double acc = 0.0;
                        for (std::size_t j = 0; j < delta.cols(); ++j) acc += d_row[j];
                        grad_b[i] = acc;
                    }
                    delta = multiply_transposed(layer.weights, layer.out, layer.in, delta);
                } else if constexpr (std::is_same_v<T, BatchNormLayer>) {
                    const std::size_t width = layer.gamma.size();
                    const std::size_t n = delta.cols();
                    slot -= 2;
                    auto& grad_gamma = grads.slots[slot];
                    auto& grad_beta = grads.slots[slot + 1];
                    grad_gamma.assign(width, 0.0);
                    grad_beta.assign(width, 0.0);
                    Matrix dx(width, n);
                    for (std::size_t i = 0; i < width; ++i) {
                        const double* x_row = lc.input.row_ptr(i);
                        const double* d_row = delta.row_ptr(i);
                        const double mu = lc.batch_mean[i];
                        const double is = lc.batch_inv_std[i];
                        double sum_dy = 0.0, sum_dy_xhat = 0.0;
                        for (std::size_t j = 0; j < n; ++j) {
                            const double xhat = (x_row[j] - mu) * is;
                            sum_dy += d_row[j];
                            sum_dy_xhat += d_row[j] * xhat;
                        }
                        grad_beta[i] = sum_dy;
                        grad_gamma[i] = sum_dy_xhat;
                        const double inv_n = 1.0 / static_cast<double>(n);
                        const double scale = layer.gamma[i] * is;
                        double* dx_row = dx.row_ptr(i);
                        for (std::size_t j = 0; j < n; ++j) {
                            const double xhat = (x_row[j] - mu) * is;
                            dx_row[j] = scale * (d_row[j] - inv_n * sum_dy - xhat * inv_n * sum_dy_xhat);
                        }
                    }
                    delta = std::move(dx);
                } else {
                    for (std::size_t i = 0; i < delta.rows(); ++i) {
                        double* d_row = delta.row_ptr(i);
                        const double* z_row = lc.input.row_ptr(i);
                        const double* y_row = lc.output.row_ptr(i);
                        for (std::size_t j = 0; j < delta.cols(); ++j)
                            d_row[j] *= activation_grad(layer.activation, z_row[j], y_row[j]);
                    }
                }
            },
            net.layers[li]);
    }
    if (input_grad) *input_grad = std::move(delta);
    return grads;
}

}  // namespace mvhedge::nn
