#pragma once

#include <span>

#include "mvhedge/data_pipeline.hpp"
#include "mvhedge/models/fnn.hpp"
#include "mvhedge/nn/layers.hpp"

namespace mvhedge {

/// Recurrent hedge-ratio model: a GRU summarizes the 22-day sentiment
/// history into a hidden vector, which joins the standardized contract
/// features (TTM, BS delta) in a single affine output head.
struct GruHedgeModel {
    OptionKind kind = OptionKind::Call;
    std::size_t hidden = 8;

    // Gate parameters; the input is the scalar sentiment, so the W_* are
    // (hidden x 1), the U_* are (hidden x hidden) row-major.
    std::vector<double> w_z, u_z, b_z;
    std::vector<double> w_r, u_r, b_r;
    std::vector<double> w_h, u_h, b_h;

    nn::DenseLayer head;  // (hidden + 2) -> 1, Identity; no hidden layers
    FeatureStats feature_stats;  // contract features
    bool sigmoid_output = false;
};

/// Xavier-initialized GRU model (biases zero, weights uniform within the
/// fan-in bound; the recurrent fan-in is the hidden size).
GruHedgeModel make_gru(OptionKind kind, std::uint64_t seed, std::size_t hidden = 8);

/// One GRU cell update for a single sample:
///   z = sigmoid(W_z x + U_z h + b_z)
///   r = sigmoid(W_r x + U_r h + b_r)
///   hhat = tanh(W_h x + U_h (r . h) + b_h)
///   h' = (1 - z) . h + z . hhat
std::vector<double> gru_cell_step(const GruHedgeModel& model, double x_t,
                                  std::span<const double> h_prev);

/// Intermediates of a batched unroll, retained for truncated-free BPTT over
/// the full 22 steps.
struct GruForwardCache {
    std::vector<nn::Matrix> h_prev;  // per step, (hidden x batch)
    std::vector<nn::Matrix> z, r, hhat;
    std::vector<nn::Matrix> x_row;  // per step, (1 x batch)
    nn::Matrix head_input;          // (hidden + contract) x batch
    std::size_t batch = 0;
};

/// Batched unroll over (sequence x batch) histories plus standardized
/// contract features; returns the raw head output (1 x batch).
nn::Matrix gru_forward(const GruHedgeModel& model, const nn::Matrix& histories,
                       const nn::Matrix& contract, GruForwardCache* cache = nullptr);

/// Backpropagation through time; loss_grad is dL/d(raw output), (1 x batch).
/// Gradient slots align with trainable_params(model).
nn::GradientSet gru_backward(const GruHedgeModel& model, const GruForwardCache& cache,
                             const nn::Matrix& loss_grad);

/// Parameter slots in checkpoint order:
/// w_z, u_z, b_z, w_r, u_r, b_r, w_h, u_h, b_h, head weights, head bias.
std::vector<std::vector<double>*> trainable_params(GruHedgeModel& model);
std::vector<const std::vector<double>*> trainable_params(const GruHedgeModel& model);

/// Hedge ratios for sequence windows: unroll from h_0 = 0, concatenate the
/// final hidden state with the standardized contract features, apply the
/// head and the output clamp.
std::vector<double> gru_predict(const GruHedgeModel& model,
                                std::span<const SequenceWindow> windows);
std::vector<double> gru_predict(const GruHedgeModel& model,
                                std::span<const SequenceSample> samples);

}  // namespace mvhedge
