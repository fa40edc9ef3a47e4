#pragma once

#include <span>

#include "mvhedge/data_pipeline.hpp"
#include "mvhedge/nn/layers.hpp"

namespace mvhedge {

/// Per-feature z-score statistics estimated on the training split and stored
/// with the model so prediction standardizes inputs the same way.
struct FeatureStats {
    std::vector<double> mean;
    std::vector<double> std;

    static FeatureStats from_samples(std::span<const HedgeSample> samples, std::size_t dim);
    void standardize(double* column, std::size_t dim) const;
};

/// Output activation of every hedge-ratio model: hedge ratios are
/// nonnegative for calls and nonpositive for puts, so the raw output is
/// clamped to the feasible half-line.
inline double output_clamp(double raw, OptionKind kind) {
    if (kind == OptionKind::Call) return raw > 0.0 ? raw : 0.0;
    return raw < 0.0 ? raw : 0.0;
}

/// Subgradient of output_clamp at `raw`: 1 where the clamp passes the value
/// through, 0 in the clamped region and at exactly 0.
inline double output_clamp_grad(double raw, OptionKind kind) {
    if (kind == OptionKind::Call) return raw > 0.0 ? 1.0 : 0.0;
    return raw < 0.0 ? 1.0 : 0.0;
}

/// Feedforward hedge-ratio model: hidden blocks of affine map, batch norm,
/// ReLU, then a scalar affine output clamped by sign.
struct FnnHedgeModel {
    OptionKind kind = OptionKind::Call;
    ModelVariant variant = ModelVariant::DNN3;
    nn::Network net;
    FeatureStats feature_stats;
    /// Sigmoid output head (sigma(raw) for calls, sigma(raw)-1 for puts)
    /// instead of the clamp. Off by default.
    bool sigmoid_output = false;

    std::size_t input_dim() const;
};

/// Xavier-initialized FNN with `depth` hidden blocks of `width` units.
FnnHedgeModel make_fnn(ModelVariant variant, OptionKind kind, std::uint64_t seed,
                       std::size_t width = 128, std::size_t depth = 3);

/// Standardized (features x batch) matrix for the given samples.
nn::Matrix feature_matrix(std::span<const HedgeSample> samples, const FeatureStats& stats,
                          std::size_t dim);
nn::Matrix feature_matrix(std::span<const HedgeSample> samples, const FeatureStats& stats,
                          std::size_t dim, std::span<const std::size_t> indices);

/// Map the raw network output to the hedge ratio (clamp or sigmoid head).
double apply_output_head(double raw, OptionKind kind, bool sigmoid_output);

/// Hedge ratios for a batch of samples: standardize, forward in Infer mode,
/// apply the output head. Pure; thread-safe.
std::vector<double> fnn_predict(const FnnHedgeModel& model, std::span<const HedgeSample> samples);

/// Hedge ratio for a single raw (unstandardized) feature vector.
double fnn_predict_one(const FnnHedgeModel& model, std::span<const double> raw_features);

}  // namespace mvhedge
