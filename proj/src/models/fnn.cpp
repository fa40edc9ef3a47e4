#include "mvhedge/models/fnn.hpp"

#include <cmath>

namespace mvhedge {

FeatureStats FeatureStats::from_samples(std::span<const HedgeSample> samples, std::size_t dim) {
    if (samples.empty()) throw contract_error("FeatureStats: no samples");
    FeatureStats stats;
    stats.mean.assign(dim, 0.0);
    stats.std.assign(dim, 0.0);
    for (const auto& s : samples) {
        if (s.features.size() != dim) throw contract_error("FeatureStats: feature layout mismatch");
        for (std::size_t i = 0; i < dim; ++i) stats.mean[i] += s.features[i];
    }
    const double inv_n = 1.0 / static_cast<double>(samples.size());
    for (auto& m : stats.mean) m *= inv_n;
    for (const auto& s : samples)
        for (std::size_t i = 0; i < dim; ++i) {
            const double d = s.features[i] - stats.mean[i];
            stats.std[i] += d * d;
        }
    for (auto& v : stats.std) {
        v = std::sqrt(v * inv_n);
        if (v < 1e-12) v = 1.0;  // constant feature: pass through centered
    }
    return stats;
}

void FeatureStats::standardize(double* column, std::size_t dim) const {
    for (std::size_t i = 0; i < dim; ++i) column[i] = (column[i] - mean[i]) / std[i];
}

std::size_t FnnHedgeModel::input_dim() const {
    return static_cast<std::size_t>(feature_dim(variant));
}

FnnHedgeModel make_fnn(ModelVariant variant, OptionKind kind, std::uint64_t seed,
                       std::size_t width, std::size_t depth) {
    FnnHedgeModel model;
    model.kind = kind;
    model.variant = variant;
    Rng rng(seed);
    std::size_t in = static_cast<std::size_t>(feature_dim(variant));
    for (std::size_t i = 0; i < depth; ++i) {
        model.net.layers.emplace_back(nn::xavier_init(in, width, rng, nn::Activation::Identity));
        model.net.layers.emplace_back(nn::BatchNormLayer(width));
        model.net.layers.emplace_back(nn::ActivationLayer{nn::Activation::ReLU});
        in = width;
    }
    model.net.layers.emplace_back(nn::xavier_init(in, 1, rng, nn::Activation::Identity));
    model.feature_stats.mean.assign(model.input_dim(), 0.0);
    model.feature_stats.std.assign(model.input_dim(), 1.0);
    return model;
}

nn::Matrix feature_matrix(std::span<const HedgeSample> samples, const FeatureStats& stats,
                          std::size_t dim) {
    nn::Matrix x(dim, samples.size());
    for (std::size_t j = 0; j < samples.size(); ++j) {
        const auto& f = samples[j].features;
        if (f.size() != dim) throw contract_error("feature_matrix: feature layout mismatch");
        for (std::size_t i = 0; i < dim; ++i) x(i, j) = (f[i] - stats.mean[i]) / stats.std[i];
    }
    return x;
}

nn::Matrix feature_matrix(std::span<const HedgeSample> samples, const FeatureStats& stats,
                          std::size_t dim, std::span<const std::size_t> indices) {
    nn::Matrix x(dim, indices.size());
    for (std::size_t j = 0; j < indices.size(); ++j) {
        const auto& f = samples[indices[j]].features;
        if (f.size() != dim) throw contract_error("feature_matrix: feature layout mismatch");
        for (std::size_t i = 0; i < dim; ++i) x(i, j) = (f[i] - stats.mean[i]) / stats.std[i];
    }
    return x;
}

double apply_output_head(double raw, OptionKind kind, bool sigmoid_output) {
    if (!sigmoid_output) return output_clamp(raw, kind);
    const double s = 1.0 / (1.0 + std::exp(-raw));
    return kind == OptionKind::Call ? s : s - 1.0;
}

std::vector<double> fnn_predict(const FnnHedgeModel& model, std::span<const HedgeSample> samples) {
    const std::size_t dim = model.input_dim();
    const nn::Matrix x = feature_matrix(samples, model.feature_stats, dim);
    const nn::Matrix raw = nn::infer(model.net, x);
    std::vector<double> deltas(samples.size());
    for (std::size_t j = 0; j < samples.size(); ++j)
        deltas[j] = apply_output_head(raw(0, j), model.kind, model.sigmoid_output);
    return deltas;
}

double fnn_predict_one(const FnnHedgeModel& model, std::span<const double> raw_features) {
    const std::size_t dim = model.input_dim();
    if (raw_features.size() != dim)
        throw contract_error("fnn_predict_one: expected " + std::to_string(dim) + " features");
    nn::Matrix x(dim, 1);
    for (std::size_t i = 0; i < dim; ++i)
        x(i, 0) = (raw_features[i] - model.feature_stats.mean[i]) / model.feature_stats.std[i];
    const nn::Matrix raw = nn::infer(model.net, x);
    return apply_output_head(raw(0, 0), model.kind, model.sigmoid_output);
}

}  // namespace mvhedge
