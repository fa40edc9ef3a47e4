#pragma once

#include <cstdint>
#include <vector>

#include "mvhedge/nn/layers.hpp"

namespace mvhedge::nn {

/// Bias-corrected Adam (Kingma & Ba). Moment arrays mirror the parameter
/// slots they update.
struct AdamState {
    std::int64_t step = 0;
    GradientSet m;
    GradientSet v;
    double lr = 0.0005;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamState create(const std::vector<std::vector<double>*>& params, double lr);
};

/// Scale every gradient by max_norm/g when the global L2 norm g exceeds
/// max_norm; otherwise leave them untouched.
void clip_gradients(GradientSet& grads, double max_norm);

/// One Adam update over all parameter slots; increments the step counter.
void adam_step(AdamState& state, const std::vector<std::vector<double>*>& params,
               const GradientSet& grads);

}  // namespace mvhedge::nn
