#include "mvhedge/nn/adam.hpp"

#include <cmath>

namespace mvhedge::nn {

AdamState AdamState::create(const std::vector<std::vector<double>*>& params, double lr) {
    AdamState state;
    state.lr = lr;
    state.m = zeros_like(params);
    state.v = zeros_like(params);
    return state;
}

void clip_gradients(GradientSet& grads, double max_norm) {
    if (!(max_norm > 0.0)) throw contract_error("clip_gradients: max_norm must be > 0");
    const double norm = std::sqrt(grads.squared_norm());
    if (norm > max_norm) grads.scale(max_norm / norm);
}

void adam_step(AdamState& state, const std::vector<std::vector<double>*>& params,
               const GradientSet& grads) {
    if (params.size() != grads.slots.size() || params.size() != state.m.slots.size())
        throw contract_error("adam_step: parameter, gradient and state slot counts differ");

    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));

    for (std::size_t s = 0; s < params.size(); ++s) {
        auto& p = *params[s];
        const auto& g = grads.slots[s];
        auto& m = state.m.slots[s];
        auto& v = state.v.slots[s];
        if (p.size() != g.size())
            throw contract_error("adam_step: slot " + std::to_string(s) + " shape mismatch");
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            p[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
        }
    }
}

}  // namespace mvhedge::nn
