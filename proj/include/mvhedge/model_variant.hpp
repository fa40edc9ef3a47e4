#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "mvhedge/market_math.hpp"

namespace mvhedge {

/// The hedge-ratio models. The five FNN variants differ only in their feature
/// layout; DNNGRU adds a sequence input; HW and BSBaseline are the two
/// non-neural baselines.
enum class ModelVariant { DNN2, DNN3, DNN2plus, DNN3plus, DNN3star, DNNGRU, HW, BSBaseline };

inline const char* to_string(ModelVariant v) {
    switch (v) {
        case ModelVariant::DNN2: return "dnn2";
        case ModelVariant::DNN3: return "dnn3";
        case ModelVariant::DNN2plus: return "dnn2plus";
        case ModelVariant::DNN3plus: return "dnn3plus";
        case ModelVariant::DNN3star: return "dnn3star";
        case ModelVariant::DNNGRU: return "dnngru";
        case ModelVariant::HW: return "hw";
        case ModelVariant::BSBaseline: return "bs";
    }
    return "?";
}

std::optional<ModelVariant> parse_variant(std::string_view name);

/// Number of per-sample features for a variant. DNNGRU counts only the
/// contract features that join at the head; the sentiment history is separate.
int feature_dim(ModelVariant v);

/// Feature names in layout order, for checkpoints and diagnostics.
std::string feature_names(ModelVariant v, OptionKind kind);

/// True when the layout includes the index log-return, which needs the prior
/// trading day's index level.
bool needs_log_return(ModelVariant v, OptionKind kind);

}  // namespace mvhedge
