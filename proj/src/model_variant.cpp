#include "mvhedge/model_variant.hpp"

namespace mvhedge {

std::optional<ModelVariant> parse_variant(std::string_view name) {
    if (name == "dnn2") return ModelVariant::DNN2;
    if (name == "dnn3") return ModelVariant::DNN3;
    if (name == "dnn2plus" || name == "dnn2+") return ModelVariant::DNN2plus;
    if (name == "dnn3plus" || name == "dnn3+") return ModelVariant::DNN3plus;
    if (name == "dnn3star" || name == "dnn3*") return ModelVariant::DNN3star;
    if (name == "dnngru") return ModelVariant::DNNGRU;
    if (name == "hw") return ModelVariant::HW;
    if (name == "bs") return ModelVariant::BSBaseline;
    return std::nullopt;
}

int feature_dim(ModelVariant v) {
    switch (v) {
        case ModelVariant::DNN2: return 2;
        case ModelVariant::DNN3: return 3;
        case ModelVariant::DNN2plus: return 3;
        case ModelVariant::DNN3plus: return 4;
        case ModelVariant::DNN3star: return 5;
        case ModelVariant::DNNGRU: return 2;  // contract features at the head
        case ModelVariant::HW: return 2;
        case ModelVariant::BSBaseline: return 2;
    }
    return 0;
}

std::string feature_names(ModelVariant v, OptionKind kind) {
    const std::string sentiment = kind == OptionKind::Call ? "vix" : "log_return";
    switch (v) {
        case ModelVariant::DNN3: return "ttm,bs_delta," + sentiment;
        case ModelVariant::DNN2plus: return "ttm,bs_delta,moneyness";
        case ModelVariant::DNN3plus: return "ttm,bs_delta,moneyness," + sentiment;
        case ModelVariant::DNN3star: return "ttm,bs_delta,moneyness,vix,log_return";
        default: return "ttm,bs_delta";
    }
}

bool needs_log_return(ModelVariant v, OptionKind kind) {
    if (v == ModelVariant::DNN3star) return true;
    const bool sentiment_variant = v == ModelVariant::DNN3 || v == ModelVariant::DNN3plus ||
                                   v == ModelVariant::DNNGRU;
    return sentiment_variant && kind == OptionKind::Put;
}

}  // namespace mvhedge
