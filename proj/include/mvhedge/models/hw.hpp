#pragma once

#include <span>

#include "mvhedge/data_pipeline.hpp"
#include "mvhedge/market_math.hpp"

namespace mvhedge {

/// Hull-White regression baseline: the three coefficients of the quadratic
/// vega correction, fit per option kind.
struct HwModel {
    OptionKind kind = OptionKind::Call;
    HwCoefficients coef;
};

/// One regression observation: realized moves plus the practitioner Greeks
/// entering the correction term.
struct HwObservation {
    double delta_v;
    double delta_s;
    double bs_delta;
    double bs_vega;
    double spot;
    double ttm;
};

/// Minimize sum (dV - delta_hw * dS)^2 over (a, b, c). With
/// u = dS * vega / (S sqrt(tau)) this is ordinary least squares of
/// y = dV - delta_bs * dS on (u, u delta_bs, u delta_bs^2), solved by
/// Householder QR. Throws singular_error on a rank-deficient design.
HwModel fit_hw(OptionKind kind, std::span<const HwObservation> observations);
HwModel fit_hw(OptionKind kind, std::span<const HedgeSample> samples);

/// Hedge ratios under the fitted model.
std::vector<double> hw_predict(const HwModel& model, std::span<const HedgeSample> samples);

/// Least-squares solve of the (n x k) row-major system via Householder QR;
/// exposed for reuse and testing. Throws singular_error when the triangular
/// factor is numerically rank deficient.
std::vector<double> qr_least_squares(std::vector<double> design, std::size_t n, std::size_t k,
                                     std::vector<double> rhs);

}  // namespace mvhedge
