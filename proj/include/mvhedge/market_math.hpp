#pragma once

#include <cmath>

#include "mvhedge/errors.hpp"

namespace mvhedge {

enum class OptionKind { Call, Put };

inline const char* to_string(OptionKind k) { return k == OptionKind::Call ? "call" : "put"; }

/// Inputs to the closed-form Black-Scholes quantities. The constructor
/// rejects invalid values instead of clamping them; silently repaired inputs
/// would mask bad data upstream.
struct PricingInputs {
    double spot;       // index level S
    double strike;     // K
    double rate;       // annualized r
    double div_yield;  // annualized q
    double vol;        // implied sigma
    double ttm;        // tau in years

    PricingInputs(double spot_, double strike_, double rate_, double div_yield_, double vol_,
                  double ttm_)
        : spot(spot_), strike(strike_), rate(rate_), div_yield(div_yield_), vol(vol_), ttm(ttm_) {
        if (!(spot > 0.0) || !std::isfinite(spot)) throw domain_error("PricingInputs: spot must be > 0");
        if (!(strike > 0.0) || !std::isfinite(strike))
            throw domain_error("PricingInputs: strike must be > 0");
        if (!(vol > 0.0) || !std::isfinite(vol)) throw domain_error("PricingInputs: vol must be > 0");
        if (!(ttm > 0.0) || !std::isfinite(ttm)) throw domain_error("PricingInputs: ttm must be > 0");
        if (!std::isfinite(rate) || !std::isfinite(div_yield))
            throw domain_error("PricingInputs: rate and div_yield must be finite");
    }
};

/// Coefficients (a, b, c) of the quadratic vega correction in the Hull-White
/// minimum-variance delta.
struct HwCoefficients {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;

    bool finite() const {
        return std::isfinite(a) && std::isfinite(b) && std::isfinite(c);
    }
};

/// Standard normal density phi(x).
inline double norm_pdf(double x) {
    static constexpr double inv_sqrt_2pi = 0.39894228040143267794;
    return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

/// Standard normal CDF N(x) via the complementary error function,
/// N(x) = erfc(-x/sqrt(2))/2. Absolute error is bounded by the erfc
/// implementation (< 1e-15 on glibc), well inside the 1e-12 budget.
double norm_cdf(double x);

/// d = [ln(S/K) + (r - q + sigma^2/2) tau] / (sigma sqrt(tau))
double bs_d(const PricingInputs& p);

/// Practitioner BS delta: N(d) for calls, N(d) - 1 for puts.
double bs_delta(const PricingInputs& p, OptionKind kind);

/// Practitioner BS vega: S e^{-q tau} phi(d) sqrt(tau). Same for calls and puts.
double bs_vega(const PricingInputs& p);

/// Black-Scholes price of a European option with continuous dividend yield.
double bs_price(const PricingInputs& p, OptionKind kind);

/// Hull-White minimum-variance delta with the Greeks supplied directly:
/// delta_hw = delta_bs + vega_bs / (S sqrt(tau)) * (a + b delta_bs + c delta_bs^2)
double hw_delta_from_greeks(double delta_bs, double vega_bs, double spot, double ttm,
                            const HwCoefficients& coef);

/// Hull-White minimum-variance delta with the Greeks computed from inputs.
double hw_delta(const PricingInputs& p, OptionKind kind, const HwCoefficients& coef);

}  // namespace mvhedge
