#include "mvhedge/market_math.hpp"

namespace mvhedge {

namespace {
constexpr double inv_sqrt2 = 0.70710678118654752440;
}

double norm_cdf(double x) {
    if (!std::isfinite(x)) throw domain_error("norm_cdf: input must be finite");
    return 0.5 * std::erfc(-x * inv_sqrt2);
}

double bs_d(const PricingInputs& p) {
    const double sig_sqrt_tau = p.vol * std::sqrt(p.ttm);
    return (std::log(p.spot / p.strike) + (p.rate - p.div_yield + 0.5 * p.vol * p.vol) * p.ttm) /
           sig_sqrt_tau;
}

double bs_delta(const PricingInputs& p, OptionKind kind) {
    const double nd = norm_cdf(bs_d(p));
    return kind == OptionKind::Call ? nd : nd - 1.0;
}

double bs_vega(const PricingInputs& p) {
    return p.spot * std::exp(-p.div_yield * p.ttm) * norm_pdf(bs_d(p)) * std::sqrt(p.ttm);
}

double bs_price(const PricingInputs& p, OptionKind kind) {
    const double d1 = bs_d(p);
    const double d2 = d1 - p.vol * std::sqrt(p.ttm);
    const double fwd = p.spot * std::exp(-p.div_yield * p.ttm);
    const double disc_k = p.strike * std::exp(-p.rate * p.ttm);
    if (kind == OptionKind::Call) {
        return fwd * norm_cdf(d1) - disc_k * norm_cdf(d2);
    }
    return disc_k * norm_cdf(-d2) - fwd * norm_cdf(-d1);
}

double hw_delta_from_greeks(double delta_bs, double vega_bs, double spot, double ttm,
                            const HwCoefficients& coef) {
    if (!coef.finite()) throw domain_error("hw_delta: coefficients must be finite");
    if (coef.a == 0.0 && coef.b == 0.0 && coef.c == 0.0) return delta_bs;
    const double correction = coef.a + coef.b * delta_bs + coef.c * delta_bs * delta_bs;
    return delta_bs + vega_bs / (spot * std::sqrt(ttm)) * correction;
}

double hw_delta(const PricingInputs& p, OptionKind kind, const HwCoefficients& coef) {
    return hw_delta_from_greeks(bs_delta(p, kind), bs_vega(p), p.spot, p.ttm, coef);
}

}  // namespace mvhedge
