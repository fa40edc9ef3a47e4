#include "mvhedge/models/hw.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mvhedge {

std::vector<double> qr_least_squares(std::vector<double> design, std::size_t n, std::size_t k,
                                     std::vector<double> rhs) {
    if (design.size() != n * k || rhs.size() != n)
        throw contract_error("qr_least_squares: shape mismatch");
    if (n < k) throw contract_error("qr_least_squares: underdetermined system");

    auto a = [&](std::size_t i, std::size_t j) -> double& { return design[i * k + j]; };

    // Householder triangularization applied to the design and the rhs jointly.
    for (std::size_t j = 0; j < k; ++j) {
        double norm = 0.0;
        for (std::size_t i = j; i < n; ++i) norm += a(i, j) * a(i, j);
        norm = std::sqrt(norm);
        if (norm == 0.0) continue;  // rank check happens on the diagonal below
        if (a(j, j) > 0.0) norm = -norm;

        const double ajj = a(j, j) - norm;
        std::vector<double> v(n - j);
        v[0] = ajj;
        for (std::size_t i = j + 1; i < n; ++i) v[i - j] = a(i, j);
        const double vtv = ajj * ajj + [&] {
            double s = 0.0;
            for (std::size_t i = j + 1; i < n; ++i) s += a(i, j) * a(i, j);
            return s;
        }();
        if (vtv == 0.0) continue;
        const double beta = 2.0 / vtv;

        for (std::size_t col = j; col < k; ++col) {
            double dot = 0.0;
            for (std::size_t i = j; i < n; ++i) dot += v[i - j] * a(i, col);
            dot *= beta;
            for (std::size_t i = j; i < n; ++i) a(i, col) -= dot * v[i - j];
        }
        double dot = 0.0;
        for (std::size_t i = j; i < n; ++i) dot += v[i - j] * rhs[i];
        dot *= beta;
        for (std::size_t i = j; i < n; ++i) rhs[i] -= dot * v[i - j];
    }

    double max_diag = 0.0, min_diag = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < k; ++j) {
        const double d = std::abs(a(j, j));
        max_diag = std::max(max_diag, d);
        min_diag = std::min(min_diag, d);
    }
    if (min_diag == 0.0 || max_diag / min_diag > 1e12)
        throw singular_error("qr_least_squares: design matrix is rank deficient",
                             min_diag == 0.0 ? std::numeric_limits<double>::infinity()
                                             : max_diag / min_diag);

    std::vector<double> x(k);
    for (std::size_t j = k; j-- > 0;) {
        double s = rhs[j];
        for (std::size_t p = j + 1; p < k; ++p) s -= a(j, p) * x[p];
        x[j] = s / a(j, j);
    }
    return x;
}

HwModel fit_hw(OptionKind kind, std::span<const HwObservation> observations) {
    const std::size_t n = observations.size();
    if (n < 3) throw contract_error("fit_hw: need at least 3 observations");

    std::vector<double> design(n * 3);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& o = observations[i];
        const double u = o.delta_s * o.bs_vega / (o.spot * std::sqrt(o.ttm));
        design[i * 3 + 0] = u;
        design[i * 3 + 1] = u * o.bs_delta;
        design[i * 3 + 2] = u * o.bs_delta * o.bs_delta;
        y[i] = o.delta_v - o.bs_delta * o.delta_s;
    }
    const auto coef = qr_least_squares(std::move(design), n, 3, std::move(y));

    HwModel model;
    model.kind = kind;
    model.coef = HwCoefficients{coef[0], coef[1], coef[2]};
    return model;
}

HwModel fit_hw(OptionKind kind, std::span<const HedgeSample> samples) {
    std::vector<HwObservation> obs;
    obs.reserve(samples.size());
    for (const auto& s : samples)
        obs.push_back({s.delta_v, s.delta_s, s.bs_delta, s.bs_vega, s.spot, s.ttm});
    return fit_hw(kind, obs);
}

std::vector<double> hw_predict(const HwModel& model, std::span<const HedgeSample> samples) {
    std::vector<double> deltas(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        deltas[i] = hw_delta_from_greeks(s.bs_delta, s.bs_vega, s.spot, s.ttm, model.coef);
    }
    return deltas;
}

}  // namespace mvhedge
