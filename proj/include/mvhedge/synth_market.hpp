#pragma once

#include <map>
#include <span>
#include <vector>

#include "mvhedge/data_pipeline.hpp"

namespace mvhedge {

/// Synthetic world configuration. Volatility follows a log-OU process, so it
/// stays positive structurally and quotes remain closed-form Black-Scholes
/// at the current instantaneous volatility.
struct GeneratorConfig {
    int n_days = 2520;  // ten years of daily steps
    double spot0 = 2000.0;
    double vol0 = 0.2;
    double long_vol = 0.2;    // log-OU level
    double mean_rev = 3.0;    // per year
    double vol_of_vol = 1.0;  // per sqrt(year)
    double corr = -0.7;       // spot-vol shock correlation
    double rate = 0.02;
    double div_yield = 0.015;
    std::vector<double> strike_grid = {0.85,  0.875, 0.9,   0.925, 0.95,  0.975, 1.0,
                                       1.025, 1.05,  1.075, 1.1,   1.125, 1.15};  // K/S at issue
    std::vector<int> maturity_grid = {30, 60, 91, 182};                           // days
    std::uint64_t seed = 42;

    void validate() const;
};

/// Simulated daily index and volatility path; the VIX proxy is 100 * sigma_t.
struct MarketPath {
    std::vector<Date> dates;
    std::vector<double> spots;
    std::vector<double> vols;
    std::vector<double> vix_proxy;
};

/// Euler scheme with dt = 1/252 over a weekday calendar starting 2010-01-04:
///   ln sigma_{t+1} = ln sigma_t + alpha (ln sigma_bar - ln sigma_t) dt
///                    + beta sqrt(dt) eps_v
///   ln S_{t+1}     = ln S_t + (r - q - sigma_t^2/2) dt + sigma_t sqrt(dt) eps_s
/// with corr(eps_s, eps_v) = rho. Deterministic given the seed.
MarketPath simulate_path(const GeneratorConfig& cfg);

/// One call and one put per (moneyness, maturity) grid slot per day, priced
/// at the day's sigma_t with zero bid-ask spread and unit volume. Contracts
/// keep their absolute strike and expiry across days and are re-struck when
/// fewer than 7 days to expiry remain, so consecutive-day pairs always exist.
std::vector<OptionQuote> generate_quote_panel(const GeneratorConfig& cfg);

/// Cell of the brute-force oracle partition: a time-to-maturity bin crossed
/// with a delta bucket.
struct OracleCell {
    int ttm_bin = 0;       // index into the ttm edge list
    int delta_decile = 0;  // DeltaBucket decile
    auto operator<=>(const OracleCell&) const = default;
};

/// Cell for a sample under the given ttm bin edges (years, half-open bins);
/// nullopt when the ttm falls outside every bin.
std::optional<OracleCell> oracle_cell(const HedgeSample& sample, std::span<const double> ttm_edges);

/// Per-cell minimizer of sum((dV - delta dS)^2) over a constant delta:
///   delta* = sum(dV dS) / sum(dS^2).
/// Cells with fewer than min_count samples or zero sum(dS^2) are omitted
/// with a warning on stderr.
std::map<OracleCell, double> local_ols_oracle(std::span<const HedgeSample> samples,
                                              std::span<const double> ttm_edges,
                                              std::size_t min_count = 30);

}  // namespace mvhedge
