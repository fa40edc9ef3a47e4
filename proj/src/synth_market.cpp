#include "mvhedge/synth_market.hpp"

#include <cmath>
#include <iostream>

#include "mvhedge/market_math.hpp"

namespace mvhedge {

void GeneratorConfig::validate() const {
    if (n_days < 23) throw config_error("generator: n_days must be >= 23");
    if (!(spot0 > 0.0)) throw config_error("generator: spot0 must be > 0");
    if (!(vol0 > 0.0) || !(long_vol > 0.0) || !(vol_of_vol >= 0.0))
        throw config_error("generator: vol0 and long_vol must be > 0, vol_of_vol >= 0");
    if (!(std::abs(corr) <= 1.0)) throw config_error("generator: |corr| must be <= 1");
    if (strike_grid.empty() || maturity_grid.empty())
        throw config_error("generator: strike and maturity grids must be non-empty");
    for (int d : maturity_grid)
        if (d < 1) throw config_error("generator: maturities must be >= 1 day");
}

namespace {

bool is_weekend(Date d) {
    const int dow = static_cast<int>(((d.days_since_epoch() % 7) + 7 + 4) % 7);  // 0 = Sunday
    return dow == 0 || dow == 6;
}

Date next_trading_day(Date d) {
    do d = d.plus_days(1);
    while (is_weekend(d));
    return d;
}

}  // namespace

MarketPath simulate_path(const GeneratorConfig& cfg) {
    cfg.validate();
    const double dt = 1.0 / 252.0;
    const double sqrt_dt = std::sqrt(dt);
    const double rho_c = std::sqrt(1.0 - cfg.corr * cfg.corr);

    MarketPath path;
    path.dates.reserve(cfg.n_days);
    path.spots.reserve(cfg.n_days);
    path.vols.reserve(cfg.n_days);
    path.vix_proxy.reserve(cfg.n_days);

    Rng rng(cfg.seed);
    double log_spot = std::log(cfg.spot0);
    double log_vol = std::log(cfg.vol0);
    const double log_level = std::log(cfg.long_vol);
    Date today(2010, 1, 4);  // a Monday; the calendar skips weekends

    for (int t = 0; t < cfg.n_days; ++t) {
        const double vol = std::exp(log_vol);
        path.dates.push_back(today);
        path.spots.push_back(std::exp(log_spot));
        path.vols.push_back(vol);
        path.vix_proxy.push_back(100.0 * vol);

        const double eps_s = rng.normal();
        const double eps_v = cfg.corr * eps_s + rho_c * rng.normal();
        log_spot += (cfg.rate - cfg.div_yield - 0.5 * vol * vol) * dt + vol * sqrt_dt * eps_s;
        log_vol += cfg.mean_rev * (log_level - log_vol) * dt + cfg.vol_of_vol * sqrt_dt * eps_v;
        today = next_trading_day(today);
    }
    return path;
}

namespace {

constexpr int kRollMinDays = 7;  // re-strike a slot when fewer days remain

struct Greeks {
    double delta;
    double gamma;
    double vega;
    double theta;
};

Greeks practitioner_greeks(const PricingInputs& p, OptionKind kind) {
    const double d1 = bs_d(p);
    const double d2 = d1 - p.vol * std::sqrt(p.ttm);
    const double exp_q = std::exp(-p.div_yield * p.ttm);
    const double exp_r = std::exp(-p.rate * p.ttm);
    const double pdf = norm_pdf(d1);
    Greeks g;
    g.delta = kind == OptionKind::Call ? norm_cdf(d1) : norm_cdf(d1) - 1.0;
    g.gamma = exp_q * pdf / (p.spot * p.vol * std::sqrt(p.ttm));
    g.vega = bs_vega(p);
    const double bleed = -p.spot * exp_q * pdf * p.vol / (2.0 * std::sqrt(p.ttm));
    if (kind == OptionKind::Call) {
        g.theta = bleed + p.div_yield * p.spot * exp_q * norm_cdf(d1) -
                  p.rate * p.strike * exp_r * norm_cdf(d2);
    } else {
        g.theta = bleed - p.div_yield * p.spot * exp_q * norm_cdf(-d1) +
                  p.rate * p.strike * exp_r * norm_cdf(-d2);
    }
    return g;
}

}  // namespace

std::vector<OptionQuote> generate_quote_panel(const GeneratorConfig& cfg) {
    const MarketPath path = simulate_path(cfg);

    struct Slot {
        double strike = 0.0;
        Date expiry;
        bool live = false;
    };
    std::vector<Slot> slots(cfg.strike_grid.size() * cfg.maturity_grid.size());

    std::vector<OptionQuote> quotes;
    quotes.reserve(static_cast<std::size_t>(cfg.n_days) * slots.size() * 2);

    for (int t = 0; t < cfg.n_days; ++t) {
        const Date today = path.dates[t];
        const double spot = path.spots[t];
        const double vol = path.vols[t];

        for (std::size_t mi = 0; mi < cfg.maturity_grid.size(); ++mi) {
            for (std::size_t si = 0; si < cfg.strike_grid.size(); ++si) {
                Slot& slot = slots[mi * cfg.strike_grid.size() + si];
                if (!slot.live || slot.expiry - today < kRollMinDays) {
                    slot.strike = std::round(cfg.strike_grid[si] * spot);
                    slot.expiry = today.plus_days(cfg.maturity_grid[mi]);
                    slot.live = true;
                }

                const double ttm = static_cast<double>(slot.expiry - today) / 365.0;
                const PricingInputs p(spot, slot.strike, cfg.rate, cfg.div_yield, vol, ttm);

                for (const OptionKind kind : {OptionKind::Call, OptionKind::Put}) {
                    const Greeks g = practitioner_greeks(p, kind);
                    const double price = bs_price(p, kind);
                    OptionQuote q;
                    q.quote_date = today;
                    q.expiry_date = slot.expiry;
                    q.kind = kind;
                    q.strike = slot.strike;
                    q.bid = price;
                    q.ask = price;  // zero spread
                    q.volume = 1;
                    q.implied_vol = vol;
                    q.delta = g.delta;
                    q.gamma = g.gamma;
                    q.vega = g.vega;
                    q.theta = g.theta;
                    q.underlying = spot;
                    q.vix = path.vix_proxy[t];
                    q.rate = cfg.rate;
                    q.div_yield = cfg.div_yield;
                    quotes.push_back(std::move(q));
                }
            }
        }
    }
    return quotes;
}

std::optional<OracleCell> oracle_cell(const HedgeSample& sample,
                                      std::span<const double> ttm_edges) {
    for (std::size_t i = 0; i + 1 < ttm_edges.size(); ++i) {
        if (sample.ttm >= ttm_edges[i] && sample.ttm < ttm_edges[i + 1]) {
            return OracleCell{static_cast<int>(i), assign_bucket(sample.bs_delta).decile};
        }
    }
    return std::nullopt;
}

std::map<OracleCell, double> local_ols_oracle(std::span<const HedgeSample> samples,
                                              std::span<const double> ttm_edges,
                                              std::size_t min_count) {
    struct Sums {
        double dv_ds = 0.0;
        double ds_sq = 0.0;
        std::size_t n = 0;
    };
    std::map<OracleCell, Sums> cells;
    for (const auto& s : samples) {
        const auto cell = oracle_cell(s, ttm_edges);
        if (!cell) continue;
        auto& c = cells[*cell];
        c.dv_ds += s.delta_v * s.delta_s;
        c.ds_sq += s.delta_s * s.delta_s;
        c.n += 1;
    }

    std::map<OracleCell, double> ratios;
    for (const auto& [cell, sums] : cells) {
        if (sums.n < min_count || sums.ds_sq <= 0.0) {
            std::cerr << "local_ols_oracle: omitting degenerate cell (ttm_bin " << cell.ttm_bin
                      << ", delta_decile " << cell.delta_decile << ", n " << sums.n << ")\n";
            continue;
        }
        ratios.emplace(cell, sums.dv_ds / sums.ds_sq);
    }
    return ratios;
}

}  // namespace mvhedge
