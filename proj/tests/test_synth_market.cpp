#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <map>

#include "mvhedge/market_math.hpp"
#include "mvhedge/synth_market.hpp"

using namespace mvhedge;

namespace {

GeneratorConfig small_config() {
    GeneratorConfig cfg;
    cfg.n_days = 800;
    cfg.spot0 = 2000.0;
    cfg.strike_grid = {0.9, 0.95, 1.0, 1.05, 1.1};
    cfg.maturity_grid = {30, 91};
    cfg.seed = 42;
    return cfg;
}

struct CellAverages {
    std::map<OracleCell, double> mean_delta;
};

CellAverages cell_mean_bs_delta(std::span<const HedgeSample> samples,
                                std::span<const double> edges) {
    std::map<OracleCell, std::pair<double, std::size_t>> acc;
    for (const auto& s : samples) {
        const auto cell = oracle_cell(s, edges);
        if (!cell) continue;
        acc[*cell].first += s.bs_delta;
        acc[*cell].second += 1;
    }
    CellAverages out;
    for (const auto& [cell, pair] : acc)
        out.mean_delta[cell] = pair.first / static_cast<double>(pair.second);
    return out;
}

}  // namespace

TEST_CASE("simulate_path") {
    SUBCASE("same seed gives identical paths") {
        const auto a = simulate_path(small_config());
        const auto b = simulate_path(small_config());
        CHECK(a.spots == b.spots);
        CHECK(a.vols == b.vols);
        CHECK(a.dates.size() == 800);
    }
    SUBCASE("different seeds give different paths") {
        auto cfg = small_config();
        cfg.seed = 43;
        const auto a = simulate_path(small_config());
        const auto b = simulate_path(cfg);
        CHECK(a.spots != b.spots);
    }
    SUBCASE("noiseless log-OU volatility converges monotonically to the level") {
        auto cfg = small_config();
        cfg.vol_of_vol = 0.0;
        cfg.vol0 = 0.4;
        cfg.long_vol = 0.2;
        const auto path = simulate_path(cfg);
        for (std::size_t t = 1; t < path.vols.size(); ++t) {
            CHECK(path.vols[t] < path.vols[t - 1]);
            CHECK(path.vols[t] > cfg.long_vol);
        }
        CHECK(path.vols.back() == doctest::Approx(0.2).epsilon(0.01));
        CHECK(path.vix_proxy.back() == doctest::Approx(100.0 * path.vols.back()));
    }
    SUBCASE("uncorrelated config yields near-zero shock correlation") {
        GeneratorConfig cfg;
        cfg.n_days = 10001;
        cfg.corr = 0.0;
        cfg.seed = 7;
        const auto path = simulate_path(cfg);
        const double dt = 1.0 / 252.0;
        // invert the recurrences to recover the shock pairs
        std::vector<double> eps_s, eps_v;
        for (std::size_t t = 0; t + 1 < path.spots.size(); ++t) {
            const double vol = path.vols[t];
            eps_s.push_back((std::log(path.spots[t + 1] / path.spots[t]) -
                             (cfg.rate - cfg.div_yield - 0.5 * vol * vol) * dt) /
                            (vol * std::sqrt(dt)));
            eps_v.push_back((std::log(path.vols[t + 1] / path.vols[t]) -
                             cfg.mean_rev * (std::log(cfg.long_vol) - std::log(vol)) * dt) /
                            (cfg.vol_of_vol * std::sqrt(dt)));
        }
        double ms = 0, mv = 0;
        for (std::size_t i = 0; i < eps_s.size(); ++i) {
            ms += eps_s[i];
            mv += eps_v[i];
        }
        ms /= eps_s.size();
        mv /= eps_v.size();
        double cov = 0, vs = 0, vv = 0;
        for (std::size_t i = 0; i < eps_s.size(); ++i) {
            cov += (eps_s[i] - ms) * (eps_v[i] - mv);
            vs += (eps_s[i] - ms) * (eps_s[i] - ms);
            vv += (eps_v[i] - mv) * (eps_v[i] - mv);
        }
        CHECK(std::abs(cov / std::sqrt(vs * vv)) < 0.05);
    }
    SUBCASE("invalid configs are rejected") {
        GeneratorConfig cfg;
        cfg.n_days = 10;
        CHECK_THROWS_AS(simulate_path(cfg), config_error);
        cfg = GeneratorConfig{};
        cfg.corr = -1.2;
        CHECK_THROWS_AS(simulate_path(cfg), config_error);
    }
}

TEST_CASE("generate_quote_panel") {
    SUBCASE("row count is n_days x strikes x maturities x 2") {
        GeneratorConfig cfg;
        cfg.n_days = 23;
        cfg.strike_grid = {1.0};
        cfg.maturity_grid = {60};
        const auto quotes = generate_quote_panel(cfg);
        CHECK(quotes.size() == 46);
    }
    SUBCASE("constant-volatility world quotes all carry the level volatility") {
        auto cfg = small_config();
        cfg.n_days = 60;
        cfg.vol_of_vol = 0.0;
        cfg.vol0 = cfg.long_vol = 0.2;
        for (const auto& q : generate_quote_panel(cfg)) {
            CHECK(*q.implied_vol == doctest::Approx(0.2).epsilon(1e-12));
            CHECK(*q.vix == doctest::Approx(20.0).epsilon(1e-12));
        }
    }
    SUBCASE("quote deltas are self-consistent with their own pricing inputs") {
        auto cfg = small_config();
        cfg.n_days = 40;
        for (const auto& q : generate_quote_panel(cfg)) {
            const PricingInputs p(*q.underlying, *q.strike, *q.rate, *q.div_yield, *q.implied_vol,
                                  static_cast<double>(q.ttm_days()) / 365.0);
            CHECK(std::abs(*q.delta - bs_delta(p, q.kind)) < 1e-12);
            CHECK(std::abs(*q.vega - bs_vega(p)) < 1e-9);
            CHECK(std::abs(*q.bid - bs_price(p, q.kind)) < 1e-9);
        }
    }
    SUBCASE("every field is populated and rows fail the filter only for ttm or delta range") {
        auto cfg = small_config();
        cfg.n_days = 200;
        const auto quotes = generate_quote_panel(cfg);
        FilterStats stats;
        filter_quotes(quotes, stats);
        CHECK(stats.no_volume == 0);
        CHECK(stats.missing_fields == 0);
        CHECK(stats.kept + stats.short_maturity + stats.extreme_delta == quotes.size());
        CHECK(stats.short_maturity > 0);  // contracts ride below 14 days before re-striking
        CHECK(stats.kept > quotes.size() / 2);
    }
    SUBCASE("panel round-trips through the CSV schema byte-identically") {
        auto cfg = small_config();
        cfg.n_days = 30;
        const auto quotes = generate_quote_panel(cfg);
        save_quotes("panel_rt.csv", quotes);
        const auto loaded = load_quotes("panel_rt.csv");
        save_quotes("panel_rt2.csv", loaded);
        std::ifstream a("panel_rt.csv", std::ios::binary), b("panel_rt2.csv", std::ios::binary);
        std::string sa((std::istreambuf_iterator<char>(a)), {});
        std::string sb((std::istreambuf_iterator<char>(b)), {});
        CHECK(sa == sb);
        CHECK(!sa.empty());
        std::remove("panel_rt.csv");
        std::remove("panel_rt2.csv");
    }
    SUBCASE("consecutive-day pairs exist for every slot") {
        auto cfg = small_config();
        cfg.n_days = 50;
        const auto quotes = generate_quote_panel(cfg);
        const auto samples = pair_consecutive(filter_quotes(quotes), ModelVariant::DNN2);
        CHECK(samples.size() > 100);
    }
}

TEST_CASE("local_ols_oracle closed-form examples") {
    auto sample = [](double ds, double dv) {
        HedgeSample s;
        s.delta_s = ds;
        s.delta_v = dv;
        s.bs_delta = 0.5;
        s.bucket = assign_bucket(0.5);
        s.ttm = 0.1;
        return s;
    };
    const std::vector<double> edges = {0.0, 1.0};

    SUBCASE("exact proportionality") {
        std::vector<HedgeSample> samples;
        for (int i = 0; i < 40; ++i) samples.push_back(sample(i % 2 ? 1.0 : 2.0, i % 2 ? 0.5 : 1.0));
        const auto cells = local_ols_oracle(samples, edges, 30);
        REQUIRE(cells.size() == 1);
        CHECK(cells.begin()->second == doctest::Approx(0.5).epsilon(1e-15));
    }
    SUBCASE("two-point least squares") {
        std::vector<HedgeSample> samples;
        for (int i = 0; i < 40; ++i) samples.push_back(sample(i % 2 ? 1.0 : -1.0, i % 2 ? 1.0 : 0.0));
        const auto cells = local_ols_oracle(samples, edges, 30);
        REQUIRE(cells.size() == 1);
        CHECK(cells.begin()->second == doctest::Approx(0.5).epsilon(1e-15));
    }
    SUBCASE("all-zero spot moves omit the cell") {
        std::vector<HedgeSample> samples;
        for (int i = 0; i < 40; ++i) samples.push_back(sample(0.0, 1.0));
        CHECK(local_ols_oracle(samples, edges, 30).empty());
    }
    SUBCASE("cells below the count floor are omitted") {
        std::vector<HedgeSample> samples;
        for (int i = 0; i < 10; ++i) samples.push_back(sample(1.0, 0.5));
        CHECK(local_ols_oracle(samples, edges, 30).empty());
    }
}

TEST_CASE("oracle vs BS delta across synthetic worlds") {
    const std::vector<double> edges = {14.0 / 365.0, 45.0 / 365.0, 120.0 / 365.0};

    SUBCASE("constant-volatility world: oracle matches mean BS delta per cell") {
        auto cfg = small_config();
        cfg.vol_of_vol = 0.0;
        cfg.corr = 0.0;
        cfg.vol0 = cfg.long_vol = 0.2;
        const auto samples =
            pair_consecutive(filter_quotes(generate_quote_panel(cfg)), ModelVariant::DNN2);
        REQUIRE(samples.size() > 5000);

        std::vector<HedgeSample> calls;
        for (const auto& s : samples)
            if (s.bs_delta > 0) calls.push_back(s);

        const auto oracle = local_ols_oracle(calls, edges, 200);
        const auto means = cell_mean_bs_delta(calls, edges);
        REQUIRE(oracle.size() >= 6);
        for (const auto& [cell, ratio] : oracle)
            CHECK(std::abs(ratio - means.mean_delta.at(cell)) < 0.02);
    }
    SUBCASE("negative spot-vol correlation pulls the call MV delta below BS delta") {
        auto cfg = small_config();
        cfg.n_days = 1500;
        const auto samples =
            pair_consecutive(filter_quotes(generate_quote_panel(cfg)), ModelVariant::DNN2);

        std::vector<HedgeSample> calls;
        for (const auto& s : samples)
            if (s.bs_delta > 0) calls.push_back(s);

        const auto oracle = local_ols_oracle(calls, edges, 200);
        const auto means = cell_mean_bs_delta(calls, edges);
        std::size_t central_cells = 0;
        for (const auto& [cell, ratio] : oracle) {
            if (cell.delta_decile >= 2 && cell.delta_decile <= 7) {
                CHECK(ratio < means.mean_delta.at(cell));
                ++central_cells;
            }
        }
        CHECK(central_cells >= 6);
    }
}
