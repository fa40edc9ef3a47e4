#include "mvhedge/data_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <tuple>

#include "mvhedge/detail/numio.hpp"

namespace mvhedge {

namespace {

std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            cells.push_back(line.substr(start));
            break;
        }
        cells.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return cells;
}

constexpr int kQuoteColumns = 16;

const char* kColumnNames[kQuoteColumns] = {
    "quote_date", "expiry_date", "cp_flag", "strike", "bid",        "ask",
    "volume",     "implied_vol", "delta",   "gamma",  "vega",       "theta",
    "underlying", "vix",         "rate",    "div_yield"};

std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

}  // namespace

std::vector<OptionQuote> load_quotes(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open quote file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw schema_error("quote file is empty (missing header): " + path);
    line = strip_cr(line);

    const auto header = split_csv_line(line);
    if (header.size() != kQuoteColumns)
        throw schema_error("expected " + std::to_string(kQuoteColumns) + " columns, got " +
                           std::to_string(header.size()));
    for (int i = 0; i < kQuoteColumns; ++i) {
        if (header[i] != kColumnNames[i])
            throw schema_error(std::string("unexpected column '") + std::string(header[i]) +
                               "' where '" + kColumnNames[i] + "' was expected");
    }

    std::vector<OptionQuote> quotes;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        line = strip_cr(line);
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != kQuoteColumns)
            throw schema_error("row " + std::to_string(row) + " has " +
                               std::to_string(cells.size()) + " cells, expected " +
                               std::to_string(kQuoteColumns));

        OptionQuote q;
        const auto qd = Date::parse_iso(cells[0]);
        const auto ed = Date::parse_iso(cells[1]);
        if (!qd || !ed)
            throw schema_error("row " + std::to_string(row) + ": unparseable date");
        q.quote_date = *qd;
        q.expiry_date = *ed;
        if (cells[2] == "C")
            q.kind = OptionKind::Call;
        else if (cells[2] == "P")
            q.kind = OptionKind::Put;
        else
            throw schema_error("row " + std::to_string(row) + ": cp_flag must be C or P, got '" +
                               std::string(cells[2]) + "'");

        q.strike = detail::parse_double(cells[3]);
        q.bid = detail::parse_double(cells[4]);
        q.ask = detail::parse_double(cells[5]);
        q.volume = detail::parse_long(cells[6]);
        q.implied_vol = detail::parse_double(cells[7]);
        q.delta = detail::parse_double(cells[8]);
        q.gamma = detail::parse_double(cells[9]);
        q.vega = detail::parse_double(cells[10]);
        q.theta = detail::parse_double(cells[11]);
        q.underlying = detail::parse_double(cells[12]);
        q.vix = detail::parse_double(cells[13]);
        q.rate = detail::parse_double(cells[14]);
        q.div_yield = detail::parse_double(cells[15]);
        quotes.push_back(std::move(q));
    }
    return quotes;
}

void save_quotes(const std::string& path, std::span<const OptionQuote> quotes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write quote file: " + path);
    out << kQuoteCsvHeader << '\n';
    std::string line;
    auto cell = [&line](const std::optional<double>& v) {
        if (v) line += detail::format_double(*v);
        line += ',';
    };
    for (const auto& q : quotes) {
        line.clear();
        line += q.quote_date.to_iso();
        line += ',';
        line += q.expiry_date.to_iso();
        line += ',';
        line += q.kind == OptionKind::Call ? 'C' : 'P';
        line += ',';
        cell(q.strike);
        cell(q.bid);
        cell(q.ask);
        if (q.volume) line += std::to_string(*q.volume);
        line += ',';
        cell(q.implied_vol);
        cell(q.delta);
        cell(q.gamma);
        cell(q.vega);
        cell(q.theta);
        cell(q.underlying);
        cell(q.vix);
        cell(q.rate);
        if (q.div_yield) line += detail::format_double(*q.div_yield);
        out << line << '\n';
    }
    if (!out) throw io_error("write failed: " + path);
}

std::string FilterStats::dominant() const {
    const std::pair<const char*, std::size_t> reasons[] = {
        {"no trading volume", no_volume},
        {"missing bid/ask/implied_vol/delta/gamma/vega/theta", missing_fields},
        {"fewer than 14 days to maturity", short_maturity},
        {"delta outside [0.05,0.95] (calls) / [-0.95,-0.05] (puts)", extreme_delta}};
    auto best = reasons[0];
    for (const auto& r : reasons)
        if (r.second > best.second) best = r;
    return best.first;
}

std::vector<OptionQuote> filter_quotes(std::span<const OptionQuote> quotes, FilterStats& stats) {
    std::vector<OptionQuote> kept;
    kept.reserve(quotes.size());
    for (const auto& q : quotes) {
        if (!q.volume || *q.volume <= 0) {
            ++stats.no_volume;
            continue;
        }
        if (!q.bid || !q.ask || !q.implied_vol || !q.delta || !q.gamma || !q.vega || !q.theta) {
            ++stats.missing_fields;
            continue;
        }
        if (q.ttm_days() < 14) {
            ++stats.short_maturity;
            continue;
        }
        const double d = *q.delta;
        const bool in_range = q.kind == OptionKind::Call ? (d >= 0.05 && d <= 0.95)
                                                         : (d >= -0.95 && d <= -0.05);
        if (!in_range) {
            ++stats.extreme_delta;
            continue;
        }
        kept.push_back(q);
    }
    stats.kept += kept.size();
    return kept;
}

std::vector<OptionQuote> filter_quotes(std::span<const OptionQuote> quotes) {
    FilterStats stats;
    return filter_quotes(quotes, stats);
}

DeltaBucket assign_bucket(double delta) {
    if (!std::isfinite(delta)) throw domain_error("assign_bucket: delta must be finite");
    const double m = std::abs(delta);
    if (m < 0.05 || m > 0.95)
        throw domain_error("assign_bucket: delta " + detail::format_double(delta) +
                           " outside the filtered range");
    const int sign = delta > 0.0 ? 1 : -1;
    for (int k = 1; k <= 9; ++k) {
        const double lo = bucket_edge(k - 1);
        const double hi = bucket_edge(k);
        const bool inside = sign > 0 ? (delta >= lo && delta < hi) : (delta >= -hi && delta < -lo);
        if (inside) return DeltaBucket{sign * k};
    }
    // Boundary deltas kept by the filter: +0.95 closes bucket 0.9, -0.05 closes bucket -0.1.
    return DeltaBucket{sign > 0 ? 9 : -1};
}

std::optional<std::vector<double>> build_features(const OptionQuote& quote, ModelVariant variant,
                                                  OptionKind kind, const MarketContext& context) {
    if (!quote.delta || !quote.strike || !quote.underlying)
        throw contract_error("build_features: quote must be filtered and carry strike/underlying");

    const double ttm = static_cast<double>(quote.ttm_days()) / 365.0;  // ACT/365
    const double delta = *quote.delta;
    const double moneyness = *quote.underlying / *quote.strike;
    const double vix_scaled = context.vix / 100.0;

    const bool wants_return = needs_log_return(variant, kind);
    if (wants_return && !context.log_return) return std::nullopt;

    std::vector<double> f{ttm, delta};
    switch (variant) {
        case ModelVariant::DNN2:
        case ModelVariant::DNNGRU:
        case ModelVariant::HW:
        case ModelVariant::BSBaseline:
            break;
        case ModelVariant::DNN3:
            f.push_back(kind == OptionKind::Call ? vix_scaled : *context.log_return);
            break;
        case ModelVariant::DNN2plus:
            f.push_back(moneyness);
            break;
        case ModelVariant::DNN3plus:
            f.push_back(moneyness);
            f.push_back(kind == OptionKind::Call ? vix_scaled : *context.log_return);
            break;
        case ModelVariant::DNN3star:
            f.push_back(moneyness);
            f.push_back(vix_scaled);
            f.push_back(*context.log_return);
            break;
    }
    return f;
}

namespace {

/// Trading calendar and per-day market state derived from the panel itself.
struct PanelCalendar {
    std::vector<Date> dates;                 // sorted distinct quote dates
    std::vector<double> spots;               // index close per date
    std::vector<double> vixes;               // VIX close per date
    std::map<Date, std::size_t> date_index;

    MarketContext context(std::size_t day) const {
        MarketContext ctx;
        ctx.vix = vixes[day];
        if (day > 0 && spots[day - 1] > 0.0 && spots[day] > 0.0)
            ctx.log_return = std::log(spots[day] / spots[day - 1]);
        return ctx;
    }
};

PanelCalendar build_calendar(std::span<const OptionQuote> quotes) {
    PanelCalendar cal;
    for (const auto& q : quotes) cal.date_index.emplace(q.quote_date, 0);
    cal.dates.reserve(cal.date_index.size());
    for (auto& [date, idx] : cal.date_index) {
        idx = cal.dates.size();
        cal.dates.push_back(date);
    }
    cal.spots.assign(cal.dates.size(), 0.0);
    cal.vixes.assign(cal.dates.size(), 0.0);
    for (const auto& q : quotes) {
        const std::size_t i = cal.date_index.at(q.quote_date);
        if (cal.spots[i] == 0.0 && q.underlying) cal.spots[i] = *q.underlying;
        if (cal.vixes[i] == 0.0 && q.vix) cal.vixes[i] = *q.vix;
    }
    return cal;
}

struct ContractKey {
    std::int64_t expiry;
    double strike;
    OptionKind kind;
    auto operator<=>(const ContractKey&) const = default;
};

/// Rows of each contract indexed by trading day; duplicate (contract, day)
/// rows keep the first occurrence.
std::map<ContractKey, std::map<std::size_t, std::size_t>> group_contracts(
    std::span<const OptionQuote> quotes, const PanelCalendar& cal) {
    std::map<ContractKey, std::map<std::size_t, std::size_t>> groups;
    for (std::size_t i = 0; i < quotes.size(); ++i) {
        const auto& q = quotes[i];
        if (!q.strike) continue;
        const ContractKey key{q.expiry_date.days_since_epoch(), *q.strike, q.kind};
        groups[key].emplace(cal.date_index.at(q.quote_date), i);
    }
    return groups;
}

std::optional<HedgeSample> make_sample(const OptionQuote& at_t, const OptionQuote& at_next,
                                       ModelVariant variant, const MarketContext& ctx) {
    if (!at_t.underlying || !at_next.underlying) return std::nullopt;
    const auto mid_t = at_t.mid();
    const auto mid_next = at_next.mid();
    if (!mid_t || !mid_next) return std::nullopt;

    auto features = build_features(at_t, variant, at_t.kind, ctx);
    if (!features) return std::nullopt;
    for (double f : *features)
        if (!std::isfinite(f)) return std::nullopt;

    HedgeSample s;
    s.features = std::move(*features);
    s.delta_s = *at_next.underlying - *at_t.underlying;
    s.delta_v = *mid_next - *mid_t;
    s.bs_delta = *at_t.delta;
    s.bucket = assign_bucket(s.bs_delta);
    s.quote_date = at_t.quote_date;
    s.bs_vega = at_t.vega.value_or(0.0);
    s.spot = *at_t.underlying;
    s.ttm = static_cast<double>(at_t.ttm_days()) / 365.0;
    return s;
}

}  // namespace

std::vector<HedgeSample> pair_consecutive(std::span<const OptionQuote> quotes,
                                          ModelVariant variant) {
    const PanelCalendar cal = build_calendar(quotes);
    const auto groups = group_contracts(quotes, cal);

    // (date, expiry, strike, kind) ordering for deterministic output
    std::vector<std::tuple<std::size_t, ContractKey, std::size_t, std::size_t>> pairs;
    for (const auto& [key, days] : groups) {
        for (auto it = days.begin(); it != days.end(); ++it) {
            const auto next = days.find(it->first + 1);
            if (next == days.end()) continue;  // gap or last observation: no sample
            pairs.emplace_back(it->first, key, it->second, next->second);
        }
    }
    std::sort(pairs.begin(), pairs.end());

    std::vector<HedgeSample> samples;
    samples.reserve(pairs.size());
    for (const auto& [day, key, row_t, row_next] : pairs) {
        auto s = make_sample(quotes[row_t], quotes[row_next], variant, cal.context(day));
        if (s) samples.push_back(std::move(*s));
    }
    return samples;
}

std::vector<SequenceSample> build_sequences(std::span<const OptionQuote> quotes, OptionKind kind) {
    const PanelCalendar cal = build_calendar(quotes);
    const auto groups = group_contracts(quotes, cal);

    // Per-day sentiment: VIX/100 levels for calls, index log-returns for puts.
    const std::size_t n_days = cal.dates.size();
    std::vector<double> sentiment(n_days, 0.0);
    for (std::size_t d = 0; d < n_days; ++d) {
        if (kind == OptionKind::Call) {
            sentiment[d] = cal.vixes[d] / 100.0;
        } else if (d > 0) {
            sentiment[d] = std::log(cal.spots[d] / cal.spots[d - 1]);
        }
    }

    std::vector<std::tuple<std::size_t, ContractKey, std::size_t, std::size_t>> pairs;
    for (const auto& [key, days] : groups) {
        if (key.kind != kind) continue;
        for (auto it = days.begin(); it != days.end(); ++it) {
            // Samples within the first 22 trading days have no full window
            // (and, for puts, no oldest return); dropped rather than padded.
            if (it->first + 1 <= static_cast<std::size_t>(kSequenceLength)) continue;
            const auto next = days.find(it->first + 1);
            if (next == days.end()) continue;
            pairs.emplace_back(it->first, key, it->second, next->second);
        }
    }
    std::sort(pairs.begin(), pairs.end());

    std::vector<SequenceSample> out;
    out.reserve(pairs.size());
    for (const auto& [day, key, row_t, row_next] : pairs) {
        auto s = make_sample(quotes[row_t], quotes[row_next], ModelVariant::DNNGRU,
                             cal.context(day));
        if (!s) continue;
        SequenceSample seq;
        seq.window.history.assign(sentiment.begin() + (day + 1 - kSequenceLength),
                                  sentiment.begin() + (day + 1));
        seq.window.contract_features = s->features;  // (ttm, bs_delta)
        seq.sample = std::move(*s);
        out.push_back(std::move(seq));
    }
    return out;
}

namespace {

std::optional<HedgeSample> make_prediction_sample(const OptionQuote& q, ModelVariant variant,
                                                  const MarketContext& ctx) {
    if (!q.delta || !q.underlying) return std::nullopt;
    const double m = std::abs(*q.delta);
    if (m < 0.05 || m > 0.95) return std::nullopt;  // unfiltered stragglers
    auto features = build_features(q, variant, q.kind, ctx);
    if (!features) return std::nullopt;
    for (double f : *features)
        if (!std::isfinite(f)) return std::nullopt;
    HedgeSample s;
    s.features = std::move(*features);
    s.bs_delta = *q.delta;
    s.bucket = assign_bucket(s.bs_delta);
    s.quote_date = q.quote_date;
    s.bs_vega = q.vega.value_or(0.0);
    s.spot = *q.underlying;
    s.ttm = static_cast<double>(q.ttm_days()) / 365.0;
    return s;
}

}  // namespace

std::vector<PredictionRecord> build_prediction_records(std::span<const OptionQuote> quotes,
                                                       ModelVariant variant) {
    const PanelCalendar cal = build_calendar(quotes);
    std::vector<PredictionRecord> out;
    out.reserve(quotes.size());
    for (std::size_t i = 0; i < quotes.size(); ++i) {
        const auto& q = quotes[i];
        const std::size_t day = cal.date_index.at(q.quote_date);
        auto s = make_prediction_sample(q, variant, cal.context(day));
        if (s) out.push_back({i, std::move(*s)});
    }
    return out;
}

std::vector<PredictionWindow> build_prediction_windows(std::span<const OptionQuote> quotes,
                                                       OptionKind kind) {
    const PanelCalendar cal = build_calendar(quotes);
    const std::size_t n_days = cal.dates.size();
    std::vector<double> sentiment(n_days, 0.0);
    for (std::size_t d = 0; d < n_days; ++d) {
        if (kind == OptionKind::Call) {
            sentiment[d] = cal.vixes[d] / 100.0;
        } else if (d > 0) {
            sentiment[d] = std::log(cal.spots[d] / cal.spots[d - 1]);
        }
    }

    std::vector<PredictionWindow> out;
    for (std::size_t i = 0; i < quotes.size(); ++i) {
        const auto& q = quotes[i];
        if (q.kind != kind) continue;
        const std::size_t day = cal.date_index.at(q.quote_date);
        if (day + 1 <= static_cast<std::size_t>(kSequenceLength)) continue;
        auto s = make_prediction_sample(q, ModelVariant::DNNGRU, cal.context(day));
        if (!s) continue;
        PredictionWindow w;
        w.quote_index = i;
        w.sequence.window.history.assign(sentiment.begin() + (day + 1 - kSequenceLength),
                                         sentiment.begin() + (day + 1));
        w.sequence.window.contract_features = s->features;
        w.sequence.sample = std::move(*s);
        out.push_back(std::move(w));
    }
    return out;
}

namespace {

template <typename SampleT>
GenericSplit<SampleT> split_impl(std::vector<SampleT> samples, Date test_start,
                                 double val_fraction, std::uint64_t seed,
                                 Date (*date_of)(const SampleT&)) {
    if (!(val_fraction > 0.0 && val_fraction < 1.0))
        throw config_error("val_fraction must be in (0,1)");

    GenericSplit<SampleT> split;
    std::vector<SampleT> rest;
    for (auto& s : samples) {
        if (date_of(s) >= test_start)
            split.test.push_back(std::move(s));
        else
            rest.push_back(std::move(s));
    }

    std::vector<std::size_t> order(rest.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);

    const std::size_t n_val = static_cast<std::size_t>(
        std::llround(val_fraction * static_cast<double>(rest.size())));
    if (n_val == 0 || n_val >= rest.size())
        throw config_error("split leaves an empty train or validation set (" +
                           std::to_string(rest.size()) + " pre-test samples, val_fraction " +
                           detail::format_double(val_fraction) + ")");

    split.validation.reserve(n_val);
    split.train.reserve(rest.size() - n_val);
    for (std::size_t i = 0; i < order.size(); ++i) {
        auto& dst = i < n_val ? split.validation : split.train;
        dst.push_back(std::move(rest[order[i]]));
    }
    return split;
}

Date hedge_sample_date(const HedgeSample& s) { return s.quote_date; }
Date sequence_sample_date(const SequenceSample& s) { return s.sample.quote_date; }

}  // namespace

DatasetSplit split_dataset(std::vector<HedgeSample> samples, Date test_start, double val_fraction,
                           std::uint64_t seed) {
    return split_impl(std::move(samples), test_start, val_fraction, seed, &hedge_sample_date);
}

SequenceSplit split_dataset(std::vector<SequenceSample> samples, Date test_start,
                            double val_fraction, std::uint64_t seed) {
    return split_impl(std::move(samples), test_start, val_fraction, seed, &sequence_sample_date);
}

}  // namespace mvhedge
