#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mvhedge/date.hpp"
#include "mvhedge/errors.hpp"
#include "mvhedge/market_math.hpp"
#include "mvhedge/model_variant.hpp"
#include "mvhedge/rng.hpp"

namespace mvhedge {

/// One day's closing quote for one option contract. Numeric cells may be
/// missing in the source CSV (blank or malformed); filtering removes quotes
/// that lack any of the fields required downstream.
struct OptionQuote {
    Date quote_date;
    Date expiry_date;
    OptionKind kind = OptionKind::Call;
    std::optional<double> strike;
    std::optional<double> bid;
    std::optional<double> ask;
    std::optional<long> volume;  // contracts traded
    std::optional<double> implied_vol;
    std::optional<double> delta;  // practitioner BS delta from the data source
    std::optional<double> gamma;
    std::optional<double> vega;
    std::optional<double> theta;
    std::optional<double> underlying;  // index close S_t
    std::optional<double> vix;         // VIX close, index points
    std::optional<double> rate;
    std::optional<double> div_yield;

    long ttm_days() const { return expiry_date - quote_date; }
    std::optional<double> mid() const {
        if (bid && ask) return 0.5 * (*bid + *ask);
        return std::nullopt;
    }
};

/// Edge between delta buckets j and j+1 on the positive side: 0.05, 0.15,
/// ..., 0.95. Adjacent buckets share the identical double, so the intervals
/// tile [0.05, 0.95] without cracks or overlaps.
inline double bucket_edge(int j) { return (2 * j + 1) * 0.05; }

/// Delta bucket centered on decile/10; bucket a covers [a-0.05, a+0.05).
/// The boundary deltas kept by the filter close the outermost edge of the
/// adjacent bucket: +0.95 belongs to bucket 0.9 and -0.05 to bucket -0.1.
struct DeltaBucket {
    int decile = 0;  // +-1 .. +-9

    double center() const { return decile / 10.0; }
    double lower() const { return decile > 0 ? bucket_edge(decile - 1) : -bucket_edge(-decile); }
    double upper() const { return decile > 0 ? bucket_edge(decile) : -bucket_edge(-decile - 1); }
    bool contains(double delta) const {
        if (delta >= lower() && delta < upper()) return true;
        if (decile == 9) return delta >= lower() && delta <= 0.95;
        if (decile == -1) return delta >= lower() && delta <= -0.05;
        return false;
    }
    auto operator<=>(const DeltaBucket&) const = default;
};

/// One training/test record: features observed at t plus the realized moves
/// over (t, t+1]. Carries the practitioner Greeks the Hull-White regression
/// and the evaluation baseline need.
struct HedgeSample {
    std::vector<double> features;  // raw layout per ModelVariant, standardized at model boundary
    double delta_s = 0.0;          // S_{t+1} - S_t
    double delta_v = 0.0;          // mid_{t+1} - mid_t
    double bs_delta = 0.0;
    DeltaBucket bucket;
    Date quote_date;
    double bs_vega = 0.0;
    double spot = 0.0;
    double ttm = 0.0;  // years, ACT/365
};

/// Sentiment history feeding the GRU: 22 trading days (one month), oldest
/// first, ending at the sample date. VIX/100 levels for calls, index
/// log-returns for puts.
struct SequenceWindow {
    std::vector<double> history;            // length kSequenceLength
    std::vector<double> contract_features;  // (ttm, bs_delta)
};

inline constexpr int kSequenceLength = 22;

struct SequenceSample {
    SequenceWindow window;
    HedgeSample sample;
};

template <typename SampleT>
struct GenericSplit {
    std::vector<SampleT> train;
    std::vector<SampleT> validation;
    std::vector<SampleT> test;
};

using DatasetSplit = GenericSplit<HedgeSample>;
using SequenceSplit = GenericSplit<SequenceSample>;

/// Same-day market state used to build features at time t.
struct MarketContext {
    double vix = 0.0;                       // same-day close, index points
    std::optional<double> log_return;       // ln(S_t / S_{t-1}); absent on the first trading day
};

/// CSV schema shared by ingestion and the synthetic generator.
inline constexpr const char* kQuoteCsvHeader =
    "quote_date,expiry_date,cp_flag,strike,bid,ask,volume,implied_vol,delta,gamma,vega,theta,"
    "underlying,vix,rate,div_yield";

/// Read a quote panel. Dates are ISO-8601, cp_flag is C or P, blanks and
/// malformed numeric cells become missing values. Throws io_error when the
/// file cannot be read and schema_error when the header does not match.
std::vector<OptionQuote> load_quotes(const std::string& path);

/// Write a quote panel in the same schema. Doubles are emitted in shortest
/// round-trip form, so identical panels serialize to identical bytes.
void save_quotes(const std::string& path, std::span<const OptionQuote> quotes);

/// The Hull-White data filter: keep quotes with trading volume, complete
/// bid/ask/implied-vol/delta/gamma/vega/theta, at least 14 days to maturity
/// and delta in [0.05, 0.95] for calls / [-0.95, -0.05] for puts (boundary
/// values kept).
std::vector<OptionQuote> filter_quotes(std::span<const OptionQuote> quotes);

/// Per-filter removal counts, for diagnosing empty post-filter datasets.
struct FilterStats {
    std::size_t kept = 0;
    std::size_t no_volume = 0;
    std::size_t missing_fields = 0;
    std::size_t short_maturity = 0;
    std::size_t extreme_delta = 0;

    /// Name of the filter that removed the most rows.
    std::string dominant() const;
};
std::vector<OptionQuote> filter_quotes(std::span<const OptionQuote> quotes, FilterStats& stats);

/// Bucket for a filtered delta. Throws domain_error outside the filtered range.
DeltaBucket assign_bucket(double delta);

/// Raw feature vector for one quote under a variant's layout. Returns nullopt
/// when the layout needs the index log-return and the context lacks one (the
/// sample is skipped). VIX enters divided by 100.
std::optional<std::vector<double>> build_features(const OptionQuote& quote, ModelVariant variant,
                                                  OptionKind kind, const MarketContext& context);

/// Pair each contract's quotes on consecutive trading days into hedge
/// samples. The trading calendar is the sorted distinct quote dates present
/// in the panel; a contract missing on day t+1 produces no sample for day t.
/// Output is sorted by (quote_date, expiry, strike, kind).
std::vector<HedgeSample> pair_consecutive(std::span<const OptionQuote> quotes,
                                          ModelVariant variant);

/// Hedge samples paired as above, each with its 22-day sentiment window.
/// Samples within the first 22 trading days of the panel are dropped; no
/// padding is applied.
std::vector<SequenceSample> build_sequences(std::span<const OptionQuote> quotes, OptionKind kind);

/// Per-quote records for batch prediction (no next-day pairing; realized
/// moves are zero). quote_index points back into the input span. Quotes
/// whose features cannot be built (missing context) are skipped.
struct PredictionRecord {
    std::size_t quote_index = 0;
    HedgeSample sample;
};
std::vector<PredictionRecord> build_prediction_records(std::span<const OptionQuote> quotes,
                                                       ModelVariant variant);

/// Per-quote sequence windows for batch prediction with the GRU model;
/// quotes within the first 22 trading days are skipped.
struct PredictionWindow {
    std::size_t quote_index = 0;
    SequenceSample sequence;
};
std::vector<PredictionWindow> build_prediction_windows(std::span<const OptionQuote> quotes,
                                                       OptionKind kind);

/// Chronological test split plus a seeded random train/validation partition
/// of the remainder. Samples dated >= test_start form the test set. Throws
/// config_error when the train or validation side comes out empty.
DatasetSplit split_dataset(std::vector<HedgeSample> samples, Date test_start, double val_fraction,
                           std::uint64_t seed);
SequenceSplit split_dataset(std::vector<SequenceSample> samples, Date test_start,
                            double val_fraction, std::uint64_t seed);

}  // namespace mvhedge
