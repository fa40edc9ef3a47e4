#include "cli_commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "mvhedge/detail/numio.hpp"

namespace mvhedge::cli {

namespace {

/// Resolved config echo location: the explicit --out-dir, or the directory
/// holding the command's primary output.
std::string echo_dir(const std::string& out_dir, const std::string& primary_output) {
    if (!out_dir.empty()) return out_dir;
    const auto parent = std::filesystem::path(primary_output).parent_path();
    return parent.empty() ? "." : parent.string();
}

void echo_config(const std::string& out_dir, const std::string& command,
                 const std::vector<std::pair<std::string, std::string>>& entries) {
    std::filesystem::create_directories(out_dir);
    const std::string path = out_dir + "/run_config.txt";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write config echo: " + path);
    out << "# " << kToolVersion << "\n";
    out << "command = " << command << "\n";
    for (const auto& [key, value] : entries) out << key << " = " << value << "\n";
    if (!out) throw io_error("write failed: " + path);
}

std::string fmt(double v) { return detail::format_double(v); }

std::vector<OptionQuote> load_filtered(const std::string& path, OptionKind kind) {
    const auto quotes = load_quotes(path);
    FilterStats stats;
    auto kept = filter_quotes(quotes, stats);
    if (kept.empty())
        throw config_error("no quotes remain after filtering " + path +
                           "; dominant filter: " + stats.dominant());
    std::erase_if(kept, [&](const OptionQuote& q) { return q.kind != kind; });
    if (kept.empty())
        throw config_error(std::string("no ") + to_string(kind) + " quotes in " + path);
    return kept;
}

std::vector<double> curve_grid(const CurveOptions& opt, OptionKind kind) {
    double start = opt.grid_start, stop = opt.grid_stop;
    if (start == 0.0 && stop == 0.0) {
        start = kind == OptionKind::Call ? 0.05 : -0.95;
        stop = kind == OptionKind::Call ? 0.95 : -0.05;
    }
    if (!(opt.grid_step > 0.0)) throw config_error("curve: grid step must be > 0");
    const int n = static_cast<int>(std::llround((stop - start) / opt.grid_step));
    if (n < 0 || n > 100000) throw config_error("curve: empty or oversized grid");
    std::vector<double> grid;
    grid.reserve(n + 1);
    for (int i = 0; i <= n; ++i) {
        double x = start + i * opt.grid_step;
        // snap accumulated rounding back onto the filtered range
        if (std::abs(x) > 0.95 && std::abs(x) < 0.95 + 1e-9) x = x > 0 ? 0.95 : -0.95;
        if (std::abs(x) < 0.05 && std::abs(x) > 0.05 - 1e-9) x = x > 0 ? 0.05 : -0.05;
        grid.push_back(x);
    }
    return grid;
}

double sentiment_level(const CurveOptions& opt, OptionKind kind) {
    if (const auto v = detail::parse_double(opt.sentiment)) return *v;
    if (opt.sentiment != "median" && opt.sentiment != "stress")
        throw config_error("curve: sentiment must be a number, 'median' or 'stress'");
    if (opt.data_csv.empty())
        throw config_error("curve: the median/stress presets need --data to compute from");

    // daily sentiment series over the panel's trading calendar
    const auto quotes = load_quotes(opt.data_csv);
    std::map<Date, std::pair<double, double>> by_date;  // spot, vix
    for (const auto& q : quotes)
        if (q.underlying && q.vix) by_date.emplace(q.quote_date, std::make_pair(*q.underlying, *q.vix));
    if (by_date.size() < 2) throw config_error("curve: not enough dated quotes in --data");

    std::vector<double> series;
    double prev_spot = 0.0;
    for (const auto& [date, sv] : by_date) {
        if (kind == OptionKind::Call)
            series.push_back(sv.second / 100.0);
        else if (prev_spot > 0.0)
            series.push_back(std::log(sv.first / prev_spot));
        prev_spot = sv.first;
    }
    std::sort(series.begin(), series.end());
    auto quantile = [&](double q) {
        const double pos = q * static_cast<double>(series.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, series.size() - 1);
        const double w = pos - static_cast<double>(lo);
        return (1.0 - w) * series[lo] + w * series[hi];
    };
    if (opt.sentiment == "median") return quantile(0.5);
    // stress: elevated volatility for calls, crash-sized return for puts
    return kind == OptionKind::Call ? quantile(0.95) : quantile(0.05);
}

}  // namespace

std::size_t run_synth(const SynthOptions& opt) {
    opt.gen.validate();
    const auto quotes = generate_quote_panel(opt.gen);
    save_quotes(opt.out_csv, quotes);

    std::string strikes, maturities;
    for (double m : opt.gen.strike_grid) strikes += (strikes.empty() ? "" : ",") + fmt(m);
    for (int d : opt.gen.maturity_grid)
        maturities += (maturities.empty() ? "" : ",") + std::to_string(d);
    echo_config(echo_dir(opt.out_dir, opt.out_csv), "synth",
                {{"out", opt.out_csv},
                 {"n_days", std::to_string(opt.gen.n_days)},
                 {"spot0", fmt(opt.gen.spot0)},
                 {"vol0", fmt(opt.gen.vol0)},
                 {"long_vol", fmt(opt.gen.long_vol)},
                 {"mean_rev", fmt(opt.gen.mean_rev)},
                 {"vol_of_vol", fmt(opt.gen.vol_of_vol)},
                 {"corr", fmt(opt.gen.corr)},
                 {"rate", fmt(opt.gen.rate)},
                 {"div_yield", fmt(opt.gen.div_yield)},
                 {"strike_grid", strikes},
                 {"maturity_grid", maturities},
                 {"seed", std::to_string(opt.gen.seed)}});
    std::cout << quotes.size() << " quotes written to " << opt.out_csv << "\n";
    return quotes.size();
}

namespace {

std::size_t train_neural(const TrainOptions& opt, std::span<const OptionQuote> quotes) {
    std::size_t log_rows = 0;
    if (opt.variant == ModelVariant::DNNGRU) {
        auto sequences = build_sequences(quotes, opt.kind);
        if (sequences.empty())
            throw config_error("train: no sequence samples (need a panel longer than 22 days)");
        auto split = split_dataset(std::move(sequences), opt.test_start, opt.val_fraction,
                                   opt.train.seed);
        auto model = make_gru(opt.kind, opt.init_seed, opt.gru_hidden);
        model.sigmoid_output = opt.sigmoid_output;
        const auto result = train_gru(model, split, opt.train);
        write_training_log(opt.log_path(), result.log);
        save_checkpoint(model, opt.checkpoint_path());
        log_rows = result.log.size();
    } else {
        auto samples = pair_consecutive(quotes, opt.variant);
        if (samples.empty()) throw config_error("train: no paired samples in the panel");
        auto split =
            split_dataset(std::move(samples), opt.test_start, opt.val_fraction, opt.train.seed);
        auto model =
            make_fnn(opt.variant, opt.kind, opt.init_seed, opt.hidden_width, opt.hidden_depth);
        model.sigmoid_output = opt.sigmoid_output;
        const auto result = train_fnn(model, split, opt.train);
        write_training_log(opt.log_path(), result.log);
        save_checkpoint(model, opt.checkpoint_path());
        log_rows = result.log.size();
    }
    return log_rows;
}

}  // namespace

std::size_t run_train(const TrainOptions& opt) {
    const auto quotes = load_filtered(opt.data_csv, opt.kind);
    std::filesystem::create_directories(opt.out_dir);

    std::size_t rows = 0;
    switch (opt.variant) {
        case ModelVariant::HW: {
            auto samples = pair_consecutive(quotes, ModelVariant::HW);
            if (samples.empty()) throw config_error("train: no paired samples in the panel");
            auto split =
                split_dataset(std::move(samples), opt.test_start, opt.val_fraction, opt.train.seed);
            const auto model = fit_hw(opt.kind, split.train);
            write_training_log(opt.log_path(), {});
            save_checkpoint(model, opt.checkpoint_path());
            std::cout << "hw coefficients: a=" << fmt(model.coef.a) << " b=" << fmt(model.coef.b)
                      << " c=" << fmt(model.coef.c) << "\n";
            break;
        }
        case ModelVariant::BSBaseline: {
            write_training_log(opt.log_path(), {});
            save_checkpoint(BsBaselineModel{opt.kind}, opt.checkpoint_path());
            break;
        }
        default:
            rows = train_neural(opt, quotes);
            break;
    }

    echo_config(opt.out_dir, "train",
                {{"data", opt.data_csv},
                 {"variant", to_string(opt.variant)},
                 {"kind", to_string(opt.kind)},
                 {"test_start", opt.test_start.to_iso()},
                 {"val_fraction", fmt(opt.val_fraction)},
                 {"batch_size", std::to_string(opt.train.batch_size)},
                 {"learning_rate", fmt(opt.train.learning_rate)},
                 {"max_epochs", std::to_string(opt.train.max_epochs)},
                 {"patience", std::to_string(opt.train.patience)},
                 {"clip_norm", fmt(opt.train.clip_norm)},
                 {"seed", std::to_string(opt.train.seed)},
                 {"init_seed", std::to_string(opt.init_seed)},
                 {"hidden_width", std::to_string(opt.hidden_width)},
                 {"hidden_depth", std::to_string(opt.hidden_depth)},
                 {"gru_hidden", std::to_string(opt.gru_hidden)},
                 {"sigmoid_output", opt.sigmoid_output ? "1" : "0"}});
    std::cout << "checkpoint written to " << opt.checkpoint_path() << "\n";
    return rows;
}

void check_kind_flag(const HedgeModelAny& model, const std::string& flag) {
    if (flag.empty()) return;
    if (flag != "call" && flag != "put") throw config_error("--kind must be 'call' or 'put'");
    expect_kind(model, flag == "call" ? OptionKind::Call : OptionKind::Put);
}

std::size_t run_eval(const EvalOptions& opt) {
    const auto model = load_checkpoint(opt.checkpoint);
    check_kind_flag(model, opt.kind);
    const OptionKind kind = model_kind(model);
    const auto quotes = load_filtered(opt.data_csv, kind);

    EvalReport report;
    if (std::holds_alternative<GruHedgeModel>(model)) {
        auto sequences = build_sequences(quotes, kind);
        std::erase_if(sequences,
                      [&](const SequenceSample& s) { return s.sample.quote_date < opt.test_start; });
        if (sequences.empty()) throw config_error("eval: no test samples after " +
                                                  opt.test_start.to_iso());
        report = evaluate(model, sequences);
    } else {
        auto samples = pair_consecutive(quotes, model_variant(model));
        std::erase_if(samples,
                      [&](const HedgeSample& s) { return s.quote_date < opt.test_start; });
        if (samples.empty()) throw config_error("eval: no test samples after " +
                                                opt.test_start.to_iso());
        report = evaluate(model, samples);
    }

    write_eval_report(opt.out_csv, report);
    echo_config(echo_dir(opt.out_dir, opt.out_csv), "eval",
                {{"checkpoint", opt.checkpoint},
                 {"data", opt.data_csv},
                 {"test_start", opt.test_start.to_iso()},
                 {"out", opt.out_csv}});
    if (report.overall.gain)
        std::cout << "overall gain " << fmt(*report.overall.gain) << " over "
                  << report.overall.n << " samples\n";
    return report.per_bucket.size() + 1;
}

std::size_t run_predict(const PredictOptions& opt) {
    const auto model = load_checkpoint(opt.checkpoint);
    check_kind_flag(model, opt.kind);
    const OptionKind kind = model_kind(model);
    const auto quotes = load_filtered(opt.data_csv, kind);

    std::vector<std::size_t> indices;
    std::vector<double> deltas;
    std::vector<double> bs_deltas;
    if (const auto* gru = std::get_if<GruHedgeModel>(&model)) {
        const auto windows = build_prediction_windows(quotes, kind);
        std::vector<SequenceWindow> pure;
        pure.reserve(windows.size());
        for (const auto& w : windows) {
            indices.push_back(w.quote_index);
            bs_deltas.push_back(w.sequence.sample.bs_delta);
            pure.push_back(w.sequence.window);
        }
        deltas = gru_predict(*gru, pure);
    } else {
        const auto records = build_prediction_records(quotes, model_variant(model));
        std::vector<HedgeSample> samples;
        samples.reserve(records.size());
        for (const auto& r : records) {
            indices.push_back(r.quote_index);
            bs_deltas.push_back(r.sample.bs_delta);
            samples.push_back(r.sample);
        }
        deltas = predict(model, samples);
    }

    std::ofstream out(opt.out_csv, std::ios::binary);
    if (!out) throw io_error("cannot write predictions: " + opt.out_csv);
    out << "quote_date,expiry_date,cp_flag,strike,bs_delta,predicted_delta\n";
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const auto& q = quotes[indices[i]];
        out << q.quote_date.to_iso() << ',' << q.expiry_date.to_iso() << ','
            << (q.kind == OptionKind::Call ? 'C' : 'P') << ',' << fmt(q.strike.value_or(0.0))
            << ',' << fmt(bs_deltas[i]) << ',' << fmt(deltas[i]) << '\n';
    }
    if (!out) throw io_error("write failed: " + opt.out_csv);

    echo_config(echo_dir(opt.out_dir, opt.out_csv), "predict",
                {{"checkpoint", opt.checkpoint}, {"data", opt.data_csv}, {"out", opt.out_csv}});
    std::cout << indices.size() << " predictions written to " << opt.out_csv << "\n";
    return indices.size();
}

std::size_t run_curve(const CurveOptions& opt) {
    const auto model = load_checkpoint(opt.checkpoint);
    const OptionKind kind = model_kind(model);
    const double sentiment = sentiment_level(opt, kind);
    const auto grid = curve_grid(opt, kind);
    const auto points = hedge_ratio_curve(model, opt.ttm_days / 365.0, sentiment, grid);
    write_curve(opt.out_csv, points);

    echo_config(echo_dir(opt.out_dir, opt.out_csv), "curve",
                {{"checkpoint", opt.checkpoint},
                 {"sentiment", opt.sentiment},
                 {"sentiment_value", fmt(sentiment)},
                 {"ttm_days", fmt(opt.ttm_days)},
                 {"out", opt.out_csv}});
    std::cout << points.size() << " curve points written to " << opt.out_csv << "\n";
    return points.size();
}

}  // namespace mvhedge::cli
