#include "mvhedge/train_eval.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>

#include "mvhedge/detail/numio.hpp"
#include "mvhedge/nn/adam.hpp"

namespace mvhedge {

double hedge_loss(std::span<const double> predictions, std::span<const HedgeSample> samples) {
    if (samples.empty()) throw domain_error("hedge_loss: no samples");
    if (predictions.size() != samples.size())
        throw contract_error("hedge_loss: prediction/sample counts differ");
    double sum = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double e = samples[i].delta_v - predictions[i] * samples[i].delta_s;
        sum += e * e;
    }
    return sum / static_cast<double>(samples.size());
}

namespace {

double head_grad(double raw, OptionKind kind, bool sigmoid_output) {
    if (!sigmoid_output) return output_clamp_grad(raw, kind);
    const double s = 1.0 / (1.0 + std::exp(-raw));
    return s * (1.0 - s);
}

/// dL/d(raw output) for the mean squared hedging error over the batch, and
/// the batch's summed squared error.
double loss_gradient(const nn::Matrix& raw, std::span<const HedgeSample> samples,
                     std::span<const std::size_t> indices, OptionKind kind, bool sigmoid_output,
                     nn::Matrix& grad_out) {
    const std::size_t b = indices.size();
    const double inv_b = 1.0 / static_cast<double>(b);
    double sum_sq = 0.0;
    for (std::size_t j = 0; j < b; ++j) {
        const auto& s = samples[indices[j]];
        const double delta = apply_output_head(raw(0, j), kind, sigmoid_output);
        const double err = delta * s.delta_s - s.delta_v;
        sum_sq += err * err;
        grad_out(0, j) = 2.0 * err * s.delta_s * inv_b * head_grad(raw(0, j), kind, sigmoid_output);
    }
    return sum_sq;
}

std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size,
                                                   Rng& rng) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order);
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t start = 0; start < n; start += batch_size) {
        const std::size_t end = std::min(n, start + batch_size);
        batches.emplace_back(order.begin() + start, order.begin() + end);
    }
    return batches;
}

}  // namespace

TrainResult train_fnn(FnnHedgeModel& model, const DatasetSplit& split, const TrainConfig& cfg) {
    if (cfg.batch_size < 2) throw config_error("train: batch_size must be >= 2");
    if (cfg.patience < 1) throw config_error("train: patience must be >= 1");
    TrainResult result;
    if (cfg.max_epochs <= 0) return result;
    if (split.train.empty() || split.validation.empty())
        throw config_error("train: empty train or validation split");

    const std::size_t dim = model.input_dim();
    model.feature_stats = FeatureStats::from_samples(split.train, dim);

    auto params = nn::trainable_params(model.net);
    auto adam = nn::AdamState::create(params, cfg.learning_rate);
    Rng rng(cfg.seed);
    EarlyStopper stopper(cfg.patience);
    FnnHedgeModel best = model;
    int best_epoch = 0;

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        const auto batches = make_batches(split.train.size(), cfg.batch_size, rng);
        double epoch_sum_sq = 0.0;
        for (std::size_t bi = 0; bi < batches.size(); ++bi) {
            const auto& batch = batches[bi];
            const nn::Matrix x = feature_matrix(split.train, model.feature_stats, dim, batch);
            nn::ForwardCache cache;
            const nn::Matrix raw = nn::forward(model.net, x, nn::Mode::Train, &cache);

            nn::Matrix grad(1, batch.size());
            const double sum_sq =
                loss_gradient(raw, split.train, batch, model.kind, model.sigmoid_output, grad);
            if (!std::isfinite(sum_sq))
                throw numeric_error("train: non-finite loss at epoch " + std::to_string(epoch) +
                                    ", batch " + std::to_string(bi));
            epoch_sum_sq += sum_sq;

            auto grads = nn::backward(model.net, cache, grad);
            nn::clip_gradients(grads, cfg.clip_norm);
            nn::adam_step(adam, params, grads);
        }

        TrainLogEntry entry;
        entry.epoch = epoch;
        entry.train_loss = epoch_sum_sq / static_cast<double>(split.train.size());

        if (epoch % cfg.eval_every == 0 || epoch == cfg.max_epochs) {
            const auto val_pred = fnn_predict(model, split.validation);
            entry.val_loss = hedge_loss(val_pred, split.validation);
            if (!std::isfinite(entry.val_loss))
                throw numeric_error("train: non-finite validation loss at epoch " +
                                    std::to_string(epoch));
            if (stopper.observe(entry.val_loss)) {
                best = model;
                best_epoch = epoch;
            }
            entry.stopped = stopper.should_stop();
        } else {
            entry.val_loss = std::numeric_limits<double>::quiet_NaN();
        }
        result.log.push_back(entry);
        if (entry.stopped) break;
    }

    model = std::move(best);
    result.best_val_loss = stopper.best();
    result.best_epoch = best_epoch;
    return result;
}

namespace {

nn::Matrix sequence_batch(std::span<const SequenceSample> samples,
                          std::span<const std::size_t> indices, const FeatureStats& stats,
                          nn::Matrix& contract) {
    nn::Matrix histories(kSequenceLength, indices.size());
    contract = nn::Matrix(2, indices.size());
    for (std::size_t j = 0; j < indices.size(); ++j) {
        const auto& w = samples[indices[j]].window;
        for (std::size_t t = 0; t < kSequenceLength; ++t) histories(t, j) = w.history[t];
        for (std::size_t i = 0; i < 2; ++i)
            contract(i, j) = (w.contract_features[i] - stats.mean[i]) / stats.std[i];
    }
    return histories;
}

std::vector<HedgeSample> plain_samples(std::span<const SequenceSample> samples) {
    std::vector<HedgeSample> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.sample);
    return out;
}

}  // namespace

TrainResult train_gru(GruHedgeModel& model, const SequenceSplit& split, const TrainConfig& cfg) {
    if (cfg.batch_size < 2) throw config_error("train: batch_size must be >= 2");
    if (cfg.patience < 1) throw config_error("train: patience must be >= 1");
    TrainResult result;
    if (cfg.max_epochs <= 0) return result;
    if (split.train.empty() || split.validation.empty())
        throw config_error("train: empty train or validation split");

    {
        // contract-feature statistics from the training split
        std::vector<HedgeSample> train_plain = plain_samples(split.train);
        model.feature_stats = FeatureStats::from_samples(train_plain, 2);
    }

    auto params = trainable_params(model);
    auto adam = nn::AdamState::create(params, cfg.learning_rate);
    Rng rng(cfg.seed);
    EarlyStopper stopper(cfg.patience);
    GruHedgeModel best = model;
    int best_epoch = 0;
    const std::vector<HedgeSample> val_plain = plain_samples(split.validation);

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        const auto batches = make_batches(split.train.size(), cfg.batch_size, rng);
        double epoch_sum_sq = 0.0;
        for (std::size_t bi = 0; bi < batches.size(); ++bi) {
            const auto& batch = batches[bi];
            nn::Matrix contract;
            const nn::Matrix histories =
                sequence_batch(split.train, batch, model.feature_stats, contract);
            GruForwardCache cache;
            const nn::Matrix raw = gru_forward(model, histories, contract, &cache);

            nn::Matrix grad(1, batch.size());
            double sum_sq = 0.0;
            {
                const double inv_b = 1.0 / static_cast<double>(batch.size());
                for (std::size_t j = 0; j < batch.size(); ++j) {
                    const auto& s = split.train[batch[j]].sample;
                    const double delta =
                        apply_output_head(raw(0, j), model.kind, model.sigmoid_output);
                    const double err = delta * s.delta_s - s.delta_v;
                    sum_sq += err * err;
                    grad(0, j) = 2.0 * err * s.delta_s * inv_b *
                                 head_grad(raw(0, j), model.kind, model.sigmoid_output);
                }
            }
            if (!std::isfinite(sum_sq))
                throw numeric_error("train: non-finite loss at epoch " + std::to_string(epoch) +
                                    ", batch " + std::to_string(bi));
            epoch_sum_sq += sum_sq;

            auto grads = gru_backward(model, cache, grad);
            nn::clip_gradients(grads, cfg.clip_norm);
            nn::adam_step(adam, params, grads);
        }

        TrainLogEntry entry;
        entry.epoch = epoch;
        entry.train_loss = epoch_sum_sq / static_cast<double>(split.train.size());

        if (epoch % cfg.eval_every == 0 || epoch == cfg.max_epochs) {
            const auto val_pred = gru_predict(model, split.validation);
            entry.val_loss = hedge_loss(val_pred, val_plain);
            if (!std::isfinite(entry.val_loss))
                throw numeric_error("train: non-finite validation loss at epoch " +
                                    std::to_string(epoch));
            if (stopper.observe(entry.val_loss)) {
                best = model;
                best_epoch = epoch;
            }
            entry.stopped = stopper.should_stop();
        } else {
            entry.val_loss = std::numeric_limits<double>::quiet_NaN();
        }
        result.log.push_back(entry);
        if (entry.stopped) break;
    }

    model = std::move(best);
    result.best_val_loss = stopper.best();
    result.best_epoch = best_epoch;
    return result;
}

std::vector<double> predict(const HedgeModelAny& model, std::span<const HedgeSample> samples) {
    return std::visit(
        [&](const auto& m) -> std::vector<double> {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, FnnHedgeModel>) {
                return fnn_predict(m, samples);
            } else if constexpr (std::is_same_v<T, HwModel>) {
                return hw_predict(m, samples);
            } else if constexpr (std::is_same_v<T, BsBaselineModel>) {
                std::vector<double> out(samples.size());
                for (std::size_t i = 0; i < samples.size(); ++i) out[i] = samples[i].bs_delta;
                return out;
            } else {
                throw contract_error("predict: GRU models need sequence windows");
            }
        },
        model);
}

std::vector<double> predict(const HedgeModelAny& model, std::span<const SequenceSample> samples) {
    if (const auto* gru = std::get_if<GruHedgeModel>(&model)) return gru_predict(*gru, samples);
    const std::vector<HedgeSample> plain = plain_samples(samples);
    return predict(model, plain);
}

EvalReport evaluate(std::span<const double> predictions, std::span<const HedgeSample> samples) {
    if (samples.empty()) throw domain_error("evaluate: no samples");
    if (predictions.size() != samples.size())
        throw contract_error("evaluate: prediction/sample counts differ");

    struct Sums {
        double model = 0.0;
        double bs = 0.0;
        std::size_t n = 0;
    };
    std::map<DeltaBucket, Sums> sums;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        auto& cell = sums[s.bucket];
        const double em = s.delta_v - predictions[i] * s.delta_s;
        const double eb = s.delta_v - s.bs_delta * s.delta_s;
        cell.model += em * em;
        cell.bs += eb * eb;
        cell.n += 1;
    }

    EvalReport report;
    Sums total;
    for (const auto& [bucket, cell] : sums) {
        BucketMetrics m;
        m.n = cell.n;
        m.mse_model = cell.model / static_cast<double>(cell.n);
        m.mse_bs = cell.bs / static_cast<double>(cell.n);
        if (m.mse_bs > 0.0) m.gain = 1.0 - m.mse_model / m.mse_bs;
        report.per_bucket.emplace(bucket, m);
        total.model += cell.model;
        total.bs += cell.bs;
        total.n += cell.n;
    }
    report.overall.n = total.n;
    report.overall.mse_model = total.model / static_cast<double>(total.n);
    report.overall.mse_bs = total.bs / static_cast<double>(total.n);
    if (report.overall.mse_bs > 0.0)
        report.overall.gain = 1.0 - report.overall.mse_model / report.overall.mse_bs;
    return report;
}

EvalReport evaluate(const HedgeModelAny& model, std::span<const HedgeSample> samples) {
    return evaluate(predict(model, samples), samples);
}

EvalReport evaluate(const HedgeModelAny& model, std::span<const SequenceSample> samples) {
    const auto preds = predict(model, samples);
    const auto plain = plain_samples(samples);
    return evaluate(preds, plain);
}

std::vector<std::pair<double, double>> hedge_ratio_curve(const HedgeModelAny& model, double ttm,
                                                         double sentiment,
                                                         std::span<const double> delta_grid) {
    const OptionKind kind = model_kind(model);
    std::vector<std::pair<double, double>> points;
    points.reserve(delta_grid.size());

    for (double delta : delta_grid) {
        const double m = std::abs(delta);
        const bool in_range = (kind == OptionKind::Call ? delta > 0.0 : delta < 0.0) &&
                              m >= 0.05 && m <= 0.95;
        if (!in_range) {
            std::cerr << "hedge_ratio_curve: skipping grid point "
                      << detail::format_double(delta) << " outside the model's delta range\n";
            continue;
        }

        const double predicted = std::visit(
            [&](const auto& mdl) -> double {
                using T = std::decay_t<decltype(mdl)>;
                if constexpr (std::is_same_v<T, BsBaselineModel>) {
                    return delta;
                } else if constexpr (std::is_same_v<T, FnnHedgeModel>) {
                    if (mdl.variant == ModelVariant::DNN2)
                        return fnn_predict_one(mdl, std::vector<double>{ttm, delta});
                    if (mdl.variant == ModelVariant::DNN3)
                        return fnn_predict_one(mdl, std::vector<double>{ttm, delta, sentiment});
                    throw config_error(
                        "hedge_ratio_curve: variant " + std::string(to_string(mdl.variant)) +
                        " needs features beyond (ttm, bs_delta, sentiment)");
                } else if constexpr (std::is_same_v<T, GruHedgeModel>) {
                    SequenceWindow w;
                    w.history.assign(kSequenceLength, sentiment);
                    w.contract_features = {ttm, delta};
                    return gru_predict(mdl, std::span<const SequenceWindow>{&w, 1})[0];
                } else {
                    throw config_error(
                        "hedge_ratio_curve: the Hull-White model needs per-quote Greeks, not a "
                        "(ttm, sentiment) slice");
                }
            },
            model);
        points.emplace_back(delta, predicted);
    }
    return points;
}

void write_training_log(const std::string& path, std::span<const TrainLogEntry> log) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write training log: " + path);
    out << "epoch,train_loss,val_loss,stopped\n";
    for (const auto& e : log) {
        out << e.epoch << ',' << detail::format_double(e.train_loss) << ','
            << detail::format_double(e.val_loss) << ',' << (e.stopped ? 1 : 0) << '\n';
    }
    if (!out) throw io_error("write failed: " + path);
}

void write_eval_report(const std::string& path, const EvalReport& report) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write evaluation report: " + path);
    out << "bucket,n,mse_model,mse_bs,gain\n";
    auto row = [&](const std::string& label, const BucketMetrics& m) {
        out << label << ',' << m.n << ',' << detail::format_double(m.mse_model) << ','
            << detail::format_double(m.mse_bs) << ','
            << (m.gain ? detail::format_double(*m.gain) : "NA") << '\n';
    };
    for (const auto& [bucket, metrics] : report.per_bucket)
        row(detail::format_double(bucket.center()), metrics);
    row("overall", report.overall);
    if (!out) throw io_error("write failed: " + path);
}

void write_curve(const std::string& path, std::span<const std::pair<double, double>> points) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write curve: " + path);
    out << "bs_delta,predicted_delta\n";
    for (const auto& [x, y] : points)
        out << detail::format_double(x) << ',' << detail::format_double(y) << '\n';
    if (!out) throw io_error("write failed: " + path);
}

}  // namespace mvhedge
