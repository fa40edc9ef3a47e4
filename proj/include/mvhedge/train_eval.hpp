#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mvhedge/models/checkpoint.hpp"

namespace mvhedge {

struct TrainConfig {
    std::size_t batch_size = 1024;
    double learning_rate = 0.0005;
    int max_epochs = 200;
    int patience = 5;  // consecutive non-improving validation checks
    double clip_norm = 5.0;
    std::uint64_t seed = 0;
    int eval_every = 1;  // epochs between validation checks
};

struct TrainLogEntry {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    bool stopped = false;  // early stopping triggered at this check
};

struct TrainResult {
    std::vector<TrainLogEntry> log;
    double best_val_loss = 0.0;
    int best_epoch = 0;
};

/// Early stopping on validation loss: strict improvement resets the streak;
/// `patience` consecutive non-improving checks stop training. The caller
/// snapshots the model whenever observe() reports an improvement.
class EarlyStopper {
public:
    explicit EarlyStopper(int patience) : patience_(patience) {}

    /// Returns true when this check improved on the best loss so far.
    bool observe(double val_loss) {
        if (!seen_ || val_loss < best_) {
            best_ = val_loss;
            seen_ = true;
            streak_ = 0;
            return true;
        }
        ++streak_;
        return false;
    }

    bool should_stop() const { return streak_ >= patience_; }
    double best() const { return best_; }

private:
    int patience_;
    double best_ = 0.0;
    int streak_ = 0;
    bool seen_ = false;
};

/// Mean squared local hedging error: mean((dV - delta * dS)^2).
double hedge_loss(std::span<const double> predictions, std::span<const HedgeSample> samples);

/// Mini-batch SGD with Adam, global-norm gradient clipping and early
/// stopping on the validation hedging loss. Feature statistics are estimated
/// on the training split before the first epoch. The model with the best
/// validation loss seen is restored on return. Deterministic given cfg.seed.
TrainResult train_fnn(FnnHedgeModel& model, const DatasetSplit& split, const TrainConfig& cfg);
TrainResult train_gru(GruHedgeModel& model, const SequenceSplit& split, const TrainConfig& cfg);

/// Hedge ratios of any model on plain samples. GRU models need sequence
/// windows and reject this overload.
std::vector<double> predict(const HedgeModelAny& model, std::span<const HedgeSample> samples);
std::vector<double> predict(const HedgeModelAny& model, std::span<const SequenceSample> samples);

struct BucketMetrics {
    double mse_model = 0.0;
    double mse_bs = 0.0;
    std::optional<double> gain;  // 1 - mse_model/mse_bs; absent when mse_bs == 0
    std::size_t n = 0;
};

/// Per-delta-bucket and overall hedging MSE against the BS-delta baseline.
struct EvalReport {
    std::map<DeltaBucket, BucketMetrics> per_bucket;
    BucketMetrics overall;
};

EvalReport evaluate(std::span<const double> predictions, std::span<const HedgeSample> samples);
EvalReport evaluate(const HedgeModelAny& model, std::span<const HedgeSample> samples);
EvalReport evaluate(const HedgeModelAny& model, std::span<const SequenceSample> samples);

/// Model hedge ratio as a function of BS delta at fixed TTM and sentiment,
/// one (bs_delta, predicted) point per grid value. Grid points outside the
/// model's delta range are skipped with a warning on stderr. Supported for
/// models whose features are determined by (ttm, bs_delta, sentiment):
/// DNN2, DNN3, DNN-GRU (constant sentiment history) and the BS baseline.
std::vector<std::pair<double, double>> hedge_ratio_curve(const HedgeModelAny& model, double ttm,
                                                         double sentiment,
                                                         std::span<const double> delta_grid);

/// CSV emitters. Files end with a trailing newline; doubles use shortest
/// round-trip formatting, so identical inputs yield identical bytes.
void write_training_log(const std::string& path, std::span<const TrainLogEntry> log);
void write_eval_report(const std::string& path, const EvalReport& report);
void write_curve(const std::string& path, std::span<const std::pair<double, double>> points);

}  // namespace mvhedge
