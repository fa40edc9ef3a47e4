#pragma once

// Command implementations behind the mvhedge CLI, kept separate from the
// argv wiring so tests can drive full pipelines in-process.

#include <string>

#include "mvhedge/synth_market.hpp"
#include "mvhedge/train_eval.hpp"

namespace mvhedge::cli {

inline constexpr const char* kToolVersion = "mvhedge 1.0.0";

struct SynthOptions {
    GeneratorConfig gen;
    std::string out_csv;
    std::string out_dir;  // config echo location; empty skips the echo
};

struct TrainOptions {
    std::string data_csv;
    ModelVariant variant = ModelVariant::DNN3;
    OptionKind kind = OptionKind::Call;
    Date test_start;
    double val_fraction = 0.2;
    TrainConfig train;
    std::uint64_t init_seed = 1;  // network initialization stream
    std::size_t hidden_width = 128;
    std::size_t hidden_depth = 3;
    std::size_t gru_hidden = 8;
    bool sigmoid_output = false;
    std::string out_dir;

    std::string checkpoint_path() const { return out_dir + "/checkpoint.mvhg"; }
    std::string log_path() const { return out_dir + "/training_log.csv"; }
};

struct EvalOptions {
    std::string checkpoint;
    std::string data_csv;
    Date test_start;
    std::string kind;  // optional; must match the checkpoint when given
    std::string out_csv;
    std::string out_dir;
};

struct PredictOptions {
    std::string checkpoint;
    std::string data_csv;
    std::string kind;  // optional; must match the checkpoint when given
    std::string out_csv;
    std::string out_dir;
};

struct CurveOptions {
    std::string checkpoint;
    std::string data_csv;       // needed for the median/stress presets
    std::string sentiment;      // numeric literal, "median" or "stress"
    double ttm_days = 30.0;
    double grid_start = 0.0;    // 0 means kind-dependent default
    double grid_stop = 0.0;
    double grid_step = 0.05;
    std::string out_csv;
    std::string out_dir;
};

/// Each command returns the number of primary output rows written (quotes,
/// log entries, report rows, predictions, curve points). Errors surface as
/// exceptions; the CLI main maps them to exit codes.
std::size_t run_synth(const SynthOptions& opt);
std::size_t run_train(const TrainOptions& opt);
std::size_t run_eval(const EvalOptions& opt);
std::size_t run_predict(const PredictOptions& opt);
std::size_t run_curve(const CurveOptions& opt);

}  // namespace mvhedge::cli
