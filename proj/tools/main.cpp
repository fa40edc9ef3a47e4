#include <CLI11.hpp>
#include <algorithm>
#include <fstream>
#include <iostream>

#include "cli_commands.hpp"

using namespace mvhedge;

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

/// Expand `--config FILE` into command-line tokens. The file holds
/// `key = value` lines with `#` comments; keys name long options without the
/// dashes. Keys already given explicitly on the command line are skipped, so
/// flags override the file. Multi-token values expand into list arguments.
std::vector<std::string> expand_config(std::vector<std::string> args) {
    std::string config_path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            config_path = args[i + 1];
            args.erase(args.begin() + i, args.begin() + i + 2);
            break;
        }
        if (args[i].rfind("--config=", 0) == 0) {
            config_path = args[i].substr(9);
            args.erase(args.begin() + i);
            break;
        }
    }
    if (config_path.empty()) return args;

    std::ifstream in(config_path);
    if (!in) throw CLI::FileError::Missing(config_path);

    auto has_flag = [&](const std::string& flag) {
        for (const auto& a : args)
            if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
        return false;
    };

    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw CLI::FileError(config_path + ": expected 'key = value', got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw CLI::FileError(config_path + ": empty key");
        const std::string flag = "--" + key;
        if (has_flag(flag)) continue;  // explicit flag wins
        if (value.find_first_of(" \t") == std::string::npos) {
            args.push_back(flag + "=" + value);
        } else {
            args.push_back(flag);
            std::size_t start = 0;
            while (start < value.size()) {
                const auto end = value.find_first_of(" \t", start);
                if (start != (end == std::string::npos ? value.size() : end))
                    args.push_back(value.substr(start, end - start));
                if (end == std::string::npos) break;
                start = end + 1;
            }
        }
    }
    return args;
}

Date parse_date_flag(const std::string& text, const char* flag) {
    const auto d = Date::parse_iso(text);
    if (!d) throw CLI::ValidationError(flag, "expected an ISO date (YYYY-MM-DD), got '" + text + "'");
    return *d;
}

ModelVariant parse_variant_flag(const std::string& text) {
    const auto v = parse_variant(text);
    if (!v) throw CLI::ValidationError("--variant", "unknown model variant '" + text + "'");
    return *v;
}

OptionKind parse_kind_flag(const std::string& text) {
    if (text == "call") return OptionKind::Call;
    if (text == "put") return OptionKind::Put;
    throw CLI::ValidationError("--kind", "expected 'call' or 'put', got '" + text + "'");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Minimum-variance hedge ratios for European index options"};
    app.set_version_flag("--version", cli::kToolVersion);
    app.require_subcommand(1);

    // ---- synth ----
    cli::SynthOptions synth;
    std::string synth_out = "panel.csv";
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic quote panel");
    std::string config_doc;
    synth_cmd->add_option("--config", config_doc, "key = value config file; flags override it");
    synth_cmd->add_option("--out", synth_out, "output quote CSV")->capture_default_str();
    synth_cmd->add_option("--n-days", synth.gen.n_days, "trading days to simulate")
        ->capture_default_str();
    synth_cmd->add_option("--spot0", synth.gen.spot0)->capture_default_str();
    synth_cmd->add_option("--vol0", synth.gen.vol0)->capture_default_str();
    synth_cmd->add_option("--long-vol", synth.gen.long_vol)->capture_default_str();
    synth_cmd->add_option("--mean-rev", synth.gen.mean_rev)->capture_default_str();
    synth_cmd->add_option("--vol-of-vol", synth.gen.vol_of_vol)->capture_default_str();
    synth_cmd->add_option("--corr", synth.gen.corr, "spot-vol shock correlation")
        ->capture_default_str();
    synth_cmd->add_option("--rate", synth.gen.rate)->capture_default_str();
    synth_cmd->add_option("--div-yield", synth.gen.div_yield)->capture_default_str();
    synth_cmd->add_option("--moneyness", synth.gen.strike_grid, "strike grid as K/S ratios");
    synth_cmd->add_option("--maturities", synth.gen.maturity_grid, "maturity grid in days");
    synth_cmd->add_option("--seed", synth.gen.seed)->capture_default_str();
    synth_cmd->add_option("--out-dir", synth.out_dir, "directory for the config echo");

    // ---- train ----
    cli::TrainOptions train;
    std::string train_variant = "dnn3", train_kind, train_test_start;
    auto* train_cmd = app.add_subcommand("train", "fit a hedge-ratio model on a quote panel");
    train_cmd->add_option("--config", config_doc, "key = value config file; flags override it");
    train_cmd->add_option("--data", train.data_csv, "quote CSV")->required();
    train_cmd->add_option("--variant", train_variant,
                          "dnn2|dnn3|dnn2plus|dnn3plus|dnn3star|dnngru|hw|bs")
        ->capture_default_str();
    train_cmd->add_option("--kind", train_kind, "call|put")->required();
    train_cmd->add_option("--test-start", train_test_start, "first test date (ISO)")->required();
    train_cmd->add_option("--val-fraction", train.val_fraction)->capture_default_str();
    train_cmd->add_option("--batch-size", train.train.batch_size)->capture_default_str();
    train_cmd->add_option("--learning-rate", train.train.learning_rate)->capture_default_str();
    train_cmd->add_option("--max-epochs", train.train.max_epochs)->capture_default_str();
    train_cmd->add_option("--patience", train.train.patience)->capture_default_str();
    train_cmd->add_option("--clip-norm", train.train.clip_norm)->capture_default_str();
    train_cmd->add_option("--eval-every", train.train.eval_every)->capture_default_str();
    train_cmd->add_option("--seed", train.train.seed, "shuffle/split seed")->capture_default_str();
    train_cmd->add_option("--init-seed", train.init_seed, "parameter initialization seed")
        ->capture_default_str();
    train_cmd->add_option("--width", train.hidden_width)->capture_default_str();
    train_cmd->add_option("--depth", train.hidden_depth)->capture_default_str();
    train_cmd->add_option("--gru-hidden", train.gru_hidden)->capture_default_str();
    train_cmd->add_flag("--sigmoid-output", train.sigmoid_output,
                        "sigmoid output head instead of the clamp");
    train_cmd->add_option("--out-dir", train.out_dir, "checkpoint/log directory")->required();

    // ---- eval ----
    cli::EvalOptions eval;
    std::string eval_test_start;
    auto* eval_cmd = app.add_subcommand("eval", "per-bucket gain report on the test period");
    eval_cmd->add_option("--config", config_doc, "key = value config file; flags override it");
    eval_cmd->add_option("--checkpoint", eval.checkpoint)->required();
    eval_cmd->add_option("--data", eval.data_csv)->required();
    eval_cmd->add_option("--test-start", eval_test_start, "first test date (ISO)")->required();
    eval_cmd->add_option("--kind", eval.kind, "call|put; must match the checkpoint");
    eval_cmd->add_option("--out", eval.out_csv, "report CSV")->required();
    eval_cmd->add_option("--out-dir", eval.out_dir);

    // ---- predict ----
    cli::PredictOptions predict;
    auto* predict_cmd = app.add_subcommand("predict", "batch hedge ratios for a quote CSV");
    predict_cmd->add_option("--config", config_doc, "key = value config file; flags override it");
    predict_cmd->add_option("--checkpoint", predict.checkpoint)->required();
    predict_cmd->add_option("--data", predict.data_csv)->required();
    predict_cmd->add_option("--kind", predict.kind, "call|put; must match the checkpoint");
    predict_cmd->add_option("--out", predict.out_csv)->required();
    predict_cmd->add_option("--out-dir", predict.out_dir);

    // ---- curve ----
    cli::CurveOptions curve;
    auto* curve_cmd = app.add_subcommand("curve", "hedge ratio as a function of BS delta");
    curve_cmd->add_option("--config", config_doc, "key = value config file; flags override it");
    curve_cmd->add_option("--checkpoint", curve.checkpoint)->required();
    curve_cmd->add_option("--sentiment", curve.sentiment,
                          "sentiment level: a number, 'median' or 'stress'")
        ->default_val("median");
    curve_cmd->add_option("--data", curve.data_csv, "panel for the median/stress presets");
    curve_cmd->add_option("--ttm-days", curve.ttm_days)->capture_default_str();
    curve_cmd->add_option("--grid-start", curve.grid_start)->capture_default_str();
    curve_cmd->add_option("--grid-stop", curve.grid_stop)->capture_default_str();
    curve_cmd->add_option("--grid-step", curve.grid_step)->capture_default_str();
    curve_cmd->add_option("--out", curve.out_csv, "curve CSV")->required();
    curve_cmd->add_option("--out-dir", curve.out_dir);

    try {
        std::vector<std::string> args(argv + 1, argv + argc);
        args = expand_config(std::move(args));
        std::reverse(args.begin(), args.end());  // CLI11's vector parse expects reversed args
        app.parse(std::move(args));
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;  // 0 for --help/--version, 2 for usage errors
    }

    try {
        if (synth_cmd->parsed()) {
            synth.out_csv = synth_out;
            cli::run_synth(synth);
        } else if (train_cmd->parsed()) {
            train.variant = parse_variant_flag(train_variant);
            train.kind = parse_kind_flag(train_kind);
            train.test_start = parse_date_flag(train_test_start, "--test-start");
            cli::run_train(train);
        } else if (eval_cmd->parsed()) {
            eval.test_start = parse_date_flag(eval_test_start, "--test-start");
            cli::run_eval(eval);
        } else if (predict_cmd->parsed()) {
            cli::run_predict(predict);
        } else if (curve_cmd->parsed()) {
            cli::run_curve(curve);
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
