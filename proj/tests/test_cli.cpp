#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

// Exercises the installed binary end to end: exit codes, determinism and the
// documented file outputs.

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(MVHEDGE_BIN) + " " + args + " >cli_stdout.txt 2>cli_stderr.txt";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), {});
}

std::size_t line_count(const std::string& text) {
    std::size_t n = 0;
    for (char c : text)
        if (c == '\n') ++n;
    return n;
}

const char* kSmallSynth =
    "synth --n-days 200 --moneyness 0.95 1.0 1.05 --maturities 30 91 --seed 11";

/// Removes the capture files and run directories a test case leaves behind.
struct Cleanup {
    std::vector<std::string> paths;
    ~Cleanup() {
        for (const auto& p : paths) std::filesystem::remove_all(p);
        std::filesystem::remove("cli_stdout.txt");
        std::filesystem::remove("cli_stderr.txt");
        std::filesystem::remove("run_config.txt");
    }
};

}  // namespace

TEST_CASE("usage errors exit with code 2") {
    Cleanup cleanup;
    CHECK(run("train --data x.csv --test-start 2016-01-01 --out-dir d") == 2);  // missing --kind
    CHECK(run("nonsense") == 2);
    CHECK(run("eval --checkpoint c --data d") == 2);  // missing required flags
    CHECK(run("--help") == 0);
    CHECK(run("--version") == 0);
}

TEST_CASE("invalid flag values exit with code 2") {
    Cleanup cleanup{{"d2"}};
    CHECK(run(std::string(kSmallSynth) + " --out ok.csv") == 0);
    CHECK(run("train --data ok.csv --variant nosuch --kind call --test-start 2010-06-01 "
              "--out-dir d2") == 2);
    CHECK(run("train --data ok.csv --variant dnn2 --kind scall --test-start 2010-06-01 "
              "--out-dir d2") == 2);
    CHECK(run("train --data ok.csv --variant dnn2 --kind call --test-start June-01 "
              "--out-dir d2") == 2);
    std::remove("ok.csv");
}

TEST_CASE("runtime and data errors exit with code 1") {
    Cleanup cleanup{{"d3"}};
    CHECK(run("eval --checkpoint no.mvhg --data no.csv --test-start 2016-01-01 --out r.csv") == 1);
    CHECK(run("train --data missing.csv --variant dnn2 --kind call --test-start 2016-01-01 "
              "--out-dir d3") == 1);
}

TEST_CASE("synth is deterministic byte for byte") {
    Cleanup cleanup;
    CHECK(run(std::string(kSmallSynth) + " --out s1.csv") == 0);
    CHECK(run(std::string(kSmallSynth) + " --out s2.csv") == 0);
    const auto a = slurp("s1.csv");
    CHECK(!a.empty());
    CHECK(a == slurp("s2.csv"));
    std::remove("s2.csv");

    SUBCASE("different seeds differ") {
        CHECK(run("synth --n-days 200 --moneyness 0.95 1.0 1.05 --maturities 30 91 --seed 12 "
                  "--out s3.csv") == 0);
        CHECK(slurp("s3.csv") != a);
        std::remove("s3.csv");
    }
    std::remove("s1.csv");
}

TEST_CASE("train/eval/predict/curve happy path with config echo") {
    Cleanup cleanup{{"cli_run", "cli_run2", "cli_bs", "cli_bs2", "panel_cli.csv"}};
    REQUIRE(run(std::string(kSmallSynth) + " --out panel_cli.csv") == 0);

    const std::string train_args =
        "train --data panel_cli.csv --variant dnn2 --kind call --test-start 2010-08-02 "
        "--max-epochs 2 --batch-size 256 --width 16 --depth 2 --seed 5 --out-dir cli_run";
    REQUIRE(run(train_args) == 0);

    SUBCASE("outputs exist and the config echo is reusable") {
        CHECK(!slurp("cli_run/checkpoint.mvhg").empty());
        const auto log = slurp("cli_run/training_log.csv");
        CHECK(line_count(log) == 3);  // header + 2 epochs
        const auto echo = slurp("cli_run/run_config.txt");
        CHECK(echo.find("command = train") != std::string::npos);
        CHECK(echo.find("variant = dnn2") != std::string::npos);
        CHECK(echo.find("mvhedge 1.0.0") != std::string::npos);
    }
    SUBCASE("eval writes one row per non-empty bucket plus overall") {
        REQUIRE(run("eval --checkpoint cli_run/checkpoint.mvhg --data panel_cli.csv "
                    "--test-start 2010-08-02 --out cli_report.csv") == 0);
        const auto report = slurp("cli_report.csv");
        CHECK(report.rfind("bucket,n,mse_model,mse_bs,gain\n", 0) == 0);
        CHECK(report.find("\noverall,") != std::string::npos);
        std::remove("cli_report.csv");
    }
    SUBCASE("a kind flag that contradicts the checkpoint is an error") {
        CHECK(run("eval --checkpoint cli_run/checkpoint.mvhg --data panel_cli.csv "
                  "--test-start 2010-08-02 --kind put --out cli_report2.csv") == 1);
        CHECK(run("predict --checkpoint cli_run/checkpoint.mvhg --data panel_cli.csv "
                  "--kind put --out cli_pred2.csv") == 1);
        CHECK(run("eval --checkpoint cli_run/checkpoint.mvhg --data panel_cli.csv "
                  "--test-start 2010-08-02 --kind call --out cli_report2.csv") == 0);
        std::remove("cli_report2.csv");
    }
    SUBCASE("train/eval pipeline is deterministic end to end") {
        REQUIRE(run(train_args.substr(0, train_args.size() - 7) + "cli_run2") == 0);
        CHECK(slurp("cli_run/checkpoint.mvhg") == slurp("cli_run2/checkpoint.mvhg"));
        CHECK(slurp("cli_run/training_log.csv") == slurp("cli_run2/training_log.csv"));
    }
    SUBCASE("predict emits one row per predictable quote") {
        REQUIRE(run("predict --checkpoint cli_run/checkpoint.mvhg --data panel_cli.csv "
                    "--out cli_pred.csv") == 0);
        const auto pred = slurp("cli_pred.csv");
        CHECK(pred.rfind("quote_date,expiry_date,cp_flag,strike,bs_delta,predicted_delta\n", 0) ==
              0);
        CHECK(line_count(pred) > 100);
        std::remove("cli_pred.csv");
    }
    SUBCASE("curve on a bs checkpoint is the diagonal") {
        REQUIRE(run("train --data panel_cli.csv --variant bs --kind call "
                    "--test-start 2010-08-02 --out-dir cli_bs") == 0);
        REQUIRE(run("curve --checkpoint cli_bs/checkpoint.mvhg --sentiment 0.2 "
                    "--out cli_curve.csv") == 0);
        const auto curve = slurp("cli_curve.csv");
        CHECK(line_count(curve) == 20);  // header + 19 grid points
        CHECK(curve.find("0.5,0.5\n") != std::string::npos);
        std::remove("cli_curve.csv");
    }
    SUBCASE("curve presets need data") {
        REQUIRE(run("train --data panel_cli.csv --variant bs --kind call "
                    "--test-start 2010-08-02 --out-dir cli_bs2") == 0);
        CHECK(run("curve --checkpoint cli_bs2/checkpoint.mvhg --sentiment median "
                  "--out x.csv") == 1);
        CHECK(run("curve --checkpoint cli_bs2/checkpoint.mvhg --sentiment median "
                  "--data panel_cli.csv --out cli_curve2.csv") == 0);
        CHECK(line_count(slurp("cli_curve2.csv")) == 20);
        std::remove("cli_curve2.csv");
    }
}

TEST_CASE("gru variant trains, evaluates and predicts through the CLI") {
    Cleanup cleanup{{"gru_run"}};
    REQUIRE(run("synth --n-days 120 --moneyness 1.0 --maturities 60 --seed 13 "
                "--out gru_panel.csv") == 0);
    REQUIRE(run("train --data gru_panel.csv --variant dnngru --kind call "
                "--test-start 2010-05-03 --max-epochs 2 --batch-size 128 --seed 3 "
                "--out-dir gru_run") == 0);
    REQUIRE(run("eval --checkpoint gru_run/checkpoint.mvhg --data gru_panel.csv "
                "--test-start 2010-05-03 --out gru_report.csv") == 0);
    CHECK(slurp("gru_report.csv").find("\noverall,") != std::string::npos);
    REQUIRE(run("predict --checkpoint gru_run/checkpoint.mvhg --data gru_panel.csv "
                "--out gru_pred.csv") == 0);
    CHECK(line_count(slurp("gru_pred.csv")) > 10);
    REQUIRE(run("curve --checkpoint gru_run/checkpoint.mvhg --sentiment 0.2 "
                "--out gru_curve.csv") == 0);
    CHECK(line_count(slurp("gru_curve.csv")) == 20);
    for (const char* f : {"gru_panel.csv", "gru_report.csv", "gru_pred.csv", "gru_curve.csv"})
        std::remove(f);
}

TEST_CASE("config file values are read and flags override them") {
    Cleanup cleanup;
    {
        std::ofstream cfg("synth_cfg.txt");
        cfg << "# small panel\n";
        cfg << "n-days = 120\n";
        cfg << "seed = 21\n";
        cfg << "out = cfg_panel.csv\n";
        cfg << "moneyness = 1.0\n";
        cfg << "maturities = 30\n";
    }
    CHECK(run("synth --config synth_cfg.txt") == 0);
    const auto body = slurp("cfg_panel.csv");
    CHECK(line_count(body) == 1 + 120 * 2);  // header + rows

    // the flag wins over the file
    CHECK(run("synth --config synth_cfg.txt --n-days 60 --out cfg_panel2.csv") == 0);
    CHECK(line_count(slurp("cfg_panel2.csv")) == 1 + 60 * 2);

    std::remove("synth_cfg.txt");
    std::remove("cfg_panel.csv");
    std::remove("cfg_panel2.csv");
}
