// Copyright 2026 The raha Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "raha/util.hpp"
#include "test_support.hpp"

using namespace raha;
using nlohmann::json;

namespace {

namespace fs = std::filesystem;

struct CliResult {
    int exit_code = -1;
    std::string output;  // stdout and stderr combined
};

CliResult run_cli(const test::TempDir& tmp, const std::string& tag,
                  const std::string& args) {
    const fs::path log = tmp / ("cli-" + tag + ".log");
    const std::string cmd = std::string("\"") + RAHA_CLI_PATH + "\" " + args + " > \"" +
                            log.string() + "\" 2>&1";
    const int raw = std::system(cmd.c_str());
    CliResult r;
    if (WIFEXITED(raw)) {
        r.exit_code = WEXITSTATUS(raw);
    }
    if (fs::exists(log)) {
        r.output = read_file(log);
    }
    return r;
}

fs::path fixture_dataset() {
    return fs::path(RAHA_FIXTURE_DIR) / "hier12.jsonl";
}

fs::path write_pipeline_config(const test::TempDir& tmp, int rank,
                               const std::string& name) {
    json j = {
        {"dataset", {{"path", fixture_dataset().string()}, {"split_seed", 5}}},
        {"gateway", {{"backend", "mock"}, {"cache_dir", "cache"}}},
        {"extractor", {{"kind", "hash"}, {"dim", 32}, {"seed", 2}}},
        {"head", {{"dim", 32}, {"rank", rank}, {"lr", 0.05}, {"seed", 7}}},
        {"run",
         {{"k_train", 2}, {"k_test", 3}, {"batch_size", 4}, {"epochs_per_iteration", 4}}},
        {"train_shuffle_seed", 13},
        {"output_dir", "out"},
    };
    const fs::path path = tmp / name;
    write_file_atomic(path, j.dump(2) + "\n");
    return path;
}

std::size_t count_attention_artifacts(const fs::path& dir) {
    std::size_t n = 0;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.path().filename() != "attend_stats.json") {
            ++n;
        }
    }
    return n;
}

std::size_t count_lines(const std::string& text) {
    std::size_t n = 0;
    for (char c : text) {
        n += (c == '\n') ? 1 : 0;
    }
    return n;
}

}  // namespace

TEST_CASE("the cli reports usage and rejects bad invocations") {
    test::TempDir tmp("cli-usage");
    const CliResult help = run_cli(tmp, "help", "--help");
    CHECK(help.exit_code == 0);
    for (const char* name : {"attend", "train", "infer", "eval", "markov"}) {
        CHECK(help.output.find(name) != std::string::npos);
    }

    CHECK(run_cli(tmp, "nosub", "").exit_code != 0);
    CHECK(run_cli(tmp, "noconfig", "attend").exit_code != 0);
    CHECK(run_cli(tmp, "badpath", "attend --config /nonexistent/config.json").exit_code !=
          0);

    // A config whose dataset is missing fails without leaving outputs.
    write_file_atomic(tmp / "bad.json", R"({"dataset":{"path":"missing.jsonl"}})");
    const CliResult bad =
        run_cli(tmp, "baddata", "attend --config \"" + (tmp / "bad.json").string() + "\"");
    CHECK(bad.exit_code != 0);
    CHECK(bad.output.find("error:") != std::string::npos);
    CHECK_FALSE(fs::exists(tmp / "out"));
}

TEST_CASE("the pipeline runs end to end over the bundled fixture") {
    test::TempDir tmp("cli-pipeline");
    const fs::path config = write_pipeline_config(tmp, 2, "config.json");
    const std::string cfg_arg = "--config \"" + config.string() + "\"";

    // Cold attend touches the backend for every pair.
    const CliResult attend = run_cli(tmp, "attend", "attend " + cfg_arg);
    REQUIRE(attend.exit_code == 0);
    const fs::path attention_dir = tmp / "out" / "attention";
    REQUIRE(fs::exists(attention_dir / "attend_stats.json"));
    CHECK(count_attention_artifacts(attention_dir) == 12);

    json stats = json::parse(read_file(attention_dir / "attend_stats.json"));
    CHECK(stats["samples"] == 12);
    CHECK(stats["pairs"].get<int>() > 0);
    CHECK(stats["kept"].get<int>() > 0);
    CHECK(stats["kept"].get<int>() < stats["pairs"].get<int>());
    CHECK(stats["backend_calls"].get<int>() > 0);

    // Warm attend is served entirely from the response cache.
    const CliResult warm = run_cli(tmp, "attend-warm", "attend " + cfg_arg);
    REQUIRE(warm.exit_code == 0);
    stats = json::parse(read_file(attention_dir / "attend_stats.json"));
    CHECK(stats["backend_calls"] == 0);
    CHECK(stats["cache_hits"].get<int>() > 0);

    // Training writes a checkpoint and a loss line per iteration.
    const CliResult train = run_cli(tmp, "train", "train " + cfg_arg);
    REQUIRE(train.exit_code == 0);
    CHECK(train.output.find("iteration 1/2 mean_loss ") != std::string::npos);
    CHECK(train.output.find("iteration 2/2 mean_loss ") != std::string::npos);
    const fs::path ckpt = tmp / "out" / "checkpoint.json";
    REQUIRE(fs::exists(ckpt));
    const std::string log_text = read_file(tmp / "out" / "train_log.txt");
    CHECK(log_text.rfind("config_hash ", 0) == 0);

    // Retraining with the same seeds reproduces the checkpoint byte for byte.
    const std::string ckpt_before = read_file(ckpt);
    REQUIRE(run_cli(tmp, "train-again", "train " + cfg_arg).exit_code == 0);
    CHECK(read_file(ckpt) == ckpt_before);

    // A config asking for different head dimensions refuses to clobber it.
    const fs::path config3 = write_pipeline_config(tmp, 3, "config3.json");
    const CliResult clash =
        run_cli(tmp, "train-clash", "train --config \"" + config3.string() + "\"");
    CHECK(clash.exit_code != 0);
    CHECK(clash.output.find("rank 3") != std::string::npos);
    CHECK(read_file(ckpt) == ckpt_before);

    // Inference over the test split writes chained traces.
    const CliResult infer = run_cli(tmp, "infer", "infer " + cfg_arg);
    REQUIRE(infer.exit_code == 0);
    CHECK(infer.output.find("2 traces") != std::string::npos);
    REQUIRE(fs::exists(tmp / "out" / "traces.jsonl"));
    REQUIRE(fs::exists(tmp / "out" / "traces.jsonl.meta.json"));

    // Scoring produces the reports and one curve row per iteration.
    const CliResult eval = run_cli(tmp, "eval", "eval " + cfg_arg);
    REQUIRE(eval.exit_code == 0);
    CHECK(eval.output.find("k=1") != std::string::npos);

    const std::string mae_csv = read_file(tmp / "out" / "iteration_mae.csv");
    CHECK(mae_csv.rfind("k,mae\n", 0) == 0);
    CHECK(count_lines(mae_csv) == 4);  // header + k_test rows
    const std::string kl_csv = read_file(tmp / "out" / "iteration_kl.csv");
    CHECK(kl_csv.rfind("k,kl_mean,kl_median\n", 0) == 0);

    const json report = json::parse(read_file(tmp / "out" / "report.json"));
    CHECK(report["mae_per_iteration"].size() == 3);
    CHECK(report["diverged_count"] == 0);

    // The --k flag overrides the trace length.
    REQUIRE(run_cli(tmp, "infer-k5", "infer --k 5 " + cfg_arg).exit_code == 0);
    const json meta = json::parse(read_file(tmp / "out" / "traces.jsonl.meta.json"));
    CHECK(meta["k_test"] == 5);
}

TEST_CASE("the markov suite passes and reports its tallies") {
    test::TempDir tmp("cli-markov");
    const fs::path out = tmp / "mk";
    const CliResult suite = run_cli(
        tmp, "suite", "markov --out \"" + out.string() + "\" --chains 20 --seed 3");
    REQUIRE(suite.exit_code == 0);
    CHECK(suite.output.find("20/20 converged within tolerance") != std::string::npos);
    CHECK(suite.output.find("20/20 expanding chains flagged") != std::string::npos);
    CHECK(suite.output.find("PASS") != std::string::npos);
    CHECK(fs::exists(out / "summary.txt"));
    const std::string traj = read_file(out / "trajectory_000.csv");
    CHECK(traj.rfind("k,y0,", 0) == 0);
}

TEST_CASE("the markov command iterates a chain spec file") {
    test::TempDir tmp("cli-markov-spec");
    const json contracting = {
        {"P", {2.0}}, {"F_p", {{1.0}}}, {"F_yy", {{0.5}}}, {"y0", {0.0}}};
    write_file_atomic(tmp / "spec.json", contracting.dump() + "\n");
    const fs::path out = tmp / "mk";
    const CliResult ok = run_cli(tmp, "spec",
                                 "markov --spec \"" + (tmp / "spec.json").string() +
                                     "\" --out \"" + out.string() + "\"");
    REQUIRE(ok.exit_code == 0);
    CHECK(ok.output.find("converged in") != std::string::npos);
    CHECK(fs::exists(out / "trajectory.csv"));

    const json expanding = {{"P", {2.0}}, {"F_p", {{1.0}}}, {"F_yy", {{1.5}}}};
    write_file_atomic(tmp / "bad.json", expanding.dump() + "\n");
    const CliResult div = run_cli(tmp, "spec-div",
                                  "markov --spec \"" + (tmp / "bad.json").string() +
                                      "\" --out \"" + out.string() + "\"");
    CHECK(div.exit_code == 1);
    CHECK(div.output.find("diverged after") != std::string::npos);
}
