// Copyright 2026 The raha Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "raha/commands.hpp"
#include "raha/config.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::optional<std::string> cache_dir;
    std::optional<int> parallelism;
    std::optional<std::uint64_t> init_seed;
    std::optional<std::string> init_policy;
    std::optional<int> k_test;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_run_flags) {
    cmd->add_option("--config", args.config_path, "Pipeline config JSON")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--cache-dir", args.cache_dir,
                    "Override the response cache directory");
    cmd->add_option("--parallelism", args.parallelism,
                    "Override pair-judging parallelism");
    if (with_run_flags) {
        cmd->add_option("--init", args.init_policy,
                        "Prior initialization policy (none|random)");
        cmd->add_option("--seed", args.init_seed,
                        "Seed for the random prior initialization");
        cmd->add_option("--k", args.k_test, "Override the inference iteration count");
    }
}

raha::PipelineConfig load_with_overrides(const CommonArgs& args) {
    raha::PipelineConfig config = raha::PipelineConfig::load(args.config_path);
    raha::Overrides overrides;
    overrides.cache_dir = args.cache_dir;
    overrides.parallelism = args.parallelism;
    overrides.init_seed = args.init_seed;
    overrides.init_policy = args.init_policy;
    overrides.k_test = args.k_test;
    raha::apply_overrides(config, overrides);
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hierarchical text rating pipeline"};
    app.require_subcommand(1);

    CommonArgs attend_args, train_args, infer_args, eval_args;
    CLI::App* attend = app.add_subcommand("attend", "Judge and filter (root, leaf) pairs");
    add_common(attend, attend_args, false);
    CLI::App* train = app.add_subcommand("train", "Train the prediction head");
    add_common(train, train_args, false);
    CLI::App* infer = app.add_subcommand("infer", "Run chained inference on the test split");
    add_common(infer, infer_args, true);
    CLI::App* eval = app.add_subcommand("eval", "Score stored traces");
    add_common(eval, eval_args, false);

    raha::MarkovOptions markov_options;
    std::string markov_spec;
    std::string markov_out = "markov_out";
    CLI::App* markov = app.add_subcommand("markov", "Linear recurrence verification lab");
    markov->add_option("--spec", markov_spec, "Chain spec JSON (omit for the built-in suite)")
        ->check(CLI::ExistingFile);
    markov->add_option("--out", markov_out, "Output directory");
    markov->add_option("--chains", markov_options.chains, "Suite size");
    markov->add_option("--seed", markov_options.seed, "Suite seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (attend->parsed()) {
            return raha::cmd_attend(load_with_overrides(attend_args), std::cout);
        }
        if (train->parsed()) {
            return raha::cmd_train(load_with_overrides(train_args), std::cout);
        }
        if (infer->parsed()) {
            return raha::cmd_infer(load_with_overrides(infer_args), std::cout);
        }
        if (eval->parsed()) {
            return raha::cmd_eval(load_with_overrides(eval_args), std::cout);
        }
        if (markov->parsed()) {
            if (!markov_spec.empty()) {
                markov_options.spec_path = markov_spec;
            }
            markov_options.output_dir = markov_out;
            return raha::cmd_markov(markov_options, std::cout);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
