// Copyright 2026 The raha Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <ostream>

#include "raha/config.hpp"

namespace raha {

// Pipeline subcommands as library calls so tests can drive them without a
// process boundary. Each returns a process exit code and reports through
// the stream; thrown exceptions are caught at the CLI layer instead.

// Judges every (root, leaf) pair in the dataset and writes one attention
// artifact per sample plus attend_stats.json under <output_dir>/attention.
int cmd_attend(const PipelineConfig& config, std::ostream& out);

// Trains the head on the train split and writes checkpoint.json and
// train_log.txt under <output_dir>. An existing checkpoint with different
// dimensions aborts the run.
int cmd_train(const PipelineConfig& config, std::ostream& out);

// Runs chained inference over the test split against the stored
// checkpoint; writes traces.jsonl (+ .meta.json) under <output_dir>.
int cmd_infer(const PipelineConfig& config, std::ostream& out);

// Scores stored traces: report.json, report.txt, iteration_mae.csv,
// iteration_kl.csv under <output_dir>.
int cmd_eval(const PipelineConfig& config, std::ostream& out);

struct MarkovOptions {
    std::optional<std::filesystem::path> spec_path;  // absent = built-in suite
    std::filesystem::path output_dir = "markov_out";
    int chains = 100;
    int n = 8;
    int p = 4;
    std::uint64_t seed = 1;
};

// Either iterates one chain spec file or runs the randomized verification
// suite (contraction, divergence flagging, decay slopes); trajectories and
// a pass/fail summary land in output_dir.
int cmd_markov(const MarkovOptions& options, std::ostream& out);

}  // namespace raha
