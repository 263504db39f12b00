// Copyright 2026 The raha Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "raha/attention.hpp"
#include "raha/dataset.hpp"
#include "raha/features.hpp"
#include "raha/head.hpp"
#include "raha/prompts.hpp"

namespace raha {

enum class InitPolicy { kNone, kRandom };

std::string to_string(InitPolicy policy);
InitPolicy init_policy_from_string(const std::string& name);

struct RunConfig {
    int k_train = 3;
    int k_test = 5;
    InitPolicy init = InitPolicy::kNone;
    std::uint64_t init_seed = 0;
    int batch_size = 4;
    int epochs_per_iteration = 1;
    RatingScale scale;
    PromptLimits limits;

    void validate() const;
};

struct TraceEntry {
    int k = 0;
    std::optional<double> prior;  // value carried into this iteration
    double y = 0.0;
    Eigen::VectorXd h;  // extracted features for this iteration's prompt
};

struct PredictionTrace {
    std::string sample_id;
    bool diverged = false;
    std::vector<TraceEntry> entries;
};

struct TrainLog {
    std::vector<double> iteration_mean_loss;  // index k-1
    std::vector<std::string> lines;
};

// Iteratively trains the head: each alignment iteration renders prompts
// with the previous iteration's predictions (None first), runs the
// configured number of epochs of batched updates, then recomputes every
// sample's prediction with the updated parameters for the next iteration.
TrainLog train(const std::vector<Sample>& samples,
               const std::vector<SampleAttention>& attentions,
               const TemplateSet& templates, const FeatureExtractor& extractor,
               HeadParams& params, AdamState& state, const HeadConfig& head_config,
               const RunConfig& run_config, std::uint64_t shuffle_seed);

// Runs k_test chained predictions with frozen parameters. A prediction
// whose magnitude exceeds 10x the scale bound marks the trace diverged
// and stops it early.
PredictionTrace infer(const Sample& sample, const SampleAttention& attention,
                      const TemplateSet& templates, const FeatureExtractor& extractor,
                      const HeadParams& params, const RunConfig& config);

struct TraceMeta {
    std::string extractor_id;
    std::string init_policy;
    std::uint64_t init_seed = 0;
    int k_test = 0;
    std::string config_hash;
};

// JSONL, one record per (sample, iteration); meta goes to a sidecar file
// at path with extension ".meta.json".
void save_traces(const std::filesystem::path& path,
                 const std::vector<PredictionTrace>& traces, const TraceMeta& meta);

struct LoadedTraces {
    std::vector<PredictionTrace> traces;
    TraceMeta meta;
};

LoadedTraces load_traces(const std::filesystem::path& path);

// Uniform draw over the rating scale, keyed by the sample id so traces
// are reproducible sample by sample.
double random_init_value(const std::string& sample_id, std::uint64_t seed,
                         const RatingScale& scale);

}  // namespace raha
