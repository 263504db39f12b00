// Copyright 2026 The raha Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "raha/dataset.hpp"
#include "raha/gateway.hpp"
#include "raha/prompts.hpp"

namespace raha {

struct PairJudgment {
    int leaf_index = 0;  // 1-based position within the sample
    int attention = 0;   // 0 or 1
    std::string update_text;
    bool parse_fallback = false;
};

struct FilteredUpdates {
    std::vector<IndexedUpdate> updates;  // kept entries, original order
    int total = 0;                       // m
    int kept = 0;                        // m' = sum of attention bits
};

struct SampleAttention {
    std::string sample_id;
    std::vector<PairJudgment> judgments;  // one per leaf, in order
    FilteredUpdates filtered;
};

struct AttendOptions {
    std::string model = "mock";
    double temperature = 0.0;
    int max_tokens = 512;
    std::uint64_t seed = 0;
    int parallelism = 4;
    PromptLimits limits;
};

// Two generations per pair (importance bit, comparison text). An
// unparseable importance reply is retried once with a clarifying suffix;
// if that also fails the leaf is kept (attention = 1) and flagged.
PairJudgment attend_pair(Gateway& gateway, const TemplateSet& templates,
                         std::string_view root_text, std::string_view leaf_text,
                         int leaf_index, const AttendOptions& options);

// Elementwise mask application. Judgment order defines leaf order; kept
// count never exceeds the total.
FilteredUpdates filter_updates(const std::vector<PairJudgment>& judgments);

// Judges every leaf (fanned out across options.parallelism threads) and
// filters. A sample with no leaves makes no backend calls.
SampleAttention attend_sample(Gateway& gateway, const TemplateSet& templates,
                              const Sample& sample, const AttendOptions& options);

// One JSON artifact per sample under dir, named by sanitized sample id.
void save_attention(const std::filesystem::path& dir, const SampleAttention& attention);
SampleAttention load_attention(const std::filesystem::path& dir, const std::string& sample_id);

}  // namespace raha
