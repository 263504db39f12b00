// Copyright 2026 The raha Authors
// SPDX-License-Identifier: Apache-2.0
//
// Deterministic construction of the two prompt families used by the
// pipeline: per-(root, leaf) pair prompts answered by the frozen backend,
// and the aggregation prompt answered by the trainable head. Rendering is
// a pure function of its inputs: identical inputs produce identical bytes.

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace raha {

// One surviving symbolic update, tagged with the leaf it came from.
struct IndexedUpdate {
    int leaf_index = 0;
    std::string text;
};

struct PromptLimits {
    // Per-slot character budget applied to every substituted text before
    // rendering. 2560 mirrors the default model input limit.
    std::size_t slot_budget = 2560;
};

struct TemplateSet {
    std::string id;           // academic | patent | custom
    std::string pair_task1;   // binary importance judgment; {abstract} {reference}
    std::string pair_task2;   // contrast/difference; {abstract} {reference}
    std::string aggregation;  // rating prompt; {abstract} {updates} {Property}

    static TemplateSet builtin_academic();
    static TemplateSet builtin_patent();

    // Loads pair_task1.txt, pair_task2.txt and aggregation.txt from a
    // directory. Unknown placeholders or missing required ones are a
    // load-time error.
    static TemplateSet load_dir(const std::filesystem::path& dir);

    void validate() const;
};

struct PairPrompt {
    std::string task1_text;
    std::string task2_text;
    std::string template_id;
};

struct AggregationPrompt {
    std::string text;
    int iteration = 0;
    // "None" or the prior formatted to 4 decimals, exactly as rendered
    // between the [DINDEX] markers.
    std::string prior_rendered;
};

// Literal rendered into the comparison slot when every update was
// filtered out (or the sample has no leaves at all).
inline constexpr std::string_view kEmptyUpdatesLine = "No selected references.";

// Marker pair delimiting the prior-rating slot in aggregation prompts.
inline constexpr std::string_view kPriorMarker = "[DINDEX]";

PairPrompt build_pair_prompt(const TemplateSet& templates, std::string_view root_text,
                             std::string_view leaf_text, const PromptLimits& limits = {});

// Renders the aggregation prompt. prior == nullopt renders the literal
// None sentinel; a numeric prior must be finite and renders with fixed
// 4-decimal formatting. Surviving updates appear as numbered blocks in
// original leaf order.
AggregationPrompt build_aggregation_prompt(const TemplateSet& templates,
                                           std::string_view root_text,
                                           const std::vector<IndexedUpdate>& updates,
                                           std::optional<double> prior,
                                           const PromptLimits& limits = {}, int iteration = 0);

// Outcome of parsing the two raw backend replies for one pair.
struct ParsedPair {
    int attention = 0;        // a in {0, 1}
    std::string update_text;  // d, trimmed
};

// a = 1 iff the first token of task1_reply, stripped of surrounding
// whitespace/punctuation, is "1" (0 likewise). Returns nullopt when
// neither is recognizable or the trimmed task2 reply is empty; the caller
// decides whether to retry or fall back.
std::optional<ParsedPair> parse_pair_response(std::string_view task1_reply,
                                              std::string_view task2_reply);

}  // namespace raha
