// Copyright 2026 The raha Authors
// SPDX-License-Identifier: Apache-2.0

#include "raha/prompts.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>

#include "raha/util.hpp"

namespace raha {

namespace {

const char* kAcademicTask1 =
    "Task1: Determine whether a reference paper is important to a focal paper based on the "
    "abstract. Return Import Index is \"1\" if it is important and \"0\" if it is not. Don't "
    "repeat my inputs, just output the values.\n"
    "\n"
    "Example 1:\n"
    "Input:\n"
    "Focal paper abstract: abstract1\n"
    "Reference paper abstract: reference1\n"
    "Output: 0\n"
    "\n"
    "Input:\n"
    "Focal paper abstract: {abstract}\n"
    "Reference paper abstract: {reference}\n"
    "Output:";

const char* kAcademicTask2 =
    "Task2: You are now tasked with assessing the disruptive potential in the research area of "
    "academic papers. Your approach involves contrasting the abstract of a focus paper with the "
    "abstracts of its cited references. No need to give me abstract's analysis, just output "
    "Contrast and Difference.\n"
    "\n"
    "Focal paper abstract: {abstract}\n"
    "Reference paper abstract: {reference}\n"
    "Contrast and Difference:";

const char* kAcademicAggregation =
    "Task: You are tasked with assessing the disruptive potential of academic papers. Your "
    "primary tool for this analysis is the Disruption Index, a metric ranging from -1 to 1. "
    "This index quantifies the level of innovation or breakthrough a paper represents. A higher "
    "positive value on the index indicates a significant breakthrough, while negative values "
    "suggest a lower level of innovation.\n"
    "Please provide a detailed analysis based on the contrast and differences between the focus "
    "paper and its references. Use the Disruption Index of the focus paper to guide your "
    "assessment. Pay special attention to the unique contributions or shortcomings of the focus "
    "paper in comparison to the referenced works.\n"
    "\n"
    "Details for Analysis:\n"
    "Determine whether the DINDEX predicted in the previous epoch is high or low: "
    "[DINDEX]{Property}[DINDEX]\n"
    "Abstract of Focus Paper: {abstract}\n"
    "Comparison with Reference Paper : {updates}\n"
    "\n"
    "Based on the above information, analyze the reason for the disruptive nature (or lack "
    "thereof) of the focus paper.";

const char* kPatentTask1 =
    "Task1: Assess the importance of a reference patent based on its abstract in relation to a "
    "focal patent. Return an Importance Index as \"1\" if it is important and \"0\" if it is "
    "not. Do not repeat the inputs, only provide the evaluation.\n"
    "\n"
    "Example 1:\n"
    "Input:\n"
    "Focal Patent abstract: abstract1\n"
    "Reference Patent abstract: reference1\n"
    "Output: 0\n"
    "\n"
    "Input:\n"
    "Focal Patent abstract: {abstract}\n"
    "Reference Patent abstract: {reference}\n"
    "Output:";

const char* kPatentTask2 =
    "Task2: You are tasked with analyzing the innovation gap and potential impact between "
    "patents. Your job is to contrast the abstract of a focal patent with the abstracts of its "
    "related patents. Avoid providing an analysis of the abstracts themselves; focus instead on "
    "the contrast and potential differences.\n"
    "\n"
    "Focal Patent abstract: {abstract}\n"
    "Related Patent Abstract: {reference}\n"
    "Contrast and Difference:";

const char* kPatentAggregation =
    "Task: You are tasked with evaluating the innovation level and potential breakthrough of "
    "patents. Your primary tool for this analysis is the Disruption Index, a metric ranging "
    "from -1 to 1. This index helps quantify the level of novelty and potential market "
    "disruption a patent represents. A higher positive value on the index indicates a "
    "significant breakthrough, while negative values suggest incremental or less novel "
    "innovations.\n"
    "Please provide a detailed assessment based on the comparison between the focal patent and "
    "its related patents. Consider the Disruption Index of the focal patent to guide your "
    "analysis, focusing on the unique contributions or advancements it offers.\n"
    "\n"
    "Details for Analysis:\n"
    "Determine whether the DINDEX predicted in the previous epoch is high or low: "
    "[DINDEX]{Property}[DINDEX]\n"
    "Abstract of Focus Patent: {abstract}\n"
    "Comparison with Related Patent: {updates}\n"
    "\n"
    "Based on the above information, predict the Disruption index of the focal patent.";

// Collect {name} placeholders. Brace escaping is not supported; a stray
// '{' in a template is a load-time error rather than a silent pass-through.
std::set<std::string> scan_placeholders(std::string_view tpl, const std::string& where) {
    std::set<std::string> found;
    std::size_t i = 0;
    while (i < tpl.size()) {
        if (tpl[i] != '{') {
            ++i;
            continue;
        }
        const std::size_t close = tpl.find('}', i + 1);
        if (close == std::string_view::npos) {
            throw TemplateError(where + ": unterminated '{' at offset " + std::to_string(i));
        }
        std::string name(tpl.substr(i + 1, close - i - 1));
        if (name.empty() ||
            !std::all_of(name.begin(), name.end(), [](unsigned char c) {
                return std::isalnum(c) || c == '_';
            })) {
            throw TemplateError(where + ": malformed placeholder '{" + name + "}'");
        }
        found.insert(std::move(name));
        i = close + 1;
    }
    return found;
}

void check_placeholders(std::string_view tpl, const std::set<std::string>& required,
                        const std::string& where) {
    const std::set<std::string> found = scan_placeholders(tpl, where);
    for (const std::string& name : required) {
        if (!found.count(name)) {
            throw TemplateError(where + ": missing required placeholder '{" + name + "}'");
        }
    }
    for (const std::string& name : found) {
        if (!required.count(name)) {
            throw TemplateError(where + ": unknown placeholder '{" + name + "}'");
        }
    }
}

// Single left-to-right pass; substituted values are never re-scanned.
std::string render(std::string_view tpl, const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(tpl.size() + 256);
    std::size_t i = 0;
    while (i < tpl.size()) {
        if (tpl[i] != '{') {
            out.push_back(tpl[i]);
            ++i;
            continue;
        }
        const std::size_t close = tpl.find('}', i + 1);
        const std::string name(tpl.substr(i + 1, close - i - 1));
        const auto it = values.find(name);
        if (it == values.end()) {
            throw TemplateError("unbound placeholder '{" + name + "}' at render time");
        }
        out += it->second;
        i = close + 1;
    }
    return out;
}

std::string render_updates(const std::vector<IndexedUpdate>& updates,
                           const PromptLimits& limits) {
    if (updates.empty()) {
        return std::string(kEmptyUpdatesLine);
    }
    std::string out;
    for (std::size_t i = 0; i < updates.size(); ++i) {
        if (i > 0) out.push_back('\n');
        out += std::to_string(i + 1);
        out += ". ";
        out += utf8_truncate(updates[i].text, limits.slot_budget);
    }
    return out;
}

}  // namespace

TemplateSet TemplateSet::builtin_academic() {
    TemplateSet t{"academic", kAcademicTask1, kAcademicTask2, kAcademicAggregation};
    t.validate();
    return t;
}

TemplateSet TemplateSet::builtin_patent() {
    TemplateSet t{"patent", kPatentTask1, kPatentTask2, kPatentAggregation};
    t.validate();
    return t;
}

TemplateSet TemplateSet::load_dir(const std::filesystem::path& dir) {
    TemplateSet t;
    t.id = "custom";
    t.pair_task1 = read_file(dir / "pair_task1.txt");
    t.pair_task2 = read_file(dir / "pair_task2.txt");
    t.aggregation = read_file(dir / "aggregation.txt");
    t.validate();
    return t;
}

void TemplateSet::validate() const {
    check_placeholders(pair_task1, {"abstract", "reference"}, "pair_task1");
    check_placeholders(pair_task2, {"abstract", "reference"}, "pair_task2");
    check_placeholders(aggregation, {"abstract", "updates", "Property"}, "aggregation");
    // The prior slot must sit between the literal markers exactly once so
    // every rendered prompt has a unique [DINDEX]...[DINDEX] span.
    const std::string slot = std::string(kPriorMarker) + "{Property}" + std::string(kPriorMarker);
    const std::size_t first = aggregation.find(slot);
    if (first == std::string::npos || aggregation.find(slot, first + 1) != std::string::npos) {
        throw TemplateError("aggregation: template must contain exactly one " + slot);
    }
}

PairPrompt build_pair_prompt(const TemplateSet& templates, std::string_view root_text,
                             std::string_view leaf_text, const PromptLimits& limits) {
    if (trim(root_text).empty()) {
        throw ValidationError("build_pair_prompt: empty root text");
    }
    if (trim(leaf_text).empty()) {
        throw ValidationError("build_pair_prompt: empty leaf text");
    }
    const std::map<std::string, std::string> values = {
        {"abstract", utf8_truncate(root_text, limits.slot_budget)},
        {"reference", utf8_truncate(leaf_text, limits.slot_budget)},
    };
    PairPrompt p;
    p.task1_text = render(templates.pair_task1, values);
    p.task2_text = render(templates.pair_task2, values);
    p.template_id = templates.id;
    return p;
}

AggregationPrompt build_aggregation_prompt(const TemplateSet& templates,
                                           std::string_view root_text,
                                           const std::vector<IndexedUpdate>& updates,
                                           std::optional<double> prior,
                                           const PromptLimits& limits, int iteration) {
    if (trim(root_text).empty()) {
        throw ValidationError("build_aggregation_prompt: empty root text");
    }
    if (prior && !std::isfinite(*prior)) {
        throw ValidationError("build_aggregation_prompt: non-finite numeric prior");
    }
    AggregationPrompt out;
    out.iteration = iteration;
    out.prior_rendered = prior ? format_fixed(*prior, 4) : "None";
    const std::map<std::string, std::string> values = {
        {"abstract", utf8_truncate(root_text, limits.slot_budget)},
        {"updates", render_updates(updates, limits)},
        {"Property", out.prior_rendered},
    };
    out.text = render(templates.aggregation, values);
    return out;
}

std::optional<ParsedPair> parse_pair_response(std::string_view task1_reply,
                                              std::string_view task2_reply) {
    // First whitespace-delimited token, then strip punctuation from both ends.
    std::size_t begin = 0;
    while (begin < task1_reply.size() &&
           std::isspace(static_cast<unsigned char>(task1_reply[begin]))) {
        ++begin;
    }
    std::size_t end = begin;
    while (end < task1_reply.size() &&
           !std::isspace(static_cast<unsigned char>(task1_reply[end]))) {
        ++end;
    }
    std::string_view token = task1_reply.substr(begin, end - begin);
    while (!token.empty() && std::ispunct(static_cast<unsigned char>(token.front()))) {
        token.remove_prefix(1);
    }
    while (!token.empty() && std::ispunct(static_cast<unsigned char>(token.back()))) {
        token.remove_suffix(1);
    }

    if (token != "0" && token != "1") {
        return std::nullopt;
    }
    ParsedPair parsed;
    parsed.attention = (token == "1") ? 1 : 0;
    parsed.update_text = trim(task2_reply);
    if (parsed.update_text.empty()) {
        return std::nullopt;
    }
    return parsed;
}

}  // namespace raha
