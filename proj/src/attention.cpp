// Copyright 2026 The raha Authors
// SPDX-License-Identifier: Apache-2.0

#include "raha/attention.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

#include "raha/util.hpp"

namespace raha {

namespace {

using nlohmann::json;

constexpr const char* kClarifySuffix = "\nAnswer with a single character: 0 or 1.";

GenerationRequest make_request(const AttendOptions& options, std::string prompt) {
    GenerationRequest req;
    req.model = options.model;
    req.prompt = std::move(prompt);
    req.temperature = options.temperature;
    req.max_tokens = options.max_tokens;
    req.seed = options.seed;
    return req;
}

}  // namespace

PairJudgment attend_pair(Gateway& gateway, const TemplateSet& templates,
                         std::string_view root_text, std::string_view leaf_text,
                         int leaf_index, const AttendOptions& options) {
    const PairPrompt prompt =
        build_pair_prompt(templates, root_text, leaf_text, options.limits);

    const std::string task1_reply =
        gateway.generate(make_request(options, prompt.task1_text)).text;
    const std::string task2_reply =
        gateway.generate(make_request(options, prompt.task2_text)).text;

    PairJudgment judgment;
    judgment.leaf_index = leaf_index;

    if (auto parsed = parse_pair_response(task1_reply, task2_reply)) {
        judgment.attention = parsed->attention;
        judgment.update_text = std::move(parsed->update_text);
        return judgment;
    }

    const std::string retry_reply =
        gateway.generate(make_request(options, prompt.task1_text + kClarifySuffix)).text;
    if (auto parsed = parse_pair_response(retry_reply, task2_reply)) {
        judgment.attention = parsed->attention;
        judgment.update_text = std::move(parsed->update_text);
        return judgment;
    }

    // Keeping an uncertain leaf preserves information; dropping it cannot
    // be undone downstream.
    judgment.attention = 1;
    judgment.parse_fallback = true;
    std::string update = trim(task2_reply);
    judgment.update_text = update.empty() ? std::string(leaf_text) : std::move(update);
    return judgment;
}

FilteredUpdates filter_updates(const std::vector<PairJudgment>& judgments) {
    FilteredUpdates out;
    out.total = static_cast<int>(judgments.size());
    for (const PairJudgment& j : judgments) {
        if (j.attention != 0 && j.attention != 1) {
            throw ValidationError("filter_updates: attention must be 0 or 1");
        }
        if (j.attention == 1) {
            out.updates.push_back(IndexedUpdate{j.leaf_index, j.update_text});
        }
    }
    out.kept = static_cast<int>(out.updates.size());
    return out;
}

SampleAttention attend_sample(Gateway& gateway, const TemplateSet& templates,
                              const Sample& sample, const AttendOptions& options) {
    SampleAttention out;
    out.sample_id = sample.id;
    const std::size_t n = sample.leaves.size();
    out.judgments.resize(n);
    if (n == 0) {
        out.filtered = filter_updates(out.judgments);
        return out;
    }

    const int workers =
        std::max(1, std::min<int>(options.parallelism, static_cast<int>(n)));
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                out.judgments[i] =
                    attend_pair(gateway, templates, sample.root_text,
                                sample.leaves[i].text, static_cast<int>(i) + 1, options);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                next.store(n);  // stop handing out work
                return;
            }
        }
    };

    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(workers);
        for (int t = 0; t < workers; ++t) threads.emplace_back(worker);
        for (std::thread& t : threads) t.join();
    }
    if (first_error) {
        std::rethrow_exception(first_error);
    }

    out.filtered = filter_updates(out.judgments);
    return out;
}

void save_attention(const std::filesystem::path& dir, const SampleAttention& attention) {
    json j;
    j["sample_id"] = attention.sample_id;
    j["total"] = attention.filtered.total;
    j["kept"] = attention.filtered.kept;
    json judgments = json::array();
    for (const PairJudgment& item : attention.judgments) {
        judgments.push_back({{"leaf_index", item.leaf_index},
                             {"attention", item.attention},
                             {"update_text", item.update_text},
                             {"parse_fallback", item.parse_fallback}});
    }
    j["judgments"] = std::move(judgments);
    write_file_atomic(dir / (sanitize_filename(attention.sample_id) + ".json"),
                      j.dump(2) + "\n");
}

SampleAttention load_attention(const std::filesystem::path& dir,
                               const std::string& sample_id) {
    const std::filesystem::path path = dir / (sanitize_filename(sample_id) + ".json");
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const std::exception& e) {
        throw IoError("load_attention: cannot parse " + path.string() + ": " + e.what());
    }
    SampleAttention out;
    out.sample_id = j.at("sample_id").get<std::string>();
    if (out.sample_id != sample_id) {
        throw ValidationError("load_attention: artifact id mismatch for " + sample_id);
    }
    for (const json& item : j.at("judgments")) {
        PairJudgment judgment;
        judgment.leaf_index = item.at("leaf_index").get<int>();
        judgment.attention = item.at("attention").get<int>();
        judgment.update_text = item.at("update_text").get<std::string>();
        judgment.parse_fallback = item.value("parse_fallback", false);
        out.judgments.push_back(std::move(judgment));
    }
    out.filtered = filter_updates(out.judgments);
    if (out.filtered.total != j.at("total").get<int>() ||
        out.filtered.kept != j.at("kept").get<int>()) {
        throw ValidationError("load_attention: artifact counts are inconsistent for " +
                              sample_id);
    }
    return out;
}

}  // namespace raha
