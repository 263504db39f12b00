// Copyright 2026 The raha Authors
// SPDX-License-Identifier: Apache-2.0

#include "raha/gateway.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <thread>

#include <nlohmann/json.hpp>

#include "raha/util.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

namespace raha {

namespace {

using nlohmann::json;

// Recover the two compared texts from a rendered pair prompt. The labels
// appear once in the few-shot example block and once with real content, so
// the last occurrence wins.
std::optional<std::string> field_after_last(std::string_view prompt,
                                            std::initializer_list<const char*> labels) {
    std::size_t best = std::string_view::npos;
    std::size_t best_len = 0;
    for (const char* label : labels) {
        const std::string_view lv(label);
        const std::size_t pos = prompt.rfind(lv);
        if (pos != std::string_view::npos && (best == std::string_view::npos || pos > best)) {
            best = pos;
            best_len = lv.size();
        }
    }
    if (best == std::string_view::npos) {
        return std::nullopt;
    }
    const std::size_t start = best + best_len;
    std::size_t end = prompt.find('\n', start);
    if (end == std::string_view::npos) end = prompt.size();
    return std::string(trim(prompt.substr(start, end - start)));
}

int overlap_size(std::string_view a, std::string_view b) {
    const std::vector<std::string> ta = keyword_tokens(a);
    const std::vector<std::string> tb = keyword_tokens(b);
    const std::set<std::string> sa(ta.begin(), ta.end());
    int n = 0;
    std::set<std::string> seen;
    for (const std::string& t : tb) {
        if (sa.count(t) && seen.insert(t).second) ++n;
    }
    return n;
}

}  // namespace

std::string GenerationRequest::canonical() const {
    json j;
    j["max_tokens"] = max_tokens;
    j["model"] = model;
    j["prompt"] = prompt;
    j["seed"] = seed;
    j["temperature"] = temperature;
    return j.dump();
}

std::string cache_key(const GenerationRequest& request) {
    return sha256_hex(request.canonical());
}

ResponseCache::ResponseCache(std::filesystem::path root) : root_(std::move(root)) {
    std::filesystem::create_directories(root_);
}

std::optional<std::string> ResponseCache::lookup(const std::string& key) const {
    const std::filesystem::path path = root_ / (key + ".json");
    if (!std::filesystem::exists(path)) {
        return std::nullopt;
    }
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const std::exception&) {
        return std::nullopt;  // torn or foreign file, treat as miss
    }
    if (!j.contains("text") || !j["text"].is_string()) {
        return std::nullopt;
    }
    return j["text"].get<std::string>();
}

void ResponseCache::store(const std::string& key, const GenerationRequest& request,
                          const std::string& text) const {
    json j;
    j["key"] = key;
    j["model"] = request.model;
    j["text"] = text;
    write_file_atomic(root_ / (key + ".json"), j.dump(2) + "\n");
}

MockRuleBackend::MockRuleBackend(int overlap_threshold)
    : overlap_threshold_(overlap_threshold) {}

std::string MockRuleBackend::generate(const GenerationRequest& request) {
    const std::string_view prompt = request.prompt;
    const bool is_task2 = prompt.find("Contrast and Difference") != std::string_view::npos;
    const bool is_task1 = !is_task2 &&
                          (prompt.find("Output:") != std::string_view::npos) &&
                          (prompt.find("\"1\"") != std::string_view::npos);

    if (is_task1 || is_task2) {
        const auto focal = field_after_last(
            prompt, {"Focal paper abstract:", "Focal Patent abstract:"});
        const auto ref = field_after_last(
            prompt, {"Reference paper abstract:", "Reference Patent abstract:",
                     "Related Patent Abstract:"});
        if (!focal || !ref) {
            throw GatewayError("mock backend: pair prompt is missing labeled inputs");
        }
        const int overlap = overlap_size(*focal, *ref);
        if (is_task1) {
            return overlap >= overlap_threshold_ ? "1" : "0";
        }
        return "The reference shares " + std::to_string(overlap) +
               " key terms with the focal text and differs in scope, emphasis, and method.";
    }

    // Aggregation prompt: echo a short analysis. Numeric prediction comes
    // from the trainable head, so the text only needs to be deterministic.
    return "Analysis: the selected comparisons were weighed against the stated index scale.";
}

HttpChatBackend::HttpChatBackend(HttpBackendConfig config) : config_(std::move(config)) {
    if (config_.base_url.empty()) {
        throw ValidationError("HttpChatBackend: base_url must not be empty");
    }
}

std::string HttpChatBackend::generate(const GenerationRequest& request) {
    httplib::Client client(config_.base_url);
    client.set_connection_timeout(config_.timeout_seconds, 0);
    client.set_read_timeout(config_.timeout_seconds, 0);

    httplib::Headers headers;
    if (!config_.api_key.empty()) {
        headers.emplace("Authorization", "Bearer " + config_.api_key);
    }

    json body;
    body["model"] = request.model;
    body["messages"] = json::array({{{"role", "user"}, {"content", request.prompt}}});
    body["temperature"] = request.temperature;
    body["max_tokens"] = request.max_tokens;
    body["seed"] = request.seed;

    const httplib::Result res =
        client.Post(config_.chat_path, headers, body.dump(), "application/json");
    if (!res) {
        throw GatewayError("http backend: transport failure: " +
                               httplib::to_string(res.error()),
                           /*transient=*/true);
    }
    if (res->status == 429 || res->status >= 500) {
        throw GatewayError("http backend: status " + std::to_string(res->status),
                           /*transient=*/true);
    }
    if (res->status != 200) {
        throw GatewayError("http backend: status " + std::to_string(res->status) + ": " +
                           res->body);
    }

    json j;
    try {
        j = json::parse(res->body);
    } catch (const std::exception& e) {
        throw GatewayError(std::string("http backend: malformed response JSON: ") + e.what());
    }
    try {
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const std::exception& e) {
        throw GatewayError(std::string("http backend: unexpected response shape: ") + e.what());
    }
}

Gateway::Gateway(std::shared_ptr<Backend> backend, std::optional<ResponseCache> cache,
                 RetryPolicy retry)
    : backend_(std::move(backend)), cache_(std::move(cache)), retry_(std::move(retry)) {
    if (!backend_) {
        throw ValidationError("Gateway: backend must not be null");
    }
    if (retry_.max_attempts < 1) {
        throw ValidationError("Gateway: max_attempts must be at least 1");
    }
    if (!retry_.sleep_fn) {
        retry_.sleep_fn = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
    }
}

GenerationResponse Gateway::generate(const GenerationRequest& request) {
    const std::string key = cache_key(request);
    if (cache_) {
        if (auto hit = cache_->lookup(key)) {
            stats_.cache_hits.fetch_add(1, std::memory_order_relaxed);
            return GenerationResponse{std::move(*hit), true};
        }
    }

    std::chrono::milliseconds backoff = retry_.initial_backoff;
    for (int attempt = 1;; ++attempt) {
        try {
            stats_.backend_calls.fetch_add(1, std::memory_order_relaxed);
            std::string text = backend_->generate(request);
            if (cache_) {
                cache_->store(key, request, text);
            }
            return GenerationResponse{std::move(text), false};
        } catch (const GatewayError& e) {
            if (!e.transient() || attempt >= retry_.max_attempts) {
                throw;
            }
            stats_.retries.fetch_add(1, std::memory_order_relaxed);
            retry_.sleep_fn(backoff);
            backoff = std::chrono::milliseconds(static_cast<std::int64_t>(
                static_cast<double>(backoff.count()) * retry_.backoff_multiplier));
        }
    }
}

std::vector<std::string> keyword_tokens(std::string_view text) {
    std::vector<std::string> out;
    std::set<std::string> seen;
    std::string current;
    auto flush = [&] {
        if (current.size() > 3 && seen.insert(current).second) {
            out.push_back(current);
        }
        current.clear();
    };
    for (const char raw : text) {
        const unsigned char c = static_cast<unsigned char>(raw);
        if (std::isalpha(c)) {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else {
            flush();
        }
    }
    flush();
    return out;
}

}  // namespace raha
