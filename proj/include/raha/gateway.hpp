// Copyright 2026 The raha Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace raha {

struct GenerationRequest {
    std::string model;
    std::string prompt;
    double temperature = 0.0;
    int max_tokens = 512;
    std::uint64_t seed = 0;

    // Canonical JSON serialization (sorted keys, fixed field set).
    // Two requests with equal canonical forms share a cache entry.
    std::string canonical() const;
};

struct GenerationResponse {
    std::string text;
    bool from_cache = false;
};

// Lowercase hex SHA-256 of the canonical request serialization.
std::string cache_key(const GenerationRequest& request);

// One file per entry under root, named by cache key. Writes go through a
// temp file and rename so a crashed writer never leaves a torn entry.
class ResponseCache {
  public:
    explicit ResponseCache(std::filesystem::path root);

    std::optional<std::string> lookup(const std::string& key) const;
    void store(const std::string& key, const GenerationRequest& request,
               const std::string& text) const;
    const std::filesystem::path& root() const { return root_; }

  private:
    std::filesystem::path root_;
};

class Backend {
  public:
    virtual ~Backend() = default;
    virtual std::string name() const = 0;
    // Throws GatewayError; transient() distinguishes retryable failures.
    virtual std::string generate(const GenerationRequest& request) = 0;
};

// Deterministic offline backend. Pair importance replies follow a keyword
// overlap rule; comparison and aggregation prompts get templated analyses.
class MockRuleBackend : public Backend {
  public:
    explicit MockRuleBackend(int overlap_threshold = 2);
    std::string name() const override { return "mock"; }
    std::string generate(const GenerationRequest& request) override;

  private:
    int overlap_threshold_;
};

struct HttpBackendConfig {
    std::string base_url;      // e.g. "http://127.0.0.1:8080"
    std::string api_key;       // empty means no Authorization header
    std::string chat_path = "/v1/chat/completions";
    int timeout_seconds = 120;
};

// OpenAI-style chat-completions client. HTTP 429 and 5xx map to transient
// GatewayError; other non-200 statuses are terminal.
class HttpChatBackend : public Backend {
  public:
    explicit HttpChatBackend(HttpBackendConfig config);
    std::string name() const override { return "http"; }
    std::string generate(const GenerationRequest& request) override;

  private:
    HttpBackendConfig config_;
};

struct RetryPolicy {
    int max_attempts = 4;
    std::chrono::milliseconds initial_backoff{200};
    double backoff_multiplier = 2.0;
    // Injected in tests to avoid real sleeps.
    std::function<void(std::chrono::milliseconds)> sleep_fn;
};

struct GatewayStats {
    std::atomic<std::uint64_t> cache_hits{0};
    std::atomic<std::uint64_t> backend_calls{0};
    std::atomic<std::uint64_t> retries{0};
};

// Cache-through front of a backend. Thread safe; concurrent identical
// requests may both reach the backend but converge on one cached value.
class Gateway {
  public:
    Gateway(std::shared_ptr<Backend> backend, std::optional<ResponseCache> cache,
            RetryPolicy retry = {});

    GenerationResponse generate(const GenerationRequest& request);
    const GatewayStats& stats() const { return stats_; }

  private:
    std::shared_ptr<Backend> backend_;
    std::optional<ResponseCache> cache_;
    RetryPolicy retry_;
    GatewayStats stats_;
};

// Lowercased alphabetic tokens longer than three characters, deduplicated.
std::vector<std::string> keyword_tokens(std::string_view text);

}  // namespace raha
