// Copyright 2026 The raha Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "raha/align.hpp"
#include "raha/dataset.hpp"
#include "raha/head.hpp"

namespace raha {

struct GatewayConfig {
    std::string backend = "mock";  // mock | http
    std::string model = "mock";
    std::string base_url;
    std::string api_key_env = "RAHA_API_KEY";
    std::filesystem::path cache_dir = "cache";
    int max_attempts = 4;
    int parallelism = 4;
    double temperature = 0.0;
    int max_tokens = 512;
    int mock_overlap_threshold = 2;
};

struct ExtractorConfig {
    std::string kind = "hash";  // hash | linear-world
    int dim = 256;
    std::uint64_t seed = 0;
};

struct PipelineConfig {
    std::filesystem::path config_dir;  // directory the config file lives in
    DatasetManifest dataset;
    std::string templates = "academic";  // academic | patent | directory path
    GatewayConfig gateway;
    ExtractorConfig extractor;
    HeadConfig head;
    RunConfig run;
    std::uint64_t train_shuffle_seed = 0;
    std::filesystem::path output_dir = "out";

    // Relative paths in the file resolve against its directory.
    static PipelineConfig load(const std::filesystem::path& path);

    void validate() const;

    // Stable digest of the effective settings, for stamping outputs.
    std::string config_hash() const;
};

struct Overrides {
    std::optional<std::string> cache_dir;
    std::optional<int> parallelism;
    std::optional<std::uint64_t> init_seed;
    std::optional<std::string> init_policy;
    std::optional<int> k_test;
};

void apply_overrides(PipelineConfig& config, const Overrides& overrides);

}  // namespace raha
