// Copyright 2026 The raha Authors
// SPDX-License-Identifier: Apache-2.0

#include "raha/config.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "raha/util.hpp"

namespace raha {

namespace {

using nlohmann::json;

std::filesystem::path resolve(const std::filesystem::path& base,
                              const std::filesystem::path& p) {
    return p.is_absolute() ? p : base / p;
}

void read_fields(PipelineConfig& c, const json& j) {
    const json& d = j.at("dataset");
    c.dataset.path = resolve(c.config_dir, d.at("path").get<std::string>());
    if (d.contains("scale")) {
        RatingScale scale;
        scale.lo = d["scale"].at("lo").get<double>();
        scale.hi = d["scale"].at("hi").get<double>();
        c.dataset.scale = scale;
    }
    if (d.contains("fractions")) {
        c.dataset.fractions.train = d["fractions"].at("train").get<double>();
        c.dataset.fractions.val = d["fractions"].at("val").get<double>();
        c.dataset.fractions.test = d["fractions"].at("test").get<double>();
    }
    c.dataset.split_seed = d.value("split_seed", c.dataset.split_seed);

    c.templates = j.value("templates", c.templates);

    if (j.contains("gateway")) {
        const json& g = j["gateway"];
        c.gateway.backend = g.value("backend", c.gateway.backend);
        c.gateway.model = g.value("model", c.gateway.model);
        c.gateway.base_url = g.value("base_url", c.gateway.base_url);
        c.gateway.api_key_env = g.value("api_key_env", c.gateway.api_key_env);
        c.gateway.cache_dir =
            resolve(c.config_dir, g.value("cache_dir", c.gateway.cache_dir.string()));
        c.gateway.max_attempts = g.value("max_attempts", c.gateway.max_attempts);
        c.gateway.parallelism = g.value("parallelism", c.gateway.parallelism);
        c.gateway.temperature = g.value("temperature", c.gateway.temperature);
        c.gateway.max_tokens = g.value("max_tokens", c.gateway.max_tokens);
        c.gateway.mock_overlap_threshold =
            g.value("mock_overlap_threshold", c.gateway.mock_overlap_threshold);
    } else {
        c.gateway.cache_dir = resolve(c.config_dir, c.gateway.cache_dir);
    }

    if (j.contains("extractor")) {
        const json& e = j["extractor"];
        c.extractor.kind = e.value("kind", c.extractor.kind);
        c.extractor.dim = e.value("dim", c.extractor.dim);
        c.extractor.seed = e.value("seed", c.extractor.seed);
    }

    if (j.contains("head")) {
        const json& h = j["head"];
        c.head.dim = h.value("dim", c.extractor.dim);
        c.head.rank = h.value("rank", std::min(c.head.rank, c.head.dim));
        c.head.lr = h.value("lr", c.head.lr);
        c.head.clip_norm = h.value("clip_norm", c.head.clip_norm);
        c.head.beta1 = h.value("beta1", c.head.beta1);
        c.head.beta2 = h.value("beta2", c.head.beta2);
        c.head.eps = h.value("eps", c.head.eps);
        c.head.weight_decay = h.value("weight_decay", c.head.weight_decay);
        c.head.init_scale = h.value("init_scale", c.head.init_scale);
        c.head.seed = h.value("seed", c.head.seed);
    } else {
        c.head.dim = c.extractor.dim;
        c.head.rank = std::min(c.head.rank, c.head.dim);
    }

    if (j.contains("run")) {
        const json& r = j["run"];
        c.run.k_train = r.value("k_train", c.run.k_train);
        c.run.k_test = r.value("k_test", c.run.k_test);
        c.run.init = init_policy_from_string(r.value("init", "none"));
        c.run.init_seed = r.value("init_seed", c.run.init_seed);
        c.run.batch_size = r.value("batch_size", c.run.batch_size);
        c.run.epochs_per_iteration =
            r.value("epochs_per_iteration", c.run.epochs_per_iteration);
        c.run.limits.slot_budget = r.value("slot_budget", c.run.limits.slot_budget);
    }
    c.run.scale = c.dataset.scale.value_or(RatingScale{});

    c.train_shuffle_seed = j.value("train_shuffle_seed", c.train_shuffle_seed);
    c.output_dir = resolve(c.config_dir, j.value("output_dir", c.output_dir.string()));
}

}  // namespace

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const std::exception& e) {
        throw IoError("config: cannot parse " + path.string() + ": " + e.what());
    }

    PipelineConfig c;
    c.config_dir = std::filesystem::absolute(path).parent_path();
    try {
        read_fields(c, j);
    } catch (const json::exception& e) {
        throw IoError("config: " + path.string() + ": " + e.what());
    }

    c.validate();
    return c;
}

void PipelineConfig::validate() const {
    dataset.validate();
    if (!std::filesystem::exists(dataset.path)) {
        throw ValidationError("config: dataset path does not exist: " +
                              dataset.path.string());
    }
    if (templates != "academic" && templates != "patent" &&
        !std::filesystem::is_directory(resolve(config_dir, templates))) {
        throw ValidationError("config: templates must be 'academic', 'patent', or a "
                              "template directory");
    }
    if (gateway.backend != "mock" && gateway.backend != "http") {
        throw ValidationError("config: gateway backend must be 'mock' or 'http'");
    }
    if (gateway.backend == "http" && gateway.base_url.empty()) {
        throw ValidationError("config: http gateway requires base_url");
    }
    if (gateway.max_attempts < 1 || gateway.parallelism < 1) {
        throw ValidationError("config: gateway attempts and parallelism must be positive");
    }
    if (extractor.kind != "hash" && extractor.kind != "linear-world") {
        throw ValidationError("config: extractor kind must be 'hash' or 'linear-world'");
    }
    if (extractor.dim != head.dim) {
        throw ValidationError("config: extractor dim (" + std::to_string(extractor.dim) +
                              ") must equal head dim (" + std::to_string(head.dim) + ")");
    }
    head.validate();
    run.validate();
}

std::string PipelineConfig::config_hash() const {
    json j;
    j["dataset"] = {{"path", dataset.path.string()},
                    {"scale_lo", dataset.scale ? dataset.scale->lo : -1.0},
                    {"scale_hi", dataset.scale ? dataset.scale->hi : 1.0},
                    {"train", dataset.fractions.train},
                    {"val", dataset.fractions.val},
                    {"test", dataset.fractions.test},
                    {"split_seed", dataset.split_seed}};
    j["templates"] = templates;
    j["gateway"] = {{"backend", gateway.backend},
                    {"model", gateway.model},
                    {"base_url", gateway.base_url},
                    {"temperature", gateway.temperature},
                    {"max_tokens", gateway.max_tokens},
                    {"mock_overlap_threshold", gateway.mock_overlap_threshold}};
    j["extractor"] = {{"kind", extractor.kind},
                      {"dim", extractor.dim},
                      {"seed", extractor.seed}};
    j["head"] = {{"dim", head.dim},           {"rank", head.rank},
                 {"lr", head.lr},             {"clip_norm", head.clip_norm},
                 {"beta1", head.beta1},       {"beta2", head.beta2},
                 {"eps", head.eps},           {"weight_decay", head.weight_decay},
                 {"init_scale", head.init_scale}, {"seed", head.seed}};
    j["run"] = {{"k_train", run.k_train},
                {"k_test", run.k_test},
                {"init", to_string(run.init)},
                {"init_seed", run.init_seed},
                {"batch_size", run.batch_size},
                {"epochs_per_iteration", run.epochs_per_iteration},
                {"slot_budget", run.limits.slot_budget},
                {"scale_lo", run.scale.lo},
                {"scale_hi", run.scale.hi}};
    j["train_shuffle_seed"] = train_shuffle_seed;
    return sha256_hex(j.dump());
}

void apply_overrides(PipelineConfig& config, const Overrides& overrides) {
    if (overrides.cache_dir) {
        config.gateway.cache_dir = resolve(config.config_dir, *overrides.cache_dir);
    }
    if (overrides.parallelism) {
        config.gateway.parallelism = *overrides.parallelism;
    }
    if (overrides.init_seed) {
        config.run.init_seed = *overrides.init_seed;
    }
    if (overrides.init_policy) {
        config.run.init = init_policy_from_string(*overrides.init_policy);
    }
    if (overrides.k_test) {
        config.run.k_test = *overrides.k_test;
    }
    config.validate();
}

}  // namespace raha
