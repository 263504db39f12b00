// Copyright 2026 The raha Authors
// SPDX-License-Identifier: Apache-2.0

#include "raha/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "raha/util.hpp"

namespace raha {

using nlohmann::json;

void DatasetManifest::validate() const {
    if (path.empty()) {
        throw ValidationError("dataset manifest: path is empty");
    }
    if (fractions.train <= 0.0 || fractions.val <= 0.0 || fractions.test <= 0.0) {
        throw ValidationError("dataset manifest: split fractions must be positive");
    }
    const double sum = fractions.train + fractions.val + fractions.test;
    if (std::abs(sum - 1.0) > 1e-9) {
        throw ValidationError("dataset manifest: split fractions must sum to 1, got " +
                              std::to_string(sum));
    }
    if (scale && !(scale->lo < scale->hi)) {
        throw ValidationError("dataset manifest: rating scale lo must be < hi");
    }
}

namespace {

std::map<std::string, std::string> parse_meta(const json& j, const std::string& where) {
    std::map<std::string, std::string> meta;
    if (!j.contains("meta")) return meta;
    const json& m = j.at("meta");
    if (!m.is_object()) {
        throw ValidationError(where + ": meta must be an object of strings");
    }
    for (const auto& [key, value] : m.items()) {
        if (!value.is_string()) {
            throw ValidationError(where + ": meta value for '" + key + "' must be a string");
        }
        meta[key] = value.get<std::string>();
    }
    return meta;
}

}  // namespace

Sample validate_sample(const json& record, const std::optional<RatingScale>& scale) {
    if (!record.is_object()) {
        throw ValidationError("record is not a JSON object");
    }
    Sample s;
    if (!record.contains("id") || !record.at("id").is_string()) {
        throw ValidationError("record missing string field 'id'");
    }
    s.id = record.at("id").get<std::string>();
    if (s.id.empty()) {
        throw ValidationError("record has empty 'id'");
    }

    if (!record.contains("root") || !record.at("root").is_object()) {
        throw ValidationError("record '" + s.id + "' missing object field 'root'");
    }
    const json& root = record.at("root");
    if (!root.contains("text") || !root.at("text").is_string()) {
        throw ValidationError("record '" + s.id + "' missing root.text");
    }
    s.root_text = root.at("text").get<std::string>();
    if (s.root_text.empty()) {
        throw ValidationError("record '" + s.id + "' has empty root text");
    }
    s.root_meta = parse_meta(root, "record '" + s.id + "' root");

    if (record.contains("leaves")) {
        const json& leaves = record.at("leaves");
        if (!leaves.is_array()) {
            throw ValidationError("record '" + s.id + "': leaves must be an array");
        }
        s.leaves.reserve(leaves.size());
        int idx = 0;
        for (const json& lj : leaves) {
            if (!lj.is_object() || !lj.contains("text") || !lj.at("text").is_string()) {
                throw ValidationError("record '" + s.id + "': leaf " + std::to_string(idx) +
                                      " missing text");
            }
            Leaf leaf;
            leaf.text = lj.at("text").get<std::string>();
            if (leaf.text.empty()) {
                throw ValidationError("record '" + s.id + "': leaf " + std::to_string(idx) +
                                      " has empty text");
            }
            leaf.meta = parse_meta(lj, "record '" + s.id + "' leaf " + std::to_string(idx));
            s.leaves.push_back(std::move(leaf));
            ++idx;
        }
    }

    if (!record.contains("target") || !record.at("target").is_number()) {
        throw ValidationError("record '" + s.id + "' missing numeric field 'target'");
    }
    s.target = record.at("target").get<double>();
    if (!std::isfinite(s.target)) {
        throw ValidationError("record '" + s.id + "' has non-finite target");
    }
    if (scale && (s.target < scale->lo || s.target > scale->hi)) {
        throw ValidationError("record '" + s.id + "': target " + std::to_string(s.target) +
                              " outside declared scale [" + std::to_string(scale->lo) + ", " +
                              std::to_string(scale->hi) + "]");
    }
    return s;
}

json sample_to_json(const Sample& sample) {
    json root;
    root["text"] = sample.root_text;
    json root_meta = json::object();
    for (const auto& [k, v] : sample.root_meta) root_meta[k] = v;
    root["meta"] = root_meta;

    json leaves = json::array();
    for (const Leaf& leaf : sample.leaves) {
        json lj;
        lj["text"] = leaf.text;
        json meta = json::object();
        for (const auto& [k, v] : leaf.meta) meta[k] = v;
        lj["meta"] = meta;
        leaves.push_back(std::move(lj));
    }

    json record;
    record["id"] = sample.id;
    record["root"] = std::move(root);
    record["leaves"] = std::move(leaves);
    record["target"] = sample.target;
    return record;
}

DatasetSplits load_dataset(const DatasetManifest& manifest) {
    manifest.validate();

    std::ifstream in(manifest.path);
    if (!in) {
        throw IoError("cannot open dataset file: " + manifest.path.string());
    }

    std::vector<Sample> samples;
    std::unordered_set<std::string> seen_ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        json record;
        try {
            record = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ValidationError(manifest.path.string() + ":" + std::to_string(line_no) +
                                  ": invalid JSON: " + e.what());
        }
        Sample s = validate_sample(record, manifest.scale);
        if (!seen_ids.insert(s.id).second) {
            throw ValidationError("duplicate sample id '" + s.id + "' at " +
                                  manifest.path.string() + ":" + std::to_string(line_no));
        }
        samples.push_back(std::move(s));
    }
    if (samples.empty()) {
        throw ValidationError("dataset contains no valid records: " + manifest.path.string());
    }

    // Rank every record by hash(id || seed); the partition depends only on
    // the id set and the seed, never on file order.
    struct Ranked {
        std::string key;
        std::size_t index;
    };
    std::vector<Ranked> ranked;
    ranked.reserve(samples.size());
    const std::string seed_str = std::to_string(manifest.split_seed);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        ranked.push_back({sha256_hex(samples[i].id + "\x1f" + seed_str), i});
    }
    std::sort(ranked.begin(), ranked.end(), [&](const Ranked& a, const Ranked& b) {
        if (a.key != b.key) return a.key < b.key;
        return samples[a.index].id < samples[b.index].id;
    });

    const auto n = static_cast<long long>(samples.size());
    long long n_train = std::llround(manifest.fractions.train * static_cast<double>(n));
    long long n_val = std::llround(manifest.fractions.val * static_cast<double>(n));
    n_train = std::clamp<long long>(n_train, 0, n);
    n_val = std::clamp<long long>(n_val, 0, n - n_train);

    DatasetSplits splits;
    for (long long i = 0; i < n; ++i) {
        Sample& s = samples[ranked[static_cast<std::size_t>(i)].index];
        if (i < n_train) {
            splits.train.push_back(std::move(s));
        } else if (i < n_train + n_val) {
            splits.val.push_back(std::move(s));
        } else {
            splits.test.push_back(std::move(s));
        }
    }
    return splits;
}

}  // namespace raha
