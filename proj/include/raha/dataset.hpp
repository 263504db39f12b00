// Copyright 2026 The raha Authors
// SPDX-License-Identifier: Apache-2.0
//
// Hierarchical document model: a textual root with an ordered list of
// leaf texts and a real-valued rating target. Datasets are stored as
// line-delimited JSON, one document per line:
//
//   {"id": "...", "root": {"text": "...", "meta": {...}},
//    "leaves": [{"text": "...", "meta": {...}}, ...], "target": 0.25}
//
// Loaded datasets are immutable and safe to share across threads.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace raha {

struct Leaf {
    std::string text;
    std::map<std::string, std::string> meta;
};

struct Sample {
    std::string id;
    std::string root_text;
    std::map<std::string, std::string> root_meta;
    // Leaf order is preserved exactly as given in the input record.
    std::vector<Leaf> leaves;
    double target = 0.0;

    int leaf_count() const { return static_cast<int>(leaves.size()); }
};

struct RatingScale {
    double lo = -1.0;
    double hi = 1.0;
};

struct SplitFractions {
    double train = 0.70;
    double val = 0.15;
    double test = 0.15;
};

struct DatasetManifest {
    std::filesystem::path path;
    std::optional<RatingScale> scale;  // bounds enforced only when declared
    SplitFractions fractions;
    std::uint64_t split_seed = 0;

    // Throws ValidationError on non-positive fractions or |sum - 1| > 1e-9.
    void validate() const;
};

struct DatasetSplits {
    std::vector<Sample> train;
    std::vector<Sample> val;
    std::vector<Sample> test;

    std::size_t total() const { return train.size() + val.size() + test.size(); }
};

// Validates one parsed record against the schema and the optional rating
// scale. Zero leaves are allowed (plain-text rating mode). Throws
// ValidationError on missing fields, empty root text, empty leaf text or
// an out-of-range target.
Sample validate_sample(const nlohmann::json& record, const std::optional<RatingScale>& scale);

// Canonical serialization of a Sample; load followed by re-serialization
// round-trips byte-identically for all declared fields.
nlohmann::json sample_to_json(const Sample& sample);

// Loads the manifest's file, validates every record, and splits it into
// train/val/test. Assignment is a pure function of (record ids, seed):
// records are ordered by a stable hash of id and seed, then sliced so the
// split sizes match the fractions to within rounding
// (n_train = round(f_train * N), n_val = round(f_val * N), rest = test).
// Input line order never affects the partition.
DatasetSplits load_dataset(const DatasetManifest& manifest);

}  // namespace raha
