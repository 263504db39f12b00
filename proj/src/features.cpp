// Copyright 2026 The raha Authors
// SPDX-License-Identifier: Apache-2.0

#include "raha/features.hpp"

#include <cmath>
#include <cstdlib>
#include <vector>

#include "raha/prompts.hpp"
#include "raha/util.hpp"

namespace raha {

std::optional<std::string> prior_span(std::string_view prompt) {
    const std::string_view marker(kPriorMarker);
    const std::size_t open = prompt.find(marker);
    if (open == std::string_view::npos) {
        return std::nullopt;
    }
    const std::size_t start = open + marker.size();
    const std::size_t close = prompt.find(marker, start);
    if (close == std::string_view::npos) {
        return std::nullopt;
    }
    return std::string(prompt.substr(start, close - start));
}

HashFeatures::HashFeatures(int dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
    if (dim_ < 1) {
        throw ValidationError("HashFeatures: dim must be positive");
    }
}

std::string HashFeatures::id() const {
    return "hash-" + std::to_string(dim_) + "-" + std::to_string(seed_);
}

Eigen::VectorXd HashFeatures::extract(std::string_view prompt) const {
    std::uint64_t state = seed_ ^ stable_hash64(prompt);
    Eigen::VectorXd h(dim_);
    for (int i = 0; i < dim_; ++i) {
        h[i] = symmetric_double(splitmix64(state));
    }
    const double norm = h.norm();
    if (norm > 0.0) {
        h /= norm;
    } else {
        h[0] = 1.0;
    }
    return h;
}

LinearWorldFeatures::LinearWorldFeatures(int dim) : dim_(dim) {
    if (dim_ < 5) {
        throw ValidationError("LinearWorldFeatures: dim must be at least 5");
    }
}

std::string LinearWorldFeatures::id() const {
    return "linear-world-" + std::to_string(dim_);
}

Eigen::VectorXd LinearWorldFeatures::extract(std::string_view prompt) const {
    const std::size_t open = prompt.find("[LW:");
    if (open == std::string_view::npos) {
        throw ValidationError("LinearWorldFeatures: prompt has no [LW:z1,z2] marker");
    }
    const std::size_t close = prompt.find(']', open);
    if (close == std::string_view::npos) {
        throw ValidationError("LinearWorldFeatures: unterminated [LW marker");
    }
    const std::string body(prompt.substr(open + 4, close - open - 4));
    char* end = nullptr;
    const double z1 = std::strtod(body.c_str(), &end);
    if (end == body.c_str() || *end != ',') {
        throw ValidationError("LinearWorldFeatures: malformed [LW marker '" + body + "'");
    }
    const char* second = end + 1;
    const double z2 = std::strtod(second, &end);
    if (end == second || *end != '\0') {
        throw ValidationError("LinearWorldFeatures: malformed [LW marker '" + body + "'");
    }

    double prior = 0.0;
    double isnone = 1.0;
    if (const auto span = prior_span(prompt)) {
        const std::string value = trim(*span);
        if (value != "None") {
            char* pend = nullptr;
            prior = std::strtod(value.c_str(), &pend);
            if (pend == value.c_str() || !std::isfinite(prior)) {
                throw ValidationError("LinearWorldFeatures: unreadable prior span '" +
                                      value + "'");
            }
            isnone = 0.0;
        }
    }

    Eigen::VectorXd h = Eigen::VectorXd::Zero(dim_);
    h[0] = z1;
    h[1] = z2;
    h[2] = prior;
    h[3] = 1.0;
    h[4] = isnone;
    return h;
}

RemoteEmbeddingFeatures::RemoteEmbeddingFeatures(int dim, std::string model, EmbedFn embed)
    : dim_(dim), model_(std::move(model)), embed_(std::move(embed)) {
    if (dim_ < 1) {
        throw ValidationError("RemoteEmbeddingFeatures: dim must be positive");
    }
    if (!embed_) {
        throw ValidationError("RemoteEmbeddingFeatures: embed function must not be null");
    }
}

std::string RemoteEmbeddingFeatures::id() const {
    return "remote-" + model_ + "-" + std::to_string(dim_);
}

Eigen::VectorXd RemoteEmbeddingFeatures::extract(std::string_view prompt) const {
    const std::vector<double> raw = embed_(std::string(prompt));
    if (raw.empty()) {
        throw ValidationError("RemoteEmbeddingFeatures: backend returned an empty vector");
    }
    Eigen::VectorXd h = Eigen::VectorXd::Zero(dim_);
    const int n = std::min<int>(dim_, static_cast<int>(raw.size()));
    for (int i = 0; i < n; ++i) {
        if (!std::isfinite(raw[i])) {
            throw ValidationError("RemoteEmbeddingFeatures: non-finite embedding entry");
        }
        h[i] = raw[i];
    }
    const double norm = h.norm();
    if (norm > 0.0) {
        h /= norm;
    }
    return h;
}

}  // namespace raha
