// Copyright 2026 The raha Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace raha {

// Maps a rendered aggregation prompt to a fixed-size representation.
// Extractors must be pure functions of the prompt text.
class FeatureExtractor {
  public:
    virtual ~FeatureExtractor() = default;
    virtual std::string id() const = 0;
    virtual int dim() const = 0;
    virtual Eigen::VectorXd extract(std::string_view prompt) const = 0;
};

// Text between the first pair of prior markers, exactly as rendered.
std::optional<std::string> prior_span(std::string_view prompt);

// Offline stand-in for a frozen backend's hidden state: a seeded hash
// stream over the prompt bytes, unit L2 norm. Identical prompts map to
// identical vectors on every platform.
class HashFeatures : public FeatureExtractor {
  public:
    HashFeatures(int dim, std::uint64_t seed);
    std::string id() const override;
    int dim() const override { return dim_; }
    Eigen::VectorXd extract(std::string_view prompt) const override;

  private:
    int dim_;
    std::uint64_t seed_;
};

// Transparent world for convergence studies. The prompt must carry a
// [LW:z1,z2] marker; the prior is read back from the rendered prior span.
// Layout: h[0]=z1, h[1]=z2, h[2]=prior value (0 when None), h[3]=1,
// h[4]=1 when the prior is None, remaining coordinates are zero.
class LinearWorldFeatures : public FeatureExtractor {
  public:
    explicit LinearWorldFeatures(int dim);
    std::string id() const override;
    int dim() const override { return dim_; }
    Eigen::VectorXd extract(std::string_view prompt) const override;

  private:
    int dim_;
};

// Adapter over an embeddings endpoint. The embed function is injected so
// tests can run without a network; vectors are padded or truncated to dim
// and rescaled to unit norm.
class RemoteEmbeddingFeatures : public FeatureExtractor {
  public:
    using EmbedFn = std::function<std::vector<double>(const std::string&)>;
    RemoteEmbeddingFeatures(int dim, std::string model, EmbedFn embed);
    std::string id() const override;
    int dim() const override { return dim_; }
    Eigen::VectorXd extract(std::string_view prompt) const override;

  private:
    int dim_;
    std::string model_;
    EmbedFn embed_;
};

}  // namespace raha
