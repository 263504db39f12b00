// Copyright 2026 The raha Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <Eigen/Dense>

namespace raha {

struct HeadConfig {
    int dim = 256;
    int rank = 64;
    double lr = 1e-5;
    double clip_norm = 0.2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
    double init_scale = 0.01;
    std::uint64_t seed = 0;

    void validate() const;
};

// Scalar head over an adapted representation:
//   y = w1 . (h + lora_B (lora_A h))
// lora_A starts uniform in [-init_scale, init_scale), lora_B and w1 start
// at zero, so the initial prediction is exactly zero everywhere.
struct HeadParams {
    Eigen::MatrixXd lora_A;  // rank x dim
    Eigen::MatrixXd lora_B;  // dim x rank
    Eigen::VectorXd w1;      // dim

    static HeadParams init(const HeadConfig& config);
    int dim() const { return static_cast<int>(w1.size()); }
    int rank() const { return static_cast<int>(lora_A.rows()); }
};

Eigen::VectorXd adapted_features(const HeadParams& params, const Eigen::VectorXd& h);
double head_forward(const HeadParams& params, const Eigen::VectorXd& h);

struct Batch {
    Eigen::MatrixXd H;  // dim x m, one column per sample
    Eigen::VectorXd y;  // m targets
    int size() const { return static_cast<int>(y.size()); }
};

struct Gradients {
    Eigen::MatrixXd g_A;
    Eigen::MatrixXd g_B;
    Eigen::VectorXd g_w1;
};

struct LossAndGrads {
    double loss = 0.0;
    Gradients grads;
};

// Mean squared error with the 1/2 factor: L = sum((yhat-y)^2) / (2m).
// Gradients are exact.
LossAndGrads loss_and_grads(const HeadParams& params, const Batch& batch);

double global_norm(const Gradients& grads);

// Rescales all gradients jointly when their global norm exceeds clip_norm.
// Returns the norm before clipping.
double clip_gradients(Gradients& grads, double clip_norm);

struct AdamState {
    Eigen::MatrixXd m_A, v_A;
    Eigen::MatrixXd m_B, v_B;
    Eigen::VectorXd m_w1, v_w1;
    std::int64_t step = 0;

    static AdamState init(const HeadConfig& config);
};

// Clips, then takes one decoupled-weight-decay Adam step.
void apply_update(HeadParams& params, AdamState& state, Gradients grads,
                  const HeadConfig& config);

// JSON checkpoint carrying config, parameters, and optimizer state.
// Loading rejects files whose shapes disagree with their declared config.
void save_checkpoint(const std::filesystem::path& path, const HeadConfig& config,
                     const HeadParams& params, const AdamState& state);

struct Checkpoint {
    HeadConfig config;
    HeadParams params;
    AdamState state;
};

Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace raha
