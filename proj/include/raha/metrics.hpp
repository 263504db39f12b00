// Copyright 2026 The raha Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace raha {

struct MseMae {
    double mse = 0.0;
    double mae = 0.0;
};

// Plain reporting metrics, no 1/2 factor.
MseMae mse_mae(const std::vector<double>& predictions, const std::vector<double>& targets);

// series[k-1] = MAE of iteration-k predictions across traces. Every trace
// must carry the same number of iterations.
std::vector<double> iteration_mae_curve(const std::vector<std::vector<double>>& traces,
                                        const std::vector<double>& targets);

// Temperature-1 softmax on both vectors, then KL(p || q).
double kl_divergence(const Eigen::VectorXd& repr_p, const Eigen::VectorXd& repr_q);

struct ReprTrace {
    std::string extractor_id;
    std::vector<Eigen::VectorXd> reprs;  // one per iteration
};

struct TargetRepr {
    std::string extractor_id;
    Eigen::VectorXd repr;
};

struct KlCurve {
    std::vector<double> mean;
    std::vector<double> median;
};

// series[k-1] = mean / median KL(iteration-k representation || target
// representation) across traces. Mixed extractor ids are an error.
KlCurve kl_curve(const std::vector<ReprTrace>& traces,
                 const std::vector<TargetRepr>& targets);

struct MetricReport {
    std::string dataset;
    std::vector<double> mse_per_iteration;
    std::vector<double> mae_per_iteration;
    double final_mse = 0.0;
    double final_mae = 0.0;
    int diverged_count = 0;
    std::string init_policy;
    std::string config_hash;
};

std::string metric_report_json(const MetricReport& report);

// Human-readable summary. Published GLM3 reference rows are printed
// alongside for context, clearly labeled as such.
std::string metric_report_text(const MetricReport& report);

void save_iteration_mae_csv(const std::filesystem::path& path,
                            const std::vector<double>& series);
void save_iteration_kl_csv(const std::filesystem::path& path, const KlCurve& curve);

}  // namespace raha
