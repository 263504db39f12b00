// Copyright 2026 The raha Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Dense>

namespace raha {

// Linear recurrence y^(k) = [P  y^(k-1)] . F_star, with F_star stacked as
// [F_p; F_yy]. F_p carries the fixed prompt part, F_yy acts on the value.
struct ChainSpec {
    Eigen::RowVectorXd P;    // 1 x p
    Eigen::MatrixXd F_star;  // (p + n) x n
    Eigen::MatrixXd M;       // mixing matrix for boxplus studies; empty = identity
    Eigen::RowVectorXd y0;   // 1 x n
    int max_iterations = 400;
    double tolerance = 1e-10;

    int p() const { return static_cast<int>(P.cols()); }
    int n() const { return static_cast<int>(F_star.cols()); }
    Eigen::MatrixXd f_p() const { return F_star.topRows(p()); }
    Eigen::MatrixXd f_yy() const { return F_star.bottomRows(n()); }

    static ChainSpec from_blocks(Eigen::RowVectorXd P, const Eigen::MatrixXd& F_p,
                                 const Eigen::MatrixXd& F_yy, Eigen::RowVectorXd y0);
    void validate() const;
};

// Column-split composition: A and B are cut into left and right halves,
// each summed blockwise and multiplied by M, then re-concatenated.
Eigen::MatrixXd boxplus(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                        const Eigen::MatrixXd& M);

// Largest eigenvalue magnitude via a dense eigensolve.
double spectral_radius(const Eigen::MatrixXd& F);

enum class ChainStatus { kConverged, kDiverged, kMaxIterations };

struct IterationResult {
    ChainStatus status = ChainStatus::kMaxIterations;
    int iterations = 0;                           // update steps taken
    Eigen::RowVectorXd y;                         // final iterate
    std::vector<Eigen::RowVectorXd> trajectory;   // y0 first, then one per step
    std::vector<double> deltas;                   // inf-norm step sizes
    double rho_yy = 0.0;                          // measured spectral radius
    bool contractive = false;                     // rho_yy < 1
};

// Stops on a step delta below tolerance. Divergence is a reported status:
// non-finite values, an iterate norm blowup, or the max step delta growing
// from one fixed-size window of iterations to the next.
struct DivergenceRule {
    int window = 25;
    double growth_ratio = 1.2;
    double overflow_norm = 1e12;
};

IterationResult iterate_chain(const ChainSpec& spec, const DivergenceRule& rule = {});

// Solves y (I - F_yy) = P_contrib without forming the inverse. Rejects
// systems whose SVD condition estimate exceeds 1e12.
Eigen::RowVectorXd fixed_point(const Eigen::RowVectorXd& P_contrib,
                               const Eigen::MatrixXd& F_yy);
Eigen::RowVectorXd fixed_point(const ChainSpec& spec);

// Uniform random blocks, with F_yy rescaled so its spectral radius equals
// target_rho exactly.
ChainSpec random_chain_spec(int n, int p, double target_rho, std::uint64_t seed);

struct VerificationConfig {
    int chains = 100;
    int n = 8;
    int p = 4;
    double rho = 0.9;
    std::uint64_t seed = 1;
    int max_iterations = 400;
    double tolerance = 1e-10;
    DivergenceRule rule;
};

struct ChainOutcome {
    ChainStatus status = ChainStatus::kMaxIterations;
    int iterations = 0;
    double rho = 0.0;    // measured spectral radius of F_yy
    double gap = 0.0;    // inf-norm distance of final iterate to fixed point
    double slope = 0.0;  // fitted d ln(error) / dk; NaN when not fittable
};

struct VerificationReport {
    std::vector<ChainOutcome> outcomes;
    int converged = 0;
    int diverged = 0;
    int maxed = 0;
    double max_gap = 0.0;  // over converged chains
    int slope_ok = 0;      // slope <= ln(rho) + 0.05
    int slope_total = 0;
};

VerificationReport run_verification(const VerificationConfig& config);

// Least-squares slope of ln(error) against iteration index, ignoring
// non-positive errors and values below the floor.
double fit_log_slope(const std::vector<double>& errors, double floor = 1e-12,
                     int min_points = 8);

// Rows: k, y components, step delta (empty for k = 0).
void save_trajectory_csv(const std::filesystem::path& path, const IterationResult& result);

ChainSpec chain_spec_from_json(const std::filesystem::path& path);

}  // namespace raha
