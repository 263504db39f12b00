// Copyright 2026 The raha Authors
// SPDX-License-Identifier: Apache-2.0

#include "raha/markov.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <nlohmann/json.hpp>

#include "raha/util.hpp"

namespace raha {

namespace {

using nlohmann::json;

Eigen::MatrixXd dense_from_json(const json& j, const char* what) {
    if (!j.is_array() || j.empty()) {
        throw ValidationError(std::string("chain spec: ") + what + " must be a 2-d array");
    }
    const std::size_t rows = j.size();
    const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
    if (cols == 0) {
        throw ValidationError(std::string("chain spec: ") + what + " must be a 2-d array");
    }
    Eigen::MatrixXd m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        if (!j[r].is_array() || j[r].size() != cols) {
            throw ValidationError(std::string("chain spec: ragged rows in ") + what);
        }
        for (std::size_t c = 0; c < cols; ++c) {
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                j[r][c].get<double>();
        }
    }
    return m;
}

Eigen::RowVectorXd row_from_json(const json& j, const char* what) {
    if (!j.is_array() || j.empty()) {
        throw ValidationError(std::string("chain spec: ") + what + " must be a 1-d array");
    }
    Eigen::RowVectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    }
    return v;
}

}  // namespace

ChainSpec ChainSpec::from_blocks(Eigen::RowVectorXd P, const Eigen::MatrixXd& F_p,
                                 const Eigen::MatrixXd& F_yy, Eigen::RowVectorXd y0) {
    ChainSpec spec;
    spec.P = std::move(P);
    spec.F_star.resize(F_p.rows() + F_yy.rows(), F_p.cols());
    spec.F_star << F_p, F_yy;
    spec.y0 = std::move(y0);
    spec.validate();
    return spec;
}

void ChainSpec::validate() const {
    if (P.cols() < 1) {
        throw ValidationError("ChainSpec: P must be non-empty");
    }
    const int nn = n();
    if (nn < 1 || F_star.rows() != P.cols() + nn) {
        throw ValidationError("ChainSpec: F_star must have p + n rows and n columns");
    }
    if (y0.cols() != nn) {
        throw ValidationError("ChainSpec: y0 must have n entries");
    }
    if (!(tolerance > 0.0)) {
        throw ValidationError("ChainSpec: tolerance must be positive");
    }
    if (max_iterations < 1) {
        throw ValidationError("ChainSpec: max_iterations must be positive");
    }
    if (!P.allFinite() || !F_star.allFinite() || !y0.allFinite()) {
        throw ValidationError("ChainSpec: entries must be finite");
    }
    if (M.size() > 0 && !M.allFinite()) {
        throw ValidationError("ChainSpec: M entries must be finite");
    }
}

Eigen::MatrixXd boxplus(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                        const Eigen::MatrixXd& M) {
    if (A.rows() != B.rows() || A.cols() != B.cols()) {
        throw ValidationError("boxplus: operands must share a shape");
    }
    if (A.cols() % 2 != 0 || A.cols() == 0) {
        throw ValidationError("boxplus: column count must be even and positive");
    }
    const Eigen::Index half = A.cols() / 2;
    if (M.rows() != half) {
        throw ValidationError("boxplus: M must have rows equal to half the column count");
    }
    Eigen::MatrixXd out(A.rows(), 2 * M.cols());
    out.leftCols(M.cols()) = (A.leftCols(half) + B.leftCols(half)) * M;
    out.rightCols(M.cols()) = (A.rightCols(half) + B.rightCols(half)) * M;
    return out;
}

double spectral_radius(const Eigen::MatrixXd& F) {
    if (F.rows() != F.cols() || F.rows() == 0) {
        throw ValidationError("spectral_radius: matrix must be square and non-empty");
    }
    const Eigen::EigenSolver<Eigen::MatrixXd> solver(F, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) {
        throw ValidationError("spectral_radius: eigensolver failed to converge");
    }
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

IterationResult iterate_chain(const ChainSpec& spec, const DivergenceRule& rule) {
    spec.validate();
    const Eigen::MatrixXd F_yy = spec.f_yy();
    const Eigen::RowVectorXd p_contrib = spec.P * spec.f_p();

    IterationResult result;
    result.rho_yy = spectral_radius(F_yy);
    result.contractive = result.rho_yy < 1.0;
    result.y = spec.y0;
    result.trajectory.push_back(spec.y0);

    double prev_window_max = -1.0;
    double window_max = 0.0;
    for (int k = 1; k <= spec.max_iterations; ++k) {
        const Eigen::RowVectorXd next = p_contrib + result.y * F_yy;
        const double delta = (next - result.y).lpNorm<Eigen::Infinity>();
        result.y = next;
        result.iterations = k;
        result.trajectory.push_back(next);
        result.deltas.push_back(delta);

        if (!next.allFinite() ||
            next.lpNorm<Eigen::Infinity>() > rule.overflow_norm) {
            result.status = ChainStatus::kDiverged;
            return result;
        }
        if (delta < spec.tolerance) {
            result.status = ChainStatus::kConverged;
            return result;
        }
        window_max = std::max(window_max, delta);
        if (k % rule.window == 0) {
            if (prev_window_max >= 0.0 && window_max > prev_window_max * rule.growth_ratio) {
                result.status = ChainStatus::kDiverged;
                return result;
            }
            prev_window_max = window_max;
            window_max = 0.0;
        }
    }
    result.status = ChainStatus::kMaxIterations;
    return result;
}

Eigen::RowVectorXd fixed_point(const Eigen::RowVectorXd& P_contrib,
                               const Eigen::MatrixXd& F_yy) {
    if (F_yy.rows() != F_yy.cols() || F_yy.rows() != P_contrib.cols()) {
        throw ValidationError("fixed_point: F_yy must be square and match P_contrib");
    }
    const Eigen::MatrixXd system =
        Eigen::MatrixXd::Identity(F_yy.rows(), F_yy.cols()) - F_yy;

    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(system);
    const double smax = svd.singularValues()(0);
    const double smin = svd.singularValues()(svd.singularValues().size() - 1);
    if (!(smin > 0.0) || smax / smin > 1e12) {
        throw ValidationError("fixed_point: I - F_yy is numerically singular");
    }

    // y (I - F_yy) = P_contrib  <=>  (I - F_yy)^T y^T = P_contrib^T.
    const Eigen::VectorXd solution =
        system.transpose().partialPivLu().solve(P_contrib.transpose());
    return solution.transpose();
}

Eigen::RowVectorXd fixed_point(const ChainSpec& spec) {
    spec.validate();
    return fixed_point(spec.P * spec.f_p(), spec.f_yy());
}

ChainSpec random_chain_spec(int n, int p, double target_rho, std::uint64_t seed) {
    if (n < 1 || p < 1) {
        throw ValidationError("random_chain_spec: n and p must be positive");
    }
    if (!(target_rho >= 0.0) || !std::isfinite(target_rho)) {
        throw ValidationError("random_chain_spec: target_rho must be finite and non-negative");
    }
    std::uint64_t state = seed ^ 0x6368a1acULL;
    auto draw = [&] { return symmetric_double(splitmix64(state)); };

    Eigen::RowVectorXd P(p);
    for (int i = 0; i < p; ++i) P[i] = draw();
    Eigen::MatrixXd F_p(p, n);
    for (int r = 0; r < p; ++r) {
        for (int c = 0; c < n; ++c) F_p(r, c) = draw();
    }
    Eigen::MatrixXd F_yy(n, n);
    double measured = 0.0;
    do {
        for (int r = 0; r < n; ++r) {
            for (int c = 0; c < n; ++c) F_yy(r, c) = draw();
        }
        measured = spectral_radius(F_yy);
    } while (!(measured > 0.0));
    if (target_rho > 0.0) {
        F_yy *= target_rho / measured;
    } else {
        F_yy.setZero();
    }

    Eigen::RowVectorXd y0(n);
    for (int i = 0; i < n; ++i) y0[i] = draw();
    return ChainSpec::from_blocks(std::move(P), F_p, F_yy, std::move(y0));
}

double fit_log_slope(const std::vector<double>& errors, double floor, int min_points) {
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int count = 0;
    for (std::size_t k = 0; k < errors.size(); ++k) {
        const double e = errors[k];
        if (!(e > floor) || !std::isfinite(e)) continue;
        const double x = static_cast<double>(k);
        const double y = std::log(e);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++count;
    }
    if (count < min_points) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    const double denom = count * sxx - sx * sx;
    if (denom == 0.0) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    return (count * sxy - sx * sy) / denom;
}

VerificationReport run_verification(const VerificationConfig& config) {
    if (config.chains < 1) {
        throw ValidationError("run_verification: chains must be positive");
    }
    VerificationReport report;
    report.outcomes.reserve(config.chains);

    for (int i = 0; i < config.chains; ++i) {
        ChainSpec spec = random_chain_spec(config.n, config.p, config.rho,
                                           config.seed + static_cast<std::uint64_t>(i));
        spec.max_iterations = config.max_iterations;
        spec.tolerance = config.tolerance;

        const IterationResult run = iterate_chain(spec, config.rule);
        ChainOutcome outcome;
        outcome.status = run.status;
        outcome.iterations = run.iterations;
        outcome.rho = run.rho_yy;
        outcome.gap = std::numeric_limits<double>::quiet_NaN();
        outcome.slope = std::numeric_limits<double>::quiet_NaN();

        if (run.contractive) {
            const Eigen::RowVectorXd limit = fixed_point(spec);
            if (run.status == ChainStatus::kConverged) {
                outcome.gap = (run.y - limit).lpNorm<Eigen::Infinity>();
                report.max_gap = std::max(report.max_gap, outcome.gap);
            }
            std::vector<double> errors;
            errors.reserve(run.trajectory.size());
            for (const Eigen::RowVectorXd& y : run.trajectory) {
                errors.push_back((y - limit).lpNorm<Eigen::Infinity>());
            }
            outcome.slope = fit_log_slope(errors);
            if (std::isfinite(outcome.slope)) {
                report.slope_total += 1;
                if (outcome.slope <= std::log(outcome.rho) + 0.05) {
                    report.slope_ok += 1;
                }
            }
        }

        switch (run.status) {
            case ChainStatus::kConverged: report.converged += 1; break;
            case ChainStatus::kDiverged: report.diverged += 1; break;
            case ChainStatus::kMaxIterations: report.maxed += 1; break;
        }
        report.outcomes.push_back(outcome);
    }
    return report;
}

void save_trajectory_csv(const std::filesystem::path& path,
                         const IterationResult& result) {
    std::ostringstream out;
    out << "k";
    const Eigen::Index n = result.y.cols();
    for (Eigen::Index i = 0; i < n; ++i) {
        out << ",y" << i;
    }
    out << ",delta\n";
    out.precision(17);
    for (std::size_t k = 0; k < result.trajectory.size(); ++k) {
        out << k;
        for (Eigen::Index i = 0; i < n; ++i) {
            out << ',' << result.trajectory[k][i];
        }
        if (k == 0) {
            out << ",\n";
        } else {
            out << ',' << result.deltas[k - 1] << '\n';
        }
    }
    write_file_atomic(path, out.str());
}

ChainSpec chain_spec_from_json(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const std::exception& e) {
        throw IoError("chain_spec_from_json: cannot parse " + path.string() + ": " +
                      e.what());
    }
    ChainSpec spec;
    spec.P = row_from_json(j.at("P"), "P");
    if (j.contains("F_star")) {
        spec.F_star = dense_from_json(j.at("F_star"), "F_star");
    } else {
        const Eigen::MatrixXd F_p = dense_from_json(j.at("F_p"), "F_p");
        const Eigen::MatrixXd F_yy = dense_from_json(j.at("F_yy"), "F_yy");
        if (F_p.cols() != F_yy.cols()) {
            throw ValidationError("chain spec: F_p and F_yy column counts differ");
        }
        spec.F_star.resize(F_p.rows() + F_yy.rows(), F_p.cols());
        spec.F_star << F_p, F_yy;
    }
    if (j.contains("y0")) {
        spec.y0 = row_from_json(j.at("y0"), "y0");
    } else {
        spec.y0 = Eigen::RowVectorXd::Zero(spec.F_star.cols());
    }
    if (j.contains("M")) {
        spec.M = dense_from_json(j.at("M"), "M");
    }
    spec.max_iterations = j.value("max_iterations", spec.max_iterations);
    spec.tolerance = j.value("tolerance", spec.tolerance);
    spec.validate();
    return spec;
}

}  // namespace raha
