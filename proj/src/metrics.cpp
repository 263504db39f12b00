// Copyright 2026 The raha Authors
// SPDX-License-Identifier: Apache-2.0

#include "raha/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "raha/util.hpp"

namespace raha {

namespace {

using nlohmann::json;

double median_of(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n % 2 == 1) {
        return values[n / 2];
    }
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double log_sum_exp(const Eigen::VectorXd& x) {
    const double m = x.maxCoeff();
    return m + std::log((x.array() - m).exp().sum());
}

struct ReferenceRow {
    const char* name;
    const char* dataset;
    double mse;
    double mae;
};

// Published GLM3 reference results, shown for context in reports.
constexpr ReferenceRow kReferenceRows[] = {
    {"GLM3-RAHA_Forward", "DBLP", 0.024, 0.070},
    {"GLM3-RAHA_Forward", "PubMed", 0.025, 0.106},
    {"GLM3-RAHA_Forward", "PatentsView", 0.022, 0.084},
    {"GLM3-RAHA_Attention", "DBLP", 0.024, 0.078},
    {"GLM3-RAHA_Attention", "PubMed", 0.018, 0.072},
    {"GLM3-RAHA_Attention", "PatentsView", 0.020, 0.099},
};

}  // namespace

MseMae mse_mae(const std::vector<double>& predictions,
               const std::vector<double>& targets) {
    if (predictions.empty()) {
        throw ValidationError("mse_mae: empty input");
    }
    if (predictions.size() != targets.size()) {
        throw ValidationError("mse_mae: length mismatch");
    }
    double se = 0.0;
    double ae = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (!std::isfinite(predictions[i]) || !std::isfinite(targets[i])) {
            throw ValidationError("mse_mae: non-finite value");
        }
        const double e = predictions[i] - targets[i];
        se += e * e;
        ae += std::abs(e);
    }
    const double n = static_cast<double>(predictions.size());
    return MseMae{se / n, ae / n};
}

std::vector<double> iteration_mae_curve(const std::vector<std::vector<double>>& traces,
                                        const std::vector<double>& targets) {
    if (traces.empty()) {
        throw ValidationError("iteration_mae_curve: no traces");
    }
    if (traces.size() != targets.size()) {
        throw ValidationError("iteration_mae_curve: trace/target count mismatch");
    }
    const std::size_t k_count = traces[0].size();
    if (k_count == 0) {
        throw ValidationError("iteration_mae_curve: empty traces");
    }
    for (const std::vector<double>& t : traces) {
        if (t.size() != k_count) {
            throw ValidationError("iteration_mae_curve: inconsistent iteration counts");
        }
    }
    std::vector<double> series(k_count, 0.0);
    for (std::size_t k = 0; k < k_count; ++k) {
        std::vector<double> preds(traces.size());
        for (std::size_t i = 0; i < traces.size(); ++i) {
            preds[i] = traces[i][k];
        }
        series[k] = mse_mae(preds, targets).mae;
    }
    return series;
}

double kl_divergence(const Eigen::VectorXd& repr_p, const Eigen::VectorXd& repr_q) {
    if (repr_p.size() != repr_q.size() || repr_p.size() == 0) {
        throw ValidationError("kl_divergence: vectors must share a positive length");
    }
    if (!repr_p.allFinite() || !repr_q.allFinite()) {
        throw ValidationError("kl_divergence: non-finite input");
    }
    const double lse_p = log_sum_exp(repr_p);
    const double lse_q = log_sum_exp(repr_q);
    double kl = 0.0;
    for (Eigen::Index i = 0; i < repr_p.size(); ++i) {
        const double log_p = repr_p[i] - lse_p;
        const double log_q = repr_q[i] - lse_q;
        kl += std::exp(log_p) * (log_p - log_q);
    }
    return std::max(kl, 0.0);
}

KlCurve kl_curve(const std::vector<ReprTrace>& traces,
                 const std::vector<TargetRepr>& targets) {
    if (traces.empty() || traces.size() != targets.size()) {
        throw ValidationError("kl_curve: trace/target count mismatch");
    }
    const std::string& extractor = traces[0].extractor_id;
    const std::size_t k_count = traces[0].reprs.size();
    if (k_count == 0) {
        throw ValidationError("kl_curve: empty traces");
    }
    for (std::size_t i = 0; i < traces.size(); ++i) {
        if (traces[i].extractor_id != extractor || targets[i].extractor_id != extractor) {
            throw ValidationError("kl_curve: mixed feature extractors");
        }
        if (traces[i].reprs.size() != k_count) {
            throw ValidationError("kl_curve: inconsistent iteration counts");
        }
    }
    KlCurve curve;
    curve.mean.resize(k_count);
    curve.median.resize(k_count);
    for (std::size_t k = 0; k < k_count; ++k) {
        std::vector<double> values(traces.size());
        double sum = 0.0;
        for (std::size_t i = 0; i < traces.size(); ++i) {
            values[i] = kl_divergence(traces[i].reprs[k], targets[i].repr);
            sum += values[i];
        }
        curve.mean[k] = sum / static_cast<double>(values.size());
        curve.median[k] = median_of(values);
    }
    return curve;
}

std::string metric_report_json(const MetricReport& report) {
    json j;
    j["dataset"] = report.dataset;
    j["mse_per_iteration"] = report.mse_per_iteration;
    j["mae_per_iteration"] = report.mae_per_iteration;
    j["final_mse"] = report.final_mse;
    j["final_mae"] = report.final_mae;
    j["diverged_count"] = report.diverged_count;
    j["init_policy"] = report.init_policy;
    j["config_hash"] = report.config_hash;
    return j.dump(2) + "\n";
}

std::string metric_report_text(const MetricReport& report) {
    std::ostringstream out;
    out << "Evaluation report\n";
    out << "  dataset:      " << report.dataset << "\n";
    out << "  init policy:  " << report.init_policy << "\n";
    out << "  config hash:  " << report.config_hash << "\n";
    out << "  diverged:     " << report.diverged_count << "\n";
    out << std::fixed << std::setprecision(6);
    for (std::size_t k = 0; k < report.mae_per_iteration.size(); ++k) {
        out << "  k=" << (k + 1) << "  MSE " << report.mse_per_iteration[k] << "  MAE "
            << report.mae_per_iteration[k] << "\n";
    }
    out << "  final         MSE " << report.final_mse << "  MAE " << report.final_mae
        << "\n";
    out << "\nPublished reference rows (context only):\n" << std::setprecision(3);
    for (const ReferenceRow& row : kReferenceRows) {
        out << "  " << std::left << std::setw(22) << row.name << std::setw(14)
            << row.dataset << std::right << "MSE " << row.mse << "  MAE " << row.mae
            << "\n";
    }
    return out.str();
}

void save_iteration_mae_csv(const std::filesystem::path& path,
                            const std::vector<double>& series) {
    std::ostringstream out;
    out.precision(17);
    out << "k,mae\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        out << (k + 1) << ',' << series[k] << '\n';
    }
    write_file_atomic(path, out.str());
}

void save_iteration_kl_csv(const std::filesystem::path& path, const KlCurve& curve) {
    if (curve.mean.size() != curve.median.size()) {
        throw ValidationError("save_iteration_kl_csv: mean/median length mismatch");
    }
    std::ostringstream out;
    out.precision(17);
    out << "k,kl_mean,kl_median\n";
    for (std::size_t k = 0; k < curve.mean.size(); ++k) {
        out << (k + 1) << ',' << curve.mean[k] << ',' << curve.median[k] << '\n';
    }
    write_file_atomic(path, out.str());
}

}  // namespace raha
