// Copyright 2026 The raha Authors
// SPDX-License-Identifier: Apache-2.0

#include "raha/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <map>
#include <memory>
#include <sstream>

#include <nlohmann/json.hpp>

#include "raha/align.hpp"
#include "raha/attention.hpp"
#include "raha/features.hpp"
#include "raha/gateway.hpp"
#include "raha/markov.hpp"
#include "raha/metrics.hpp"
#include "raha/util.hpp"

namespace raha {

namespace {

using nlohmann::json;

TemplateSet make_templates(const PipelineConfig& config) {
    if (config.templates == "academic") return TemplateSet::builtin_academic();
    if (config.templates == "patent") return TemplateSet::builtin_patent();
    std::filesystem::path dir = config.templates;
    if (!dir.is_absolute()) dir = config.config_dir / dir;
    return TemplateSet::load_dir(dir);
}

std::unique_ptr<FeatureExtractor> make_extractor(const PipelineConfig& config) {
    if (config.extractor.kind == "hash") {
        return std::make_unique<HashFeatures>(config.extractor.dim, config.extractor.seed);
    }
    return std::make_unique<LinearWorldFeatures>(config.extractor.dim);
}

Gateway make_gateway(const PipelineConfig& config) {
    std::shared_ptr<Backend> backend;
    if (config.gateway.backend == "mock") {
        backend = std::make_shared<MockRuleBackend>(config.gateway.mock_overlap_threshold);
    } else {
        HttpBackendConfig http;
        http.base_url = config.gateway.base_url;
        if (const char* key = std::getenv(config.gateway.api_key_env.c_str())) {
            http.api_key = key;
        }
        backend = std::make_shared<HttpChatBackend>(std::move(http));
    }
    RetryPolicy retry;
    retry.max_attempts = config.gateway.max_attempts;
    return Gateway(std::move(backend), ResponseCache(config.gateway.cache_dir), retry);
}

AttendOptions make_attend_options(const PipelineConfig& config) {
    AttendOptions options;
    options.model = config.gateway.model;
    options.temperature = config.gateway.temperature;
    options.max_tokens = config.gateway.max_tokens;
    options.parallelism = config.gateway.parallelism;
    options.limits = config.run.limits;
    return options;
}

std::filesystem::path attention_dir(const PipelineConfig& config) {
    return config.output_dir / "attention";
}

std::vector<SampleAttention> load_attentions(const PipelineConfig& config,
                                             const std::vector<Sample>& samples) {
    std::vector<SampleAttention> out;
    out.reserve(samples.size());
    for (const Sample& sample : samples) {
        out.push_back(load_attention(attention_dir(config), sample.id));
    }
    return out;
}

std::filesystem::path checkpoint_path(const PipelineConfig& config) {
    return config.output_dir / "checkpoint.json";
}

std::filesystem::path traces_path(const PipelineConfig& config) {
    return config.output_dir / "traces.jsonl";
}

}  // namespace

int cmd_attend(const PipelineConfig& config, std::ostream& out) {
    const DatasetSplits splits = load_dataset(config.dataset);
    const TemplateSet templates = make_templates(config);
    Gateway gateway = make_gateway(config);
    const AttendOptions options = make_attend_options(config);
    const std::filesystem::path dir = attention_dir(config);
    std::filesystem::create_directories(dir);

    std::size_t pairs = 0;
    std::size_t kept = 0;
    std::size_t fallbacks = 0;
    std::size_t count = 0;
    auto process = [&](const std::vector<Sample>& samples) {
        for (const Sample& sample : samples) {
            const SampleAttention attention =
                attend_sample(gateway, templates, sample, options);
            save_attention(dir, attention);
            pairs += static_cast<std::size_t>(attention.filtered.total);
            kept += static_cast<std::size_t>(attention.filtered.kept);
            for (const PairJudgment& j : attention.judgments) {
                fallbacks += j.parse_fallback ? 1 : 0;
            }
            ++count;
        }
    };
    process(splits.train);
    process(splits.val);
    process(splits.test);

    json stats;
    stats["samples"] = count;
    stats["pairs"] = pairs;
    stats["kept"] = kept;
    stats["parse_fallbacks"] = fallbacks;
    stats["backend_calls"] = gateway.stats().backend_calls.load();
    stats["cache_hits"] = gateway.stats().cache_hits.load();
    stats["retries"] = gateway.stats().retries.load();
    write_file_atomic(dir / "attend_stats.json", stats.dump(2) + "\n");

    out << "attend: " << count << " samples, " << pairs << " pairs, " << kept
        << " kept, " << gateway.stats().backend_calls.load() << " backend calls, "
        << gateway.stats().cache_hits.load() << " cache hits\n";
    return 0;
}

int cmd_train(const PipelineConfig& config, std::ostream& out) {
    const DatasetSplits splits = load_dataset(config.dataset);
    if (splits.train.empty()) {
        throw ValidationError("train: train split is empty");
    }
    const TemplateSet templates = make_templates(config);
    const std::unique_ptr<FeatureExtractor> extractor = make_extractor(config);
    const std::vector<SampleAttention> attentions =
        load_attentions(config, splits.train);

    const std::filesystem::path ckpt = checkpoint_path(config);
    if (std::filesystem::exists(ckpt)) {
        const Checkpoint existing = load_checkpoint(ckpt);
        if (existing.config.dim != config.head.dim ||
            existing.config.rank != config.head.rank) {
            throw ValidationError(
                "train: existing checkpoint has dim " +
                std::to_string(existing.config.dim) + ", rank " +
                std::to_string(existing.config.rank) + " but config requests dim " +
                std::to_string(config.head.dim) + ", rank " +
                std::to_string(config.head.rank));
        }
    }

    HeadParams params = HeadParams::init(config.head);
    AdamState state = AdamState::init(config.head);
    const TrainLog log = train(splits.train, attentions, templates, *extractor, params,
                               state, config.head, config.run, config.train_shuffle_seed);

    std::filesystem::create_directories(config.output_dir);
    save_checkpoint(ckpt, config.head, params, state);
    std::ostringstream log_text;
    log_text << "config_hash " << config.config_hash() << "\n";
    for (const std::string& line : log.lines) {
        log_text << line << "\n";
    }
    write_file_atomic(config.output_dir / "train_log.txt", log_text.str());

    for (const std::string& line : log.lines) {
        out << "train: " << line << "\n";
    }
    out << "train: checkpoint written to " << ckpt.string() << "\n";
    return 0;
}

int cmd_infer(const PipelineConfig& config, std::ostream& out) {
    const DatasetSplits splits = load_dataset(config.dataset);
    if (splits.test.empty()) {
        throw ValidationError("infer: test split is empty");
    }
    const TemplateSet templates = make_templates(config);
    const std::unique_ptr<FeatureExtractor> extractor = make_extractor(config);
    const std::vector<SampleAttention> attentions = load_attentions(config, splits.test);
    const Checkpoint ckpt = load_checkpoint(checkpoint_path(config));
    if (ckpt.config.dim != config.extractor.dim) {
        throw ValidationError("infer: checkpoint dim " + std::to_string(ckpt.config.dim) +
                              " does not match extractor dim " +
                              std::to_string(config.extractor.dim));
    }

    std::vector<PredictionTrace> traces;
    traces.reserve(splits.test.size());
    int diverged = 0;
    for (std::size_t i = 0; i < splits.test.size(); ++i) {
        traces.push_back(infer(splits.test[i], attentions[i], templates, *extractor,
                               ckpt.params, config.run));
        diverged += traces.back().diverged ? 1 : 0;
    }

    TraceMeta meta;
    meta.extractor_id = extractor->id();
    meta.init_policy = to_string(config.run.init);
    meta.init_seed = config.run.init_seed;
    meta.k_test = config.run.k_test;
    meta.config_hash = config.config_hash();
    std::filesystem::create_directories(config.output_dir);
    save_traces(traces_path(config), traces, meta);

    out << "infer: " << traces.size() << " traces, k_test " << config.run.k_test << ", "
        << diverged << " diverged, written to " << traces_path(config).string() << "\n";
    return 0;
}

int cmd_eval(const PipelineConfig& config, std::ostream& out) {
    const DatasetSplits splits = load_dataset(config.dataset);
    const LoadedTraces loaded = load_traces(traces_path(config));
    const TemplateSet templates = make_templates(config);
    const std::unique_ptr<FeatureExtractor> extractor = make_extractor(config);
    if (loaded.meta.extractor_id != extractor->id()) {
        throw ValidationError("eval: traces were made with extractor " +
                              loaded.meta.extractor_id + " but config selects " +
                              extractor->id());
    }
    const Checkpoint ckpt = load_checkpoint(checkpoint_path(config));

    std::map<std::string, const Sample*> by_id;
    for (const Sample& s : splits.test) by_id[s.id] = &s;

    std::vector<std::vector<double>> usable;
    std::vector<double> targets;
    std::vector<ReprTrace> repr_traces;
    std::vector<TargetRepr> repr_targets;
    int diverged = 0;
    for (const PredictionTrace& trace : loaded.traces) {
        if (trace.diverged) {
            ++diverged;
            continue;
        }
        const auto it = by_id.find(trace.sample_id);
        if (it == by_id.end()) {
            throw ValidationError("eval: trace sample not in test split: " +
                                  trace.sample_id);
        }
        std::vector<double> ys;
        ReprTrace reprs;
        reprs.extractor_id = loaded.meta.extractor_id;
        for (const TraceEntry& entry : trace.entries) {
            ys.push_back(entry.y);
            reprs.reprs.push_back(adapted_features(ckpt.params, entry.h));
        }
        usable.push_back(std::move(ys));
        targets.push_back(it->second->target);
        repr_traces.push_back(std::move(reprs));

        const SampleAttention attention =
            load_attention(attention_dir(config), trace.sample_id);
        const AggregationPrompt target_prompt = build_aggregation_prompt(
            templates, it->second->root_text, attention.filtered.updates,
            it->second->target, config.run.limits, 0);
        TargetRepr target_repr;
        target_repr.extractor_id = loaded.meta.extractor_id;
        target_repr.repr =
            adapted_features(ckpt.params, extractor->extract(target_prompt.text));
        repr_targets.push_back(std::move(target_repr));
    }
    if (usable.empty()) {
        throw ValidationError("eval: every trace diverged; nothing to score");
    }

    MetricReport report;
    report.dataset = config.dataset.path.filename().string();
    report.diverged_count = diverged;
    report.init_policy = loaded.meta.init_policy;
    report.config_hash = loaded.meta.config_hash;
    const std::size_t k_count = usable[0].size();
    for (std::size_t k = 0; k < k_count; ++k) {
        std::vector<double> preds;
        preds.reserve(usable.size());
        for (const std::vector<double>& ys : usable) preds.push_back(ys[k]);
        const MseMae m = mse_mae(preds, targets);
        report.mse_per_iteration.push_back(m.mse);
        report.mae_per_iteration.push_back(m.mae);
    }
    report.final_mse = report.mse_per_iteration.back();
    report.final_mae = report.mae_per_iteration.back();

    const KlCurve kl = kl_curve(repr_traces, repr_targets);

    std::filesystem::create_directories(config.output_dir);
    write_file_atomic(config.output_dir / "report.json", metric_report_json(report));
    write_file_atomic(config.output_dir / "report.txt", metric_report_text(report));
    save_iteration_mae_csv(config.output_dir / "iteration_mae.csv",
                           report.mae_per_iteration);
    save_iteration_kl_csv(config.output_dir / "iteration_kl.csv", kl);

    out << metric_report_text(report);
    return 0;
}

int cmd_markov(const MarkovOptions& options, std::ostream& out) {
    std::filesystem::create_directories(options.output_dir);

    if (options.spec_path) {
        const ChainSpec spec = chain_spec_from_json(*options.spec_path);
        const IterationResult result = iterate_chain(spec);
        save_trajectory_csv(options.output_dir / "trajectory.csv", result);
        out << "markov: rho(F_yy) = " << result.rho_yy << "\n";
        switch (result.status) {
            case ChainStatus::kConverged:
                out << "markov: converged in " << result.iterations
                    << " iterations; limit gap to fixed point "
                    << (result.y - fixed_point(spec)).lpNorm<Eigen::Infinity>() << "\n";
                break;
            case ChainStatus::kDiverged:
                out << "markov: diverged after " << result.iterations << " iterations\n";
                break;
            case ChainStatus::kMaxIterations:
                out << "markov: hit max iterations (" << result.iterations << ")\n";
                break;
        }
        return result.status == ChainStatus::kDiverged ? 1 : 0;
    }

    VerificationConfig contraction;
    contraction.chains = options.chains;
    contraction.n = options.n;
    contraction.p = options.p;
    contraction.rho = 0.9;
    contraction.seed = options.seed;
    const VerificationReport converging = run_verification(contraction);

    VerificationConfig expansion = contraction;
    expansion.rho = 1.1;
    expansion.max_iterations = 200;
    const VerificationReport diverging = run_verification(expansion);

    for (int i = 0; i < std::min(options.chains, 3); ++i) {
        ChainSpec spec = random_chain_spec(contraction.n, contraction.p, contraction.rho,
                                           contraction.seed + static_cast<std::uint64_t>(i));
        spec.max_iterations = contraction.max_iterations;
        spec.tolerance = contraction.tolerance;
        std::ostringstream name;
        name << "trajectory_" << std::setw(3) << std::setfill('0') << i << ".csv";
        save_trajectory_csv(options.output_dir / name.str(), iterate_chain(spec));
    }

    const bool tol_ok = converging.converged == options.chains &&
                        converging.max_gap <= 1e-8;
    const bool div_ok = diverging.diverged == options.chains;
    const bool slope_ok = converging.slope_total == options.chains &&
                          converging.slope_ok == options.chains;

    std::ostringstream summary;
    summary << converging.converged << "/" << options.chains
            << " converged within tolerance (max fixed-point gap " << std::scientific
            << std::setprecision(2) << converging.max_gap << ")\n";
    summary << diverging.diverged << "/" << options.chains
            << " expanding chains flagged within 200 iterations\n";
    summary << converging.slope_ok << "/" << converging.slope_total
            << " decay slopes within log(rho) + 0.05\n";
    summary << (tol_ok && div_ok && slope_ok ? "PASS" : "FAIL") << "\n";

    write_file_atomic(options.output_dir / "summary.txt", summary.str());
    out << summary.str();
    return (tol_ok && div_ok && slope_ok) ? 0 : 1;
}

}  // namespace raha
