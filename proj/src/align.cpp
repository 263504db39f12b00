// Copyright 2026 The raha Authors
// SPDX-License-Identifier: Apache-2.0

#include "raha/align.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "raha/util.hpp"

namespace raha {

namespace {

using nlohmann::json;

// Fisher-Yates with a splitmix-driven index stream.
void deterministic_shuffle(std::vector<std::size_t>& order, std::uint64_t seed) {
    std::uint64_t state = seed;
    for (std::size_t i = order.size(); i > 1; --i) {
        const std::size_t j =
            static_cast<std::size_t>(splitmix64(state) % static_cast<std::uint64_t>(i));
        std::swap(order[i - 1], order[j]);
    }
}

Eigen::VectorXd features_for(const Sample& sample, const SampleAttention& attention,
                             const TemplateSet& templates,
                             const FeatureExtractor& extractor,
                             std::optional<double> prior, const PromptLimits& limits,
                             int iteration) {
    const AggregationPrompt prompt = build_aggregation_prompt(
        templates, sample.root_text, attention.filtered.updates, prior, limits, iteration);
    return extractor.extract(prompt.text);
}

}  // namespace

std::string to_string(InitPolicy policy) {
    return policy == InitPolicy::kNone ? "none" : "random";
}

InitPolicy init_policy_from_string(const std::string& name) {
    if (name == "none") return InitPolicy::kNone;
    if (name == "random") return InitPolicy::kRandom;
    throw ValidationError("init policy must be 'none' or 'random', got '" + name + "'");
}

void RunConfig::validate() const {
    if (k_train < 1 || k_test < 1) {
        throw ValidationError("RunConfig: iteration counts must be at least 1");
    }
    if (batch_size < 1) {
        throw ValidationError("RunConfig: batch_size must be positive");
    }
    if (epochs_per_iteration < 1) {
        throw ValidationError("RunConfig: epochs_per_iteration must be positive");
    }
    if (!(scale.lo < scale.hi)) {
        throw ValidationError("RunConfig: rating scale must have lo < hi");
    }
}

double random_init_value(const std::string& sample_id, std::uint64_t seed,
                         const RatingScale& scale) {
    std::uint64_t state = seed ^ stable_hash64(sample_id);
    return scale.lo + (scale.hi - scale.lo) * unit_double(splitmix64(state));
}

TrainLog train(const std::vector<Sample>& samples,
               const std::vector<SampleAttention>& attentions,
               const TemplateSet& templates, const FeatureExtractor& extractor,
               HeadParams& params, AdamState& state, const HeadConfig& head_config,
               const RunConfig& run_config, std::uint64_t shuffle_seed) {
    run_config.validate();
    head_config.validate();
    if (samples.empty()) {
        throw ValidationError("train: no samples");
    }
    if (samples.size() != attentions.size()) {
        throw ValidationError("train: sample/attention count mismatch");
    }
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].id != attentions[i].sample_id) {
            throw ValidationError("train: attention artifact order mismatch at " +
                                  samples[i].id);
        }
    }

    const std::size_t n = samples.size();
    std::vector<std::optional<double>> priors(n);
    if (run_config.init == InitPolicy::kRandom) {
        for (std::size_t i = 0; i < n; ++i) {
            priors[i] = random_init_value(samples[i].id, run_config.init_seed,
                                          run_config.scale);
        }
    }

    TrainLog log;
    std::vector<std::size_t> order(n);
    for (int k = 1; k <= run_config.k_train; ++k) {
        double loss_sum = 0.0;
        std::size_t loss_weight = 0;

        for (int epoch = 1; epoch <= run_config.epochs_per_iteration; ++epoch) {
            for (std::size_t i = 0; i < n; ++i) order[i] = i;
            deterministic_shuffle(order, shuffle_seed ^
                                             (static_cast<std::uint64_t>(k) << 32) ^
                                             static_cast<std::uint64_t>(epoch));

            for (std::size_t start = 0; start < n; start += run_config.batch_size) {
                const std::size_t count =
                    std::min<std::size_t>(run_config.batch_size, n - start);
                Batch batch;
                batch.H.resize(extractor.dim(), static_cast<Eigen::Index>(count));
                batch.y.resize(static_cast<Eigen::Index>(count));
                for (std::size_t b = 0; b < count; ++b) {
                    const std::size_t i = order[start + b];
                    batch.H.col(static_cast<Eigen::Index>(b)) =
                        features_for(samples[i], attentions[i], templates, extractor,
                                     priors[i], run_config.limits, k);
                    batch.y[static_cast<Eigen::Index>(b)] = samples[i].target;
                }
                const LossAndGrads result = loss_and_grads(params, batch);
                apply_update(params, state, result.grads, head_config);
                loss_sum += result.loss * static_cast<double>(count);
                loss_weight += count;
            }
        }

        const double mean_loss = loss_sum / static_cast<double>(loss_weight);
        log.iteration_mean_loss.push_back(mean_loss);
        std::ostringstream line;
        line << "iteration " << k << "/" << run_config.k_train << " mean_loss "
             << mean_loss;
        log.lines.push_back(line.str());

        // Chain predictions forward with the just-updated parameters.
        if (k < run_config.k_train) {
            for (std::size_t i = 0; i < n; ++i) {
                const Eigen::VectorXd h =
                    features_for(samples[i], attentions[i], templates, extractor,
                                 priors[i], run_config.limits, k);
                priors[i] = head_forward(params, h);
            }
        }
    }
    return log;
}

PredictionTrace infer(const Sample& sample, const SampleAttention& attention,
                      const TemplateSet& templates, const FeatureExtractor& extractor,
                      const HeadParams& params, const RunConfig& config) {
    config.validate();
    PredictionTrace trace;
    trace.sample_id = sample.id;

    std::optional<double> prior;
    if (config.init == InitPolicy::kRandom) {
        prior = random_init_value(sample.id, config.init_seed, config.scale);
    }
    const double bound =
        10.0 * std::max(std::abs(config.scale.lo), std::abs(config.scale.hi));

    for (int k = 1; k <= config.k_test; ++k) {
        TraceEntry entry;
        entry.k = k;
        entry.prior = prior;
        entry.h = features_for(sample, attention, templates, extractor, prior,
                               config.limits, k);
        entry.y = head_forward(params, entry.h);
        trace.entries.push_back(entry);
        if (!std::isfinite(entry.y) || std::abs(entry.y) > bound) {
            trace.diverged = true;
            break;
        }
        prior = entry.y;
    }
    return trace;
}

void save_traces(const std::filesystem::path& path,
                 const std::vector<PredictionTrace>& traces, const TraceMeta& meta) {
    std::ostringstream out;
    for (const PredictionTrace& trace : traces) {
        for (const TraceEntry& entry : trace.entries) {
            json j;
            j["id"] = trace.sample_id;
            j["k"] = entry.k;
            if (entry.prior) {
                j["prior"] = *entry.prior;
            } else {
                j["prior"] = nullptr;
            }
            j["y"] = entry.y;
            j["diverged"] = trace.diverged;
            json h = json::array();
            for (Eigen::Index i = 0; i < entry.h.size(); ++i) {
                h.push_back(entry.h[i]);
            }
            j["h"] = std::move(h);
            out << j.dump() << '\n';
        }
    }
    write_file_atomic(path, out.str());

    json m;
    m["extractor_id"] = meta.extractor_id;
    m["init_policy"] = meta.init_policy;
    m["init_seed"] = meta.init_seed;
    m["k_test"] = meta.k_test;
    m["config_hash"] = meta.config_hash;
    std::filesystem::path meta_path = path;
    meta_path += ".meta.json";
    write_file_atomic(meta_path, m.dump(2) + "\n");
}

LoadedTraces load_traces(const std::filesystem::path& path) {
    LoadedTraces out;

    std::filesystem::path meta_path = path;
    meta_path += ".meta.json";
    json m;
    try {
        m = json::parse(read_file(meta_path));
    } catch (const std::exception& e) {
        throw IoError("load_traces: cannot parse " + meta_path.string() + ": " + e.what());
    }
    out.meta.extractor_id = m.at("extractor_id").get<std::string>();
    out.meta.init_policy = m.at("init_policy").get<std::string>();
    out.meta.init_seed = m.at("init_seed").get<std::uint64_t>();
    out.meta.k_test = m.at("k_test").get<int>();
    out.meta.config_hash = m.at("config_hash").get<std::string>();

    std::istringstream lines(read_file(path));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(lines, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const std::exception& e) {
            throw IoError("load_traces: bad record at line " + std::to_string(line_no) +
                          ": " + e.what());
        }
        const std::string id = j.at("id").get<std::string>();
        if (out.traces.empty() || out.traces.back().sample_id != id) {
            PredictionTrace trace;
            trace.sample_id = id;
            out.traces.push_back(std::move(trace));
        }
        PredictionTrace& trace = out.traces.back();
        TraceEntry entry;
        entry.k = j.at("k").get<int>();
        if (!j.at("prior").is_null()) {
            entry.prior = j.at("prior").get<double>();
        }
        entry.y = j.at("y").get<double>();
        trace.diverged = j.at("diverged").get<bool>();
        const json& h = j.at("h");
        entry.h.resize(static_cast<Eigen::Index>(h.size()));
        for (std::size_t i = 0; i < h.size(); ++i) {
            entry.h[static_cast<Eigen::Index>(i)] = h[i].get<double>();
        }
        if (entry.k != static_cast<int>(trace.entries.size()) + 1) {
            throw ValidationError("load_traces: non-contiguous iterations for " + id);
        }
        trace.entries.push_back(std::move(entry));
    }
    return out;
}

}  // namespace raha
