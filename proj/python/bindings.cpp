// Copyright 2026 The raha Authors
// SPDX-License-Identifier: Apache-2.0

#include <optional>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "raha/align.hpp"
#include "raha/dataset.hpp"
#include "raha/features.hpp"
#include "raha/gateway.hpp"
#include "raha/head.hpp"
#include "raha/markov.hpp"
#include "raha/metrics.hpp"
#include "raha/prompts.hpp"
#include "raha/util.hpp"

namespace py = pybind11;

namespace {

raha::TemplateSet templates_by_name(const std::string& kind) {
    if (kind == "academic") return raha::TemplateSet::builtin_academic();
    if (kind == "patent") return raha::TemplateSet::builtin_patent();
    throw raha::ValidationError("templates must be 'academic' or 'patent'");
}

// Owns the parameter and optimizer state so python callers can train and
// predict without tracking the pieces separately.
class Head {
  public:
    explicit Head(const raha::HeadConfig& config)
        : config_(config),
          params_(raha::HeadParams::init(config)),
          state_(raha::AdamState::init(config)) {}

    double predict(const Eigen::VectorXd& h) const {
        return raha::head_forward(params_, h);
    }

    Eigen::VectorXd adapted(const Eigen::VectorXd& h) const {
        return raha::adapted_features(params_, h);
    }

    double train_batch(const Eigen::MatrixXd& H, const Eigen::VectorXd& y) {
        raha::Batch batch{H, y};
        raha::LossAndGrads result = raha::loss_and_grads(params_, batch);
        raha::apply_update(params_, state_, result.grads, config_);
        return result.loss;
    }

    double loss(const Eigen::MatrixXd& H, const Eigen::VectorXd& y) const {
        return raha::loss_and_grads(params_, raha::Batch{H, y}).loss;
    }

    void save(const std::filesystem::path& path) const {
        raha::save_checkpoint(path, config_, params_, state_);
    }

    static Head load(const std::filesystem::path& path) {
        const raha::Checkpoint ckpt = raha::load_checkpoint(path);
        Head head(ckpt.config);
        head.params_ = ckpt.params;
        head.state_ = ckpt.state;
        return head;
    }

  private:
    raha::HeadConfig config_;
    raha::HeadParams params_;
    raha::AdamState state_;
};

}  // namespace

PYBIND11_MODULE(_raha, m) {
    m.doc() = "Hierarchical text rating core";

    py::register_exception<raha::ValidationError>(m, "ValidationError",
                                                  PyExc_ValueError);
    py::register_exception<raha::TemplateError>(m, "TemplateError", PyExc_ValueError);

    m.def("sha256_hex", [](const std::string& s) { return raha::sha256_hex(s); },
          py::arg("data"));
    m.def("format_fixed", &raha::format_fixed, py::arg("value"), py::arg("decimals"));

    m.def(
        "build_pair_prompt",
        [](const std::string& kind, const std::string& root, const std::string& leaf) {
            const raha::PairPrompt p =
                raha::build_pair_prompt(templates_by_name(kind), root, leaf, {});
            return py::make_tuple(p.task1_text, p.task2_text);
        },
        py::arg("templates"), py::arg("root_text"), py::arg("leaf_text"),
        "Returns the (importance, comparison) prompt pair");

    m.def(
        "build_aggregation_prompt",
        [](const std::string& kind, const std::string& root,
           const std::vector<std::string>& updates, std::optional<double> prior) {
            std::vector<raha::IndexedUpdate> indexed;
            for (std::size_t i = 0; i < updates.size(); ++i) {
                indexed.push_back({static_cast<int>(i) + 1, updates[i]});
            }
            return raha::build_aggregation_prompt(templates_by_name(kind), root, indexed,
                                                  prior, {}, 0)
                .text;
        },
        py::arg("templates"), py::arg("root_text"), py::arg("updates"),
        py::arg("prior") = std::nullopt);

    m.def(
        "mock_generate",
        [](const std::string& prompt, int overlap_threshold) {
            raha::MockRuleBackend backend(overlap_threshold);
            raha::GenerationRequest req;
            req.model = "mock";
            req.prompt = prompt;
            return backend.generate(req);
        },
        py::arg("prompt"), py::arg("overlap_threshold") = 2);

    m.def("keyword_tokens", [](const std::string& text) {
        return raha::keyword_tokens(text);
    });

    py::class_<raha::HeadConfig>(m, "HeadConfig")
        .def(py::init<>())
        .def_readwrite("dim", &raha::HeadConfig::dim)
        .def_readwrite("rank", &raha::HeadConfig::rank)
        .def_readwrite("lr", &raha::HeadConfig::lr)
        .def_readwrite("clip_norm", &raha::HeadConfig::clip_norm)
        .def_readwrite("beta1", &raha::HeadConfig::beta1)
        .def_readwrite("beta2", &raha::HeadConfig::beta2)
        .def_readwrite("eps", &raha::HeadConfig::eps)
        .def_readwrite("weight_decay", &raha::HeadConfig::weight_decay)
        .def_readwrite("init_scale", &raha::HeadConfig::init_scale)
        .def_readwrite("seed", &raha::HeadConfig::seed);

    py::class_<Head>(m, "Head")
        .def(py::init<const raha::HeadConfig&>(), py::arg("config"))
        .def("predict", &Head::predict, py::arg("h"))
        .def("adapted", &Head::adapted, py::arg("h"))
        .def("train_batch", &Head::train_batch, py::arg("H"), py::arg("y"),
             "One clipped AdamW step; returns the pre-step batch loss")
        .def("loss", &Head::loss, py::arg("H"), py::arg("y"))
        .def("save", &Head::save, py::arg("path"))
        .def_static("load", &Head::load, py::arg("path"));

    m.def("hash_features",
          [](const std::string& prompt, int dim, std::uint64_t seed) {
              return raha::HashFeatures(dim, seed).extract(prompt);
          },
          py::arg("prompt"), py::arg("dim") = 256, py::arg("seed") = 0);

    m.def("boxplus", &raha::boxplus, py::arg("A"), py::arg("B"), py::arg("M"));
    m.def("spectral_radius", &raha::spectral_radius, py::arg("F"));
    m.def(
        "fixed_point",
        [](const Eigen::RowVectorXd& p_contrib, const Eigen::MatrixXd& f_yy) {
            return raha::fixed_point(p_contrib, f_yy);
        },
        py::arg("P_contrib"), py::arg("F_yy"));
    m.def(
        "iterate_chain",
        [](const Eigen::RowVectorXd& P, const Eigen::MatrixXd& F_p,
           const Eigen::MatrixXd& F_yy, const Eigen::RowVectorXd& y0, int max_iterations,
           double tolerance) {
            raha::ChainSpec spec = raha::ChainSpec::from_blocks(P, F_p, F_yy, y0);
            spec.max_iterations = max_iterations;
            spec.tolerance = tolerance;
            const raha::IterationResult result = raha::iterate_chain(spec);
            py::dict out;
            const char* status = result.status == raha::ChainStatus::kConverged
                                     ? "converged"
                                     : (result.status == raha::ChainStatus::kDiverged
                                            ? "diverged"
                                            : "max_iterations");
            out["status"] = status;
            out["iterations"] = result.iterations;
            out["y"] = result.y;
            out["rho_yy"] = result.rho_yy;
            out["contractive"] = result.contractive;
            return out;
        },
        py::arg("P"), py::arg("F_p"), py::arg("F_yy"), py::arg("y0"),
        py::arg("max_iterations") = 400, py::arg("tolerance") = 1e-10);

    m.def(
        "mse_mae",
        [](const std::vector<double>& predictions, const std::vector<double>& targets) {
            const raha::MseMae r = raha::mse_mae(predictions, targets);
            return py::make_tuple(r.mse, r.mae);
        },
        py::arg("predictions"), py::arg("targets"));
    m.def(
        "kl_divergence",
        [](const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
            return raha::kl_divergence(p, q);
        },
        py::arg("repr_p"), py::arg("repr_q"));
}
