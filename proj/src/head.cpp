// Copyright 2026 The raha Authors
// SPDX-License-Identifier: Apache-2.0

#include "raha/head.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "raha/util.hpp"

namespace raha {

namespace {

using nlohmann::json;

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            row.push_back(m(r, c));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols,
                                 const char* what) {
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows) {
        throw ValidationError(std::string("checkpoint: bad row count for ") + what);
    }
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const json& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
            throw ValidationError(std::string("checkpoint: bad column count for ") + what);
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
        }
    }
    return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        out.push_back(v[i]);
    }
    return out;
}

Eigen::VectorXd vector_from_json(const json& j, Eigen::Index size, const char* what) {
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != size) {
        throw ValidationError(std::string("checkpoint: bad length for ") + what);
    }
    Eigen::VectorXd v(size);
    for (Eigen::Index i = 0; i < size; ++i) {
        v[i] = j[static_cast<std::size_t>(i)].get<double>();
    }
    return v;
}

void adam_step(Eigen::Ref<Eigen::MatrixXd> param, Eigen::Ref<Eigen::MatrixXd> m,
               Eigen::Ref<Eigen::MatrixXd> v, const Eigen::MatrixXd& g,
               const HeadConfig& c, double bias1, double bias2) {
    m = c.beta1 * m + (1.0 - c.beta1) * g;
    v = c.beta2 * v + (1.0 - c.beta2) * g.array().square().matrix();
    const Eigen::ArrayXXd mhat = m.array() / bias1;
    const Eigen::ArrayXXd vhat = v.array() / bias2;
    param.array() -= c.lr * (mhat / (vhat.sqrt() + c.eps) + c.weight_decay * param.array());
}

}  // namespace

void HeadConfig::validate() const {
    if (dim < 1) throw ValidationError("HeadConfig: dim must be positive");
    if (rank < 0 || rank > dim) {
        throw ValidationError("HeadConfig: rank must be in [0, dim]");
    }
    if (!(lr > 0.0)) throw ValidationError("HeadConfig: lr must be positive");
    if (!(clip_norm > 0.0)) throw ValidationError("HeadConfig: clip_norm must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw ValidationError("HeadConfig: betas must lie in [0, 1)");
    }
    if (!(eps > 0.0)) throw ValidationError("HeadConfig: eps must be positive");
    if (weight_decay < 0.0) {
        throw ValidationError("HeadConfig: weight_decay must be non-negative");
    }
    if (!(init_scale > 0.0)) throw ValidationError("HeadConfig: init_scale must be positive");
}

HeadParams HeadParams::init(const HeadConfig& config) {
    config.validate();
    HeadParams p;
    p.lora_A.resize(config.rank, config.dim);
    std::uint64_t state = config.seed ^ 0x5eedf00dULL;
    for (Eigen::Index r = 0; r < p.lora_A.rows(); ++r) {
        for (Eigen::Index c = 0; c < p.lora_A.cols(); ++c) {
            p.lora_A(r, c) = config.init_scale * symmetric_double(splitmix64(state));
        }
    }
    p.lora_B = Eigen::MatrixXd::Zero(config.dim, config.rank);
    p.w1 = Eigen::VectorXd::Zero(config.dim);
    return p;
}

Eigen::VectorXd adapted_features(const HeadParams& params, const Eigen::VectorXd& h) {
    if (h.size() != params.w1.size()) {
        throw ValidationError("adapted_features: feature dim mismatch");
    }
    return h + params.lora_B * (params.lora_A * h);
}

double head_forward(const HeadParams& params, const Eigen::VectorXd& h) {
    return params.w1.dot(adapted_features(params, h));
}

LossAndGrads loss_and_grads(const HeadParams& params, const Batch& batch) {
    const int m = batch.size();
    if (m < 1) {
        throw ValidationError("loss_and_grads: empty batch");
    }
    if (batch.H.cols() != m || batch.H.rows() != params.w1.size()) {
        throw ValidationError("loss_and_grads: batch shape mismatch");
    }

    // Columnwise forward: Hstar = H + B A H, yhat = Hstar^T w1.
    const Eigen::MatrixXd AH = params.lora_A * batch.H;      // rank x m
    const Eigen::MatrixXd Hstar = batch.H + params.lora_B * AH;
    const Eigen::VectorXd yhat = Hstar.transpose() * params.w1;
    const Eigen::VectorXd err = yhat - batch.y;

    LossAndGrads out;
    out.loss = err.squaredNorm() / (2.0 * m);

    // dL/dyhat_i = err_i / m. With u = B^T w1:
    //   dL/dw1 = sum_i (err_i/m) hstar_i
    //   dL/dB  = sum_i (err_i/m) w1 (A h_i)^T
    //   dL/dA  = sum_i (err_i/m) u h_i^T
    const Eigen::VectorXd scaled = err / static_cast<double>(m);
    out.grads.g_w1 = Hstar * scaled;
    out.grads.g_B = params.w1 * (AH * scaled).transpose();
    const Eigen::VectorXd u = params.lora_B.transpose() * params.w1;
    out.grads.g_A = u * (batch.H * scaled).transpose();
    return out;
}

double global_norm(const Gradients& grads) {
    return std::sqrt(grads.g_A.squaredNorm() + grads.g_B.squaredNorm() +
                     grads.g_w1.squaredNorm());
}

double clip_gradients(Gradients& grads, double clip_norm) {
    const double norm = global_norm(grads);
    if (norm > clip_norm && norm > 0.0) {
        const double scale = clip_norm / norm;
        grads.g_A *= scale;
        grads.g_B *= scale;
        grads.g_w1 *= scale;
    }
    return norm;
}

AdamState AdamState::init(const HeadConfig& config) {
    AdamState s;
    s.m_A = Eigen::MatrixXd::Zero(config.rank, config.dim);
    s.v_A = Eigen::MatrixXd::Zero(config.rank, config.dim);
    s.m_B = Eigen::MatrixXd::Zero(config.dim, config.rank);
    s.v_B = Eigen::MatrixXd::Zero(config.dim, config.rank);
    s.m_w1 = Eigen::VectorXd::Zero(config.dim);
    s.v_w1 = Eigen::VectorXd::Zero(config.dim);
    return s;
}

void apply_update(HeadParams& params, AdamState& state, Gradients grads,
                  const HeadConfig& config) {
    clip_gradients(grads, config.clip_norm);
    state.step += 1;
    const double bias1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
    const double bias2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));

    adam_step(params.lora_A, state.m_A, state.v_A, grads.g_A, config, bias1, bias2);
    adam_step(params.lora_B, state.m_B, state.v_B, grads.g_B, config, bias1, bias2);

    Eigen::MatrixXd w1_m = state.m_w1;
    Eigen::MatrixXd w1_v = state.v_w1;
    Eigen::MatrixXd w1_p = params.w1;
    adam_step(w1_p, w1_m, w1_v, grads.g_w1, config, bias1, bias2);
    params.w1 = w1_p;
    state.m_w1 = w1_m;
    state.v_w1 = w1_v;
}

void save_checkpoint(const std::filesystem::path& path, const HeadConfig& config,
                     const HeadParams& params, const AdamState& state) {
    json j;
    j["format"] = "raha-head";
    j["version"] = 1;
    j["config"] = {{"dim", config.dim},
                   {"rank", config.rank},
                   {"lr", config.lr},
                   {"clip_norm", config.clip_norm},
                   {"beta1", config.beta1},
                   {"beta2", config.beta2},
                   {"eps", config.eps},
                   {"weight_decay", config.weight_decay},
                   {"init_scale", config.init_scale},
                   {"seed", config.seed}};
    j["params"] = {{"lora_A", matrix_to_json(params.lora_A)},
                   {"lora_B", matrix_to_json(params.lora_B)},
                   {"w1", vector_to_json(params.w1)}};
    j["adam"] = {{"step", state.step},
                 {"m_A", matrix_to_json(state.m_A)},
                 {"v_A", matrix_to_json(state.v_A)},
                 {"m_B", matrix_to_json(state.m_B)},
                 {"v_B", matrix_to_json(state.v_B)},
                 {"m_w1", vector_to_json(state.m_w1)},
                 {"v_w1", vector_to_json(state.v_w1)}};
    write_file_atomic(path, j.dump() + "\n");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const std::exception& e) {
        throw IoError("load_checkpoint: cannot parse " + path.string() + ": " + e.what());
    }
    if (j.value("format", "") != "raha-head" || j.value("version", 0) != 1) {
        throw ValidationError("load_checkpoint: unsupported checkpoint format");
    }

    Checkpoint out;
    const json& c = j.at("config");
    out.config.dim = c.at("dim").get<int>();
    out.config.rank = c.at("rank").get<int>();
    out.config.lr = c.at("lr").get<double>();
    out.config.clip_norm = c.at("clip_norm").get<double>();
    out.config.beta1 = c.at("beta1").get<double>();
    out.config.beta2 = c.at("beta2").get<double>();
    out.config.eps = c.at("eps").get<double>();
    out.config.weight_decay = c.at("weight_decay").get<double>();
    out.config.init_scale = c.at("init_scale").get<double>();
    out.config.seed = c.at("seed").get<std::uint64_t>();
    out.config.validate();

    const Eigen::Index d = out.config.dim;
    const Eigen::Index r = out.config.rank;
    const json& p = j.at("params");
    out.params.lora_A = matrix_from_json(p.at("lora_A"), r, d, "lora_A");
    out.params.lora_B = matrix_from_json(p.at("lora_B"), d, r, "lora_B");
    out.params.w1 = vector_from_json(p.at("w1"), d, "w1");

    const json& a = j.at("adam");
    out.state.step = a.at("step").get<std::int64_t>();
    out.state.m_A = matrix_from_json(a.at("m_A"), r, d, "m_A");
    out.state.v_A = matrix_from_json(a.at("v_A"), r, d, "v_A");
    out.state.m_B = matrix_from_json(a.at("m_B"), d, r, "m_B");
    out.state.v_B = matrix_from_json(a.at("v_B"), d, r, "v_B");
    out.state.m_w1 = vector_from_json(a.at("m_w1"), d, "m_w1");
    out.state.v_w1 = vector_from_json(a.at("v_w1"), d, "v_w1");
    return out;
}

}  // namespace raha
