#include "pvrnn/checkpoint.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

namespace pvrnn {

namespace {

using nlohmann::json;

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
    if (!j.is_array()) throw ConfigError("checkpoint: matrix field is not an array");
    if (j.empty()) return {};
    const size_t cols = j[0].size();
    Eigen::MatrixXd m(j.size(), cols);
    for (size_t i = 0; i < j.size(); ++i) {
        if (j[i].size() != cols) throw ConfigError("checkpoint: ragged matrix rows");
        for (size_t c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
    }
    return m;
}

json params_to_json(const NetworkParams& p) {
    json out;
    p.visit([&out](const Eigen::MatrixXd& m, const std::string& name) {
        out[name] = matrix_to_json(m);
    });
    return out;
}

NetworkParams params_from_json(const json& j, const ModelConfig& config) {
    NetworkParams p = NetworkParams::zeros(config);
    p.visit([&j](Eigen::MatrixXd& m, const std::string& name) {
        if (!j.contains(name)) throw ConfigError("checkpoint: missing params block " + name);
        Eigen::MatrixXd loaded = matrix_from_json(j.at(name));
        if (loaded.rows() != m.rows() || loaded.cols() != m.cols())
            throw ConfigError("checkpoint: shape mismatch in " + name);
        m = std::move(loaded);
    });
    return p;
}

json adapt_to_json(const AdaptationSequence& a) {
    json out;
    out["first_step"] = a.first_step;
    json mu = json::array(), ls = json::array();
    for (int t = 0; t < a.length(); ++t) {
        json mu_t = json::array(), ls_t = json::array();
        for (size_t l = 0; l < a.raw_mean[t].size(); ++l) {
            mu_t.push_back(matrix_to_json(a.raw_mean[t][l]));
            ls_t.push_back(matrix_to_json(a.log_stddev[t][l]));
        }
        mu.push_back(std::move(mu_t));
        ls.push_back(std::move(ls_t));
    }
    out["raw_mean"] = std::move(mu);
    out["log_stddev"] = std::move(ls);
    return out;
}

AdaptationSequence adapt_from_json(const json& j, const ModelConfig& config) {
    const auto& mu = j.at("raw_mean");
    const auto& ls = j.at("log_stddev");
    if (mu.size() != ls.size() || mu.empty())
        throw ConfigError("checkpoint: malformed adaptation block");
    const int len = static_cast<int>(mu.size());
    const int batch = static_cast<int>(mu[0][0][0].size());
    AdaptationSequence a =
        AdaptationSequence::zeros(config, len, batch, j.value("first_step", 1));
    for (int t = 0; t < len; ++t) {
        if (static_cast<int>(mu[t].size()) != config.num_layers())
            throw ConfigError("checkpoint: adaptation layer count mismatch");
        for (int l = 0; l < config.num_layers(); ++l) {
            Eigen::MatrixXd m = matrix_from_json(mu[t][l]);
            Eigen::MatrixXd s = matrix_from_json(ls[t][l]);
            if (m.rows() != config.layers[l].z_size || m.cols() != batch ||
                s.rows() != config.layers[l].z_size || s.cols() != batch)
                throw ConfigError("checkpoint: adaptation shape mismatch");
            a.raw_mean[t][l] = std::move(m);
            a.log_stddev[t][l] = std::move(s);
        }
    }
    return a;
}

}  // namespace

json model_config_to_json(const ModelConfig& config) {
    json layers = json::array();
    for (const auto& l : config.layers)
        layers.push_back({{"d_size", l.d_size},
                          {"z_size", l.z_size},
                          {"tau", l.tau},
                          {"w", l.w}});
    return {{"layers", layers},
            {"w_first", config.w_first},
            {"output_dim", config.output_dim},
            {"proprio_dim", config.proprio_dim},
            {"observation_std", config.observation_std},
            {"seed", config.seed}};
}

ModelConfig model_config_from_json(const json& j) {
    ModelConfig c;
    c.layers.clear();
    for (const auto& l : j.at("layers"))
        c.layers.push_back({l.at("d_size").get<int>(), l.at("z_size").get<int>(),
                            l.at("tau").get<double>(), l.at("w").get<double>()});
    c.w_first = j.at("w_first").get<double>();
    c.output_dim = j.at("output_dim").get<int>();
    c.proprio_dim = j.at("proprio_dim").get<int>();
    c.observation_std = j.at("observation_std").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.validate();
    return c;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    json j;
    j["format"] = "pvrnn-checkpoint";
    j["version"] = ckpt.version;
    j["model"] = model_config_to_json(ckpt.model);
    j["params"] = params_to_json(ckpt.params);
    j["adaptation"] = adapt_to_json(ckpt.adaptation);
    j["train_seed"] = ckpt.train_seed;
    j["epoch"] = ckpt.epoch;
    j["adam"] = {{"learning_rate", ckpt.adam.learning_rate},
                 {"beta1", ckpt.adam.beta1},
                 {"beta2", ckpt.adam.beta2},
                 {"epsilon", ckpt.adam.epsilon}};
    if (ckpt.has_optimizer) {
        j["optimizer"] = {{"m_params", params_to_json(ckpt.m_params)},
                          {"v_params", params_to_json(ckpt.v_params)},
                          {"m_adapt", adapt_to_json(ckpt.m_adapt)},
                          {"v_adapt", adapt_to_json(ckpt.v_adapt)}};
    }
    if (!ckpt.provenance.empty()) j["provenance"] = json::parse(ckpt.provenance);

    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write checkpoint: " + path);
    out << j.dump() << "\n";
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read checkpoint: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("corrupt checkpoint " + path + ": " + e.what());
    }
    if (j.value("format", "") != "pvrnn-checkpoint")
        throw ConfigError("not a checkpoint file: " + path);
    if (j.value("version", -1) != 1)
        throw ConfigError("unsupported checkpoint version in " + path);

    Checkpoint c;
    c.model = model_config_from_json(j.at("model"));
    c.params = params_from_json(j.at("params"), c.model);
    c.adaptation = adapt_from_json(j.at("adaptation"), c.model);
    c.train_seed = j.at("train_seed").get<std::uint64_t>();
    c.epoch = j.at("epoch").get<long>();
    if (j.contains("adam")) {
        c.adam.learning_rate = j["adam"].value("learning_rate", 0.001);
        c.adam.beta1 = j["adam"].value("beta1", 0.9);
        c.adam.beta2 = j["adam"].value("beta2", 0.999);
        c.adam.epsilon = j["adam"].value("epsilon", 1e-8);
    }
    if (j.contains("optimizer")) {
        c.has_optimizer = true;
        c.m_params = params_from_json(j["optimizer"].at("m_params"), c.model);
        c.v_params = params_from_json(j["optimizer"].at("v_params"), c.model);
        c.m_adapt = adapt_from_json(j["optimizer"].at("m_adapt"), c.model);
        c.v_adapt = adapt_from_json(j["optimizer"].at("v_adapt"), c.model);
    }
    if (j.contains("provenance")) c.provenance = j["provenance"].dump();
    return c;
}

std::string params_fingerprint(const NetworkParams& params) {
    return params_to_json(params).dump();
}

}  // namespace pvrnn
