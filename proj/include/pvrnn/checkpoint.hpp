#pragma once

#include <string>

#include <nlohmann/json_fwd.hpp>

#include "pvrnn/adam.hpp"
#include "pvrnn/network.hpp"

namespace pvrnn {

// Self-describing snapshot of a training run: model, weights, per-sequence
// adaptation variables over the full training window, optimizer state and
// enough provenance to reproduce the run.
struct Checkpoint {
    int version = 1;
    ModelConfig model;
    NetworkParams params;
    AdaptationSequence adaptation;  // batch = training sequences, full length
    std::uint64_t train_seed = 0;
    long epoch = 0;
    AdamConfig adam;

    // Optimizer moments, kept so a resumed run continues the exact
    // trajectory of an uninterrupted one.
    bool has_optimizer = false;
    NetworkParams m_params, v_params;
    AdaptationSequence m_adapt, v_adapt;

    std::string provenance;  // resolved config + seed as a JSON string
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

// Serialized parameter block only; used for frozen-weight comparisons.
std::string params_fingerprint(const NetworkParams& params);

nlohmann::json model_config_to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j);

}  // namespace pvrnn
