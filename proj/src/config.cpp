#include "pvrnn/config.hpp"

#include <string>

namespace pvrnn {

ModelConfig ModelConfig::defaults(double w1, std::uint64_t seed) {
    ModelConfig c;
    c.layers = {
        {40, 4, 2.0, w1},
        {20, 2, 4.0, w1 * 10.0},
        {10, 1, 8.0, w1 * 100.0},
    };
    c.seed = seed;
    c.validate();
    return c;
}

ModelConfig ModelConfig::tiny(double w1, std::uint64_t seed) {
    ModelConfig c;
    c.layers = {
        {4, 1, 2.0, w1},
        {2, 1, 4.0, w1 * 10.0},
    };
    c.seed = seed;
    c.validate();
    return c;
}

void ModelConfig::validate() const {
    if (layers.empty()) throw ConfigError("model config has no layers");
    for (size_t l = 0; l < layers.size(); ++l) {
        const auto& spec = layers[l];
        const std::string at = "layer " + std::to_string(l) + ": ";
        if (spec.d_size < 1) throw ConfigError(at + "d_size must be >= 1");
        if (spec.z_size < 1) throw ConfigError(at + "z_size must be >= 1");
        if (spec.tau < 1.0) throw ConfigError(at + "tau must be >= 1");
        if (spec.w < 0.0) throw ConfigError(at + "meta-prior w must be >= 0");
    }
    if (w_first < 0.0) throw ConfigError("w_first must be >= 0");
    if (observation_std <= 0.0) throw ConfigError("observation_std must be > 0");
    if (output_dim < 1) throw ConfigError("output_dim must be >= 1");
    if (proprio_dim < 0 || proprio_dim > output_dim)
        throw ConfigError("proprio_dim must lie in [0, output_dim]");
}

bool ModelConfig::same_shape(const ModelConfig& other) const {
    if (layers.size() != other.layers.size()) return false;
    for (size_t l = 0; l < layers.size(); ++l) {
        if (layers[l].d_size != other.layers[l].d_size) return false;
        if (layers[l].z_size != other.layers[l].z_size) return false;
    }
    return output_dim == other.output_dim && proprio_dim == other.proprio_dim;
}

}  // namespace pvrnn
