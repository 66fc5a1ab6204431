#pragma once

#include <cstdint>
#include <vector>

#include "pvrnn/common.hpp"

namespace pvrnn {

// One level of the multiple-timescale hierarchy. Layer 0 is the bottom
// (fast, output-adjacent) layer; higher indices are slower.
struct LayerSpec {
    int d_size = 0;      // deterministic units
    int z_size = 0;      // stochastic latent units
    double tau = 1.0;    // time constant, >= 1
    double w = 1.0;      // complexity (meta-prior) weight for t >= 2
};

struct ModelConfig {
    std::vector<LayerSpec> layers;
    double w_first = 1.0;   // complexity weight at t = 1
    int output_dim = kProprioDim + kExteroDim;
    int proprio_dim = kProprioDim;
    // Gaussian observation model scale; calibrated to the normalized data
    // so the accuracy and complexity terms compete as intended.
    double observation_std = 0.05;
    std::uint64_t seed = 1; // weight-init seed

    int num_layers() const { return static_cast<int>(layers.size()); }
    int extero_dim() const { return output_dim - proprio_dim; }

    // The stock three-layer network: d=(40,20,10), z=(4,2,1), tau=(2,4,8),
    // per-layer meta-priors (w1, 10*w1, 100*w1).
    static ModelConfig defaults(double w1, std::uint64_t seed = 1);

    // Small network for quick experiments and tests.
    static ModelConfig tiny(double w1, std::uint64_t seed = 1);

    void validate() const;  // throws ConfigError
    bool same_shape(const ModelConfig& other) const;
};

}  // namespace pvrnn
