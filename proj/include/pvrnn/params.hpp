#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "pvrnn/config.hpp"

namespace pvrnn {

// All connection weights of one network. Matrices that do not exist at a
// boundary layer (top_down at the top, bottom_up at the bottom) have size 0.
struct NetworkParams {
    struct Layer {
        Eigen::MatrixXd recurrent;     // d x d
        Eigen::MatrixXd latent_in;     // d x z
        Eigen::MatrixXd top_down;      // d x d_{l+1}
        Eigen::MatrixXd bottom_up;     // d x d_{l-1}
        Eigen::MatrixXd prior_mean;    // z x d, pre-tanh head
        Eigen::MatrixXd prior_logsig;  // z x d, pre-exp head
    };

    std::vector<Layer> layers;
    Eigen::MatrixXd out_weight;  // output_dim x d_0
    Eigen::MatrixXd out_bias;    // output_dim x 1

    // Zero-shaped parameter set for a config (used for gradients/moments).
    static NetworkParams zeros(const ModelConfig& config);

    // Seeded Gaussian init, std = 1/sqrt(fan_in); bias starts at zero.
    static NetworkParams init(const ModelConfig& config, std::uint64_t seed);

    // Visits every matrix in a fixed order (bias included as a 1-column
    // matrix). The order defines the flat layout used by the optimizer,
    // serialization and gradient checks.
    void visit(const std::function<void(Eigen::MatrixXd&, const std::string&)>& fn);
    void visit(const std::function<void(const Eigen::MatrixXd&, const std::string&)>& fn) const;

    bool shape_matches(const ModelConfig& config) const;
    bool all_finite() const;
    void set_zero();
};

}  // namespace pvrnn
