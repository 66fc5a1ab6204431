#pragma once

#include <Eigen/Dense>
#include <cmath>

namespace pvrnn {

struct AdamConfig {
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// Standard bias-corrected Adam update of one matrix slot; `step` is 1-based.
inline void adam_step(Eigen::MatrixXd& value, const Eigen::MatrixXd& grad,
                      Eigen::MatrixXd& m, Eigen::MatrixXd& v, long step,
                      const AdamConfig& cfg) {
    if (value.size() == 0) return;
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad.array().square().matrix();
    const double m_corr = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
    const double v_corr = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
    value.array() -= cfg.learning_rate * (m.array() / m_corr) /
                     ((v.array() / v_corr).sqrt() + cfg.epsilon);
}

}  // namespace pvrnn
