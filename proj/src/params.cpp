#include "pvrnn/params.hpp"

#include <cmath>
#include <random>

namespace pvrnn {

namespace {

void shape_layer(NetworkParams::Layer& p, const ModelConfig& cfg, int l) {
    const int d = cfg.layers[l].d_size;
    const int z = cfg.layers[l].z_size;
    const int n = cfg.num_layers();
    p.recurrent = Eigen::MatrixXd::Zero(d, d);
    p.latent_in = Eigen::MatrixXd::Zero(d, z);
    p.top_down = (l + 1 < n) ? Eigen::MatrixXd::Zero(d, cfg.layers[l + 1].d_size)
                             : Eigen::MatrixXd();
    p.bottom_up = (l > 0) ? Eigen::MatrixXd::Zero(d, cfg.layers[l - 1].d_size)
                          : Eigen::MatrixXd();
    p.prior_mean = Eigen::MatrixXd::Zero(z, d);
    p.prior_logsig = Eigen::MatrixXd::Zero(z, d);
}

// Row-major fill so the draw order is defined independently of Eigen's
// storage layout.
void fill_gaussian(Eigen::MatrixXd& m, Rng& rng) {
    if (m.size() == 0) return;
    const double std = 1.0 / std::sqrt(static_cast<double>(m.cols()));
    std::normal_distribution<double> dist(0.0, std);
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = dist(rng);
}

}  // namespace

NetworkParams NetworkParams::zeros(const ModelConfig& config) {
    config.validate();
    NetworkParams p;
    p.layers.resize(config.num_layers());
    for (int l = 0; l < config.num_layers(); ++l) shape_layer(p.layers[l], config, l);
    p.out_weight = Eigen::MatrixXd::Zero(config.output_dim, config.layers[0].d_size);
    p.out_bias = Eigen::MatrixXd::Zero(config.output_dim, 1);
    return p;
}

NetworkParams NetworkParams::init(const ModelConfig& config, std::uint64_t seed) {
    NetworkParams p = zeros(config);
    Rng rng(seed);
    p.visit([&rng](Eigen::MatrixXd& m, const std::string& name) {
        if (name.find("out_bias") == std::string::npos) fill_gaussian(m, rng);
    });
    return p;
}

void NetworkParams::visit(
    const std::function<void(Eigen::MatrixXd&, const std::string&)>& fn) {
    for (size_t l = 0; l < layers.size(); ++l) {
        const std::string at = "layer" + std::to_string(l) + ".";
        fn(layers[l].recurrent, at + "recurrent");
        fn(layers[l].latent_in, at + "latent_in");
        fn(layers[l].top_down, at + "top_down");
        fn(layers[l].bottom_up, at + "bottom_up");
        fn(layers[l].prior_mean, at + "prior_mean");
        fn(layers[l].prior_logsig, at + "prior_logsig");
    }
    fn(out_weight, "out_weight");
    fn(out_bias, "out_bias");
}

void NetworkParams::visit(
    const std::function<void(const Eigen::MatrixXd&, const std::string&)>& fn) const {
    const_cast<NetworkParams*>(this)->visit(
        [&fn](Eigen::MatrixXd& m, const std::string& name) { fn(m, name); });
}

bool NetworkParams::shape_matches(const ModelConfig& config) const {
    NetworkParams ref = zeros(config);
    if (ref.layers.size() != layers.size()) return false;
    bool ok = true;
    size_t i = 0;
    std::vector<const Eigen::MatrixXd*> mine;
    visit([&mine](const Eigen::MatrixXd& m, const std::string&) { mine.push_back(&m); });
    ref.visit([&](const Eigen::MatrixXd& m, const std::string&) {
        if (i >= mine.size() || mine[i]->rows() != m.rows() || mine[i]->cols() != m.cols())
            ok = false;
        ++i;
    });
    return ok && i == mine.size();
}

bool NetworkParams::all_finite() const {
    bool ok = true;
    visit([&ok](const Eigen::MatrixXd& m, const std::string&) {
        if (m.size() > 0 && !m.allFinite()) ok = false;
    });
    return ok;
}

void NetworkParams::set_zero() {
    visit([](Eigen::MatrixXd& m, const std::string&) { m.setZero(); });
}

}  // namespace pvrnn
