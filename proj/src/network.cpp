#include "pvrnn/network.hpp"

#include <cmath>
#include <stdexcept>

namespace pvrnn {

namespace {

inline Eigen::ArrayXXd clamp_logsig(const Eigen::MatrixXd& pre) {
    return pre.array().min(kLogSigmaClamp).max(-kLogSigmaClamp);
}

inline Eigen::ArrayXXd clamp_mask(const Eigen::MatrixXd& pre) {
    return (pre.array().abs() <= kLogSigmaClamp).cast<double>();
}

void check_positive(const Gaussian& g, const char* who) {
    if ((g.stddev.array() <= 0.0).any())
        throw std::domain_error(std::string(who) + ": non-positive stddev");
}

}  // namespace

double kl_gauss(const Gaussian& q, const Gaussian& p) {
    if (q.mean.rows() != p.mean.rows() || q.mean.cols() != p.mean.cols())
        throw std::invalid_argument("kl_gauss: dimension mismatch");
    check_positive(q, "kl_gauss q");
    check_positive(p, "kl_gauss p");
    const auto sq = q.stddev.array();
    const auto sp = p.stddev.array();
    const auto dmu = (q.mean - p.mean).array();
    return ((sp.log() - sq.log()) +
            (sq.square() + dmu.square()) / (2.0 * sp.square()) - 0.5)
        .sum();
}

Eigen::MatrixXd sample_latent(const Gaussian& g, const Eigen::MatrixXd& eps) {
    return g.mean + (g.stddev.array() * eps.array()).matrix();
}

AdaptationSequence AdaptationSequence::zeros(const ModelConfig& config, int length,
                                             int batch, int first_step) {
    AdaptationSequence a;
    a.first_step = first_step;
    a.raw_mean.resize(length);
    a.log_stddev.resize(length);
    for (int t = 0; t < length; ++t) {
        for (const auto& spec : config.layers) {
            a.raw_mean[t].push_back(Eigen::MatrixXd::Zero(spec.z_size, batch));
            a.log_stddev[t].push_back(Eigen::MatrixXd::Zero(spec.z_size, batch));
        }
    }
    return a;
}

Gaussian AdaptationSequence::posterior(int t, int l) const {
    if (!covers(t))
        throw std::out_of_range("adaptation window does not cover step " +
                                std::to_string(t));
    const auto& mu_raw = raw_mean[t - first_step].at(l);
    const auto& ls_raw = log_stddev[t - first_step].at(l);
    Gaussian g;
    g.mean = mu_raw.array().tanh();
    g.stddev = clamp_logsig(ls_raw).exp();
    return g;
}

StateBatch StateBatch::zeros(const ModelConfig& config, int batch) {
    StateBatch s;
    for (const auto& spec : config.layers) {
        s.h.push_back(Eigen::MatrixXd::Zero(spec.d_size, batch));
        s.d.push_back(Eigen::MatrixXd::Zero(spec.d_size, batch));
    }
    return s;
}

EpsTensor draw_eps(const ModelConfig& config, int length, int batch, Rng& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    EpsTensor eps(length);
    for (int t = 0; t < length; ++t) {
        for (const auto& spec : config.layers) {
            Eigen::MatrixXd m(spec.z_size, batch);
            for (Eigen::Index i = 0; i < m.rows(); ++i)
                for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = dist(rng);
            eps[t].push_back(std::move(m));
        }
    }
    return eps;
}

EpsTensor zero_eps(const ModelConfig& config, int length, int batch) {
    EpsTensor eps(length);
    for (int t = 0; t < length; ++t)
        for (const auto& spec : config.layers)
            eps[t].push_back(Eigen::MatrixXd::Zero(spec.z_size, batch));
    return eps;
}

Network::Network(ModelConfig config, NetworkParams params)
    : config_(std::move(config)), params_(std::move(params)) {
    config_.validate();
    if (!params_.shape_matches(config_))
        throw ConfigError("network params do not match model config");
}

StateBatch Network::cell_update(const StateBatch& prev,
                                const std::vector<Eigen::MatrixXd>& z_now) const {
    const int n = config_.num_layers();
    if (static_cast<int>(prev.h.size()) != n || static_cast<int>(z_now.size()) != n)
        throw ConfigError("cell_update: layer count mismatch");
    const Eigen::Index batch = prev.h[0].cols();
    StateBatch next;
    next.h.resize(n);
    next.d.resize(n);
    for (int l = 0; l < n; ++l) {
        const auto& spec = config_.layers[l];
        if (prev.h[l].rows() != spec.d_size || prev.d[l].rows() != spec.d_size ||
            z_now[l].rows() != spec.z_size || prev.h[l].cols() != batch ||
            z_now[l].cols() != batch)
            throw ConfigError("cell_update: shape mismatch at layer " + std::to_string(l));
        const auto& p = params_.layers[l];
        Eigen::MatrixXd drive = p.recurrent * prev.d[l] + p.latent_in * z_now[l];
        if (p.top_down.size() > 0) drive.noalias() += p.top_down * prev.d[l + 1];
        if (p.bottom_up.size() > 0) drive.noalias() += p.bottom_up * prev.d[l - 1];
        const double leak = 1.0 - 1.0 / spec.tau;
        next.h[l] = leak * prev.h[l] + (1.0 / spec.tau) * drive;
        next.d[l] = next.h[l].array().tanh();
    }
    return next;
}

Eigen::MatrixXd Network::output_map(const Eigen::MatrixXd& d_bottom) const {
    if (d_bottom.rows() != config_.layers[0].d_size)
        throw ConfigError("output_map: bottom-layer size mismatch");
    Eigen::MatrixXd out = params_.out_weight * d_bottom;
    out.colwise() += params_.out_bias.col(0);
    return out;
}

Gaussian Network::prior_head(const Eigen::MatrixXd* d_prev, int t, int layer,
                             Eigen::MatrixXd* logsig_pre) const {
    if (t < 1) throw std::invalid_argument("prior_head: t must be >= 1");
    const int z = config_.layers.at(layer).z_size;
    Gaussian g;
    if (t == 1) {
        const Eigen::Index batch = d_prev ? d_prev->cols() : 1;
        g.mean = Eigen::MatrixXd::Zero(z, batch);
        g.stddev = Eigen::MatrixXd::Ones(z, batch);
        if (logsig_pre) *logsig_pre = Eigen::MatrixXd::Zero(z, batch);
        return g;
    }
    if (!d_prev) throw std::invalid_argument("prior_head: d_prev required for t > 1");
    const auto& p = params_.layers[layer];
    Eigen::MatrixXd pre_mu = p.prior_mean * (*d_prev);
    Eigen::MatrixXd pre_ls = p.prior_logsig * (*d_prev);
    g.mean = pre_mu.array().tanh();
    g.stddev = clamp_logsig(pre_ls).exp();
    if (logsig_pre) *logsig_pre = std::move(pre_ls);
    return g;
}

Rollout Network::rollout_posterior(const AdaptationSequence& adapt,
                                   const StateBatch& initial,
                                   const EpsTensor& eps) const {
    const int n = config_.num_layers();
    const int len = adapt.length();
    if (static_cast<int>(eps.size()) != len)
        throw ConfigError("rollout_posterior: eps length mismatch");
    const Eigen::Index batch = adapt.raw_mean.at(0).at(0).cols();

    Rollout r;
    r.first_step = adapt.first_step;
    r.initial = initial;
    r.states.reserve(len);
    r.z.resize(len);
    r.prior.resize(len);
    r.posterior.resize(len);
    r.prior_logsig_pre.resize(len);
    r.eps.resize(len);
    r.outputs.reserve(len);

    const StateBatch* prev = &initial;
    for (int ti = 0; ti < len; ++ti) {
        const int t = adapt.first_step + ti;
        std::vector<Eigen::MatrixXd> z_now(n);
        for (int l = 0; l < n; ++l) {
            Eigen::MatrixXd pre_ls;
            r.prior[ti].push_back(prior_head(&prev->d[l], t, l, &pre_ls));
            r.prior_logsig_pre[ti].push_back(std::move(pre_ls));
            r.posterior[ti].push_back(adapt.posterior(t, l));
            if (eps[ti].at(l).rows() != config_.layers[l].z_size ||
                eps[ti].at(l).cols() != batch)
                throw ConfigError("rollout_posterior: eps shape mismatch");
            r.eps[ti].push_back(eps[ti][l]);
            z_now[l] = sample_latent(r.posterior[ti][l], eps[ti][l]);
        }
        r.states.push_back(cell_update(*prev, z_now));
        r.z[ti] = std::move(z_now);
        r.outputs.push_back(output_map(r.states.back().d[0]));
        prev = &r.states.back();
    }
    return r;
}

Rollout Network::rollout_posterior(const AdaptationSequence& adapt,
                                   const StateBatch& initial, Rng& rng) const {
    const Eigen::Index batch = adapt.raw_mean.at(0).at(0).cols();
    EpsTensor eps = draw_eps(config_, adapt.length(), static_cast<int>(batch), rng);
    return rollout_posterior(adapt, initial, eps);
}

Rollout Network::rollout_prior(const StateBatch& initial, int first_step,
                               int horizon, int batch, Rng& rng,
                               bool deterministic) const {
    const int n = config_.num_layers();
    Rollout r;
    r.first_step = first_step;
    r.initial = initial;
    if (horizon <= 0) return r;
    if (initial.h.empty() || initial.h[0].cols() != batch)
        throw ConfigError("rollout_prior: initial state batch mismatch");
    EpsTensor eps = deterministic ? zero_eps(config_, horizon, batch)
                                  : draw_eps(config_, horizon, batch, rng);
    r.states.reserve(horizon);
    r.z.resize(horizon);
    r.prior.resize(horizon);
    r.prior_logsig_pre.resize(horizon);
    r.eps.resize(horizon);
    r.outputs.reserve(horizon);

    const StateBatch* prev = &initial;
    for (int ti = 0; ti < horizon; ++ti) {
        const int t = first_step + ti;
        std::vector<Eigen::MatrixXd> z_now(n);
        for (int l = 0; l < n; ++l) {
            Eigen::MatrixXd pre_ls;
            Gaussian prior = prior_head(&prev->d[l], t, l, &pre_ls);
            z_now[l] = sample_latent(prior, eps[ti][l]);
            r.prior[ti].push_back(std::move(prior));
            r.prior_logsig_pre[ti].push_back(std::move(pre_ls));
            r.eps[ti].push_back(eps[ti][l]);
        }
        r.states.push_back(cell_update(*prev, z_now));
        r.z[ti] = std::move(z_now);
        r.outputs.push_back(output_map(r.states.back().d[0]));
        prev = &r.states.back();
    }
    return r;
}

FreeEnergyReport Network::free_energy(const Rollout& rollout,
                                      const std::vector<Eigen::MatrixXd>& targets,
                                      const Eigen::VectorXd& mask) const {
    const int len = rollout.length();
    if (len == 0) throw std::invalid_argument("free_energy: empty window");
    if (static_cast<int>(targets.size()) != len)
        throw ConfigError("free_energy: target length mismatch");
    if (mask.size() != config_.output_dim)
        throw ConfigError("free_energy: mask size mismatch");
    const double n_masked = mask.sum();
    if (n_masked <= 0.0) throw ConfigError("free_energy: empty accuracy mask");
    if (rollout.posterior.empty() || rollout.posterior[0].empty())
        throw ConfigError("free_energy: rollout lacks posterior record");

    const int n = config_.num_layers();
    const Eigen::Index batch = rollout.outputs[0].cols();

    FreeEnergyReport rep;
    rep.complexity_per_layer.assign(n, std::vector<double>(len, 0.0));
    rep.e_z_mean.assign(n, 0.0);

    double sq_err = 0.0;
    for (int ti = 0; ti < len; ++ti) {
        const Eigen::MatrixXd diff = rollout.outputs[ti] - targets[ti];
        sq_err += (diff.array().square().colwise() * mask.array()).sum();
        const int t = rollout.first_step + ti;
        for (int l = 0; l < n; ++l) {
            const double kl = kl_gauss(rollout.posterior[ti][l], rollout.prior[ti][l]);
            rep.complexity_per_layer[l][ti] = kl;
            const double w_t = (t == 1) ? config_.w_first : config_.layers[l].w;
            rep.complexity_weighted += (w_t / config_.layers[l].z_size) * kl;
        }
    }
    const double obs_scale = 1.0 / (config_.observation_std * config_.observation_std);
    rep.accuracy = -0.5 * obs_scale * sq_err / n_masked;
    for (int l = 0; l < n; ++l) {
        double sum = 0.0;
        for (int ti = 0; ti < len; ++ti) sum += rep.complexity_per_layer[l][ti];
        rep.e_z_mean[l] = sum / (static_cast<double>(len) * batch);
    }
    rep.total = -rep.accuracy + rep.complexity_weighted;
    return rep;
}

Gradients Network::backward(const Rollout& rollout,
                            const std::vector<Eigen::MatrixXd>& targets,
                            const Eigen::VectorXd& mask,
                            const AdaptationSequence& adapt) const {
    const int len = rollout.length();
    if (len == 0 || rollout.posterior.empty() || rollout.posterior[0].empty())
        throw std::invalid_argument("backward: rollout lacks posterior intermediates");
    if (static_cast<int>(targets.size()) != len)
        throw ConfigError("backward: target length mismatch");
    if (adapt.length() != len || adapt.first_step != rollout.first_step)
        throw ConfigError("backward: adaptation window mismatch");
    const double n_masked = mask.sum();
    const double obs_scale = 1.0 / (config_.observation_std * config_.observation_std);
    const int n = config_.num_layers();
    const Eigen::Index batch = rollout.outputs[0].cols();

    Gradients g;
    g.params = NetworkParams::zeros(config_);
    g.adapt = AdaptationSequence::zeros(config_, len, static_cast<int>(batch),
                                        adapt.first_step);

    // dF/dh_{t+1} and dF/dd_t accumulated from later steps.
    std::vector<Eigen::MatrixXd> gh_next(n), gd(n);
    for (int l = 0; l < n; ++l) {
        gh_next[l] = Eigen::MatrixXd::Zero(config_.layers[l].d_size, batch);
        gd[l] = Eigen::MatrixXd::Zero(config_.layers[l].d_size, batch);
    }

    for (int ti = len - 1; ti >= 0; --ti) {
        const int t = rollout.first_step + ti;
        const StateBatch& prev = (ti > 0) ? rollout.states[ti - 1] : rollout.initial;

        // Accuracy path: X_t -> out params and bottom-layer activation.
        Eigen::MatrixXd gX =
            obs_scale *
            ((rollout.outputs[ti] - targets[ti]).array().colwise() * mask.array())
                .matrix() /
            n_masked;
        g.params.out_weight.noalias() += gX * rollout.states[ti].d[0].transpose();
        g.params.out_bias.col(0) += gX.rowwise().sum();
        gd[0].noalias() += params_.out_weight.transpose() * gX;

        std::vector<Eigen::MatrixXd> gd_prev(n);
        for (int l = 0; l < n; ++l)
            gd_prev[l] = Eigen::MatrixXd::Zero(config_.layers[l].d_size, batch);

        for (int l = 0; l < n; ++l) {
            const auto& spec = config_.layers[l];
            const auto& p = params_.layers[l];
            const double inv_tau = 1.0 / spec.tau;
            const double leak = 1.0 - inv_tau;

            // Through d_t = tanh(h_t) plus the leak path from h_{t+1}.
            Eigen::MatrixXd gh =
                (gd[l].array() * (1.0 - rollout.states[ti].d[l].array().square()))
                    .matrix() +
                leak * gh_next[l];

            g.params.layers[l].recurrent.noalias() +=
                inv_tau * gh * prev.d[l].transpose();
            g.params.layers[l].latent_in.noalias() +=
                inv_tau * gh * rollout.z[ti][l].transpose();
            if (p.top_down.size() > 0) {
                g.params.layers[l].top_down.noalias() +=
                    inv_tau * gh * prev.d[l + 1].transpose();
                gd_prev[l + 1].noalias() += inv_tau * p.top_down.transpose() * gh;
            }
            if (p.bottom_up.size() > 0) {
                g.params.layers[l].bottom_up.noalias() +=
                    inv_tau * gh * prev.d[l - 1].transpose();
                gd_prev[l - 1].noalias() += inv_tau * p.bottom_up.transpose() * gh;
            }
            gd_prev[l].noalias() += inv_tau * p.recurrent.transpose() * gh;

            // Reparameterized sample: z = mu_q + sigma_q .* eps.
            Eigen::MatrixXd gz = inv_tau * p.latent_in.transpose() * gh;

            // Complexity term at (t, l).
            const double w_t = (t == 1) ? config_.w_first : spec.w;
            const double c = w_t / spec.z_size;
            const auto& q = rollout.posterior[ti][l];
            const auto& pr = rollout.prior[ti][l];
            const Eigen::ArrayXXd dmu = (q.mean - pr.mean).array();
            const Eigen::ArrayXXd inv_sp2 = pr.stddev.array().square().inverse();
            const Eigen::ArrayXXd sq = q.stddev.array();

            Eigen::ArrayXXd gmu_q = c * dmu * inv_sp2 + gz.array();
            Eigen::ArrayXXd gsig_q =
                c * (sq * inv_sp2 - sq.inverse()) + gz.array() * rollout.eps[ti][l].array();
            const auto& a_mu = adapt.raw_mean[ti][l];
            const auto& a_ls = adapt.log_stddev[ti][l];
            g.adapt.raw_mean[ti][l] =
                (gmu_q * (1.0 - a_mu.array().tanh().square())).matrix();
            g.adapt.log_stddev[ti][l] = (gsig_q * sq * clamp_mask(a_ls)).matrix();

            if (t > 1) {
                const Eigen::ArrayXXd sp = pr.stddev.array();
                Eigen::ArrayXXd gmu_p = -c * dmu * inv_sp2;
                Eigen::ArrayXXd gsig_p =
                    c * (sp.inverse() - (sq.square() + dmu.square()) * inv_sp2 / sp);
                Eigen::MatrixXd gpre_mu =
                    (gmu_p * (1.0 - pr.mean.array().square())).matrix();
                Eigen::MatrixXd gpre_ls =
                    (gsig_p * sp * clamp_mask(rollout.prior_logsig_pre[ti][l])).matrix();
                g.params.layers[l].prior_mean.noalias() +=
                    gpre_mu * prev.d[l].transpose();
                g.params.layers[l].prior_logsig.noalias() +=
                    gpre_ls * prev.d[l].transpose();
                gd_prev[l].noalias() += p.prior_mean.transpose() * gpre_mu;
                gd_prev[l].noalias() += p.prior_logsig.transpose() * gpre_ls;
            }
            gh_next[l] = std::move(gh);
        }
        gd = std::move(gd_prev);
    }
    return g;
}

Eigen::VectorXd Network::full_mask() const {
    return Eigen::VectorXd::Ones(config_.output_dim);
}

Eigen::VectorXd Network::extero_mask() const {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(config_.output_dim);
    for (int i = config_.proprio_dim; i < config_.output_dim; ++i) m(i) = 1.0;
    return m;
}

}  // namespace pvrnn
