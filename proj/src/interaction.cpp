#include "pvrnn/interaction.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

namespace pvrnn {

namespace {

constexpr std::uint64_t kAgentStream = 0x4147454e54ULL;
constexpr std::uint64_t kStandaloneStream = 0x5245474dULL;
constexpr std::uint64_t kEsnSeed = 1;  // one classifier for every run

Eigen::Vector4d channel(const Eigen::VectorXd& counterpart_proprio_deg) {
    return mirror(forward_kinematics(counterpart_proprio_deg));
}

}  // namespace

void InteractionConfig::validate() const {
    if (steps < 0) throw ConfigError("interaction: steps must be >= 0");
    if (window < 1) throw ConfigError("interaction: window must be >= 1");
    if (inner_epochs < 1) throw ConfigError("interaction: inner_epochs must be >= 1");
    if (inference_lr <= 0.0) throw ConfigError("interaction: inference_lr must be > 0");
    if (bootstrap_sample < 0) throw ConfigError("interaction: bootstrap_sample must be >= 0");
}

Agent::Agent(const Checkpoint& ckpt, const InteractionConfig& cfg,
             std::uint64_t stream_seed)
    : net_(ckpt.model, ckpt.params),
      cfg_(cfg),
      rng_(stream_seed),
      stored_(ckpt.adaptation) {
    cfg_.validate();
    if (stored_.length() < 2)
        throw ConfigError("interaction: checkpoint stores fewer than two steps of A");
    if (cfg_.bootstrap_sample >= stored_.raw_mean[0][0].cols())
        throw ConfigError("interaction: bootstrap sample index out of range");
    history_.push_back(StateBatch::zeros(net_.config(), 1));  // t = 0
}

namespace {
void ensure_step(std::vector<std::vector<Eigen::MatrixXd>>& buf, const ModelConfig& cfg,
                 int t) {
    while (static_cast<int>(buf.size()) < t) {
        std::vector<Eigen::MatrixXd> per_layer;
        for (const auto& spec : cfg.layers)
            per_layer.push_back(Eigen::MatrixXd::Zero(spec.z_size, 1));
        buf.push_back(std::move(per_layer));
    }
}
}  // namespace

AdaptationSequence Agent::window_view(int w_start, int t) const {
    AdaptationSequence win = AdaptationSequence::zeros(net_.config(), t - w_start + 1, 1,
                                                       w_start);
    for (int step = w_start; step <= t; ++step) {
        for (int l = 0; l < net_.config().num_layers(); ++l) {
            win.raw_mean[step - w_start][l] = a_mu_[step - 1][l];
            win.log_stddev[step - w_start][l] = a_ls_[step - 1][l];
        }
    }
    return win;
}

void Agent::write_back(const AdaptationSequence& win) {
    for (int ti = 0; ti < win.length(); ++ti) {
        const int step = win.first_step + ti;
        for (int l = 0; l < net_.config().num_layers(); ++l) {
            a_mu_[step - 1][l] = win.raw_mean[ti][l];
            a_ls_[step - 1][l] = win.log_stddev[ti][l];
        }
    }
}

std::vector<Eigen::MatrixXd> Agent::window_targets(int w_start, int t) const {
    std::vector<Eigen::MatrixXd> targets;
    const ModelConfig& cfg = net_.config();
    for (int step = w_start; step <= t; ++step) {
        Eigen::MatrixXd target = Eigen::MatrixXd::Zero(cfg.output_dim, 1);
        const Eigen::Vector4d ex = observed_ex_.at(step - 1);
        target.block(cfg.proprio_dim, 0, cfg.extero_dim(), 1) =
            normalize_extero(ex.transpose()).transpose();
        targets.push_back(std::move(target));
    }
    return targets;
}

void Agent::bootstrap_step(int t) {
    if (t < 1 || t > 2) throw ConfigError("bootstrap_step: only steps 1..2 replay stored A");
    const ModelConfig& cfg = net_.config();
    ensure_step(a_mu_, cfg, t);
    ensure_step(a_ls_, cfg, t);
    for (int l = 0; l < cfg.num_layers(); ++l) {
        a_mu_[t - 1][l] = stored_.raw_mean[t - 1][l].col(cfg_.bootstrap_sample);
        a_ls_[t - 1][l] = stored_.log_stddev[t - 1][l].col(cfg_.bootstrap_sample);
    }

    AdaptationSequence win = window_view(t, t);
    Rollout pass = net_.rollout_posterior(win, history_[t - 1], rng_);
    history_.push_back(pass.states.back());

    const Eigen::MatrixXd& out = pass.outputs[0];
    emitted_deg_.push_back(
        denormalize_proprio(out.topRows(cfg.proprio_dim).transpose())
            .transpose()
            .col(0)
            .cwiseMax(-kJointScaleDeg)
            .cwiseMin(kJointScaleDeg));
    predicted_ex_.push_back(
        denormalize_extero(out.bottomRows(cfg.extero_dim()).transpose()).transpose());
    observed_ex_.emplace_back(Eigen::Vector4d::Zero());

    StepDiag diag;
    for (int l = 0; l < cfg.num_layers(); ++l) {
        const double kl = kl_gauss(pass.posterior[0][l], pass.prior[0][l]);
        diag.kl_window_mean.push_back(kl);
        diag.kl_current.push_back(kl);
        for (int u = 0; u < cfg.layers[l].z_size; ++u) {
            diag.prior_mean.push_back(pass.prior[0][l].mean(u, 0));
            diag.prior_sd.push_back(pass.prior[0][l].stddev(u, 0));
            diag.posterior_mean.push_back(pass.posterior[0][l].mean(u, 0));
            diag.posterior_sd.push_back(pass.posterior[0][l].stddev(u, 0));
        }
    }
    diags_.push_back(std::move(diag));
}

void Agent::emit(int t) {
    const ModelConfig& cfg = net_.config();
    Rollout one = net_.rollout_prior(history_.at(t - 1), t, 1, 1, rng_,
                                     cfg_.deterministic_emission);
    const Eigen::MatrixXd& out = one.outputs[0];
    emitted_deg_.push_back(
        denormalize_proprio(out.topRows(cfg.proprio_dim).transpose())
            .transpose()
            .col(0)
            .cwiseMax(-kJointScaleDeg)
            .cwiseMin(kJointScaleDeg));
    predicted_ex_.push_back(
        denormalize_extero(out.bottomRows(cfg.extero_dim()).transpose()).transpose());
    observed_ex_.emplace_back(Eigen::Vector4d::Zero());
}

void Agent::observe(int t, const Eigen::Vector4d& extero) {
    observed_ex_.at(t - 1) = extero;
}

void Agent::bootstrap_new_step(int t) {
    const ModelConfig& cfg = net_.config();
    ensure_step(a_mu_, cfg, t);
    ensure_step(a_ls_, cfg, t);
    if (cfg_.zero_init_new_step || t == 1) {
        for (int l = 0; l < cfg.num_layers(); ++l) {
            a_mu_[t - 1][l].setZero();
            a_ls_[t - 1][l].setZero();
        }
        return;
    }
    // Copy the prior-head pre-activations so the initial posterior equals
    // the prior at t (KL starts at zero).
    for (int l = 0; l < cfg.num_layers(); ++l) {
        const Eigen::MatrixXd& d_prev = history_[t - 1].d[l];
        const auto& p = net_.params().layers[l];
        a_mu_[t - 1][l] = p.prior_mean * d_prev;
        a_ls_[t - 1][l] = (p.prior_logsig * d_prev)
                              .array()
                              .min(kLogSigmaClamp)
                              .max(-kLogSigmaClamp)
                              .matrix();
    }
}

void Agent::run_window_epochs(int w_start, int t) {
    const ModelConfig& cfg = net_.config();
    AdaptationSequence win = window_view(w_start, t);
    const auto targets = window_targets(w_start, t);
    const Eigen::VectorXd mask = net_.extero_mask();
    const int len = win.length();

    // Windowed bound measured as a common-random-numbers average, so the
    // pre/post comparison tracks the objective the epochs minimize.
    const std::uint64_t eval_seed = rng_();
    auto eval_fe = [&](const AdaptationSequence& at) {
        Rng eval_rng(eval_seed);
        constexpr int kEvalDraws = 16;
        double sum = 0.0;
        for (int k = 0; k < kEvalDraws; ++k) {
            EpsTensor eps = draw_eps(cfg, len, 1, eval_rng);
            sum += net_
                       .free_energy(net_.rollout_posterior(at, history_[w_start - 1], eps),
                                    targets, mask)
                       .total;
        }
        return sum / kEvalDraws;
    };

    StepDiag diag;
    diag.fe_pre = eval_fe(win);

    AdamConfig adam;
    adam.learning_rate = cfg_.inference_lr;
    AdaptationSequence m = AdaptationSequence::zeros(cfg, len, 1, w_start);
    AdaptationSequence v = AdaptationSequence::zeros(cfg, len, 1, w_start);
    for (int epoch = 1; epoch <= cfg_.inner_epochs; ++epoch) {
        Rollout pass = net_.rollout_posterior(win, history_[w_start - 1], rng_);
        FreeEnergyReport rep = net_.free_energy(pass, targets, mask);
        if (!std::isfinite(rep.total))
            throw NumericalError("interaction: non-finite inference loss at step " +
                                 std::to_string(t));
        Gradients g = net_.backward(pass, targets, mask, win);
        for (int ti = 0; ti < len; ++ti) {
            for (int l = 0; l < cfg.num_layers(); ++l) {
                adam_step(win.raw_mean[ti][l], g.adapt.raw_mean[ti][l], m.raw_mean[ti][l],
                          v.raw_mean[ti][l], epoch, adam);
                adam_step(win.log_stddev[ti][l], g.adapt.log_stddev[ti][l],
                          m.log_stddev[ti][l], v.log_stddev[ti][l], epoch, adam);
            }
        }
    }
    diag.fe_post = eval_fe(win);

    // realized pass: final states, per-layer KL, latent stats at t
    Rollout final_pass = net_.rollout_posterior(win, history_[w_start - 1], rng_);
    FreeEnergyReport rep = net_.free_energy(final_pass, targets, mask);
    history_.resize(w_start);
    for (int ti = 0; ti < len; ++ti) history_.push_back(final_pass.states[ti]);

    for (int l = 0; l < cfg.num_layers(); ++l) {
        double mean = 0.0;
        for (int ti = 0; ti < len; ++ti) mean += rep.complexity_per_layer[l][ti];
        diag.kl_window_mean.push_back(mean / len);
        diag.kl_current.push_back(rep.complexity_per_layer[l][len - 1]);
        for (int u = 0; u < cfg.layers[l].z_size; ++u) {
            diag.prior_mean.push_back(final_pass.prior[len - 1][l].mean(u, 0));
            diag.prior_sd.push_back(final_pass.prior[len - 1][l].stddev(u, 0));
            diag.posterior_mean.push_back(final_pass.posterior[len - 1][l].mean(u, 0));
            diag.posterior_sd.push_back(final_pass.posterior[len - 1][l].stddev(u, 0));
        }
    }
    write_back(win);
    diags_.push_back(std::move(diag));
}

void Agent::infer(int t) {
    if (t != static_cast<int>(diags_.size()) + 1)
        throw ConfigError("infer: steps must advance one at a time");
    bootstrap_new_step(t);
    run_window_epochs(window_start(t, cfg_.window), t);
}

Eigen::VectorXd Agent::emitted_proprio_deg(int t) const { return emitted_deg_.at(t - 1); }
Eigen::Vector4d Agent::predicted_extero(int t) const { return predicted_ex_.at(t - 1); }
Eigen::Vector4d Agent::observed_extero(int t) const { return observed_ex_.at(t - 1); }

Eigen::MatrixXd Agent::emitted_trajectory_deg() const {
    Eigen::MatrixXd out(emitted_deg_.size(), 6);
    for (size_t t = 0; t < emitted_deg_.size(); ++t) out.row(t) = emitted_deg_[t].transpose();
    return out;
}

namespace {

TraceRow make_row(Agent& a, Agent& b, int t) {
    TraceRow row;
    row.t = t;
    Agent* agents[2] = {&a, &b};
    for (int i = 0; i < 2; ++i) {
        row.proprio_deg[i] = agents[i]->emitted_proprio_deg(t);
        row.extero_obs[i] = agents[i]->observed_extero(t);
        row.extero_pred[i] = agents[i]->predicted_extero(t);
        const auto& diag = agents[i]->diag(t);
        row.kl_window[i] = diag.kl_window_mean;
        row.kl_current[i] = diag.kl_current;
        row.fe_pre[i] = diag.fe_pre;
        row.fe_post[i] = diag.fe_post;
        row.mu_p[i] = diag.prior_mean;
        row.mu_q[i] = diag.posterior_mean;
    }
    return row;
}

}  // namespace

TraceRow bootstrap_exchange(Agent& a, Agent& b, int t) {
    a.bootstrap_step(t);
    b.bootstrap_step(t);
    a.observe(t, channel(b.emitted_proprio_deg(t)));
    b.observe(t, channel(a.emitted_proprio_deg(t)));
    return make_row(a, b, t);
}

TraceRow interaction_step(Agent& a, Agent& b, int t) {
    a.emit(t);
    b.emit(t);
    a.observe(t, channel(b.emitted_proprio_deg(t)));
    b.observe(t, channel(a.emitted_proprio_deg(t)));
    a.infer(t);
    b.infer(t);
    return make_row(a, b, t);
}

InteractionResult run_interaction(const Checkpoint& ckpt_a, const Checkpoint& ckpt_b,
                                  const InteractionConfig& cfg) {
    cfg.validate();
    if (ckpt_a.model.output_dim != ckpt_b.model.output_dim ||
        ckpt_a.model.proprio_dim != ckpt_b.model.proprio_dim)
        throw ConfigError("interaction: incompatible model configs");

    InteractionResult result;
    result.steps = cfg.steps;
    if (cfg.steps == 0) {
        result.params_unchanged = true;
        return result;
    }

    const std::string fp_a = params_fingerprint(ckpt_a.params);
    const std::string fp_b = params_fingerprint(ckpt_b.params);

    const std::uint64_t stream = mix_seed(cfg.seed, kAgentStream);
    Agent a(ckpt_a, cfg, stream);
    Agent b(ckpt_b, cfg, stream);

    for (int t = 1; t <= std::min(2, cfg.steps); ++t)
        result.trace.push_back(bootstrap_exchange(a, b, t));
    for (int t = 3; t <= cfg.steps; ++t) result.trace.push_back(interaction_step(a, b, t));

    result.params_unchanged = params_fingerprint(a.network().params()) == fp_a &&
                              params_fingerprint(b.network().params()) == fp_b;
    if (!result.params_unchanged)
        throw std::logic_error("interaction: network parameters changed during a run");

    // classification and summaries
    EsnModel esn = fit_default_esn(kEsnSeed);
    const Checkpoint* ckpts[2] = {&ckpt_a, &ckpt_b};
    Agent* agents[2] = {&a, &b};
    for (int i = 0; i < 2; ++i) {
        AgentSummary& summary = result.agents[i];
        summary.classified = esn.classify(agents[i]->emitted_trajectory_deg());
        summary.bc_interaction = bc_ratio(summary.classified);

        Rng regen_rng(mix_seed(cfg.seed, kStandaloneStream + i));
        auto seqs = prior_regeneration(*ckpts[i], cfg.bootstrap_sample, 20, 400, regen_rng);
        RegenReport rep = regen_report(seqs, esn, regen_rng);
        summary.bc_standalone = rep.bc;

        summary.mean_kl.assign(ckpts[i]->model.num_layers(), 0.0);
        int counted = 0;
        for (const auto& row : result.trace) {
            if (row.t < 3) continue;
            for (int l = 0; l < ckpts[i]->model.num_layers(); ++l)
                summary.mean_kl[l] += row.kl_window[i][l];
            ++counted;
        }
        if (counted > 0)
            for (double& v : summary.mean_kl) v /= counted;
    }
    for (auto& row : result.trace) {
        for (int i = 0; i < 2; ++i) {
            row.label[i] = result.agents[i].classified.labels[row.t - 1];
            row.confidence[i] = result.agents[i].classified.confidence[row.t - 1];
        }
    }
    result.sync = sync_rate(result.agents[0].classified, result.agents[1].classified);
    result.sync_all =
        sync_rate(result.agents[0].classified, result.agents[1].classified, true);

    if (result.agents[0].bc_standalone && result.agents[1].bc_standalone) {
        const auto& s0 = *result.agents[0].bc_standalone;
        const auto& s1 = *result.agents[1].bc_standalone;
        result.chance_measured = chance_rate(s0.first / 100.0, s0.second / 100.0,
                                             s1.first / 100.0, s1.second / 100.0);
    }
    double p_b[2];
    bool have_nominal = true;
    for (int i = 0; i < 2; ++i) {
        try {
            const auto prov = nlohmann::json::parse(
                ckpts[i]->provenance.empty() ? "{}" : ckpts[i]->provenance);
            if (prov.contains("dataset") && prov["dataset"].contains("p_b"))
                p_b[i] = prov["dataset"]["p_b"].get<double>();
            else
                have_nominal = false;
        } catch (const nlohmann::json::exception&) {
            have_nominal = false;
        }
    }
    if (have_nominal)
        result.chance_nominal = chance_rate(p_b[0], 1.0 - p_b[0], p_b[1], 1.0 - p_b[1]);
    return result;
}

}  // namespace pvrnn
