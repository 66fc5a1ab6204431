#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "pvrnn/params.hpp"

namespace pvrnn {

// Diagonal Gaussian over one layer's latent units; columns are batch entries.
struct Gaussian {
    Eigen::MatrixXd mean;    // z x B
    Eigen::MatrixXd stddev;  // z x B, strictly positive
};

// KL(q || p) for diagonal Gaussians, summed over units and batch columns.
// Throws std::domain_error on non-positive stddev.
double kl_gauss(const Gaussian& q, const Gaussian& p);

// Per-time-step posterior parameters for a batch of sequences. The posterior
// at (t, l) is N(tanh(raw_mean), exp(clamp(log_stddev))). Time index 0 of the
// buffers corresponds to absolute step `first_step`.
struct AdaptationSequence {
    std::vector<std::vector<Eigen::MatrixXd>> raw_mean;    // [t][l], z x B
    std::vector<std::vector<Eigen::MatrixXd>> log_stddev;  // [t][l], z x B
    int first_step = 1;  // absolute time of buffer index 0 (1-based)

    static AdaptationSequence zeros(const ModelConfig& config, int length,
                                    int batch, int first_step = 1);
    int length() const { return static_cast<int>(raw_mean.size()); }
    int last_step() const { return first_step + length() - 1; }
    bool covers(int step) const { return step >= first_step && step <= last_step(); }

    // Posterior distribution at absolute step t, layer l.
    // Throws std::out_of_range outside the covered window.
    Gaussian posterior(int t, int l) const;
};

// Per-layer recurrent state; columns are batch entries.
struct StateBatch {
    std::vector<Eigen::MatrixXd> h;  // pre-activation, d x B
    std::vector<Eigen::MatrixXd> d;  // tanh(h), d x B

    static StateBatch zeros(const ModelConfig& config, int batch);
};

// Standard-normal draws per (step, layer), z x B. Passing a prebuilt tensor
// into a rollout pins the sample path (gradient checks, oracles).
using EpsTensor = std::vector<std::vector<Eigen::MatrixXd>>;

EpsTensor draw_eps(const ModelConfig& config, int length, int batch, Rng& rng);
EpsTensor zero_eps(const ModelConfig& config, int length, int batch);

// Everything one posterior pass records: enough to evaluate the bound and to
// run the exact backward pass without recomputation.
struct Rollout {
    int first_step = 1;            // absolute time of index 0
    StateBatch initial;            // state feeding the first step
    std::vector<StateBatch> states;               // [t]
    std::vector<std::vector<Eigen::MatrixXd>> z;  // [t][l], z x B
    std::vector<std::vector<Gaussian>> prior;     // [t][l]
    std::vector<std::vector<Gaussian>> posterior; // [t][l] (empty in prior mode)
    // Pre-clamp log-stddev head activations, kept for clamp-aware gradients.
    std::vector<std::vector<Eigen::MatrixXd>> prior_logsig_pre;
    std::vector<std::vector<Eigen::MatrixXd>> eps;
    std::vector<Eigen::MatrixXd> outputs;         // [t], output_dim x B

    int length() const { return static_cast<int>(states.size()); }
};

struct FreeEnergyReport {
    double total = 0.0;      // negative lower bound, minimized
    double accuracy = 0.0;   // expected log-likelihood term (<= 0)
    double complexity_weighted = 0.0;
    // Unweighted KL summed over units and batch, per layer per step.
    std::vector<std::vector<double>> complexity_per_layer;  // [l][t]
    std::vector<double> e_z_mean;  // per layer, KL averaged over (t, batch)
};

// Gradients of the free energy w.r.t. parameters and adaptation variables.
struct Gradients {
    NetworkParams params;      // same shapes, zero-initialized
    AdaptationSequence adapt;  // raw_mean/log_stddev hold the gradients
};

// The stochastic multiple-timescale core. Owns no mutable state: rollouts
// are explicit values, so instances are freely shareable across threads as
// long as each rollout/update is single-threaded.
class Network {
public:
    Network(ModelConfig config, NetworkParams params);

    const ModelConfig& config() const { return config_; }
    const NetworkParams& params() const { return params_; }
    NetworkParams& mutable_params() { return params_; }

    // One recurrent transition h_t = (1-1/tau) h_{t-1} + (1/tau) * inputs.
    // Exposed mainly for tests; rollouts call it internally.
    StateBatch cell_update(const StateBatch& prev,
                           const std::vector<Eigen::MatrixXd>& z_now) const;

    Eigen::MatrixXd output_map(const Eigen::MatrixXd& d_bottom) const;

    // Prior at absolute step t: unit Gaussian at t=1, otherwise a function
    // of the layer's previous activation. d_prev may be null only at t=1.
    Gaussian prior_head(const Eigen::MatrixXd* d_prev, int t, int layer,
                        Eigen::MatrixXd* logsig_pre = nullptr) const;

    // Posterior rollout over the window covered by `adapt`, latents sampled
    // from the posterior, priors recorded for the complexity term.
    Rollout rollout_posterior(const AdaptationSequence& adapt,
                              const StateBatch& initial,
                              const EpsTensor& eps) const;
    Rollout rollout_posterior(const AdaptationSequence& adapt,
                              const StateBatch& initial, Rng& rng) const;

    // Prior rollout (generation): latents sampled from the prior, or taken
    // at the prior mean when `deterministic` is set.
    Rollout rollout_prior(const StateBatch& initial, int first_step,
                          int horizon, int batch, Rng& rng,
                          bool deterministic = false) const;

    // Evaluates the weighted bound over a posterior rollout. `mask` selects
    // output dimensions contributing to the accuracy term (size output_dim,
    // entries 0/1); `targets` spans the rollout window.
    FreeEnergyReport free_energy(const Rollout& rollout,
                                 const std::vector<Eigen::MatrixXd>& targets,
                                 const Eigen::VectorXd& mask) const;

    // Exact gradients of free_energy(...).total via backprop through time.
    Gradients backward(const Rollout& rollout,
                       const std::vector<Eigen::MatrixXd>& targets,
                       const Eigen::VectorXd& mask,
                       const AdaptationSequence& adapt) const;

    Eigen::VectorXd full_mask() const;
    Eigen::VectorXd extero_mask() const;

private:
    ModelConfig config_;
    NetworkParams params_;
};

// z = mean + stddev .* eps (reparameterized sample).
Eigen::MatrixXd sample_latent(const Gaussian& g, const Eigen::MatrixXd& eps);

}  // namespace pvrnn
