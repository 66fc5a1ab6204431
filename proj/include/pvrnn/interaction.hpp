#pragma once

#include <array>
#include <optional>

#include "pvrnn/analysis.hpp"
#include "pvrnn/checkpoint.hpp"

namespace pvrnn {

struct InteractionConfig {
    int steps = 200;            // total interaction steps
    int window = 70;            // inference window length
    int inner_epochs = 200;     // adaptation epochs per step
    double inference_lr = 0.01; // Adam on the adaptation variables only
    int bootstrap_sample = 0;   // training sequence whose stored A seeds t=1..2
    bool zero_init_new_step = false;   // N(0,I) init instead of prior-consistent
    bool deterministic_emission = false;
    std::uint64_t seed = 1;

    void validate() const;
};

// One network taking part in an interaction: frozen weights, a live
// adaptation window, per-step observation/emission history.
class Agent {
public:
    Agent(const Checkpoint& ckpt, const InteractionConfig& cfg, std::uint64_t stream_seed);

    // Steps 1..2 replay the stored adaptation variables (no inference).
    void bootstrap_step(int t);

    // One-step-ahead prior prediction from the current state; fills the
    // emission history at t. Proprioception is actuated as emitted.
    void emit(int t);

    // Counterpart's hand positions at t (kinematic-channel units).
    void observe(int t, const Eigen::Vector4d& extero);

    // Sliding-window inference over [max(1, t-window+1), t] against the
    // exteroceptive observations; adaptation variables only.
    void infer(int t);

    // Prior-consistent init of the adaptation entry for a step about to
    // enter the window (zero init behind the config flag).
    void bootstrap_new_step(int t);

    Eigen::VectorXd emitted_proprio_deg(int t) const;   // 6, degrees
    Eigen::Vector4d predicted_extero(int t) const;      // hand units
    Eigen::Vector4d observed_extero(int t) const;       // hand units
    Eigen::MatrixXd emitted_trajectory_deg() const;     // steps x 6

    struct StepDiag {
        std::vector<double> kl_window_mean;  // per layer, final pass
        std::vector<double> kl_current;      // per layer at the newest step
        double fe_pre = 0.0;   // deterministic windowed bound before epochs
        double fe_post = 0.0;  // and after
        std::vector<double> prior_mean, prior_sd;      // per latent unit at t
        std::vector<double> posterior_mean, posterior_sd;
    };
    const StepDiag& diag(int t) const { return diags_.at(t - 1); }

    const Network& network() const { return net_; }
    const InteractionConfig& config() const { return cfg_; }
    int steps_done() const { return static_cast<int>(diags_.size()); }

private:
    void run_window_epochs(int w_start, int t);
    AdaptationSequence window_view(int w_start, int t) const;
    void write_back(const AdaptationSequence& win);
    std::vector<Eigen::MatrixXd> window_targets(int w_start, int t) const;

    Network net_;
    InteractionConfig cfg_;
    Rng rng_;
    // full-length per-step storage, index 0 <-> t = 1
    std::vector<std::vector<Eigen::MatrixXd>> a_mu_, a_ls_;  // [t][l], z x 1
    std::vector<StateBatch> history_;                        // [t], t=0 state at 0
    std::vector<Eigen::VectorXd> emitted_deg_;               // [t], 6
    std::vector<Eigen::Vector4d> predicted_ex_, observed_ex_;
    std::vector<StepDiag> diags_;
    AdaptationSequence stored_;  // training-time A from the checkpoint
};

// First step of the inference window at time t.
inline int window_start(int t, int window) { return std::max(1, t - window + 1); }

struct TraceRow {
    int t = 0;
    std::array<Eigen::VectorXd, 2> proprio_deg;    // emitted, 6 per agent
    std::array<Eigen::Vector4d, 2> extero_obs;     // observed counterpart hands
    std::array<Eigen::Vector4d, 2> extero_pred;    // own prediction
    std::array<std::vector<double>, 2> kl_window;  // per layer, window mean
    std::array<std::vector<double>, 2> kl_current; // per layer at step t
    std::array<double, 2> fe_pre{}, fe_post{};
    std::array<std::vector<double>, 2> mu_p, mu_q; // latent means, units concatenated
    std::array<PrimitiveLabel, 2> label{PrimitiveLabel::NotClassified,
                                        PrimitiveLabel::NotClassified};
    std::array<double, 2> confidence{};
};

// One lockstep exchange at t >= 3: both agents emit, observations cross the
// mirrored kinematic channel, both infer within their windows.
TraceRow interaction_step(Agent& a, Agent& b, int t);

// Replay of the stored adaptation variables at t = 1..2, with the same
// exchange of observations but no inference.
TraceRow bootstrap_exchange(Agent& a, Agent& b, int t);

struct AgentSummary {
    std::optional<std::pair<double, double>> bc_standalone;
    std::optional<std::pair<double, double>> bc_interaction;
    std::vector<double> mean_kl;  // per layer over inference steps
    ClassifiedSequence classified;
};

struct InteractionResult {
    std::vector<TraceRow> trace;
    std::array<AgentSummary, 2> agents;
    std::optional<double> sync;      // B/C steps only
    std::optional<double> sync_all;  // every both-classified step
    std::optional<double> chance_nominal;  // from checkpoint provenance p_b
    std::optional<double> chance_measured; // from stand-alone BC ratios
    bool params_unchanged = false;
    int steps = 0;
};

// Lockstep dyad: bootstrap from stored adaptation variables, then
// interaction_step for every remaining step; classification, BC and
// synchronization summaries at the end. Network parameters stay frozen
// throughout (verified; violation throws).
InteractionResult run_interaction(const Checkpoint& ckpt_a, const Checkpoint& ckpt_b,
                                  const InteractionConfig& cfg);

}  // namespace pvrnn
