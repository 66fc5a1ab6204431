#pragma once

#include <functional>
#include <vector>

#include "pvrnn/checkpoint.hpp"
#include "pvrnn/dataset.hpp"

namespace pvrnn {

struct TrainConfig {
    int epochs = 5000;
    AdamConfig adam;           // learning rate 0.001, betas (0.9, 0.999), eps 1e-8
    std::uint64_t seed = 1;    // epoch noise stream
    // Initial posterior log-stddev. Starting narrow keeps early epochs from
    // being dominated by latent sampling noise.
    double a_log_stddev_init = -3.0;
};

struct EpochStats {
    long epoch = 0;
    double total = 0.0;
    double accuracy = 0.0;
    std::vector<double> e_z;  // unweighted KL per layer, averaged over (t, seq)
};

// Full-batch free-energy training over one dataset: every epoch runs one
// posterior pass over all sequences, one backward pass, and one Adam update
// of the weights and every adaptation entry. Epoch noise is drawn from a
// stream derived from (seed, epoch), so runs are reproducible and resumable.
class Trainer {
public:
    Trainer(std::vector<SequenceSample> dataset, ModelConfig model_config,
            TrainConfig train_config);

    // Continues a run from a checkpoint; the dataset must be the one the
    // checkpoint was trained on (shape-checked).
    Trainer(std::vector<SequenceSample> dataset, const Checkpoint& ckpt);

    EpochStats train_epoch();
    using ProgressFn = std::function<void(const EpochStats&)>;
    void run(int epochs, const ProgressFn& progress = nullptr);

    const Network& network() const { return net_; }
    long epoch() const { return epoch_; }
    const AdaptationSequence& adaptation() const { return adapt_; }
    const std::vector<EpochStats>& history() const { return history_; }

    Checkpoint to_checkpoint(const std::string& provenance = "{}") const;

private:
    std::vector<SequenceSample> dataset_;
    ModelConfig config_;
    TrainConfig tcfg_;
    Network net_;
    AdaptationSequence adapt_;
    std::vector<Eigen::MatrixXd> targets_;
    Eigen::VectorXd mask_;
    long epoch_ = 0;
    std::vector<EpochStats> history_;
    // Adam state
    NetworkParams m_params_, v_params_;
    AdaptationSequence m_adapt_, v_adapt_;
};

}  // namespace pvrnn
