#include "pvrnn/training.hpp"

#include <cmath>

namespace pvrnn {

namespace {

constexpr std::uint64_t kEpochStream = 0x45504f4348ULL;  // distinct noise stream

void check_dataset(const std::vector<SequenceSample>& dataset) {
    if (dataset.empty()) throw ConfigError("trainer: empty dataset");
}

}  // namespace

Trainer::Trainer(std::vector<SequenceSample> dataset, ModelConfig model_config,
                 TrainConfig train_config)
    : dataset_(std::move(dataset)),
      config_(std::move(model_config)),
      tcfg_(train_config),
      net_(config_, NetworkParams::init(config_, config_.seed)),
      adapt_(AdaptationSequence::zeros(config_, dataset_.empty() ? 1 : dataset_[0].length(),
                                       static_cast<int>(std::max<size_t>(dataset_.size(), 1)))),
      m_params_(NetworkParams::zeros(config_)),
      v_params_(NetworkParams::zeros(config_)) {
    check_dataset(dataset_);
    if (tcfg_.adam.learning_rate < 0.0)
        throw ConfigError("trainer: learning rate must not be negative");
    targets_ = to_targets(dataset_);
    mask_ = net_.full_mask();
    const int T = dataset_[0].length();
    const int B = static_cast<int>(dataset_.size());
    for (auto& step : adapt_.log_stddev)
        for (auto& m : step) m.array() = tcfg_.a_log_stddev_init;
    m_adapt_ = AdaptationSequence::zeros(config_, T, B);
    v_adapt_ = AdaptationSequence::zeros(config_, T, B);
}

Trainer::Trainer(std::vector<SequenceSample> dataset, const Checkpoint& ckpt)
    : dataset_(std::move(dataset)),
      config_(ckpt.model),
      net_(ckpt.model, ckpt.params),
      adapt_(ckpt.adaptation),
      epoch_(ckpt.epoch),
      m_params_(NetworkParams::zeros(ckpt.model)),
      v_params_(NetworkParams::zeros(ckpt.model)) {
    check_dataset(dataset_);
    tcfg_.adam = ckpt.adam;
    tcfg_.seed = ckpt.train_seed;
    targets_ = to_targets(dataset_);
    mask_ = net_.full_mask();
    const int T = dataset_[0].length();
    const int B = static_cast<int>(dataset_.size());
    if (adapt_.length() != T || adapt_.raw_mean[0][0].cols() != B)
        throw ConfigError("trainer: checkpoint adaptation does not match the dataset");
    if (ckpt.has_optimizer) {
        m_params_ = ckpt.m_params;
        v_params_ = ckpt.v_params;
        m_adapt_ = ckpt.m_adapt;
        v_adapt_ = ckpt.v_adapt;
    } else {
        m_adapt_ = AdaptationSequence::zeros(config_, T, B);
        v_adapt_ = AdaptationSequence::zeros(config_, T, B);
    }
}

EpochStats Trainer::train_epoch() {
    const int T = adapt_.length();
    const int B = static_cast<int>(dataset_.size());
    Rng rng(mix_seed(tcfg_.seed ^ kEpochStream, static_cast<std::uint64_t>(epoch_) + 1));
    EpsTensor eps = draw_eps(config_, T, B, rng);

    Rollout rollout = net_.rollout_posterior(adapt_, StateBatch::zeros(config_, B), eps);
    FreeEnergyReport report = net_.free_energy(rollout, targets_, mask_);
    if (!std::isfinite(report.total))
        throw NumericalError("training diverged: non-finite free energy at epoch " +
                             std::to_string(epoch_ + 1) +
                             " (total = " + std::to_string(report.total) + ")");
    Gradients grads = net_.backward(rollout, targets_, mask_, adapt_);

    const long step = epoch_ + 1;
    std::vector<Eigen::MatrixXd*> value, grad, m, v;
    auto collect = [](NetworkParams& p, std::vector<Eigen::MatrixXd*>& out) {
        p.visit([&out](Eigen::MatrixXd& mat, const std::string&) { out.push_back(&mat); });
    };
    collect(net_.mutable_params(), value);
    collect(grads.params, grad);
    collect(m_params_, m);
    collect(v_params_, v);
    for (size_t k = 0; k < value.size(); ++k)
        adam_step(*value[k], *grad[k], *m[k], *v[k], step, tcfg_.adam);

    for (int t = 0; t < T; ++t) {
        for (int l = 0; l < config_.num_layers(); ++l) {
            adam_step(adapt_.raw_mean[t][l], grads.adapt.raw_mean[t][l],
                      m_adapt_.raw_mean[t][l], v_adapt_.raw_mean[t][l], step, tcfg_.adam);
            adam_step(adapt_.log_stddev[t][l], grads.adapt.log_stddev[t][l],
                      m_adapt_.log_stddev[t][l], v_adapt_.log_stddev[t][l], step,
                      tcfg_.adam);
        }
    }

    ++epoch_;
    EpochStats stats;
    stats.epoch = epoch_;
    stats.total = report.total;
    stats.accuracy = report.accuracy;
    stats.e_z = report.e_z_mean;
    history_.push_back(stats);
    return stats;
}

void Trainer::run(int epochs, const ProgressFn& progress) {
    for (int i = 0; i < epochs; ++i) {
        EpochStats s = train_epoch();
        if (progress) progress(s);
    }
}

Checkpoint Trainer::to_checkpoint(const std::string& provenance) const {
    Checkpoint c;
    c.model = config_;
    c.params = net_.params();
    c.adaptation = adapt_;
    c.train_seed = tcfg_.seed;
    c.epoch = epoch_;
    c.adam = tcfg_.adam;
    c.has_optimizer = true;
    c.m_params = m_params_;
    c.v_params = v_params_;
    c.m_adapt = m_adapt_;
    c.v_adapt = v_adapt_;
    c.provenance = provenance;
    return c;
}

}  // namespace pvrnn
