#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "pvrnn/training.hpp"

using namespace pvrnn;

namespace {

// One flat-line sequence: constant joints away from home.
std::vector<SequenceSample> constant_dataset(int steps) {
    SequenceSample s;
    s.proprio_deg = Eigen::MatrixXd::Constant(steps, 6, 20.0);
    Eigen::Vector4d ex = mirror(forward_kinematics(s.proprio_deg.row(0).transpose()));
    s.extero = ex.transpose().replicate(steps, 1);
    s.labels.assign(steps, PrimitiveLabel::A);
    return {s};
}

std::vector<SequenceSample> small_dataset(int n, int steps, std::uint64_t seed) {
    Rng rng(seed);
    return build_dataset(PfsmSpec{0.5}, n, steps, rng);
}

}  // namespace

TEST_SUITE_BEGIN("training");

TEST_CASE("adam: zero gradient leaves the value unchanged") {
    AdamConfig cfg;
    Eigen::MatrixXd value = Eigen::MatrixXd::Constant(2, 2, 1.5);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2, 2), v = m, g = m;
    adam_step(value, g, m, v, 1, cfg);
    CHECK((value.array() == 1.5).all());
}

TEST_CASE("adam: first step is close to -lr * sign(gradient)") {
    AdamConfig cfg;
    Eigen::MatrixXd value = Eigen::MatrixXd::Zero(1, 2);
    Eigen::MatrixXd g(1, 2);
    g << 0.37, -2.1;
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(1, 2), v = m;
    adam_step(value, g, m, v, 1, cfg);
    CHECK(value(0, 0) == doctest::Approx(-cfg.learning_rate).epsilon(1e-4));
    CHECK(value(0, 1) == doctest::Approx(cfg.learning_rate).epsilon(1e-4));
}

TEST_CASE("adam: three-step trace matches a scalar oracle") {
    AdamConfig cfg;
    cfg.learning_rate = 0.1;
    Eigen::MatrixXd value = Eigen::MatrixXd::Constant(1, 1, 2.0);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(1, 1), v = m;
    const double grads[3] = {0.4, -0.3, 0.25};

    double ref = 2.0, rm = 0.0, rv = 0.0;
    for (int t = 1; t <= 3; ++t) {
        Eigen::MatrixXd g = Eigen::MatrixXd::Constant(1, 1, grads[t - 1]);
        adam_step(value, g, m, v, t, cfg);
        rm = 0.9 * rm + 0.1 * grads[t - 1];
        rv = 0.999 * rv + 0.001 * grads[t - 1] * grads[t - 1];
        const double mh = rm / (1.0 - std::pow(0.9, t));
        const double vh = rv / (1.0 - std::pow(0.999, t));
        ref -= 0.1 * mh / (std::sqrt(vh) + 1e-8);
        CHECK(value(0, 0) == doctest::Approx(ref).epsilon(1e-14));
    }
}

TEST_CASE("init: zero adaptation starts at a unit-Gaussian posterior") {
    auto cfg = ModelConfig::tiny(0.1, 3);
    Trainer tr(small_dataset(2, 40, 3), cfg, TrainConfig{});
    Gaussian g = tr.adaptation().posterior(5, 0);
    CHECK(g.mean.isZero(0.0));
    CHECK((g.stddev.array() == 1.0).all());
}

TEST_CASE("init: two trainers with the same seeds are identical") {
    auto cfg = ModelConfig::tiny(0.1, 7);
    TrainConfig tcfg;
    tcfg.seed = 7;
    Trainer a(small_dataset(2, 40, 9), cfg, tcfg);
    Trainer b(small_dataset(2, 40, 9), cfg, tcfg);
    CHECK(params_fingerprint(a.network().params()) ==
          params_fingerprint(b.network().params()));
}

TEST_CASE("init: empty dataset is rejected") {
    auto cfg = ModelConfig::tiny(0.1, 3);
    CHECK_THROWS_AS(Trainer({}, cfg, TrainConfig{}), ConfigError);
}

TEST_CASE("first epoch loss is finite on a generated dataset") {
    auto cfg = ModelConfig::tiny(0.1, 11);
    Trainer tr(small_dataset(4, 80, 11), cfg, TrainConfig{});
    EpochStats s = tr.train_epoch();
    CHECK(std::isfinite(s.total));
    CHECK(s.total > 0.0);
}

TEST_CASE("zero learning rate changes nothing but the history") {
    auto cfg = ModelConfig::tiny(0.1, 13);
    TrainConfig tcfg;
    tcfg.adam.learning_rate = 0.0;
    Trainer tr(small_dataset(2, 40, 13), cfg, tcfg);
    const std::string before = params_fingerprint(tr.network().params());
    tr.train_epoch();
    tr.train_epoch();
    CHECK(params_fingerprint(tr.network().params()) == before);
    CHECK(tr.adaptation().raw_mean[3][0].isZero(0.0));
    CHECK(tr.history().size() == 2);
}

TEST_CASE("loss decreases on a constant one-sequence dataset") {
    auto cfg = ModelConfig::tiny(0.05, 17);
    TrainConfig tcfg;
    tcfg.seed = 17;
    tcfg.adam.learning_rate = 0.05;  // tiny net: make 50 epochs meaningful
    Trainer tr(constant_dataset(40), cfg, tcfg);
    std::vector<double> losses;
    for (int e = 0; e < 55; ++e) losses.push_back(tr.train_epoch().total);
    // 5-epoch moving average to smooth the one-sample Monte Carlo noise
    auto avg = [&](int start) {
        double s = 0.0;
        for (int i = start; i < start + 5; ++i) s += losses[i];
        return s / 5.0;
    };
    for (int start = 0; start + 10 <= 55; start += 5) CHECK(avg(start + 5) < avg(start));
}

TEST_CASE("training is bitwise deterministic under a fixed seed") {
    auto cfg = ModelConfig::tiny(0.2, 19);
    TrainConfig tcfg;
    tcfg.seed = 19;
    Trainer a(small_dataset(3, 40, 21), cfg, tcfg);
    Trainer b(small_dataset(3, 40, 21), cfg, tcfg);
    for (int e = 0; e < 10; ++e) {
        EpochStats sa = a.train_epoch();
        EpochStats sb = b.train_epoch();
        CHECK(sa.total == sb.total);
        CHECK(sa.accuracy == sb.accuracy);
    }
    CHECK(params_fingerprint(a.network().params()) ==
          params_fingerprint(b.network().params()));
}

TEST_CASE("zero meta-prior beyond t=1 leaves prior heads without gradient") {
    auto cfg = ModelConfig::tiny(0.0, 23);
    for (auto& l : cfg.layers) l.w = 0.0;
    auto dataset = small_dataset(2, 30, 23);
    NetworkParams params = NetworkParams::init(cfg, 23);
    Network net(cfg, params);
    AdaptationSequence a = AdaptationSequence::zeros(cfg, 30, 2);
    Rng rng(23);
    Rollout r = net.rollout_posterior(a, StateBatch::zeros(cfg, 2), rng);
    Gradients g = net.backward(r, to_targets(dataset), net.full_mask(), a);
    for (const auto& layer : g.params.layers) {
        CHECK(layer.prior_mean.isZero(0.0));
        CHECK(layer.prior_logsig.isZero(0.0));
    }
}

TEST_CASE("huge meta-prior pulls the prior onto the posterior") {
    // Only the t >= 2 complexity terms carry the meta-prior weight (t = 1
    // keeps w_first = 1), so the tracking ratio is measured on those.
    auto cfg = ModelConfig::tiny(1000.0, 29);
    TrainConfig tcfg;
    tcfg.seed = 29;
    tcfg.adam.learning_rate = 0.003;
    auto data = constant_dataset(30);
    auto targets = to_targets(data);
    Trainer tr(data, cfg, tcfg);

    auto tail_kl = [&]() {
        Rng rng(4242);
        Rollout r = tr.network().rollout_posterior(tr.adaptation(),
                                                   StateBatch::zeros(cfg, 1), rng);
        auto rep = tr.network().free_energy(r, targets, tr.network().full_mask());
        std::vector<double> out;
        for (const auto& per_t : rep.complexity_per_layer) {
            double s = 0.0;
            for (size_t t = 1; t < per_t.size(); ++t) s += per_t[t];
            out.push_back(s / (per_t.size() - 1));
        }
        return out;
    };

    tr.train_epoch();
    const auto first = tail_kl();
    for (int e = 0; e < 3000; ++e) tr.train_epoch();
    const auto last = tail_kl();
    for (size_t l = 0; l < last.size(); ++l) {
        CAPTURE(l);
        CHECK(last[l] < 0.01 * first[l]);
    }
}

TEST_CASE("checkpoint round-trip preserves forward behavior exactly") {
    auto cfg = ModelConfig::tiny(0.3, 31);
    TrainConfig tcfg;
    tcfg.seed = 31;
    auto data = small_dataset(2, 40, 31);
    Trainer tr(data, cfg, tcfg);
    for (int e = 0; e < 5; ++e) tr.train_epoch();

    const std::string path = "test_ckpt_roundtrip.json";
    save_checkpoint(path, tr.to_checkpoint("{\"note\":\"test\"}"));
    Checkpoint loaded = load_checkpoint(path);
    std::filesystem::remove(path);

    CHECK(loaded.epoch == 5);
    CHECK(params_fingerprint(loaded.params) == params_fingerprint(tr.network().params()));

    Network na(cfg, tr.network().params());
    Network nb(loaded.model, loaded.params);
    Rng r1(55), r2(55);
    Rollout ra = na.rollout_posterior(tr.adaptation(), StateBatch::zeros(cfg, 2), r1);
    Rollout rb = nb.rollout_posterior(loaded.adaptation, StateBatch::zeros(loaded.model, 2), r2);
    for (int t = 0; t < ra.length(); ++t)
        CHECK((ra.outputs[t] - rb.outputs[t]).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("checkpoint with a mismatched dataset or config is rejected") {
    auto cfg = ModelConfig::tiny(0.3, 37);
    Trainer tr(small_dataset(2, 40, 37), cfg, TrainConfig{});
    tr.train_epoch();
    Checkpoint ckpt = tr.to_checkpoint();

    // wrong number of sequences
    CHECK_THROWS_AS(Trainer(small_dataset(3, 40, 37), ckpt), ConfigError);
    // wrong length
    CHECK_THROWS_AS(Trainer(small_dataset(2, 60, 37), ckpt), ConfigError);

    // corrupt file and wrong format
    const std::string path = "test_ckpt_bad.json";
    {
        std::ofstream out(path);
        out << "{\"format\": \"something-else\"}";
    }
    CHECK_THROWS_AS(load_checkpoint(path), ConfigError);
    {
        std::ofstream out(path);
        out << "not json at all";
    }
    CHECK_THROWS_AS(load_checkpoint(path), ConfigError);
    std::filesystem::remove(path);
}

TEST_CASE("resuming from a checkpoint reproduces the uninterrupted trajectory") {
    auto cfg = ModelConfig::tiny(0.3, 41);
    TrainConfig tcfg;
    tcfg.seed = 41;
    auto data = small_dataset(2, 40, 41);

    Trainer full(data, cfg, tcfg);
    for (int e = 0; e < 8; ++e) full.train_epoch();

    Trainer head(data, cfg, tcfg);
    for (int e = 0; e < 4; ++e) head.train_epoch();
    const std::string path = "test_ckpt_resume.json";
    save_checkpoint(path, head.to_checkpoint());
    Trainer resumed(data, load_checkpoint(path));
    std::filesystem::remove(path);
    for (int e = 0; e < 4; ++e) resumed.train_epoch();

    for (int e = 0; e < 4; ++e)
        CHECK(resumed.history()[e].total == full.history()[4 + e].total);
    CHECK(params_fingerprint(resumed.network().params()) ==
          params_fingerprint(full.network().params()));
}

TEST_SUITE_END();
