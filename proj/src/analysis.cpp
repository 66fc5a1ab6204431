#include "pvrnn/analysis.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numeric>

namespace pvrnn {

namespace {

int label_index(PrimitiveLabel l) { return static_cast<int>(l); }

// Leaky-integrator reservoir states for one input sequence (degrees in,
// normalized internally). Rows are time steps.
Eigen::MatrixXd reservoir_states(const Eigen::MatrixXd& reservoir,
                                 const Eigen::MatrixXd& input_w, double leak,
                                 double input_scale, const Eigen::MatrixXd& proprio_deg) {
    const int T = static_cast<int>(proprio_deg.rows());
    const int N = static_cast<int>(reservoir.rows());
    Eigen::MatrixXd states(T, N);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(N);
    for (int t = 0; t < T; ++t) {
        const Eigen::VectorXd u =
            proprio_deg.row(t).transpose() * (input_scale / kJointScaleDeg);
        x = (1.0 - leak) * x +
            leak * (reservoir * x + input_w * u).array().tanh().matrix();
        states.row(t) = x.transpose();
    }
    return states;
}

// Readout features: reservoir state with a quadratic lift, current and
// previous inputs (the pair carries phase direction), constant. The lift
// gives the ridge readout enough capacity to send unstructured movement
// toward uniform scores without hurting the clean classes.
Eigen::VectorXd feature_row(const Eigen::MatrixXd& states, const Eigen::MatrixXd& proprio_deg,
                            int t) {
    const int N = static_cast<int>(states.cols());
    Eigen::VectorXd f(2 * N + 12 + 1);
    f.head(N) = states.row(t).transpose();
    f.segment(N, N) = states.row(t).transpose().array().square();
    f.segment(2 * N, 6) = proprio_deg.row(t).transpose() / kJointScaleDeg;
    f.segment(2 * N + 6, 6) =
        proprio_deg.row(t > 0 ? t - 1 : 0).transpose() / kJointScaleDeg;
    f(2 * N + 12) = 1.0;
    return f;
}

}  // namespace

void EsnConfig::validate() const {
    if (reservoir_size < 1) throw ConfigError("esn: reservoir_size must be >= 1");
    if (!(connectivity > 0.0 && connectivity <= 1.0))
        throw ConfigError("esn: connectivity must lie in (0, 1]");
    if (!(leak_rate > 0.0 && leak_rate <= 1.0))
        throw ConfigError("esn: leak rate must lie in (0, 1]");
    if (!(confidence_threshold > 0.0 && confidence_threshold < 1.0))
        throw ConfigError("esn: confidence threshold must lie in (0, 1)");
    if (spectral_radius <= 0.0) throw ConfigError("esn: spectral radius must be > 0");
    if (ridge < 0.0) throw ConfigError("esn: ridge coefficient must be >= 0");
    if (washout < 0) throw ConfigError("esn: washout must be >= 0");
}

EsnModel EsnModel::fit(const std::vector<SequenceSample>& labeled, const EsnConfig& config,
                       Rng& rng) {
    config.validate();
    if (labeled.empty()) throw ConfigError("esn: no training sequences");
    const int N = config.reservoir_size;

    EsnModel model;
    model.config_ = config;

    // sparse reservoir with an exact nonzero count, scaled to the target
    // spectral radius
    const long nnz = std::lround(config.connectivity * N * N);
    std::vector<int> cells(static_cast<size_t>(N) * N);
    std::iota(cells.begin(), cells.end(), 0);
    for (long k = 0; k < nnz; ++k) {
        std::uniform_int_distribution<long> pick(k, static_cast<long>(cells.size()) - 1);
        std::swap(cells[k], cells[pick(rng)]);
    }
    std::normal_distribution<double> gauss(0.0, 1.0);
    model.reservoir_ = Eigen::MatrixXd::Zero(N, N);
    for (long k = 0; k < nnz; ++k) {
        double v = gauss(rng);
        while (v == 0.0) v = gauss(rng);
        model.reservoir_(cells[k] / N, cells[k] % N) = v;
    }
    Eigen::EigenSolver<Eigen::MatrixXd> es(model.reservoir_, false);
    const double radius = es.eigenvalues().cwiseAbs().maxCoeff();
    if (radius <= 0.0) throw NumericalError("esn: degenerate reservoir spectrum");
    model.reservoir_ *= config.spectral_radius / radius;

    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    model.input_w = Eigen::MatrixXd(N, 6).unaryExpr([&](double) { return unif(rng); });

    // Ridge regression of per-class targets on the readout features. Rows
    // labeled NotClassified regress onto uniform scores, calibrating the
    // confidence of unstructured movement below the threshold.
    const int F = 2 * N + 12 + 1;
    double class_rows[3] = {0.0, 0.0, 0.0};
    if (config.class_balance) {
        for (const auto& seq : labeled)
            for (int t = config.washout; t < seq.length(); ++t)
                if (seq.labels[t] != PrimitiveLabel::NotClassified)
                    class_rows[label_index(seq.labels[t])] += 1.0;
        for (double& c : class_rows)
            if (c == 0.0) c = 1.0;
    }
    const double mean_rows = (class_rows[0] + class_rows[1] + class_rows[2]) / 3.0;

    Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(F, F);
    Eigen::MatrixXd xty = Eigen::MatrixXd::Zero(F, 3);
    for (const auto& seq : labeled) {
        const Eigen::MatrixXd states =
            reservoir_states(model.reservoir_, model.input_w, config.leak_rate,
                             config.input_scale, seq.proprio_deg);
        for (int t = config.washout; t < seq.length(); ++t) {
            const Eigen::VectorXd f = feature_row(states, seq.proprio_deg, t);
            if (seq.labels[t] == PrimitiveLabel::NotClassified) {
                if (config.uniform_row_weight <= 0.0) continue;
                xtx.noalias() += config.uniform_row_weight * f * f.transpose();
                xty += config.uniform_row_weight * f *
                       Eigen::RowVector3d::Constant(1.0 / 3.0);
            } else {
                const double w =
                    config.class_balance
                        ? mean_rows / class_rows[label_index(seq.labels[t])]
                        : 1.0;
                xtx.noalias() += w * f * f.transpose();
                xty.col(label_index(seq.labels[t])) += w * f;
            }
        }
    }
    xtx.diagonal().array() += config.ridge;
    Eigen::LDLT<Eigen::MatrixXd> solver(xtx);
    if (solver.info() != Eigen::Success)
        throw NumericalError("esn: singular ridge system");
    Eigen::MatrixXd beta = solver.solve(xty);  // F x 3
    if (!beta.allFinite()) throw NumericalError("esn: singular ridge system");
    model.readout_ = beta.transpose();
    return model;
}

std::pair<PrimitiveLabel, double> decide_label(const Eigen::Vector3d& scores,
                                               double threshold) {
    Eigen::Vector3d pos = scores.cwiseMax(0.0);
    const double sum = pos.sum();
    Eigen::Vector3d conf = sum > 1e-12 ? Eigen::Vector3d(pos / sum)
                                       : Eigen::Vector3d::Constant(1.0 / 3.0);
    int best;
    const double c = conf.maxCoeff(&best);
    return {c >= threshold ? static_cast<PrimitiveLabel>(best)
                           : PrimitiveLabel::NotClassified,
            c};
}

ClassifiedSequence EsnModel::classify(const Eigen::MatrixXd& proprio_deg) const {
    if (proprio_deg.cols() != 6)
        throw ConfigError("esn: expected 6 joint columns to classify");
    const Eigen::MatrixXd states =
        reservoir_states(reservoir_, input_w, config_.leak_rate, config_.input_scale,
                         proprio_deg);
    ClassifiedSequence out;
    const int T = static_cast<int>(proprio_deg.rows());
    out.labels.resize(T);
    out.confidence.resize(T);
    for (int t = 0; t < T; ++t) {
        const Eigen::Vector3d scores = readout_ * feature_row(states, proprio_deg, t);
        const auto [label, conf] = decide_label(scores, config_.confidence_threshold);
        out.labels[t] = label;
        out.confidence[t] = conf;
    }
    return out;
}

EsnModel fit_default_esn(std::uint64_t seed) {
    Rng rng(mix_seed(seed, 0x45534eULL));
    auto labeled = build_dataset(PfsmSpec{0.5}, 12, 400, rng);
    // Interaction traces contain back-to-back repeats of one primitive,
    // which the alternating P-FSM never produces: add pure-repeat sequences.
    for (auto label : {PrimitiveLabel::A, PrimitiveLabel::B, PrimitiveLabel::C}) {
        Primitive p = make_primitive(label);
        SequenceSample s;
        s.proprio_deg = Eigen::MatrixXd(10 * kPrimitiveSteps, 6);
        for (int k = 0; k < 10; ++k)
            s.proprio_deg.middleRows(k * kPrimitiveSteps, kPrimitiveSteps) = p.joints;
        s.extero = Eigen::MatrixXd::Zero(s.proprio_deg.rows(), 4);
        s.labels.assign(s.proprio_deg.rows(), label);
        labeled.push_back(std::move(s));
    }
    // Unstructured movement regressed onto uniform scores: white noise and
    // leaky random walks (the latter resemble generated junk).
    std::normal_distribution<double> white(0.0, 40.0);
    for (int k = 0; k < 3; ++k) {
        SequenceSample s;
        s.proprio_deg =
            Eigen::MatrixXd(400, 6).unaryExpr([&](double) { return white(rng); });
        s.extero = Eigen::MatrixXd::Zero(400, 4);
        s.labels.assign(400, PrimitiveLabel::NotClassified);
        labeled.push_back(std::move(s));
    }
    std::normal_distribution<double> kick(0.0, 12.0);
    for (int k = 0; k < 3; ++k) {
        SequenceSample s;
        s.proprio_deg = Eigen::MatrixXd::Zero(400, 6);
        Eigen::RowVectorXd x = Eigen::RowVectorXd::Zero(6);
        for (int t = 0; t < 400; ++t) {
            for (int j = 0; j < 6; ++j) x(j) = 0.92 * x(j) + kick(rng);
            s.proprio_deg.row(t) = x;
        }
        s.extero = Eigen::MatrixXd::Zero(400, 4);
        s.labels.assign(400, PrimitiveLabel::NotClassified);
        labeled.push_back(std::move(s));
    }
    EsnConfig config;
    config.seed = seed;
    return EsnModel::fit(labeled, config, rng);
}

std::vector<Eigen::MatrixXd> prior_regeneration(const Checkpoint& ckpt, int sample_index,
                                                int n_repeats, int horizon, Rng& rng) {
    if (n_repeats < 1) throw ConfigError("prior_regeneration: n_repeats must be >= 1");
    if (horizon < 1) throw ConfigError("prior_regeneration: horizon must be >= 1");
    const auto& stored = ckpt.adaptation;
    if (stored.length() < 2)
        throw ConfigError("prior_regeneration: checkpoint stores fewer than two steps");
    if (sample_index < 0 || sample_index >= stored.raw_mean[0][0].cols())
        throw ConfigError("prior_regeneration: no stored adaptation for sample " +
                          std::to_string(sample_index));

    const ModelConfig& cfg = ckpt.model;
    Network net(cfg, ckpt.params);
    const int post_len = std::min(2, horizon);

    // All repeats in one batch. The two bootstrap steps sample the stored
    // posterior, so repeats start with small state differences that the
    // learned dynamics may or may not amplify.
    AdaptationSequence boot = AdaptationSequence::zeros(cfg, post_len, n_repeats);
    for (int t = 0; t < post_len; ++t) {
        for (int l = 0; l < cfg.num_layers(); ++l) {
            boot.raw_mean[t][l] =
                stored.raw_mean[t][l].col(sample_index).replicate(1, n_repeats);
            boot.log_stddev[t][l] =
                stored.log_stddev[t][l].col(sample_index).replicate(1, n_repeats);
        }
    }
    Rollout post = net.rollout_posterior(boot, StateBatch::zeros(cfg, n_repeats), rng);

    std::vector<Eigen::MatrixXd> outputs = post.outputs;
    if (horizon > post_len) {
        Rollout prior = net.rollout_prior(post.states.back(), post_len + 1,
                                          horizon - post_len, n_repeats, rng);
        outputs.insert(outputs.end(), prior.outputs.begin(), prior.outputs.end());
    }

    std::vector<Eigen::MatrixXd> sequences;
    sequences.reserve(n_repeats);
    for (int b = 0; b < n_repeats; ++b) {
        Eigen::MatrixXd deg(horizon, 6);
        for (int t = 0; t < horizon; ++t)
            deg.row(t) = denormalize_proprio(
                             outputs[t].block(0, b, cfg.proprio_dim, 1).transpose())
                             .row(0);
        sequences.push_back(std::move(deg));
    }
    return sequences;
}

std::vector<PrimitiveLabel> reduce_to_occurrences(const ClassifiedSequence& seq,
                                                  int min_run) {
    std::vector<PrimitiveLabel> occurrences;
    int run = 0;
    PrimitiveLabel current = PrimitiveLabel::NotClassified;
    auto flush = [&]() {
        if (current != PrimitiveLabel::NotClassified && run >= min_run)
            occurrences.push_back(current);
    };
    for (const auto l : seq.labels) {
        if (l == current) {
            ++run;
            continue;
        }
        flush();
        current = l;
        run = 1;
    }
    flush();
    return occurrences;
}

std::optional<std::pair<double, double>> bc_ratio_of_occurrences(
    const std::vector<PrimitiveLabel>& occurrences) {
    long nb = 0, nc = 0;
    for (auto l : occurrences) {
        if (l == PrimitiveLabel::B) ++nb;
        if (l == PrimitiveLabel::C) ++nc;
    }
    if (nb + nc == 0) return std::nullopt;
    const double pct_b = 100.0 * nb / (nb + nc);
    return std::make_pair(pct_b, 100.0 - pct_b);
}

std::optional<std::pair<double, double>> bc_ratio(const ClassifiedSequence& seq) {
    return bc_ratio_of_occurrences(reduce_to_occurrences(seq));
}

double divergence_step(const std::vector<Eigen::MatrixXd>& sequences_deg, Rng& rng,
                       double threshold) {
    if (sequences_deg.size() < 2)
        throw ConfigError("divergence_step: need at least two sequences");
    const Eigen::Index T = sequences_deg[0].rows();
    for (const auto& s : sequences_deg)
        if (s.rows() != T || s.cols() != 6)
            throw ConfigError("divergence_step: sequence shape mismatch");

    std::uniform_int_distribution<size_t> pick(0, sequences_deg.size() - 1);
    const size_t ref = pick(rng);
    double sum = 0.0;
    for (size_t i = 0; i < sequences_deg.size(); ++i) {
        if (i == ref) continue;
        long step = T;  // never diverging contributes the full length
        for (Eigen::Index t = 0; t < T; ++t) {
            const double mse =
                (sequences_deg[i].row(t) - sequences_deg[ref].row(t)).squaredNorm() / 6.0;
            if (mse > threshold) {
                step = t + 1;
                break;
            }
        }
        sum += static_cast<double>(step);
    }
    return sum / static_cast<double>(sequences_deg.size() - 1);
}

std::optional<double> sync_rate(const ClassifiedSequence& a, const ClassifiedSequence& b,
                                bool include_aa) {
    if (a.size() != b.size()) throw ConfigError("sync_rate: length mismatch");
    long considered = 0, synced = 0;
    for (int t = 0; t < a.size(); ++t) {
        const auto la = a.labels[t], lb = b.labels[t];
        if (la == PrimitiveLabel::NotClassified || lb == PrimitiveLabel::NotClassified)
            continue;
        const bool has_bc = la == PrimitiveLabel::B || la == PrimitiveLabel::C ||
                            lb == PrimitiveLabel::B || lb == PrimitiveLabel::C;
        if (!has_bc && !include_aa) continue;
        ++considered;
        if (la == lb) ++synced;
    }
    if (considered == 0) return std::nullopt;
    return 100.0 * synced / considered;
}

double chance_rate(double p_b1, double p_c1, double p_b2, double p_c2) {
    auto check_pair = [](double pb, double pc) {
        if (pb < 0.0 || pb > 1.0 || pc < 0.0 || pc > 1.0 ||
            std::abs(pb + pc - 1.0) > 1e-9)
            throw ConfigError("chance_rate: probabilities must pair-sum to 1");
    };
    check_pair(p_b1, p_c1);
    check_pair(p_b2, p_c2);
    return p_b1 * p_b2 + p_c1 * p_c2;
}

RegenReport regen_report(const std::vector<Eigen::MatrixXd>& sequences_deg,
                         const EsnModel& esn, Rng& rng) {
    if (sequences_deg.empty()) throw ConfigError("regen_report: no sequences");
    RegenReport rep;
    long counts[4] = {0, 0, 0, 0};
    long total = 0;
    std::vector<PrimitiveLabel> occurrences;
    for (const auto& seq : sequences_deg) {
        ClassifiedSequence cls = esn.classify(seq);
        for (int t = esn.config().washout; t < cls.size(); ++t) {
            ++counts[label_index(cls.labels[t])];
            ++total;
        }
        auto occ = reduce_to_occurrences(cls);
        occurrences.insert(occurrences.end(), occ.begin(), occ.end());
    }
    rep.occupancy_a = 100.0 * counts[0] / total;
    rep.occupancy_b = 100.0 * counts[1] / total;
    rep.occupancy_c = 100.0 * counts[2] / total;
    rep.occupancy_nc = 100.0 * counts[3] / total;
    rep.bc = bc_ratio_of_occurrences(occurrences);
    rep.divergence =
        sequences_deg.size() >= 2 ? divergence_step(sequences_deg, rng) : 0.0;
    return rep;
}

}  // namespace pvrnn
