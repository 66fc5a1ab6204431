#include <doctest.h>

#include <cmath>

#include "pvrnn/analysis.hpp"
#include "pvrnn/training.hpp"

using namespace pvrnn;

namespace {

ClassifiedSequence from_segments(const std::vector<std::pair<char, int>>& segments) {
    ClassifiedSequence seq;
    for (const auto& [c, n] : segments) {
        for (int i = 0; i < n; ++i) {
            seq.labels.push_back(label_from_char(c));
            seq.confidence.push_back(1.0);
        }
    }
    return seq;
}

}  // namespace

TEST_SUITE_BEGIN("analysis");

TEST_CASE("esn reservoir: exact sparsity and spectral radius") {
    Rng rng(mix_seed(1, 0x45534eULL));
    auto labeled = build_dataset(PfsmSpec{0.5}, 2, 120, rng);
    EsnConfig cfg;
    EsnModel esn = EsnModel::fit(labeled, cfg, rng);

    long nnz = 0;
    for (Eigen::Index i = 0; i < 45; ++i)
        for (Eigen::Index j = 0; j < 45; ++j)
            if (esn.reservoir()(i, j) != 0.0) ++nnz;
    CHECK(std::abs(nnz - 0.25 * 45 * 45) <= 1.0);

    // power iteration as an independent estimate of the spectral radius
    Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(45, 0.3, 1.7);
    for (int i = 0; i < 20000; ++i) v = (esn.reservoir() * v).normalized();
    double log_growth = 0.0;
    const int m = 50000;
    for (int i = 0; i < m; ++i) {
        Eigen::VectorXd w = esn.reservoir() * v;
        log_growth += std::log(w.norm());
        v = w.normalized();
    }
    const double rho = std::exp(log_growth / m);
    CHECK(std::abs(rho - 0.9) < 1e-6);
}

TEST_CASE("esn: high per-step accuracy on clean primitives, fit and held out") {
    EsnModel esn = fit_default_esn(7);
    const int washout = esn.config().washout;

    // fit-style inputs: repeated clean primitives, washout per 40-step block
    long correct = 0, total = 0;
    for (auto label : {PrimitiveLabel::A, PrimitiveLabel::B, PrimitiveLabel::C}) {
        Primitive p = make_primitive(label);
        Eigen::MatrixXd seq(120, 6);
        seq << p.joints, p.joints, p.joints;
        ClassifiedSequence cls = esn.classify(seq);
        for (int t = 0; t < cls.size(); ++t) {
            if (t % kPrimitiveSteps < washout) continue;
            ++total;
            if (cls.labels[t] == label) ++correct;
        }
    }
    CHECK(static_cast<double>(correct) / total >= 0.99);

    // held-out compositions the fit never saw
    Rng rng(1001);
    auto held_out = build_dataset(PfsmSpec{0.5}, 3, 400, rng);
    correct = total = 0;
    for (const auto& s : held_out) {
        ClassifiedSequence cls = esn.classify(s.proprio_deg);
        for (int t = 0; t < cls.size(); ++t) {
            if (t % kPrimitiveSteps < washout) continue;
            ++total;
            if (cls.labels[t] == s.labels[t]) ++correct;
        }
    }
    CHECK(static_cast<double>(correct) / total >= 0.95);
}

TEST_CASE("esn: a pure B primitive is labeled B on at least 90% of steps") {
    EsnModel esn = fit_default_esn(7);
    Primitive p = make_primitive(PrimitiveLabel::B);
    Eigen::MatrixXd seq(80, 6);
    seq << p.joints, p.joints;
    ClassifiedSequence cls = esn.classify(seq);
    long n_b = 0;
    for (auto l : cls.labels)
        if (l == PrimitiveLabel::B) ++n_b;
    CHECK(static_cast<double>(n_b) / cls.size() >= 0.90);
}

TEST_CASE("esn: white-noise input is mostly not classified") {
    EsnModel esn = fit_default_esn(7);
    Rng rng(67);
    std::normal_distribution<double> noise(0.0, 40.0);
    Eigen::MatrixXd junk =
        Eigen::MatrixXd(200, 6).unaryExpr([&](double) { return noise(rng); });
    ClassifiedSequence cls = esn.classify(junk);
    long nc = 0;
    for (auto l : cls.labels)
        if (l == PrimitiveLabel::NotClassified) ++nc;
    CHECK(nc > cls.size() / 2);
}

TEST_CASE("decide_label: threshold boundary counts as classified") {
    auto [label, conf] = decide_label({0.55, 0.45, 0.0}, 0.55);
    CHECK(label == PrimitiveLabel::A);
    CHECK(conf == doctest::Approx(0.55));
    auto [label2, conf2] = decide_label({0.54, 0.46, 0.0}, 0.55);
    CHECK(label2 == PrimitiveLabel::NotClassified);
    auto [label3, conf3] = decide_label({-1.0, -2.0, -0.5}, 0.55);
    CHECK(label3 == PrimitiveLabel::NotClassified);
    CHECK(conf3 == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("occurrence reduction: short runs and not-classified gaps are dropped") {
    ClassifiedSequence seq = from_segments(
        {{'A', 25}, {'B', 19}, {'A', 30}, {'-', 5}, {'C', 20}, {'B', 40}});
    auto occ = reduce_to_occurrences(seq);
    REQUIRE(occ.size() == 4);
    CHECK(occ[0] == PrimitiveLabel::A);
    CHECK(occ[1] == PrimitiveLabel::A);
    CHECK(occ[2] == PrimitiveLabel::C);
    CHECK(occ[3] == PrimitiveLabel::B);
}

TEST_CASE("bc_ratio: counting over occurrences") {
    auto seq = from_segments({{'A', 25}, {'B', 25}, {'A', 25}, {'C', 25},
                              {'A', 25}, {'C', 25}, {'A', 25}, {'C', 25}});
    auto bc = bc_ratio(seq);
    REQUIRE(bc.has_value());
    CHECK(bc->first == doctest::Approx(25.0));
    CHECK(bc->second == doctest::Approx(75.0));
    CHECK(bc->first + bc->second == doctest::Approx(100.0));

    auto all_b = bc_ratio(from_segments({{'B', 60}}));
    REQUIRE(all_b.has_value());
    CHECK(all_b->first == doctest::Approx(100.0));
    CHECK(all_b->second == doctest::Approx(0.0));

    CHECK(!bc_ratio(from_segments({{'A', 100}})).has_value());
}

TEST_CASE("divergence: identical sequences never diverge") {
    Eigen::MatrixXd seq = Eigen::MatrixXd::Random(100, 6) * 30.0;
    Rng rng(71);
    CHECK(divergence_step({seq, seq, seq}, rng) == doctest::Approx(100.0));
}

TEST_CASE("divergence: a 60-degree offset from step k diverges at k") {
    Eigen::MatrixXd base = Eigen::MatrixXd::Zero(50, 6);
    Eigen::MatrixXd shifted = base;
    const int k = 23;  // 1-based step where the offset starts
    for (int t = k - 1; t < 50; ++t) shifted.row(t).array() += 60.0;
    Rng rng(73);
    CHECK(divergence_step({base, shifted}, rng) == doctest::Approx(static_cast<double>(k)));
}

TEST_CASE("divergence: monotone in the threshold") {
    Rng rng(79);
    std::normal_distribution<double> jitter(0.0, 8.0);
    Eigen::MatrixXd a =
        Eigen::MatrixXd(80, 6).unaryExpr([&](double) { return jitter(rng); });
    Eigen::MatrixXd b =
        Eigen::MatrixXd(80, 6).unaryExpr([&](double) { return jitter(rng); });
    double prev = 0.0;
    for (double threshold : {10.0, 30.0, 55.0, 90.0, 200.0}) {
        Rng local(81);  // same reference pick for each threshold
        const double step = divergence_step({a, b}, local, threshold);
        CHECK(step >= prev);
        prev = step;
    }
    CHECK_THROWS_AS(divergence_step({a}, rng), ConfigError);
    Eigen::MatrixXd shorter = a.topRows(40);
    CHECK_THROWS_AS(divergence_step({a, shorter}, rng), ConfigError);
}

TEST_CASE("sync rate: identity, disjoint labels, exclusions and symmetry") {
    auto b_stream = from_segments({{'B', 50}});
    auto c_stream = from_segments({{'C', 50}});
    CHECK(sync_rate(b_stream, b_stream).value() == doctest::Approx(100.0));
    CHECK(sync_rate(b_stream, c_stream).value() == doctest::Approx(0.0));

    // A-A steps are excluded from the default denominator
    auto mixed1 = from_segments({{'A', 30}, {'B', 30}});
    auto mixed2 = from_segments({{'A', 30}, {'B', 30}});
    CHECK(sync_rate(mixed1, mixed2).value() == doctest::Approx(100.0));
    auto half = from_segments({{'A', 30}, {'C', 30}});
    CHECK(sync_rate(mixed1, half).value() == doctest::Approx(0.0));
    CHECK(sync_rate(mixed1, half, true).value() == doctest::Approx(50.0));

    // symmetric in the arguments
    Rng rng(83);
    std::uniform_int_distribution<int> pick(0, 3);
    ClassifiedSequence ra, rb;
    const char symbols[4] = {'A', 'B', 'C', '-'};
    for (int t = 0; t < 200; ++t) {
        ra.labels.push_back(label_from_char(symbols[pick(rng)]));
        rb.labels.push_back(label_from_char(symbols[pick(rng)]));
    }
    CHECK(sync_rate(ra, rb) == sync_rate(rb, ra));

    auto nc = from_segments({{'-', 50}});
    CHECK(!sync_rate(nc, nc).has_value());
    CHECK_THROWS_AS(sync_rate(b_stream, from_segments({{'B', 10}})), ConfigError);
}

TEST_CASE("chance rate: paper pairing, degenerate and uniform cases") {
    CHECK(chance_rate(0.8, 0.2, 0.2, 0.8) == doctest::Approx(0.32));
    CHECK(chance_rate(1.0, 0.0, 1.0, 0.0) == doctest::Approx(1.0));
    CHECK(chance_rate(0.5, 0.5, 0.5, 0.5) == doctest::Approx(0.5));
    CHECK_THROWS_AS(chance_rate(0.7, 0.7, 0.5, 0.5), ConfigError);

    // bounded and maximized at matched preferences
    for (double p = 0.0; p <= 1.0; p += 0.1) {
        const double c = chance_rate(p, 1.0 - p, p, 1.0 - p);
        CHECK(c >= 0.0);
        CHECK(c <= 1.0);
        CHECK(c >= chance_rate(p, 1.0 - p, 1.0 - p, p) - 1e-12);
    }
}

TEST_CASE("prior regeneration: shapes, determinism, bootstrap-only horizon") {
    auto cfg = ModelConfig::tiny(0.2, 5);
    TrainConfig tcfg;
    tcfg.seed = 5;
    Rng data_rng(5);
    Trainer tr(build_dataset(PfsmSpec{0.5}, 3, 40, data_rng), cfg, tcfg);
    tr.train_epoch();
    Checkpoint ckpt = tr.to_checkpoint();

    Rng r1(9), r2(9);
    auto seqs = prior_regeneration(ckpt, 1, 4, 30, r1);
    REQUIRE(seqs.size() == 4);
    for (const auto& s : seqs) {
        CHECK(s.rows() == 30);
        CHECK(s.cols() == 6);
    }
    auto again = prior_regeneration(ckpt, 1, 4, 30, r2);
    for (int i = 0; i < 4; ++i)
        CHECK((seqs[i] - again[i]).cwiseAbs().maxCoeff() == 0.0);

    auto boot_only = prior_regeneration(ckpt, 0, 2, 2, r1);
    CHECK(boot_only[0].rows() == 2);

    CHECK_THROWS_AS(prior_regeneration(ckpt, 7, 2, 30, r1), ConfigError);
}

TEST_CASE("regen report: occupancy sums to 100 and carries the BC split") {
    EsnModel esn = fit_default_esn(7);
    Rng rng(91);
    // use real generated movement so the classifier has something to see
    auto samples = build_dataset(PfsmSpec{0.2}, 3, 400, rng);
    std::vector<Eigen::MatrixXd> seqs;
    for (const auto& s : samples) seqs.push_back(s.proprio_deg);
    RegenReport rep = regen_report(seqs, esn, rng);
    CHECK(rep.occupancy_a + rep.occupancy_b + rep.occupancy_c + rep.occupancy_nc ==
          doctest::Approx(100.0).epsilon(1e-9));
    REQUIRE(rep.bc.has_value());
    CHECK(rep.bc->first + rep.bc->second == doctest::Approx(100.0));
    CHECK(rep.divergence > 0.0);
}

TEST_SUITE_END();
