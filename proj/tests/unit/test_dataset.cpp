#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "pvrnn/dataset.hpp"

using namespace pvrnn;

TEST_SUITE_BEGIN("dataset");

TEST_CASE("primitives: 40x6, home posture at both ends, separable and smooth") {
    const auto labels = {PrimitiveLabel::A, PrimitiveLabel::B, PrimitiveLabel::C};
    std::vector<Primitive> prims;
    for (auto l : labels) prims.push_back(make_primitive(l));

    for (const auto& p : prims) {
        CHECK(p.joints.rows() == 40);
        CHECK(p.joints.cols() == 6);
        CHECK(p.joints.row(0).cwiseAbs().maxCoeff() == 0.0);
        CHECK(p.joints.row(39).cwiseAbs().maxCoeff() == 0.0);
        // per-step continuity inside the primitive
        for (int t = 1; t < 40; ++t)
            CHECK((p.joints.row(t) - p.joints.row(t - 1)).cwiseAbs().maxCoeff() < 15.0);
    }
    // pairwise mean per-step distance above the separability floor
    for (size_t i = 0; i < prims.size(); ++i) {
        for (size_t j = i + 1; j < prims.size(); ++j) {
            double mean_dist = 0.0;
            for (int t = 0; t < 40; ++t)
                mean_dist += (prims[i].joints.row(t) - prims[j].joints.row(t)).norm();
            mean_dist /= 40.0;
            CAPTURE(i);
            CAPTURE(j);
            CHECK(mean_dist > 20.0);
        }
    }
}

TEST_CASE("make_primitive rejects unknown labels and bad profiles") {
    CHECK_THROWS_AS(make_primitive(PrimitiveLabel::NotClassified), ConfigError);
    CHECK_THROWS_AS(make_primitive(PrimitiveLabel::A, Eigen::VectorXd::Ones(4)), ConfigError);
}

TEST_CASE("forward kinematics: straight chain and right-angle rotation") {
    Eigen::VectorXd joints = Eigen::VectorXd::Zero(6);
    Eigen::Vector4d home = forward_kinematics(joints);
    CHECK(home(0) == doctest::Approx(2.3));
    CHECK(home(1) == doctest::Approx(0.0));
    CHECK(home(2) == doctest::Approx(2.3));
    CHECK(home(3) == doctest::Approx(0.0));

    joints(0) = 90.0;
    Eigen::Vector4d up = forward_kinematics(joints);
    CHECK(up(0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(up(1) == doctest::Approx(2.3));
}

TEST_CASE("forward kinematics matches an independent trigonometric oracle") {
    Rng rng(31);
    std::uniform_real_distribution<double> angle(-170.0, 170.0);
    for (int rep = 0; rep < 50; ++rep) {
        Eigen::VectorXd joints(6);
        for (int j = 0; j < 6; ++j) joints(j) = angle(rng);
        Eigen::Vector4d got = forward_kinematics(joints);
        const double L[3] = {1.0, 0.8, 0.5};
        for (int arm = 0; arm < 2; ++arm) {
            const double a1 = joints(arm * 3) * M_PI / 180.0;
            const double a2 = joints(arm * 3 + 1) * M_PI / 180.0;
            const double a3 = joints(arm * 3 + 2) * M_PI / 180.0;
            const double x =
                L[0] * std::cos(a1) + L[1] * std::cos(a1 + a2) + L[2] * std::cos(a1 + a2 + a3);
            const double y =
                L[0] * std::sin(a1) + L[1] * std::sin(a1 + a2) + L[2] * std::sin(a1 + a2 + a3);
            CHECK(std::abs(got(arm * 2) - x) < 1e-12);
            CHECK(std::abs(got(arm * 2 + 1) - y) < 1e-12);
        }
    }
}

TEST_CASE("mirror: definition and involution") {
    Eigen::Vector4d v(1, 2, 3, 4);
    Eigen::Vector4d m = mirror(v);
    CHECK(m(0) == -3);
    CHECK(m(1) == 4);
    CHECK(m(2) == -1);
    CHECK(m(3) == 2);
    CHECK((mirror(mirror(v)) - v).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("mirror: a mirror-symmetric posture maps to itself") {
    // left arm = reflection of the right arm about the y axis
    Eigen::VectorXd joints(6);
    joints << 30, -20, 45, 180 - 30, 20, -45;
    Eigen::Vector4d ex = forward_kinematics(joints);
    CHECK((mirror(ex) - ex).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("pfsm: deterministic case and long-run frequencies") {
    Rng rng(41);
    PfsmSpec all_b{1.0};
    auto seq = sample_pfsm(all_b, 6, rng);
    CHECK(seq[0] == PrimitiveLabel::A);
    CHECK(seq[1] == PrimitiveLabel::B);
    CHECK(seq[2] == PrimitiveLabel::A);
    CHECK(seq[3] == PrimitiveLabel::B);

    PfsmSpec spec{0.8};
    int n_b = 0, n_draws = 0;
    for (int rep = 0; rep < 100000; ++rep) {
        auto s = sample_pfsm(spec, 2, rng);
        ++n_draws;
        if (s[1] == PrimitiveLabel::B) ++n_b;
    }
    const double freq = static_cast<double>(n_b) / n_draws;
    CHECK(freq > 0.79);
    CHECK(freq < 0.81);

    CHECK_THROWS_AS(sample_pfsm(spec, 0, rng), ConfigError);
    PfsmSpec bad{1.5};
    CHECK_THROWS_AS(sample_pfsm(bad, 2, rng), ConfigError);
}

TEST_CASE("pfsm: chi-square on transition counts does not reject the spec") {
    Rng rng(43);
    PfsmSpec spec{0.2};
    const int n = 10000;
    int n_b = 0;
    for (int rep = 0; rep < n; ++rep)
        if (sample_pfsm(spec, 2, rng)[1] == PrimitiveLabel::B) ++n_b;
    const double exp_b = n * spec.p_b, exp_c = n * spec.p_c();
    const double chi2 = std::pow(n_b - exp_b, 2) / exp_b +
                        std::pow((n - n_b) - exp_c, 2) / exp_c;
    CHECK(chi2 < 6.635);  // chi-square(1) critical value at p = 0.01
}

TEST_CASE("build_dataset: shapes, label boundaries, BC statistics, continuity") {
    Rng rng(47);
    PfsmSpec spec{0.2};
    auto samples = build_dataset(spec, 20, 400, rng);
    REQUIRE(samples.size() == 20);

    int n_b = 0, n_c = 0;
    for (const auto& s : samples) {
        CHECK(s.length() == 400);
        CHECK(s.proprio_deg.cols() == 6);
        CHECK(s.extero.cols() == 4);
        // labels constant within each 40-step block
        for (int t = 0; t < 400; ++t) CHECK(s.labels[t] == s.labels[t - t % 40]);
        for (int p = 0; p < 10; ++p) {
            if (p % 2 == 0) {
                CHECK(s.labels[p * 40] == PrimitiveLabel::A);
            } else {
                if (s.labels[p * 40] == PrimitiveLabel::B) ++n_b;
                if (s.labels[p * 40] == PrimitiveLabel::C) ++n_c;
            }
        }
        // continuity across the whole concatenation
        for (int t = 1; t < 400; ++t)
            CHECK((s.proprio_deg.row(t) - s.proprio_deg.row(t - 1)).cwiseAbs().maxCoeff() <
                  15.0);
        // extero is a pure function of proprio
        for (int t = 0; t < 400; t += 17) {
            Eigen::Vector4d expect =
                mirror(forward_kinematics(s.proprio_deg.row(t).transpose()));
            CHECK((s.extero.row(t).transpose() - expect).cwiseAbs().maxCoeff() == 0.0);
        }
    }
    const double b_frac = static_cast<double>(n_b) / (n_b + n_c);
    CHECK(std::abs(b_frac - 0.2) < 0.10);  // within 10 points at n=20
}

TEST_CASE("target tensor carries normalized channels") {
    Rng rng(53);
    auto samples = build_dataset(PfsmSpec{0.5}, 3, 80, rng);
    auto targets = to_targets(samples);
    REQUIRE(targets.size() == 80);
    CHECK(targets[0].rows() == 10);
    CHECK(targets[0].cols() == 3);
    for (int t = 0; t < 80; t += 13) {
        CHECK(targets[t].cwiseAbs().maxCoeff() <= 1.0);
        CHECK(std::abs(targets[t](2, 1) - samples[1].proprio_deg(t, 2) / 180.0) < 1e-15);
        CHECK(std::abs(targets[t](7, 2) - samples[2].extero(t, 1) / 2.3) < 1e-15);
    }
}

TEST_CASE("dataset CSV round-trips exactly") {
    Rng rng(59);
    auto samples = build_dataset(PfsmSpec{0.8}, 2, 120, rng);
    const std::string path = "test_dataset_roundtrip.csv";
    nlohmann::json prov = {{"seed", 59}, {"p_b", 0.8}};
    save_dataset_csv(path, samples, prov);

    nlohmann::json prov2;
    auto loaded = load_dataset_csv(path, &prov2);
    REQUIRE(loaded.size() == samples.size());
    CHECK(prov2["p_b"] == 0.8);
    for (size_t b = 0; b < samples.size(); ++b) {
        CHECK((loaded[b].proprio_deg - samples[b].proprio_deg).cwiseAbs().maxCoeff() == 0.0);
        CHECK((loaded[b].extero - samples[b].extero).cwiseAbs().maxCoeff() == 0.0);
        CHECK(loaded[b].labels == samples[b].labels);
    }
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_dataset_csv("no_such_file.csv"), ConfigError);
}

TEST_SUITE_END();
