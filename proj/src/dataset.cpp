#include "pvrnn/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

namespace pvrnn {

namespace {

constexpr double kPi = std::numbers::pi;

// Largest amplitudes the per-step continuity budget (< 15 deg) allows for
// each waveform; big excursions keep the learning signal strong.
Eigen::VectorXd default_amplitudes(PrimitiveLabel label) {
    Eigen::VectorXd amp(6);
    switch (label) {
        case PrimitiveLabel::A:
            amp << 85, 70, 55, 85, 70, 55;
            break;
        case PrimitiveLabel::B:
            amp << 45, -36, 27, -45, 36, -27;
            break;
        case PrimitiveLabel::C:
            amp << 110, 85, 60, -110, -85, -60;
            break;
        default:
            throw ConfigError("make_primitive: unknown primitive label");
    }
    return amp;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

char label_char(PrimitiveLabel l) {
    switch (l) {
        case PrimitiveLabel::A: return 'A';
        case PrimitiveLabel::B: return 'B';
        case PrimitiveLabel::C: return 'C';
        default: return '-';
    }
}

PrimitiveLabel label_from_char(char c) {
    switch (c) {
        case 'A': return PrimitiveLabel::A;
        case 'B': return PrimitiveLabel::B;
        case 'C': return PrimitiveLabel::C;
        case '-': return PrimitiveLabel::NotClassified;
        default: throw ConfigError(std::string("unknown primitive label '") + c + "'");
    }
}

Primitive make_primitive(PrimitiveLabel label) {
    return make_primitive(label, default_amplitudes(label));
}

Primitive make_primitive(PrimitiveLabel label, const Eigen::VectorXd& amplitude_profile) {
    if (label != PrimitiveLabel::A && label != PrimitiveLabel::B &&
        label != PrimitiveLabel::C)
        throw ConfigError("make_primitive: unknown primitive label");
    if (amplitude_profile.size() != 6)
        throw ConfigError("make_primitive: amplitude profile must have 6 entries");

    Primitive p;
    p.label = label;
    p.joints = Eigen::MatrixXd::Zero(kPrimitiveSteps, 6);
    for (int t = 0; t < kPrimitiveSteps; ++t) {
        const double s = static_cast<double>(t) / (kPrimitiveSteps - 1);
        double shape = 0.0;
        switch (label) {
            case PrimitiveLabel::A:  // one in-phase cycle
                shape = std::sin(2.0 * kPi * s);
                break;
            case PrimitiveLabel::B:  // two cycles, signs alternate per joint
                shape = std::sin(4.0 * kPi * s);
                break;
            default:  // C: smooth reach-and-return bump
                shape = 0.5 * (1.0 - std::cos(2.0 * kPi * s));
                break;
        }
        for (int j = 0; j < 6; ++j) p.joints(t, j) = amplitude_profile(j) * shape;
    }
    // exact home posture at both ends
    p.joints.row(0).setZero();
    p.joints.row(kPrimitiveSteps - 1).setZero();
    return p;
}

Eigen::Vector4d forward_kinematics(const Eigen::VectorXd& joints_deg) {
    if (joints_deg.size() != 6)
        throw ConfigError("forward_kinematics: expected 6 joint angles");
    Eigen::Vector4d out;
    for (int arm = 0; arm < 2; ++arm) {
        double x = 0.0, y = 0.0, cum = 0.0;
        for (int k = 0; k < 3; ++k) {
            cum += joints_deg(arm * 3 + k) * kPi / 180.0;
            x += kLinkLengths[k] * std::cos(cum);
            y += kLinkLengths[k] * std::sin(cum);
        }
        out(arm * 2) = x;
        out(arm * 2 + 1) = y;
    }
    return out;
}

Eigen::Vector4d mirror(const Eigen::Vector4d& ex) {
    return {-ex(2), ex(3), -ex(0), ex(1)};
}

void PfsmSpec::validate() const {
    if (!(p_b >= 0.0 && p_b <= 1.0))
        throw ConfigError("pfsm: p_b must lie in [0, 1]");
}

std::vector<PrimitiveLabel> sample_pfsm(const PfsmSpec& spec, int n_primitives, Rng& rng) {
    spec.validate();
    if (n_primitives < 1) throw ConfigError("sample_pfsm: need at least one primitive");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<PrimitiveLabel> seq;
    seq.reserve(n_primitives);
    for (int i = 0; i < n_primitives; ++i) {
        if (i % 2 == 0) {
            seq.push_back(PrimitiveLabel::A);
        } else {
            seq.push_back(unit(rng) < spec.p_b ? PrimitiveLabel::B : PrimitiveLabel::C);
        }
    }
    return seq;
}

SequenceSample build_sequence(const PfsmSpec& spec, int steps, Rng& rng) {
    if (steps < 1) throw ConfigError("build_sequence: steps must be >= 1");
    const int n_prims = (steps + kPrimitiveSteps - 1) / kPrimitiveSteps;
    const auto labels = sample_pfsm(spec, n_prims, rng);

    SequenceSample s;
    s.proprio_deg = Eigen::MatrixXd::Zero(steps, 6);
    s.extero = Eigen::MatrixXd::Zero(steps, 4);
    s.labels.resize(steps);
    for (int t = 0; t < steps; ++t) {
        const int prim = t / kPrimitiveSteps;
        const int local = t % kPrimitiveSteps;
        static thread_local Primitive cache[3] = {
            make_primitive(PrimitiveLabel::A),
            make_primitive(PrimitiveLabel::B),
            make_primitive(PrimitiveLabel::C),
        };
        const Primitive& p = cache[static_cast<int>(labels[prim])];
        s.proprio_deg.row(t) = p.joints.row(local);
        s.extero.row(t) = mirror(forward_kinematics(p.joints.row(local))).transpose();
        s.labels[t] = labels[prim];
    }
    return s;
}

std::vector<SequenceSample> build_dataset(const PfsmSpec& spec, int n_samples, int steps,
                                          Rng& rng) {
    if (n_samples < 1) throw ConfigError("build_dataset: need at least one sample");
    std::vector<SequenceSample> out;
    out.reserve(n_samples);
    for (int i = 0; i < n_samples; ++i) out.push_back(build_sequence(spec, steps, rng));
    return out;
}

Eigen::MatrixXd normalize_proprio(const Eigen::MatrixXd& deg) {
    return deg / kJointScaleDeg;
}
Eigen::MatrixXd denormalize_proprio(const Eigen::MatrixXd& unit) {
    return unit * kJointScaleDeg;
}
Eigen::MatrixXd normalize_extero(const Eigen::MatrixXd& ex) { return ex / kArmReach; }
Eigen::MatrixXd denormalize_extero(const Eigen::MatrixXd& unit) { return unit * kArmReach; }

std::vector<Eigen::MatrixXd> to_targets(const std::vector<SequenceSample>& samples) {
    if (samples.empty()) throw ConfigError("to_targets: empty dataset");
    const int T = samples[0].length();
    const int B = static_cast<int>(samples.size());
    for (const auto& s : samples)
        if (s.length() != T) throw ConfigError("to_targets: unequal sequence lengths");
    std::vector<Eigen::MatrixXd> targets(T, Eigen::MatrixXd(10, B));
    for (int b = 0; b < B; ++b) {
        const Eigen::MatrixXd pr = normalize_proprio(samples[b].proprio_deg);
        const Eigen::MatrixXd ex = normalize_extero(samples[b].extero);
        for (int t = 0; t < T; ++t) {
            targets[t].block<6, 1>(0, b) = pr.row(t).transpose();
            targets[t].block<4, 1>(6, b) = ex.row(t).transpose();
        }
    }
    return targets;
}

void save_dataset_csv(const std::string& path, const std::vector<SequenceSample>& samples,
                      const nlohmann::json& provenance) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write dataset file: " + path);
    out << "# pvrnn-dataset v1\n";
    out << "# " << provenance.dump() << "\n";
    out << "sample,t,label,pr0,pr1,pr2,pr3,pr4,pr5,ex0,ex1,ex2,ex3\n";
    for (size_t b = 0; b < samples.size(); ++b) {
        const auto& s = samples[b];
        for (int t = 0; t < s.length(); ++t) {
            out << b << ',' << (t + 1) << ',' << label_char(s.labels[t]);
            for (int j = 0; j < 6; ++j) out << ',' << format_double(s.proprio_deg(t, j));
            for (int j = 0; j < 4; ++j) out << ',' << format_double(s.extero(t, j));
            out << '\n';
        }
    }
}

std::vector<SequenceSample> load_dataset_csv(const std::string& path,
                                             nlohmann::json* provenance) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read dataset file: " + path);
    std::string line;
    std::vector<std::vector<std::array<double, 10>>> rows;  // per sample
    std::vector<std::vector<PrimitiveLabel>> labels;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (provenance && line.size() > 2 && line[2] == '{')
                *provenance = nlohmann::json::parse(line.substr(2));
            continue;
        }
        if (!header_seen) {  // column header
            header_seen = true;
            continue;
        }
        std::stringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 13)
            throw ConfigError("dataset file: malformed row with " +
                              std::to_string(fields.size()) + " fields");
        const size_t sample = std::stoul(fields[0]);
        if (sample >= rows.size()) {
            rows.resize(sample + 1);
            labels.resize(sample + 1);
        }
        std::array<double, 10> vals{};
        for (int i = 0; i < 10; ++i) vals[i] = std::stod(fields[3 + i]);
        rows[sample].push_back(vals);
        labels[sample].push_back(label_from_char(fields[2][0]));
    }
    if (rows.empty()) throw ConfigError("dataset file: no data rows in " + path);

    std::vector<SequenceSample> samples;
    for (size_t b = 0; b < rows.size(); ++b) {
        SequenceSample s;
        const int T = static_cast<int>(rows[b].size());
        s.proprio_deg = Eigen::MatrixXd(T, 6);
        s.extero = Eigen::MatrixXd(T, 4);
        s.labels = labels[b];
        for (int t = 0; t < T; ++t) {
            for (int j = 0; j < 6; ++j) s.proprio_deg(t, j) = rows[b][t][j];
            for (int j = 0; j < 4; ++j) s.extero(t, j) = rows[b][t][6 + j];
        }
        samples.push_back(std::move(s));
    }
    return samples;
}

}  // namespace pvrnn
