#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "pvrnn/common.hpp"

#include <nlohmann/json_fwd.hpp>

namespace pvrnn {

enum class PrimitiveLabel { A, B, C, NotClassified };

char label_char(PrimitiveLabel l);
PrimitiveLabel label_from_char(char c);

inline constexpr int kPrimitiveSteps = 40;

// One movement primitive: joint-angle trajectory in degrees, starting and
// ending at the shared home posture (all joints zero).
struct Primitive {
    PrimitiveLabel label = PrimitiveLabel::A;
    Eigen::MatrixXd joints;  // kPrimitiveSteps x 6
};

// Default amplitudes per joint; pass a custom 6-vector to reshape a primitive.
Primitive make_primitive(PrimitiveLabel label);
Primitive make_primitive(PrimitiveLabel label, const Eigen::VectorXd& amplitude_profile);

// Planar 3-link arms, joints in degrees, 3 per arm.
// Returns (x_right, y_right, x_left, y_left).
Eigen::Vector4d forward_kinematics(const Eigen::VectorXd& joints_deg);

// What the counterpart's movement looks like from the other side:
// left/right swapped, x negated. Involution.
Eigen::Vector4d mirror(const Eigen::Vector4d& ex);

// Transition structure: A alternates with a draw of B (p_b) or C (1 - p_b).
struct PfsmSpec {
    double p_b = 0.2;
    double p_c() const { return 1.0 - p_b; }
    void validate() const;  // throws ConfigError
};

std::vector<PrimitiveLabel> sample_pfsm(const PfsmSpec& spec, int n_primitives, Rng& rng);

struct SequenceSample {
    Eigen::MatrixXd proprio_deg;         // T x 6, degrees
    Eigen::MatrixXd extero;              // T x 4, hand xy units
    std::vector<PrimitiveLabel> labels;  // per step
    int length() const { return static_cast<int>(proprio_deg.rows()); }
};

// Concatenates P-FSM-sampled primitives to `steps` rows and fills the
// exteroceptive channel as mirror(forward_kinematics(proprio)).
SequenceSample build_sequence(const PfsmSpec& spec, int steps, Rng& rng);
std::vector<SequenceSample> build_dataset(const PfsmSpec& spec, int n_samples, int steps,
                                          Rng& rng);

// Network-boundary scaling: degrees / 180, hand coordinates / total reach.
Eigen::MatrixXd normalize_proprio(const Eigen::MatrixXd& deg);
Eigen::MatrixXd denormalize_proprio(const Eigen::MatrixXd& unit);
Eigen::MatrixXd normalize_extero(const Eigen::MatrixXd& ex);
Eigen::MatrixXd denormalize_extero(const Eigen::MatrixXd& unit);

// Training tensor: one (output_dim x n_samples) matrix per time step,
// proprio rows first, everything in network units.
std::vector<Eigen::MatrixXd> to_targets(const std::vector<SequenceSample>& samples);

// CSV with a one-line JSON provenance comment. Columns:
// sample,t,label,pr0..pr5 (degrees),ex0..ex3.
void save_dataset_csv(const std::string& path, const std::vector<SequenceSample>& samples,
                      const nlohmann::json& provenance);
std::vector<SequenceSample> load_dataset_csv(const std::string& path,
                                             nlohmann::json* provenance = nullptr);

}  // namespace pvrnn
