#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "pvrnn/checkpoint.hpp"
#include "pvrnn/dataset.hpp"

namespace pvrnn {

struct EsnConfig {
    int reservoir_size = 45;
    double connectivity = 0.25;
    double leak_rate = 0.6;
    double spectral_radius = 0.9;
    double ridge = 1e-6;
    double confidence_threshold = 0.55;
    int washout = 10;
    std::uint64_t seed = 1;
    // readout-side knobs
    double input_scale = 1.0;        // multiplier on normalized joint inputs
    bool class_balance = true;       // equalize per-label row mass in the ridge
    double uniform_row_weight = 1.0; // weight of NotClassified rows (uniform target)

    void validate() const;
};

struct ClassifiedSequence {
    std::vector<PrimitiveLabel> labels;     // NotClassified below the threshold
    std::vector<double> confidence;         // max normalized class score
    int size() const { return static_cast<int>(labels.size()); }
};

// Readout scores -> (label, confidence). Scores are clamped at zero and
// normalized to sum one; a confidence meeting the threshold (>=) classifies.
std::pair<PrimitiveLabel, double> decide_label(const Eigen::Vector3d& scores,
                                               double threshold);

// Echo state network over proprioceptive trajectories: fixed sparse random
// reservoir, leaky-integrator states, ridge-regression readout to per-step
// three-class confidences.
class EsnModel {
public:
    // Fits the readout on labeled sequences (joint angles in degrees).
    static EsnModel fit(const std::vector<SequenceSample>& labeled,
                        const EsnConfig& config, Rng& rng);

    ClassifiedSequence classify(const Eigen::MatrixXd& proprio_deg) const;

    const Eigen::MatrixXd& reservoir() const { return reservoir_; }
    const EsnConfig& config() const { return config_; }

private:
    EsnConfig config_;
    Eigen::MatrixXd reservoir_;   // N x N, sparse, scaled to spectral_radius
    Eigen::MatrixXd input_w;      // N x 6
    Eigen::MatrixXd readout_;     // 3 x (N + 6 + 1)
};

// Labeled P-FSM sequences from the synthetic generator, balanced between B
// and C; the stock classifier everything downstream shares.
EsnModel fit_default_esn(std::uint64_t seed);

// Posterior reconstruction over the first two steps from the stored
// adaptation variables, then prior generation out to `horizon`. Returns
// one proprioceptive trajectory in degrees per repeat.
std::vector<Eigen::MatrixXd> prior_regeneration(const Checkpoint& ckpt, int sample_index,
                                                int n_repeats, int horizon, Rng& rng);

// Occurrence counting: a run of at least `min_run` identical classified
// steps is one primitive occurrence.
inline constexpr int kMinOccurrenceRun = 20;
std::vector<PrimitiveLabel> reduce_to_occurrences(const ClassifiedSequence& seq,
                                                  int min_run = kMinOccurrenceRun);

// Percentages over B and C occurrences only; absent when there are none.
std::optional<std::pair<double, double>> bc_ratio(const ClassifiedSequence& seq);
std::optional<std::pair<double, double>> bc_ratio_of_occurrences(
    const std::vector<PrimitiveLabel>& occurrences);

// Mean first step (1-based) at which per-step joint MSE from a randomly
// chosen reference exceeds the threshold; sequences that never diverge
// contribute their full length.
double divergence_step(const std::vector<Eigen::MatrixXd>& sequences_deg, Rng& rng,
                       double threshold = 55.0);

// Fraction of steps, in percent, where both agents play the same primitive;
// considered steps have both agents classified and at least one playing B/C.
// `include_aa` widens the denominator to all both-classified steps.
std::optional<double> sync_rate(const ClassifiedSequence& a, const ClassifiedSequence& b,
                                bool include_aa = false);

// Expected synchronization under independent preferences.
double chance_rate(double p_b1, double p_c1, double p_b2, double p_c2);

struct RegenReport {
    double occupancy_a = 0.0;  // percent of steps per label
    double occupancy_b = 0.0;
    double occupancy_c = 0.0;
    double occupancy_nc = 0.0;
    std::optional<std::pair<double, double>> bc;  // over occurrences
    double divergence = 0.0;
};

// Classifies a batch of regenerated trajectories and aggregates occupancy
// (steps at or beyond the washout), pooled BC occurrences and divergence.
RegenReport regen_report(const std::vector<Eigen::MatrixXd>& sequences_deg,
                         const EsnModel& esn, Rng& rng);

}  // namespace pvrnn
