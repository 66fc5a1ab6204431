#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "pvrnn/interaction.hpp"
#include "pvrnn/training.hpp"

namespace pvrnn {

// Stage argument blocks; CLI flags and plan-file fields map onto these 1:1.

struct GenDataArgs {
    std::string out;
    int n_samples = 20;
    int steps = 400;
    double p_b = 0.2;
    std::uint64_t seed = 1;
};

struct TrainArgs {
    std::string data;
    std::string out;
    std::string log;  // optional per-epoch CSV
    double w1 = 1.0;
    int epochs = 5000;
    double learning_rate = 0.001;
    std::uint64_t seed = 1;
};

struct RegenArgs {
    std::string ckpt;
    std::string out;
    int sample = 0;
    int repeats = 20;
    int horizon = 400;
    std::uint64_t seed = 1;
};

struct InteractArgs {
    std::string ckpt_a;
    std::string ckpt_b;
    std::string trace;    // per-step CSV
    std::string summary;  // JSON
    InteractionConfig config;
};

struct AnalyzeArgs {
    std::vector<std::string> checkpoints;  // -> Table-II rows
    std::vector<std::string> summaries;    // -> Table-III rows
    std::string out_dir;
    int sample = 0;
    int repeats = 20;
    int horizon = 400;
    std::uint64_t seed = 1;
};

void cmd_gen_data(const GenDataArgs& args);
void cmd_train(const TrainArgs& args);
void cmd_regen(const RegenArgs& args);
void cmd_interact(const InteractArgs& args);
void cmd_analyze(const AnalyzeArgs& args);

// Consolidated report over a run directory (tables + summaries). Missing
// artifacts are all listed in one ConfigError.
void cmd_report(const std::string& run_dir, std::ostream& out,
                const std::string& out_file = "");

// Plan file: {"seed": .., "out_dir": .., "stages": [{"name": .., <fields>}]}.
struct PlanStage {
    std::string name;
    nlohmann::json* config;  // owned by the plan document
};

struct ExperimentPlan {
    std::uint64_t seed = 1;
    std::string out_dir;
    std::shared_ptr<nlohmann::json> doc;  // parsed plan document

    static ExperimentPlan load(const std::string& path);
    // Stage names, required fields, dependency order of referenced paths.
    void validate() const;
    // Executes stages in order; a stage whose outputs all exist is skipped
    // unless force is set.
    void run(bool force, std::ostream& log) const;
};

// Provenance helper: resolved arguments + seed as a JSON object.
nlohmann::json provenance_json(const std::string& command, const nlohmann::json& fields);

}  // namespace pvrnn
