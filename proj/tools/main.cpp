// Command-line front end: data generation, training, prior regeneration,
// dyadic interaction, analysis tables, consolidated reports and plan runs.
#include <CLI11.hpp>

#include <iostream>

#include "pvrnn/plan.hpp"

using namespace pvrnn;

int main(int argc, char** argv) {
    CLI::App app{"Meta-prior-regulated variational RNN experiments"};
    app.require_subcommand(1);

    GenDataArgs gen;
    auto* gen_cmd = app.add_subcommand("gen-data", "Generate a primitive-sequence dataset");
    gen_cmd->add_option("--out", gen.out, "Output dataset CSV")->required();
    gen_cmd->add_option("--n-samples", gen.n_samples, "Number of sequences");
    gen_cmd->add_option("--steps", gen.steps, "Steps per sequence");
    gen_cmd->add_option("--p-b", gen.p_b, "Probability of B after A");
    gen_cmd->add_option("--seed", gen.seed, "RNG seed");

    TrainArgs train;
    auto* train_cmd = app.add_subcommand("train", "Train a network on a dataset");
    train_cmd->add_option("--data", train.data, "Dataset CSV")->required();
    train_cmd->add_option("--out", train.out, "Output checkpoint")->required();
    train_cmd->add_option("--log", train.log, "Per-epoch progress CSV");
    train_cmd->add_option("--w", train.w1, "Layer-1 meta-prior (layers 2-3 scale x10/x100)");
    train_cmd->add_option("--epochs", train.epochs, "Training epochs");
    train_cmd->add_option("--lr", train.learning_rate, "Adam learning rate");
    train_cmd->add_option("--seed", train.seed, "RNG seed");

    RegenArgs regen;
    auto* regen_cmd =
        app.add_subcommand("regen", "Regenerate sequences from the learned prior");
    regen_cmd->add_option("--ckpt", regen.ckpt, "Checkpoint")->required();
    regen_cmd->add_option("--out", regen.out, "Output CSV")->required();
    regen_cmd->add_option("--sample", regen.sample, "Training sample whose A seeds t=1..2");
    regen_cmd->add_option("--repeats", regen.repeats, "Generated sequences");
    regen_cmd->add_option("--horizon", regen.horizon, "Sequence length");
    regen_cmd->add_option("--seed", regen.seed, "RNG seed");

    InteractArgs interact;
    auto* interact_cmd = app.add_subcommand("interact", "Run a dyadic interaction");
    interact_cmd->add_option("--ckpt-a", interact.ckpt_a, "First agent checkpoint")
        ->required();
    interact_cmd->add_option("--ckpt-b", interact.ckpt_b, "Second agent checkpoint")
        ->required();
    interact_cmd->add_option("--trace", interact.trace, "Per-step trace CSV");
    interact_cmd->add_option("--summary", interact.summary, "Summary JSON");
    interact_cmd->add_option("--steps", interact.config.steps, "Interaction steps");
    interact_cmd->add_option("--window", interact.config.window, "Inference window");
    interact_cmd->add_option("--inner-epochs", interact.config.inner_epochs,
                             "Adaptation epochs per step");
    interact_cmd->add_option("--lr", interact.config.inference_lr,
                             "Adam learning rate for the adaptation variables");
    interact_cmd->add_option("--sample", interact.config.bootstrap_sample,
                             "Stored-A sample for the first two steps");
    interact_cmd->add_flag("--zero-init-new-step", interact.config.zero_init_new_step,
                           "Initialize new-step posteriors at N(0, I)");
    interact_cmd->add_flag("--deterministic-emission",
                           interact.config.deterministic_emission,
                           "Emit the prior mean instead of a sample");
    interact_cmd->add_option("--seed", interact.config.seed, "RNG seed");

    AnalyzeArgs analyze;
    auto* analyze_cmd =
        app.add_subcommand("analyze", "Tables from checkpoints and interaction summaries");
    analyze_cmd->add_option("--ckpt", analyze.checkpoints,
                            "Checkpoints for regeneration analysis");
    analyze_cmd->add_option("--summary", analyze.summaries, "Interaction summary JSONs");
    analyze_cmd->add_option("--out-dir", analyze.out_dir, "Output directory")->required();
    analyze_cmd->add_option("--sample", analyze.sample, "Stored-A sample index");
    analyze_cmd->add_option("--repeats", analyze.repeats, "Regenerations per checkpoint");
    analyze_cmd->add_option("--horizon", analyze.horizon, "Regeneration length");
    analyze_cmd->add_option("--seed", analyze.seed, "RNG seed");

    std::string report_dir, report_out;
    auto* report_cmd = app.add_subcommand("report", "Consolidated report over a run directory");
    report_cmd->add_option("--run-dir", report_dir, "Run directory")->required();
    report_cmd->add_option("--out", report_out, "Also write the report here");

    std::string plan_path;
    bool plan_force = false;
    auto* plan_cmd = app.add_subcommand("run-plan", "Execute a staged experiment plan");
    plan_cmd->add_option("--plan", plan_path, "Plan JSON")->required();
    plan_cmd->add_flag("--force", plan_force, "Re-run stages whose outputs exist");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen_cmd) cmd_gen_data(gen);
        if (*train_cmd) cmd_train(train);
        if (*regen_cmd) cmd_regen(regen);
        if (*interact_cmd) cmd_interact(interact);
        if (*analyze_cmd) cmd_analyze(analyze);
        if (*report_cmd) cmd_report(report_dir, std::cout, report_out);
        if (*plan_cmd) ExperimentPlan::load(plan_path).run(plan_force, std::cout);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
