#include "pvrnn/plan.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace pvrnn {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt_fixed(double v, int digits = 2) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

void ensure_parent_dir(const std::string& path) {
    const fs::path parent = fs::path(path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
}

std::ofstream open_out(const std::string& path) {
    ensure_parent_dir(path);
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    return out;
}

double checkpoint_w1(const Checkpoint& ckpt) { return ckpt.model.layers[0].w; }

struct MeanStd {
    double mean = 0.0, sd = 0.0;
};

MeanStd mean_std(const std::vector<double>& values) {
    MeanStd ms;
    if (values.empty()) return ms;
    for (double v : values) ms.mean += v;
    ms.mean /= values.size();
    for (double v : values) ms.sd += (v - ms.mean) * (v - ms.mean);
    ms.sd = values.size() > 1 ? std::sqrt(ms.sd / (values.size() - 1)) : 0.0;
    return ms;
}

}  // namespace

json provenance_json(const std::string& command, const json& fields) {
    json p = fields;
    p["command"] = command;
    return p;
}

void cmd_gen_data(const GenDataArgs& args) {
    if (args.out.empty()) throw ConfigError("gen-data: --out is required");
    PfsmSpec spec{args.p_b};
    spec.validate();
    Rng rng(args.seed);
    auto samples = build_dataset(spec, args.n_samples, args.steps, rng);
    ensure_parent_dir(args.out);
    save_dataset_csv(args.out, samples,
                     provenance_json("gen-data", {{"seed", args.seed},
                                                  {"n_samples", args.n_samples},
                                                  {"steps", args.steps},
                                                  {"p_b", args.p_b}}));
}

void cmd_train(const TrainArgs& args) {
    if (args.data.empty() || args.out.empty())
        throw ConfigError("train: --data and --out are required");
    json data_prov;
    auto dataset = load_dataset_csv(args.data, &data_prov);

    ModelConfig mcfg = ModelConfig::defaults(args.w1, args.seed);
    TrainConfig tcfg;
    tcfg.epochs = args.epochs;
    tcfg.adam.learning_rate = args.learning_rate;
    tcfg.seed = args.seed;

    Trainer trainer(dataset, mcfg, tcfg);

    std::ofstream log;
    if (!args.log.empty()) {
        log = open_out(args.log);
        log << "epoch,total,accuracy";
        for (int l = 0; l < mcfg.num_layers(); ++l) log << ",e_z_l" << (l + 1);
        log << "\n";
    }
    trainer.run(args.epochs, [&](const EpochStats& s) {
        if (!log.is_open()) return;
        log << s.epoch << ',' << fmt(s.total) << ',' << fmt(s.accuracy);
        for (double ez : s.e_z) log << ',' << fmt(ez);
        log << "\n";
    });

    json prov = provenance_json("train", {{"seed", args.seed},
                                          {"w1", args.w1},
                                          {"epochs", args.epochs},
                                          {"learning_rate", args.learning_rate},
                                          {"data", args.data}});
    if (data_prov.is_object() && data_prov.contains("p_b"))
        prov["dataset"] = {{"p_b", data_prov["p_b"]}, {"seed", data_prov.value("seed", 0)}};
    ensure_parent_dir(args.out);
    save_checkpoint(args.out, trainer.to_checkpoint(prov.dump()));
}

void cmd_regen(const RegenArgs& args) {
    if (args.ckpt.empty() || args.out.empty())
        throw ConfigError("regen: --ckpt and --out are required");
    Checkpoint ckpt = load_checkpoint(args.ckpt);
    Rng rng(args.seed);
    auto seqs = prior_regeneration(ckpt, args.sample, args.repeats, args.horizon, rng);

    auto out = open_out(args.out);
    out << "# pvrnn-regen v1\n# "
        << provenance_json("regen", {{"seed", args.seed},
                                     {"ckpt", args.ckpt},
                                     {"sample", args.sample},
                                     {"repeats", args.repeats},
                                     {"horizon", args.horizon},
                                     {"w1", checkpoint_w1(ckpt)}})
               .dump()
        << "\nrepeat,t,pr0,pr1,pr2,pr3,pr4,pr5\n";
    for (size_t r = 0; r < seqs.size(); ++r)
        for (Eigen::Index t = 0; t < seqs[r].rows(); ++t) {
            out << r << ',' << (t + 1);
            for (int j = 0; j < 6; ++j) out << ',' << fmt(seqs[r](t, j));
            out << "\n";
        }
}

namespace {

json agent_summary_json(const AgentSummary& summary) {
    json j;
    auto bc_json = [](const std::optional<std::pair<double, double>>& bc) {
        if (!bc) return json(nullptr);
        return json{{"b", bc->first}, {"c", bc->second}};
    };
    j["bc_standalone"] = bc_json(summary.bc_standalone);
    j["bc_interaction"] = bc_json(summary.bc_interaction);
    j["mean_kl"] = summary.mean_kl;
    return j;
}

}  // namespace

void cmd_interact(const InteractArgs& args) {
    if (args.ckpt_a.empty() || args.ckpt_b.empty())
        throw ConfigError("interact: --ckpt-a and --ckpt-b are required");
    if (args.trace.empty() && args.summary.empty())
        throw ConfigError("interact: need --trace or --summary output");
    Checkpoint a = load_checkpoint(args.ckpt_a);
    Checkpoint b = load_checkpoint(args.ckpt_b);
    InteractionResult result = run_interaction(a, b, args.config);

    const json prov = provenance_json(
        "interact", {{"seed", args.config.seed},
                     {"ckpt_a", args.ckpt_a},
                     {"ckpt_b", args.ckpt_b},
                     {"steps", args.config.steps},
                     {"window", args.config.window},
                     {"inner_epochs", args.config.inner_epochs},
                     {"inference_lr", args.config.inference_lr},
                     {"bootstrap_sample", args.config.bootstrap_sample},
                     {"zero_init_new_step", args.config.zero_init_new_step},
                     {"deterministic_emission", args.config.deterministic_emission},
                     {"w1_a", checkpoint_w1(a)},
                     {"w1_b", checkpoint_w1(b)}});

    if (!args.trace.empty()) {
        auto out = open_out(args.trace);
        out << "# pvrnn-trace v1\n# " << prov.dump() << "\nt";
        const ModelConfig* cfgs[2] = {&a.model, &b.model};
        for (int i = 0; i < 2; ++i) {
            const std::string p = "a" + std::to_string(i) + "_";
            for (int j = 0; j < 6; ++j) out << ',' << p << "pr" << j;
            for (int j = 0; j < 4; ++j) out << ',' << p << "ex_obs" << j;
            for (int j = 0; j < 4; ++j) out << ',' << p << "ex_pred" << j;
            for (int l = 0; l < cfgs[i]->num_layers(); ++l)
                out << ',' << p << "kl_win_l" << (l + 1);
            for (int l = 0; l < cfgs[i]->num_layers(); ++l)
                out << ',' << p << "kl_cur_l" << (l + 1);
            out << ',' << p << "fe_pre," << p << "fe_post," << p << "label," << p
                << "confidence";
            for (int l = 0; l < cfgs[i]->num_layers(); ++l)
                for (int u = 0; u < cfgs[i]->layers[l].z_size; ++u)
                    out << ',' << p << "mu_p_l" << (l + 1) << "_u" << u;
            for (int l = 0; l < cfgs[i]->num_layers(); ++l)
                for (int u = 0; u < cfgs[i]->layers[l].z_size; ++u)
                    out << ',' << p << "mu_q_l" << (l + 1) << "_u" << u;
        }
        out << "\n";
        for (const auto& row : result.trace) {
            out << row.t;
            for (int i = 0; i < 2; ++i) {
                for (int j = 0; j < 6; ++j) out << ',' << fmt(row.proprio_deg[i](j));
                for (int j = 0; j < 4; ++j) out << ',' << fmt(row.extero_obs[i](j));
                for (int j = 0; j < 4; ++j) out << ',' << fmt(row.extero_pred[i](j));
                for (double v : row.kl_window[i]) out << ',' << fmt(v);
                for (double v : row.kl_current[i]) out << ',' << fmt(v);
                out << ',' << fmt(row.fe_pre[i]) << ',' << fmt(row.fe_post[i]) << ','
                    << label_char(row.label[i]) << ',' << fmt(row.confidence[i]);
                for (double v : row.mu_p[i]) out << ',' << fmt(v);
                for (double v : row.mu_q[i]) out << ',' << fmt(v);
            }
            out << "\n";
        }
    }

    if (!args.summary.empty()) {
        json j;
        j["provenance"] = prov;
        j["steps"] = result.steps;
        j["params_unchanged"] = result.params_unchanged;
        j["agents"] = json::array();
        const Checkpoint* ckpts[2] = {&a, &b};
        for (int i = 0; i < 2; ++i) {
            json aj = agent_summary_json(result.agents[i]);
            aj["w1"] = checkpoint_w1(*ckpts[i]);
            try {
                const json p = json::parse(ckpts[i]->provenance);
                if (p.contains("dataset")) aj["dataset"] = p["dataset"];
            } catch (const json::exception&) {
            }
            j["agents"].push_back(std::move(aj));
        }
        j["sync"] = result.sync ? json(*result.sync) : json(nullptr);
        j["sync_all"] = result.sync_all ? json(*result.sync_all) : json(nullptr);
        j["chance_nominal"] =
            result.chance_nominal ? json(*result.chance_nominal) : json(nullptr);
        j["chance_measured"] =
            result.chance_measured ? json(*result.chance_measured) : json(nullptr);
        auto out = open_out(args.summary);
        out << j.dump(2) << "\n";
    }
}

void cmd_analyze(const AnalyzeArgs& args) {
    if (args.out_dir.empty()) throw ConfigError("analyze: --out-dir is required");
    if (args.checkpoints.empty() && args.summaries.empty())
        throw ConfigError("analyze: nothing to analyze (pass --ckpt or --summary)");
    fs::create_directories(args.out_dir);
    const json prov = provenance_json(
        "analyze", {{"seed", args.seed},
                    {"sample", args.sample},
                    {"repeats", args.repeats},
                    {"horizon", args.horizon},
                    {"checkpoints", args.checkpoints},
                    {"summaries", args.summaries}});

    if (!args.checkpoints.empty()) {
        EsnModel esn = fit_default_esn(1);
        struct Row {
            double w1;
            RegenReport rep;
        };
        std::vector<Row> rows;
        auto regen_trace = open_out(args.out_dir + "/regen_trace.csv");
        regen_trace << "# pvrnn-regen-trace v1\n# " << prov.dump()
                    << "\nckpt,w1,repeat,t,label,confidence\n";
        for (const auto& path : args.checkpoints) {
            Checkpoint ckpt = load_checkpoint(path);
            Rng rng(mix_seed(args.seed, std::hash<std::string>{}(path)));
            auto seqs =
                prior_regeneration(ckpt, args.sample, args.repeats, args.horizon, rng);
            rows.push_back({checkpoint_w1(ckpt), regen_report(seqs, esn, rng)});
            for (size_t r = 0; r < seqs.size(); ++r) {
                ClassifiedSequence cls = esn.classify(seqs[r]);
                for (int t = 0; t < cls.size(); ++t)
                    regen_trace << path << ',' << fmt(checkpoint_w1(ckpt)) << ',' << r << ','
                                << (t + 1) << ',' << label_char(cls.labels[t]) << ','
                                << fmt(cls.confidence[t]) << "\n";
            }
        }

        // detail: one row per checkpoint
        {
            auto detail = open_out(args.out_dir + "/table2_detail.csv");
            detail << "# pvrnn-table2-detail v1\n# " << prov.dump()
                   << "\nw,occ_a,occ_b,occ_c,occ_not_classified,bc_b,bc_c,divergence_step\n";
            for (const auto& row : rows) {
                detail << fmt(row.w1) << ',' << fmt(row.rep.occupancy_a) << ','
                       << fmt(row.rep.occupancy_b) << ',' << fmt(row.rep.occupancy_c) << ','
                       << fmt(row.rep.occupancy_nc) << ','
                       << (row.rep.bc ? fmt(row.rep.bc->first) : "") << ','
                       << (row.rep.bc ? fmt(row.rep.bc->second) : "") << ','
                       << fmt(row.rep.divergence) << "\n";
            }
        }
        // aggregated: one row per w, six metric columns
        {
            std::map<double, std::vector<const Row*>> by_w;
            for (const auto& row : rows) by_w[row.w1].push_back(&row);
            auto table2 = open_out(args.out_dir + "/table2.csv");
            table2 << "# pvrnn-table2 v1\n# " << prov.dump()
                   << "\nw,occ_a,occ_b,occ_c,occ_not_classified,bc_b,divergence_step\n";
            for (const auto& [w1, group] : by_w) {
                std::vector<double> occ_a, occ_b, occ_c, occ_nc, bc_b, div;
                for (const Row* r : group) {
                    occ_a.push_back(r->rep.occupancy_a);
                    occ_b.push_back(r->rep.occupancy_b);
                    occ_c.push_back(r->rep.occupancy_c);
                    occ_nc.push_back(r->rep.occupancy_nc);
                    if (r->rep.bc) bc_b.push_back(r->rep.bc->first);
                    div.push_back(r->rep.divergence);
                }
                table2 << fmt(w1) << ',' << fmt_fixed(mean_std(occ_a).mean) << ','
                       << fmt_fixed(mean_std(occ_b).mean) << ','
                       << fmt_fixed(mean_std(occ_c).mean) << ','
                       << fmt_fixed(mean_std(occ_nc).mean) << ','
                       << (bc_b.empty() ? "" : fmt_fixed(mean_std(bc_b).mean)) << ','
                       << fmt_fixed(mean_std(div).mean, 1) << "\n";
            }
        }
    }

    if (!args.summaries.empty()) {
        struct Cell {
            std::vector<double> sa_b[2], ia_b[2], kl1[2], sync;
        };
        std::map<std::string, Cell> by_pairing;
        for (const auto& path : args.summaries) {
            std::ifstream in(path);
            if (!in) throw ConfigError("analyze: cannot read summary " + path);
            json j;
            try {
                in >> j;
            } catch (const json::exception& e) {
                throw ConfigError("analyze: malformed summary " + path + ": " + e.what());
            }
            const std::string key = fmt(j["agents"][0].value("w1", 0.0)) + "-vs-" +
                                    fmt(j["agents"][1].value("w1", 0.0));
            Cell& cell = by_pairing[key];
            for (int i = 0; i < 2; ++i) {
                const json& aj = j["agents"][i];
                if (!aj["bc_standalone"].is_null())
                    cell.sa_b[i].push_back(aj["bc_standalone"]["b"].get<double>());
                if (!aj["bc_interaction"].is_null())
                    cell.ia_b[i].push_back(aj["bc_interaction"]["b"].get<double>());
                if (aj.contains("mean_kl") && !aj["mean_kl"].empty())
                    cell.kl1[i].push_back(aj["mean_kl"][0].get<double>());
            }
            if (!j["sync"].is_null()) cell.sync.push_back(j["sync"].get<double>());
        }
        auto table3 = open_out(args.out_dir + "/table3.csv");
        table3 << "# pvrnn-table3 v1\n# " << prov.dump()
               << "\nexperiment,agent,bc_standalone_b,bc_standalone_c,bc_interaction_b,"
                  "bc_interaction_c,bc_interaction_b_std,mean_kl_l1,sync,sync_std\n";
        for (const auto& [key, cell] : by_pairing) {
            const MeanStd sync = mean_std(cell.sync);
            for (int i = 0; i < 2; ++i) {
                const MeanStd sa = mean_std(cell.sa_b[i]);
                const MeanStd ia = mean_std(cell.ia_b[i]);
                const MeanStd kl = mean_std(cell.kl1[i]);
                table3 << key << ',' << i << ',' << fmt_fixed(sa.mean) << ','
                       << fmt_fixed(100.0 - sa.mean) << ',' << fmt_fixed(ia.mean) << ','
                       << fmt_fixed(100.0 - ia.mean) << ',' << fmt_fixed(ia.sd) << ','
                       << fmt_fixed(kl.mean, 4) << ','
                       << (i == 0 ? fmt_fixed(sync.mean) : "") << ','
                       << (i == 0 ? fmt_fixed(sync.sd) : "") << "\n";
            }
        }
    }
}

void cmd_report(const std::string& run_dir, std::ostream& out, const std::string& out_file) {
    std::vector<std::string> missing;
    const fs::path dir(run_dir);
    if (!fs::exists(dir / "table2.csv")) missing.push_back("table2.csv");
    if (!fs::exists(dir / "table3.csv")) missing.push_back("table3.csv");
    bool any_summary = false;
    if (fs::exists(dir)) {
        for (const auto& entry : fs::recursive_directory_iterator(dir)) {
            if (entry.path().filename().string().find("summary") != std::string::npos &&
                entry.path().extension() == ".json")
                any_summary = true;
        }
    }
    if (!any_summary) missing.push_back("at least one interaction summary (*summary*.json)");
    if (!missing.empty()) {
        std::string msg = "report: missing artifacts in " + run_dir + ":";
        for (const auto& m : missing) msg += "\n  - " + m;
        throw ConfigError(msg);
    }

    std::ostringstream text;
    auto echo_csv = [&text](const fs::path& path, const std::string& title) {
        text << "== " << title << " (" << path.string() << ")\n";
        std::ifstream in(path);
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line[0] == '#') continue;
            text << "  " << line << "\n";
        }
        text << "\n";
    };
    text << "Run report for " << run_dir << "\n\n";
    echo_csv(dir / "table2.csv", "Prior-regeneration performance per meta-prior");
    echo_csv(dir / "table3.csv", "Dyadic interaction performance");

    text << "== Interaction summaries\n";
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (entry.path().filename().string().find("summary") == std::string::npos ||
            entry.path().extension() != ".json")
            continue;
        std::ifstream in(entry.path());
        json j;
        in >> j;
        text << "  " << entry.path().filename().string() << ": sync=";
        text << (j["sync"].is_null() ? "absent" : fmt_fixed(j["sync"].get<double>()));
        if (!j["chance_nominal"].is_null())
            text << " chance=" << fmt_fixed(j["chance_nominal"].get<double>() * 100.0);
        text << " kl_l1=(";
        for (int i = 0; i < 2; ++i) {
            if (i) text << ", ";
            text << fmt_fixed(j["agents"][i]["mean_kl"][0].get<double>(), 4);
        }
        text << ")\n";
    }

    out << text.str();
    if (!out_file.empty()) {
        auto f = open_out(out_file);
        f << text.str();
    }
}

// ---------------------------------------------------------------------------
// plan files

namespace {

const std::set<std::string> kStageNames = {"gen-data", "train",  "regen",
                                           "interact", "analyze", "report"};

// Fields each stage must carry in a plan file.
const std::map<std::string, std::vector<std::string>> kRequiredFields = {
    {"gen-data", {"out"}},          {"train", {"data", "out"}},
    {"regen", {"ckpt", "out"}},     {"interact", {"ckpt_a", "ckpt_b"}},
    {"analyze", {"out_dir"}},       {"report", {"run_dir"}},
};

std::vector<std::string> stage_inputs(const std::string& name, const json& cfg) {
    std::vector<std::string> in;
    if (name == "train") in.push_back(cfg.value("data", ""));
    if (name == "regen") in.push_back(cfg.value("ckpt", ""));
    if (name == "interact") {
        in.push_back(cfg.value("ckpt_a", ""));
        in.push_back(cfg.value("ckpt_b", ""));
    }
    if (name == "analyze") {
        for (const auto& p : cfg.value("checkpoints", std::vector<std::string>{}))
            in.push_back(p);
        for (const auto& p : cfg.value("summaries", std::vector<std::string>{}))
            in.push_back(p);
    }
    return in;
}

std::vector<std::string> stage_outputs(const std::string& name, const json& cfg) {
    std::vector<std::string> out;
    if (name == "gen-data" || name == "train" || name == "regen")
        out.push_back(cfg.value("out", ""));
    if (name == "train" && cfg.contains("log")) out.push_back(cfg.value("log", ""));
    if (name == "interact") {
        if (cfg.contains("trace")) out.push_back(cfg.value("trace", ""));
        if (cfg.contains("summary")) out.push_back(cfg.value("summary", ""));
    }
    if (name == "analyze") {
        const std::string dir = cfg.value("out_dir", "");
        if (!cfg.value("checkpoints", std::vector<std::string>{}).empty()) {
            out.push_back(dir + "/table2.csv");
            out.push_back(dir + "/table2_detail.csv");
            out.push_back(dir + "/regen_trace.csv");
        }
        if (!cfg.value("summaries", std::vector<std::string>{}).empty())
            out.push_back(dir + "/table3.csv");
    }
    if (name == "report" && cfg.contains("out")) out.push_back(cfg.value("out", ""));
    return out;
}

}  // namespace

ExperimentPlan ExperimentPlan::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read plan file: " + path);
    ExperimentPlan plan;
    plan.doc = std::make_shared<json>();
    try {
        in >> *plan.doc;
    } catch (const json::parse_error& e) {
        throw ConfigError("malformed plan file " + path + ": " + e.what());
    }
    plan.seed = plan.doc->value("seed", 1ULL);
    plan.out_dir = plan.doc->value("out_dir", ".");
    plan.validate();
    return plan;
}

void ExperimentPlan::validate() const {
    const json& doc = *this->doc;
    if (!doc.contains("stages") || !doc["stages"].is_array())
        throw ConfigError("plan: missing 'stages' array");
    std::set<std::string> produced;
    int index = 0;
    for (const auto& stage : doc["stages"]) {
        const std::string at = "plan stage #" + std::to_string(index++);
        if (!stage.contains("name"))
            throw ConfigError(at + ": missing field 'name'");
        const std::string name = stage["name"].get<std::string>();
        if (!kStageNames.count(name))
            throw ConfigError(at + ": unknown stage name '" + name + "'");
        for (const auto& field : kRequiredFields.at(name))
            if (!stage.contains(field))
                throw ConfigError(at + " (" + name + "): missing field '" + field + "'");
        for (const auto& input : stage_inputs(name, stage)) {
            if (input.empty()) continue;
            const std::string resolved = (fs::path(out_dir) / input).string();
            if (!produced.count(resolved) && !fs::exists(resolved) && !fs::exists(input))
                throw ConfigError(at + " (" + name + "): input path '" + input +
                                  "' is neither produced by an earlier stage nor present");
        }
        for (const auto& output : stage_outputs(name, stage))
            if (!output.empty()) produced.insert((fs::path(out_dir) / output).string());
    }
}

void ExperimentPlan::run(bool force, std::ostream& log) const {
    validate();
    fs::create_directories(out_dir);
    auto resolve = [this](const std::string& p) {
        if (p.empty()) return p;
        return (fs::path(out_dir) / p).string();
    };
    int index = 0;
    for (const auto& stage : (*doc)["stages"]) {
        const std::string name = stage["name"].get<std::string>();
        const std::string tag = "[" + std::to_string(++index) + "/" +
                                std::to_string((*doc)["stages"].size()) + "] " + name;
        auto outputs = stage_outputs(name, stage);
        bool complete = !outputs.empty();
        for (const auto& o : outputs)
            if (!fs::exists(resolve(o))) complete = false;
        if (complete && !force) {
            log << tag << ": outputs present, skipped\n";
            continue;
        }
        log << tag << ": running\n";
        const std::uint64_t stage_seed =
            stage.contains("seed") ? stage["seed"].get<std::uint64_t>()
                                   : mix_seed(seed, static_cast<std::uint64_t>(index));

        if (name == "gen-data") {
            GenDataArgs args;
            args.out = resolve(stage["out"]);
            args.n_samples = stage.value("n_samples", args.n_samples);
            args.steps = stage.value("steps", args.steps);
            args.p_b = stage.value("p_b", args.p_b);
            args.seed = stage_seed;
            cmd_gen_data(args);
        } else if (name == "train") {
            TrainArgs args;
            args.data = resolve(stage["data"]);
            args.out = resolve(stage["out"]);
            args.log = resolve(stage.value("log", ""));
            args.w1 = stage.value("w1", args.w1);
            args.epochs = stage.value("epochs", args.epochs);
            args.learning_rate = stage.value("learning_rate", args.learning_rate);
            args.seed = stage_seed;
            cmd_train(args);
        } else if (name == "regen") {
            RegenArgs args;
            args.ckpt = resolve(stage["ckpt"]);
            args.out = resolve(stage["out"]);
            args.sample = stage.value("sample", args.sample);
            args.repeats = stage.value("repeats", args.repeats);
            args.horizon = stage.value("horizon", args.horizon);
            args.seed = stage_seed;
            cmd_regen(args);
        } else if (name == "interact") {
            InteractArgs args;
            args.ckpt_a = resolve(stage["ckpt_a"]);
            args.ckpt_b = resolve(stage["ckpt_b"]);
            args.trace = resolve(stage.value("trace", ""));
            args.summary = resolve(stage.value("summary", ""));
            args.config.steps = stage.value("steps", args.config.steps);
            args.config.window = stage.value("window", args.config.window);
            args.config.inner_epochs = stage.value("inner_epochs", args.config.inner_epochs);
            args.config.inference_lr = stage.value("inference_lr", args.config.inference_lr);
            args.config.bootstrap_sample =
                stage.value("bootstrap_sample", args.config.bootstrap_sample);
            args.config.zero_init_new_step =
                stage.value("zero_init_new_step", args.config.zero_init_new_step);
            args.config.deterministic_emission =
                stage.value("deterministic_emission", args.config.deterministic_emission);
            args.config.seed = stage_seed;
            cmd_interact(args);
        } else if (name == "analyze") {
            AnalyzeArgs args;
            for (const auto& p : stage.value("checkpoints", std::vector<std::string>{}))
                args.checkpoints.push_back(resolve(p));
            for (const auto& p : stage.value("summaries", std::vector<std::string>{}))
                args.summaries.push_back(resolve(p));
            args.out_dir = resolve(stage["out_dir"]);
            args.sample = stage.value("sample", args.sample);
            args.repeats = stage.value("repeats", args.repeats);
            args.horizon = stage.value("horizon", args.horizon);
            args.seed = stage_seed;
            cmd_analyze(args);
        } else if (name == "report") {
            cmd_report(resolve(stage["run_dir"]), log, resolve(stage.value("out", "")));
        }
    }
}

}  // namespace pvrnn
