#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "pvrnn/analysis.hpp"
#include "pvrnn/interaction.hpp"
#include "pvrnn/plan.hpp"
#include "pvrnn/training.hpp"

namespace py = pybind11;
using namespace pvrnn;

namespace {

std::string labels_to_string(const std::vector<PrimitiveLabel>& labels) {
    std::string out;
    out.reserve(labels.size());
    for (auto l : labels) out.push_back(label_char(l));
    return out;
}

ClassifiedSequence classified_from_string(const std::string& labels) {
    ClassifiedSequence seq;
    for (char c : labels) {
        seq.labels.push_back(label_from_char(c));
        seq.confidence.push_back(1.0);
    }
    return seq;
}

py::dict sample_to_dict(const SequenceSample& s) {
    py::dict d;
    d["proprio_deg"] = s.proprio_deg;
    d["extero"] = s.extero;
    d["labels"] = labels_to_string(s.labels);
    return d;
}

py::dict summary_to_dict(const InteractionResult& result) {
    py::dict d;
    py::list agents;
    for (const auto& a : result.agents) {
        py::dict aj;
        if (a.bc_standalone)
            aj["bc_standalone"] = py::make_tuple(a.bc_standalone->first, a.bc_standalone->second);
        else
            aj["bc_standalone"] = py::none();
        if (a.bc_interaction)
            aj["bc_interaction"] =
                py::make_tuple(a.bc_interaction->first, a.bc_interaction->second);
        else
            aj["bc_interaction"] = py::none();
        aj["mean_kl"] = a.mean_kl;
        aj["labels"] = labels_to_string(a.classified.labels);
        agents.append(aj);
    }
    d["agents"] = agents;
    d["sync"] = result.sync ? py::object(py::float_(*result.sync)) : py::none();
    d["sync_all"] = result.sync_all ? py::object(py::float_(*result.sync_all)) : py::none();
    d["chance_nominal"] =
        result.chance_nominal ? py::object(py::float_(*result.chance_nominal)) : py::none();
    d["chance_measured"] =
        result.chance_measured ? py::object(py::float_(*result.chance_measured)) : py::none();
    d["params_unchanged"] = result.params_unchanged;
    d["steps"] = result.steps;
    return d;
}

// Trainer plus the dataset it owns, constructed from generator settings.
class PyTrainer {
public:
    PyTrainer(double p_b, int n_samples, int steps, double w1, std::uint64_t seed,
              double learning_rate, double observation_std) {
        Rng rng(seed);
        dataset_ = build_dataset(PfsmSpec{p_b}, n_samples, steps, rng);
        ModelConfig mcfg = ModelConfig::defaults(w1, seed);
        mcfg.observation_std = observation_std;
        TrainConfig tcfg;
        tcfg.seed = seed;
        tcfg.adam.learning_rate = learning_rate;
        trainer_ = std::make_unique<Trainer>(dataset_, mcfg, tcfg);
        p_b_ = p_b;
    }

    py::dict train_epoch() {
        EpochStats s = trainer_->train_epoch();
        py::dict d;
        d["epoch"] = s.epoch;
        d["total"] = s.total;
        d["accuracy"] = s.accuracy;
        d["e_z"] = s.e_z;
        return d;
    }

    void run(int epochs) { trainer_->run(epochs); }

    void save(const std::string& path) {
        nlohmann::json prov = {{"command", "python-train"},
                               {"dataset", {{"p_b", p_b_}}}};
        save_checkpoint(path, trainer_->to_checkpoint(prov.dump()));
    }

    long epoch() const { return trainer_->epoch(); }

private:
    std::vector<SequenceSample> dataset_;
    std::unique_ptr<Trainer> trainer_;
    double p_b_ = 0.0;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Meta-prior-regulated variational RNN: core operations";

    // dataset channel
    m.def(
        "make_primitive",
        [](const std::string& label) {
            return make_primitive(label_from_char(label.at(0))).joints;
        },
        py::arg("label"), "Joint trajectory (degrees) of one movement primitive");
    m.def("forward_kinematics", &forward_kinematics, py::arg("joints_deg"));
    m.def("mirror", &mirror, py::arg("extero"));
    m.def(
        "sample_pfsm",
        [](double p_b, int n, std::uint64_t seed) {
            Rng rng(seed);
            return labels_to_string(sample_pfsm(PfsmSpec{p_b}, n, rng));
        },
        py::arg("p_b"), py::arg("n_primitives"), py::arg("seed"));
    m.def(
        "build_dataset",
        [](double p_b, int n_samples, int steps, std::uint64_t seed) {
            Rng rng(seed);
            py::list out;
            for (const auto& s : build_dataset(PfsmSpec{p_b}, n_samples, steps, rng))
                out.append(sample_to_dict(s));
            return out;
        },
        py::arg("p_b"), py::arg("n_samples"), py::arg("steps"), py::arg("seed"));

    // core math
    m.def(
        "kl_gauss",
        [](const Eigen::VectorXd& mu_q, const Eigen::VectorXd& sd_q,
           const Eigen::VectorXd& mu_p, const Eigen::VectorXd& sd_p) {
            Gaussian q{mu_q, sd_q}, p{mu_p, sd_p};
            return kl_gauss(q, p);
        },
        py::arg("mean_q"), py::arg("stddev_q"), py::arg("mean_p"), py::arg("stddev_p"));
    m.def(
        "free_energy_rollout",
        [](double w1, std::uint64_t seed, int steps, int batch) {
            ModelConfig cfg = ModelConfig::defaults(w1, seed);
            Network net(cfg, NetworkParams::init(cfg, seed));
            AdaptationSequence a = AdaptationSequence::zeros(cfg, steps, batch);
            Rng rng(seed);
            Rollout r = net.rollout_posterior(a, StateBatch::zeros(cfg, batch), rng);
            std::vector<Eigen::MatrixXd> targets(
                steps, Eigen::MatrixXd::Zero(cfg.output_dim, batch));
            FreeEnergyReport rep = net.free_energy(r, targets, net.full_mask());
            py::dict d;
            d["total"] = rep.total;
            d["accuracy"] = rep.accuracy;
            d["complexity_weighted"] = rep.complexity_weighted;
            d["e_z_mean"] = rep.e_z_mean;
            return d;
        },
        py::arg("w1"), py::arg("seed"), py::arg("steps") = 20, py::arg("batch") = 1,
        "Posterior rollout of a fresh network against zero targets");

    // training and persistence
    py::class_<PyTrainer>(m, "Trainer")
        .def(py::init<double, int, int, double, std::uint64_t, double, double>(),
             py::arg("p_b"), py::arg("n_samples"), py::arg("steps"), py::arg("w1"),
             py::arg("seed"), py::arg("learning_rate") = 0.001,
             py::arg("observation_std") = 0.05)
        .def("train_epoch", &PyTrainer::train_epoch)
        .def("run", &PyTrainer::run, py::arg("epochs"))
        .def("save", &PyTrainer::save, py::arg("path"))
        .def_property_readonly("epoch", &PyTrainer::epoch);

    // analysis
    m.def(
        "prior_regeneration",
        [](const std::string& ckpt_path, int sample, int repeats, int horizon,
           std::uint64_t seed) {
            Checkpoint ckpt = load_checkpoint(ckpt_path);
            Rng rng(seed);
            return prior_regeneration(ckpt, sample, repeats, horizon, rng);
        },
        py::arg("checkpoint"), py::arg("sample") = 0, py::arg("repeats") = 20,
        py::arg("horizon") = 400, py::arg("seed") = 1);
    m.def(
        "classify",
        [](const Eigen::MatrixXd& proprio_deg, std::uint64_t esn_seed) {
            EsnModel esn = fit_default_esn(esn_seed);
            ClassifiedSequence cls = esn.classify(proprio_deg);
            return py::make_tuple(labels_to_string(cls.labels), cls.confidence);
        },
        py::arg("proprio_deg"), py::arg("esn_seed") = 1);
    m.def(
        "bc_ratio",
        [](const std::string& labels) -> py::object {
            auto bc = bc_ratio(classified_from_string(labels));
            if (!bc) return py::none();
            return py::make_tuple(bc->first, bc->second);
        },
        py::arg("labels"));
    m.def(
        "divergence_step",
        [](const std::vector<Eigen::MatrixXd>& sequences, std::uint64_t seed,
           double threshold) {
            Rng rng(seed);
            return divergence_step(sequences, rng, threshold);
        },
        py::arg("sequences_deg"), py::arg("seed") = 1, py::arg("threshold") = 55.0);
    m.def(
        "sync_rate",
        [](const std::string& a, const std::string& b, bool include_aa) -> py::object {
            auto rate =
                sync_rate(classified_from_string(a), classified_from_string(b), include_aa);
            if (!rate) return py::none();
            return py::float_(*rate);
        },
        py::arg("labels_a"), py::arg("labels_b"), py::arg("include_aa") = false);
    m.def("chance_rate", &chance_rate, py::arg("p_b1"), py::arg("p_c1"), py::arg("p_b2"),
          py::arg("p_c2"));

    // interaction
    m.def(
        "run_interaction",
        [](const std::string& ckpt_a, const std::string& ckpt_b, int steps, int window,
           int inner_epochs, double lr, std::uint64_t seed) {
            InteractionConfig cfg;
            cfg.steps = steps;
            cfg.window = window;
            cfg.inner_epochs = inner_epochs;
            cfg.inference_lr = lr;
            cfg.seed = seed;
            return summary_to_dict(
                run_interaction(load_checkpoint(ckpt_a), load_checkpoint(ckpt_b), cfg));
        },
        py::arg("ckpt_a"), py::arg("ckpt_b"), py::arg("steps") = 30, py::arg("window") = 10,
        py::arg("inner_epochs") = 20, py::arg("lr") = 0.01, py::arg("seed") = 1);
}
