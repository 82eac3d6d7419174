#include "logtwin/pipeline.hpp"

#include <nlohmann/json.hpp>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>

namespace py = pybind11;

namespace {

logtwin::RunConfig config_from_text(const std::string& text) {
    nlohmann::json doc = nlohmann::json::object();
    if (!text.empty()) {
        try {
            doc = nlohmann::json::parse(text);
        } catch (const nlohmann::json::exception& e) {
            throw logtwin::ValidationError(std::string("config: ") + e.what());
        }
    }
    return logtwin::RunConfig::from_json(doc);
}

}  // namespace

PYBIND11_MODULE(logtwin, m) {
    m.doc() = "Non-contrastive representation learning for well-log intervals";

    py::register_exception<logtwin::ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<logtwin::NumericError>(m, "NumericError", PyExc_ArithmeticError);

    // numerics
    m.def("cosine_lr", &logtwin::cosine_lr, py::arg("epoch"), py::arg("eta0"), py::arg("t_max"),
          "Cosine annealing learning rate");
    m.def(
        "jitter",
        [](const logtwin::Matrix& x, double sigma, std::uint64_t seed) {
            logtwin::AugmentSpec spec;
            spec.kind = logtwin::AugmentKind::Jitter;
            spec.sigma_mode = logtwin::SigmaMode::Fixed;
            spec.jitter_sigma = sigma;
            logtwin::Rng rng(seed);
            return logtwin::jitter(x, spec, rng);
        },
        py::arg("x"), py::arg("sigma") = 0.03, py::arg("seed") = 0,
        "Additive Gaussian noise per cell");
    m.def(
        "window_slice",
        [](const logtwin::Matrix& x, int w, std::uint64_t seed) {
            logtwin::Rng rng(seed);
            return logtwin::window_slice(x, w, rng);
        },
        py::arg("x"), py::arg("w"), py::arg("seed") = 0,
        "Random crop of w rows resampled back to the input length");
    m.def("window_slice_at", &logtwin::window_slice_at, py::arg("x"), py::arg("w"), py::arg("s"),
          "Crop starting at row s, resampled back to the input length");

    // losses
    m.def(
        "byol_loss",
        [](const logtwin::Matrix& q, const logtwin::Matrix& z) {
            return logtwin::byol_loss(q, z);
        },
        py::arg("q"), py::arg("z"), "Mean normalized-MSE over rows");
    m.def("cross_correlation", &logtwin::cross_correlation, py::arg("za"), py::arg("zb"),
          py::arg("eps_std") = 1e-9);
    m.def("barlow_twins_loss", &logtwin::barlow_twins_loss, py::arg("c"),
          py::arg("lambda_") = 5e-3);

    // evaluation
    m.def("agglomerative_cluster", &logtwin::agglomerative_cluster, py::arg("points"),
          py::arg("k"), "Ward-linkage clustering to k clusters");
    m.def("ari", &logtwin::ari, py::arg("a"), py::arg("b"));
    m.def("purity", &logtwin::purity, py::arg("pred"), py::arg("truth"));
    m.def("pairwise_f_score", &logtwin::pairwise_f_score, py::arg("pred"), py::arg("truth"));

    // pipeline stages; config is a JSON string ("" = defaults)
    m.def(
        "synth",
        [](const std::string& config, const std::string& out_csv) {
            logtwin::run_synth(config_from_text(config), out_csv);
        },
        py::arg("config"), py::arg("out_csv"));
    m.def(
        "preprocess",
        [](const std::string& config, const std::string& in_csv, const std::string& out_csv) {
            logtwin::run_preprocess(config_from_text(config), in_csv, out_csv);
        },
        py::arg("config"), py::arg("in_csv"), py::arg("out_csv"));
    m.def(
        "train",
        [](const std::string& config, const std::string& intervals_csv,
           const std::string& checkpoint, const std::string& history) {
            const logtwin::TrainResult result =
                logtwin::run_train(config_from_text(config), intervals_csv, checkpoint, history);
            py::dict out;
            out["best_epoch"] = result.best_epoch;
            out["epochs_run"] = result.history.size();
            out["final_train_loss"] = result.history.back().train_loss;
            out["best_val_loss"] =
                result.history[static_cast<std::size_t>(result.best_epoch - 1)].val_loss;
            return out;
        },
        py::arg("config"), py::arg("intervals_csv"), py::arg("checkpoint"), py::arg("history"));
    m.def(
        "embed",
        [](const std::string& config, const std::string& checkpoint,
           const std::string& intervals_csv, const std::string& out_csv) {
            logtwin::run_embed(config_from_text(config), checkpoint, intervals_csv, out_csv);
        },
        py::arg("config"), py::arg("checkpoint"), py::arg("intervals_csv"), py::arg("out_csv"));
    m.def(
        "eval_cluster",
        [](const std::string& config, const std::string& embeddings_csv,
           const std::string& metrics_csv, const std::string& assignments_csv) {
            logtwin::run_eval_cluster(config_from_text(config), embeddings_csv, metrics_csv,
                                      assignments_csv);
        },
        py::arg("config"), py::arg("embeddings_csv"), py::arg("metrics_csv"),
        py::arg("assignments_csv"));
    m.def(
        "eval_probe",
        [](const std::string& config, const std::string& embeddings_csv,
           const std::string& metrics_csv) {
            logtwin::run_eval_probe(config_from_text(config), embeddings_csv, metrics_csv);
        },
        py::arg("config"), py::arg("embeddings_csv"), py::arg("metrics_csv"));
}
