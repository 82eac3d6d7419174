#pragma once

#include "logtwin/common.hpp"
#include "logtwin/ssl.hpp"
#include "logtwin/synth.hpp"

#include <nlohmann/json_fwd.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace logtwin {

/// Whole-run configuration: sections data / synth / augment / encoder /
/// optim / ssl / eval, a global seed, and optional default paths. Unknown
/// keys are rejected with their dotted path.
struct RunConfig {
    std::uint64_t seed = 7;

    // data
    int interval_length = 100;
    int stride = 100;

    SynthConfig synth;  // synth.seed mirrors the global seed unless set

    // augment overrides on top of the method defaults
    std::optional<std::string> augment_kind;   // "jitter" | "window-slice"
    std::optional<int> window_size;
    std::optional<double> jitter_sigma;
    std::optional<std::string> sigma_mode;     // "fixed" | "per-feature" | "per-batch"

    // encoder
    int hidden_size = 64;
    std::optional<int> projector_hidden;
    std::optional<int> projector_out;
    std::optional<int> predictor_hidden;
    std::optional<int> predictor_out;

    // optim
    LARSConfig lars;
    double ema_momentum = 0.99;
    int cosine_t_max = 10;

    // ssl
    std::string method_name = "barlow-twins";
    std::optional<int> batch_size;
    double lambda = 5e-3;
    double eps_std = 1e-9;
    int max_epochs = 100;
    int patience = 10;
    double val_fraction = 0.1;
    double gradient_scale = 1.0;

    // eval
    int n_clusters = 0;  // 0 = number of distinct ground-truth classes
    int n_pairs = 2000;
    double holdout_fraction = 0.25;
    std::vector<std::uint64_t> eval_seeds = {0, 1, 2};
    std::vector<std::string> probes = {"linear", "fc3"};
    std::vector<std::string> tasks = {"geo", "well", "binary"};

    std::map<std::string, std::string> paths;

    Method method() const;
    TrainConfig to_train_config() const;
    SynthConfig synth_config() const;

    nlohmann::json to_json() const;
    static RunConfig from_json(const nlohmann::json& doc);

    /// Loads a JSON config file (or defaults when path is empty), applies
    /// `--set key.path=value` overrides, validates everything.
    static RunConfig load(const std::string& path, const std::vector<std::string>& overrides);

    void save_snapshot(const std::string& path) const;
};

}  // namespace logtwin
