#include "logtwin/config.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace logtwin {

using nlohmann::json;

namespace {

[[noreturn]] void bad_key(const std::string& path) {
    throw ValidationError("config: unknown key '" + path + "'");
}

void check_keys(const json& obj, const std::string& prefix, const std::set<std::string>& known) {
    if (!obj.is_object()) {
        throw ValidationError("config: '" + (prefix.empty() ? "<root>" : prefix) +
                              "' must be an object");
    }
    for (const auto& [key, value] : obj.items()) {
        if (!known.count(key)) {
            bad_key(prefix.empty() ? key : prefix + "." + key);
        }
    }
}

template <typename T>
void read_field(const json& obj, const std::string& prefix, const std::string& key, T& out) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ValidationError("config: bad value type at '" +
                              (prefix.empty() ? key : prefix + "." + key) + "'");
    }
}

template <typename T>
void read_field(const json& obj, const std::string& prefix, const std::string& key,
                std::optional<T>& out) {
    if (!obj.contains(key)) return;
    T value{};
    read_field(obj, prefix, key, value);
    out = value;
}

AugmentKind parse_kind(const std::string& s) {
    if (s == "jitter") return AugmentKind::Jitter;
    if (s == "window-slice") return AugmentKind::WindowSlice;
    throw ValidationError("config: augment.kind must be 'jitter' or 'window-slice', got '" + s +
                          "'");
}

SigmaMode parse_sigma_mode(const std::string& s) {
    if (s == "fixed") return SigmaMode::Fixed;
    if (s == "per-feature") return SigmaMode::PerFeatureStd;
    if (s == "per-batch") return SigmaMode::PerBatchStd;
    throw ValidationError(
        "config: augment.sigma_mode must be 'fixed', 'per-feature' or 'per-batch', got '" + s +
        "'");
}

}  // namespace

Method RunConfig::method() const {
    if (method_name == "byol") return Method::Byol;
    if (method_name == "barlow-twins") return Method::BarlowTwins;
    throw ValidationError("config: ssl.method must be 'byol' or 'barlow-twins', got '" +
                          method_name + "'");
}

SynthConfig RunConfig::synth_config() const {
    SynthConfig cfg = synth;
    cfg.seed = seed;
    return cfg;
}

TrainConfig RunConfig::to_train_config() const {
    const Method m = method();
    TrainConfig cfg = TrainConfig::defaults(m);
    cfg.seed = seed;
    cfg.interval_length = interval_length;

    cfg.dims.hidden = hidden_size;
    if (projector_hidden) cfg.dims.proj_hidden = *projector_hidden;
    if (projector_out) cfg.dims.proj_out = *projector_out;
    if (predictor_hidden) cfg.dims.pred_hidden = *predictor_hidden;
    if (predictor_out) cfg.dims.pred_out = *predictor_out;

    if (augment_kind) {
        const AugmentKind kind = parse_kind(*augment_kind);
        cfg.views.first.kind = kind;
        cfg.views.second.kind = kind;
    }
    auto apply_spec = [&](AugmentSpec& spec) {
        if (spec.kind == AugmentKind::WindowSlice) {
            if (window_size) spec.window_size = *window_size;
        } else {
            if (jitter_sigma) spec.jitter_sigma = *jitter_sigma;
            if (sigma_mode) spec.sigma_mode = parse_sigma_mode(*sigma_mode);
        }
    };
    apply_spec(cfg.views.first);
    apply_spec(cfg.views.second);

    cfg.lars = lars;
    cfg.ema.momentum = ema_momentum;
    cfg.cosine_t_max = cosine_t_max;
    cfg.bt.lambda = lambda;
    cfg.bt.eps_std = eps_std;
    if (batch_size) cfg.batch_size = *batch_size;
    cfg.max_epochs = max_epochs;
    cfg.patience = patience;
    cfg.val_fraction = val_fraction;
    cfg.gradient_scale = gradient_scale;
    return cfg;
}

RunConfig RunConfig::from_json(const json& doc) {
    RunConfig cfg;
    check_keys(doc, "", {"seed", "data", "synth", "augment", "encoder", "optim", "ssl", "eval",
                         "paths"});
    read_field(doc, "", "seed", cfg.seed);

    if (doc.contains("data")) {
        const json& d = doc.at("data");
        check_keys(d, "data", {"interval_length", "stride"});
        read_field(d, "data", "interval_length", cfg.interval_length);
        read_field(d, "data", "stride", cfg.stride);
    }
    if (doc.contains("synth")) {
        const json& d = doc.at("synth");
        check_keys(d, "synth",
                   {"n_wells", "samples_per_well", "n_regimes", "regime_separation",
                    "missing_rate", "sensor_error_rate"});
        read_field(d, "synth", "n_wells", cfg.synth.n_wells);
        read_field(d, "synth", "samples_per_well", cfg.synth.samples_per_well);
        read_field(d, "synth", "n_regimes", cfg.synth.n_regimes);
        read_field(d, "synth", "regime_separation", cfg.synth.regime_separation);
        read_field(d, "synth", "missing_rate", cfg.synth.missing_rate);
        read_field(d, "synth", "sensor_error_rate", cfg.synth.sensor_error_rate);
    }
    if (doc.contains("augment")) {
        const json& d = doc.at("augment");
        check_keys(d, "augment", {"kind", "window_size", "jitter_sigma", "sigma_mode"});
        read_field(d, "augment", "kind", cfg.augment_kind);
        read_field(d, "augment", "window_size", cfg.window_size);
        read_field(d, "augment", "jitter_sigma", cfg.jitter_sigma);
        read_field(d, "augment", "sigma_mode", cfg.sigma_mode);
        if (cfg.augment_kind) parse_kind(*cfg.augment_kind);
        if (cfg.sigma_mode) parse_sigma_mode(*cfg.sigma_mode);
    }
    if (doc.contains("encoder")) {
        const json& d = doc.at("encoder");
        check_keys(d, "encoder",
                   {"hidden_size", "projector_hidden", "projector_out", "predictor_hidden",
                    "predictor_out"});
        read_field(d, "encoder", "hidden_size", cfg.hidden_size);
        read_field(d, "encoder", "projector_hidden", cfg.projector_hidden);
        read_field(d, "encoder", "projector_out", cfg.projector_out);
        read_field(d, "encoder", "predictor_hidden", cfg.predictor_hidden);
        read_field(d, "encoder", "predictor_out", cfg.predictor_out);
    }
    if (doc.contains("optim")) {
        const json& d = doc.at("optim");
        check_keys(d, "optim",
                   {"base_lr", "trust_coefficient", "momentum", "weight_decay",
                    "exclude_bias_from_adaptation", "ema_momentum", "cosine_t_max"});
        read_field(d, "optim", "base_lr", cfg.lars.base_lr);
        read_field(d, "optim", "trust_coefficient", cfg.lars.trust_coefficient);
        read_field(d, "optim", "momentum", cfg.lars.momentum);
        read_field(d, "optim", "weight_decay", cfg.lars.weight_decay);
        read_field(d, "optim", "exclude_bias_from_adaptation",
                   cfg.lars.exclude_bias_from_adaptation);
        read_field(d, "optim", "ema_momentum", cfg.ema_momentum);
        read_field(d, "optim", "cosine_t_max", cfg.cosine_t_max);
    }
    if (doc.contains("ssl")) {
        const json& d = doc.at("ssl");
        check_keys(d, "ssl",
                   {"method", "batch_size", "lambda", "eps_std", "max_epochs", "patience",
                    "val_fraction", "gradient_scale"});
        read_field(d, "ssl", "method", cfg.method_name);
        read_field(d, "ssl", "batch_size", cfg.batch_size);
        read_field(d, "ssl", "lambda", cfg.lambda);
        read_field(d, "ssl", "eps_std", cfg.eps_std);
        read_field(d, "ssl", "max_epochs", cfg.max_epochs);
        read_field(d, "ssl", "patience", cfg.patience);
        read_field(d, "ssl", "val_fraction", cfg.val_fraction);
        read_field(d, "ssl", "gradient_scale", cfg.gradient_scale);
    }
    if (doc.contains("eval")) {
        const json& d = doc.at("eval");
        check_keys(d, "eval",
                   {"n_clusters", "n_pairs", "holdout_fraction", "seeds", "probes", "tasks"});
        read_field(d, "eval", "n_clusters", cfg.n_clusters);
        read_field(d, "eval", "n_pairs", cfg.n_pairs);
        read_field(d, "eval", "holdout_fraction", cfg.holdout_fraction);
        read_field(d, "eval", "seeds", cfg.eval_seeds);
        read_field(d, "eval", "probes", cfg.probes);
        read_field(d, "eval", "tasks", cfg.tasks);
    }
    if (doc.contains("paths")) {
        const json& d = doc.at("paths");
        check_keys(d, "paths",
                   {"dataset", "intervals", "checkpoint", "history", "embeddings", "metrics",
                    "assignments"});
        for (const auto& [key, value] : d.items()) {
            if (!value.is_string()) {
                throw ValidationError("config: bad value type at 'paths." + key + "'");
            }
            cfg.paths[key] = value.get<std::string>();
        }
    }

    cfg.method();  // validates the method name
    cfg.synth_config().validate();
    cfg.to_train_config().validate();
    if (cfg.stride < 1) throw ValidationError("config: data.stride must be >= 1");
    if (cfg.n_clusters < 0) throw ValidationError("config: eval.n_clusters must be >= 0");
    if (cfg.n_pairs < 2) throw ValidationError("config: eval.n_pairs must be >= 2");
    if (cfg.holdout_fraction <= 0.0 || cfg.holdout_fraction >= 1.0) {
        throw ValidationError("config: eval.holdout_fraction must be in (0, 1)");
    }
    if (cfg.eval_seeds.empty()) throw ValidationError("config: eval.seeds must be non-empty");
    for (const std::string& p : cfg.probes) {
        if (p != "linear" && p != "fc3") {
            throw ValidationError("config: eval.probes entries must be 'linear' or 'fc3'");
        }
    }
    for (const std::string& t : cfg.tasks) {
        if (t != "geo" && t != "well" && t != "binary") {
            throw ValidationError("config: eval.tasks entries must be 'geo', 'well' or 'binary'");
        }
    }
    return cfg;
}

json RunConfig::to_json() const {
    json doc;
    doc["seed"] = seed;
    doc["data"] = {{"interval_length", interval_length}, {"stride", stride}};
    doc["synth"] = {{"n_wells", synth.n_wells},
                    {"samples_per_well", synth.samples_per_well},
                    {"n_regimes", synth.n_regimes},
                    {"regime_separation", synth.regime_separation},
                    {"missing_rate", synth.missing_rate},
                    {"sensor_error_rate", synth.sensor_error_rate}};
    json augment = json::object();
    if (augment_kind) augment["kind"] = *augment_kind;
    if (window_size) augment["window_size"] = *window_size;
    if (jitter_sigma) augment["jitter_sigma"] = *jitter_sigma;
    if (sigma_mode) augment["sigma_mode"] = *sigma_mode;
    doc["augment"] = augment;
    json encoder = {{"hidden_size", hidden_size}};
    if (projector_hidden) encoder["projector_hidden"] = *projector_hidden;
    if (projector_out) encoder["projector_out"] = *projector_out;
    if (predictor_hidden) encoder["predictor_hidden"] = *predictor_hidden;
    if (predictor_out) encoder["predictor_out"] = *predictor_out;
    doc["encoder"] = encoder;
    doc["optim"] = {{"base_lr", lars.base_lr},
                    {"trust_coefficient", lars.trust_coefficient},
                    {"momentum", lars.momentum},
                    {"weight_decay", lars.weight_decay},
                    {"exclude_bias_from_adaptation", lars.exclude_bias_from_adaptation},
                    {"ema_momentum", ema_momentum},
                    {"cosine_t_max", cosine_t_max}};
    json ssl_section = {{"method", method_name}, {"lambda", lambda},   {"eps_std", eps_std},
                        {"max_epochs", max_epochs}, {"patience", patience},
                        {"val_fraction", val_fraction}, {"gradient_scale", gradient_scale}};
    if (batch_size) ssl_section["batch_size"] = *batch_size;
    doc["ssl"] = ssl_section;
    doc["eval"] = {{"n_clusters", n_clusters},
                   {"n_pairs", n_pairs},
                   {"holdout_fraction", holdout_fraction},
                   {"seeds", eval_seeds},
                   {"probes", probes},
                   {"tasks", tasks}};
    doc["paths"] = paths;
    return doc;
}

RunConfig RunConfig::load(const std::string& path, const std::vector<std::string>& overrides) {
    json doc = json::object();
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw ValidationError("cannot open config file: " + path);
        try {
            in >> doc;
        } catch (const json::exception& e) {
            throw ValidationError("config: " + path + ": " + e.what());
        }
    }
    for (const std::string& assignment : overrides) {
        const std::size_t eq = assignment.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw ValidationError("config: --set expects key.path=value, got '" + assignment +
                                  "'");
        }
        const std::string key_path = assignment.substr(0, eq);
        const std::string raw_value = assignment.substr(eq + 1);
        json value;
        try {
            value = json::parse(raw_value);
        } catch (const json::exception&) {
            value = raw_value;  // unquoted strings pass through
        }
        json* node = &doc;
        std::stringstream ss(key_path);
        std::string part;
        std::vector<std::string> parts;
        while (std::getline(ss, part, '.')) parts.push_back(part);
        if (parts.empty()) throw ValidationError("config: empty --set key path");
        for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
            node = &(*node)[parts[i]];
        }
        (*node)[parts.back()] = value;
    }
    return from_json(doc);
}

void RunConfig::save_snapshot(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write config snapshot: " + path);
    out << to_json().dump(2) << '\n';
}

}  // namespace logtwin
