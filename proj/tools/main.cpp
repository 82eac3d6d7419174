#include "logtwin/pipeline.hpp"

#include <CLI11.hpp>
#include <Eigen/Core>

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "JSON config file");
    cmd->add_option("--set", args.overrides, "Override a config key, e.g. optim.base_lr=0.05");
}

std::string resolve_path(const logtwin::RunConfig& cfg, const std::string& flag_value,
                         const std::string& key, const std::string& flag_name) {
    if (!flag_value.empty()) return flag_value;
    auto it = cfg.paths.find(key);
    if (it != cfg.paths.end() && !it->second.empty()) return it->second;
    throw logtwin::ValidationError("missing " + flag_name + " (or config paths." + key + ")");
}

void apply_thread_cap() {
    if (const char* env = std::getenv("LOGTWIN_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) Eigen::setNbThreads(n);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"logtwin: non-contrastive representation learning for well-log intervals"};
    app.require_subcommand(1);

    CommonArgs common;
    std::string in_path, out_path, checkpoint_path, history_path, assignments_path, method_flag;

    CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic well-log CSV");
    add_common(synth, common);
    synth->add_option("--out", out_path, "Output dataset CSV");

    CLI::App* preprocess =
        app.add_subcommand("preprocess", "Fill, QC-filter, normalize and window a log CSV");
    add_common(preprocess, common);
    preprocess->add_option("--in", in_path, "Input dataset CSV");
    preprocess->add_option("--out", out_path, "Output intervals CSV");

    CLI::App* train_cmd = app.add_subcommand("train", "Train BYOL or Barlow Twins");
    add_common(train_cmd, common);
    train_cmd->add_option("--in", in_path, "Input intervals CSV");
    train_cmd->add_option("--checkpoint", checkpoint_path, "Output checkpoint file");
    train_cmd->add_option("--history", history_path, "Output history CSV");
    train_cmd->add_option("--method", method_flag, "byol | barlow-twins (overrides ssl.method)");

    CLI::App* embed = app.add_subcommand("embed", "Embed intervals with a frozen encoder");
    add_common(embed, common);
    embed->add_option("--checkpoint", checkpoint_path, "Trained checkpoint file");
    embed->add_option("--in", in_path, "Input intervals CSV");
    embed->add_option("--out", out_path, "Output embeddings CSV");

    CLI::App* eval_cluster =
        app.add_subcommand("eval-cluster", "Cluster embeddings and score against labels");
    add_common(eval_cluster, common);
    eval_cluster->add_option("--in", in_path, "Input embeddings CSV");
    eval_cluster->add_option("--out", out_path, "Output metrics CSV");
    eval_cluster->add_option("--assignments", assignments_path, "Output assignments CSV");

    CLI::App* eval_probe =
        app.add_subcommand("eval-probe", "Frozen-encoder classification probes");
    add_common(eval_probe, common);
    eval_probe->add_option("--in", in_path, "Input embeddings CSV");
    eval_probe->add_option("--out", out_path, "Output metrics CSV");

    CLI11_PARSE(app, argc, argv);
    apply_thread_cap();

    try {
        if (!method_flag.empty()) {
            common.overrides.push_back("ssl.method=" + method_flag);
        }
        const logtwin::RunConfig cfg =
            logtwin::RunConfig::load(common.config_path, common.overrides);

        if (synth->parsed()) {
            const std::string out = resolve_path(cfg, out_path, "dataset", "--out");
            logtwin::run_synth(cfg, out);
            cfg.save_snapshot(out + ".config.json");
        } else if (preprocess->parsed()) {
            const std::string in = resolve_path(cfg, in_path, "dataset", "--in");
            const std::string out = resolve_path(cfg, out_path, "intervals", "--out");
            logtwin::run_preprocess(cfg, in, out);
            cfg.save_snapshot(out + ".config.json");
        } else if (train_cmd->parsed()) {
            const std::string in = resolve_path(cfg, in_path, "intervals", "--in");
            const std::string ckpt = resolve_path(cfg, checkpoint_path, "checkpoint",
                                                  "--checkpoint");
            const std::string history = resolve_path(cfg, history_path, "history", "--history");
            const logtwin::TrainResult result = logtwin::run_train(cfg, in, ckpt, history);
            cfg.save_snapshot(ckpt + ".config.json");
            std::cout << "trained " << cfg.method_name << ": best epoch " << result.best_epoch
                      << " of " << result.history.size() << ", best val loss "
                      << result.history[static_cast<std::size_t>(result.best_epoch - 1)].val_loss
                      << "\n";
        } else if (embed->parsed()) {
            const std::string ckpt = resolve_path(cfg, checkpoint_path, "checkpoint",
                                                  "--checkpoint");
            const std::string in = resolve_path(cfg, in_path, "intervals", "--in");
            const std::string out = resolve_path(cfg, out_path, "embeddings", "--out");
            logtwin::run_embed(cfg, ckpt, in, out);
            cfg.save_snapshot(out + ".config.json");
        } else if (eval_cluster->parsed()) {
            const std::string in = resolve_path(cfg, in_path, "embeddings", "--in");
            const std::string out = resolve_path(cfg, out_path, "metrics", "--out");
            const std::string assignments =
                resolve_path(cfg, assignments_path, "assignments", "--assignments");
            logtwin::run_eval_cluster(cfg, in, out, assignments);
            cfg.save_snapshot(out + ".config.json");
        } else if (eval_probe->parsed()) {
            const std::string in = resolve_path(cfg, in_path, "embeddings", "--in");
            const std::string out = resolve_path(cfg, out_path, "metrics", "--out");
            logtwin::run_eval_probe(cfg, in, out);
            cfg.save_snapshot(out + ".config.json");
        }
    } catch (const logtwin::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}
