#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "urlab/config.hpp"
#include "urlab/csv.hpp"
#include "urlab/errors.hpp"
#include "urlab/trainer.hpp"

namespace fs = std::filesystem;
using namespace urlab;

namespace {

harness::ExperimentConfig load_config(const std::string& config_path, const std::vector<std::string>& overrides) {
    harness::ExperimentConfig cfg;
    if (!config_path.empty()) cfg = harness::ExperimentConfig::load(config_path);
    for (const auto& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    cfg.validate();
    return cfg;
}

std::vector<std::uint64_t> parse_seeds(const std::string& spec) {
    // "0..9" or "0,1,2"
    std::vector<std::uint64_t> seeds;
    const auto range = spec.find("..");
    if (range != std::string::npos) {
        const auto lo = std::stoull(spec.substr(0, range));
        const auto hi = std::stoull(spec.substr(range + 2));
        for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
        return seeds;
    }
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) seeds.push_back(std::stoull(item));
    if (seeds.empty()) throw ConfigError("no seeds in '" + spec + "'");
    return seeds;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw MissingArtifact("cannot write " + path.string());
    out << text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"urlab: unsupervised-RL pretraining lab (PointMass, DDPG, ensemble-KL regularization)"};
    app.require_subcommand(1);

    std::string config_path, out_dir, run_dir, reference, matrix_csv, pretrain_dir, values, fractions, seeds = "0";
    std::vector<std::string> overrides;
    std::uint64_t seed = 0;
    std::int64_t checkpoint_step = -1;
    int resamples = 2000;
    double level = 0.95;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "experiment config file (key = value lines)");
        cmd->add_option("--set", overrides, "override config entries, key=value (repeatable)");
        cmd->add_option("--seed", seed, "run seed");
    };

    auto* pretrain = app.add_subcommand("pretrain", "reward-free pretraining with intrinsic rewards");
    add_common(pretrain);
    pretrain->add_option("--out", out_dir, "run directory")->required();

    auto* finetune = app.add_subcommand("finetune", "supervised finetuning on the target task");
    add_common(finetune);
    finetune->add_option("--pretrain-dir", pretrain_dir, "pretraining run to start from (omit = from scratch)");
    finetune->add_option("--checkpoint", checkpoint_step, "pretraining checkpoint step (-1 = latest)");
    finetune->add_option("--out", out_dir, "run directory")->required();

    auto* oracle = app.add_subcommand("train-oracle", "train the center-seeking reference policy");
    add_common(oracle);
    oracle->add_option("--out", out_dir, "run directory")->required();

    auto* evalkl = app.add_subcommand("eval-kl", "KL to a reference actor across stored checkpoints");
    evalkl->add_option("--run", run_dir, "pretraining run directory")->required();
    evalkl->add_option("--reference", reference, "reference actor (oracle_actor.mlp or a checkpoint)")->required();
    evalkl->add_option("--out", out_dir, "output CSV path")->required();

    auto* entropy = app.add_subcommand("entropy", "state-visitation entropy at checkpoint fractions");
    entropy->add_option("--run", run_dir, "run directory")->required();
    entropy->add_option("--out", out_dir, "output CSV path")->required();

    auto* histogram = app.add_subcommand("histogram", "binned position/velocity visits over a run");
    histogram->add_option("--run", run_dir, "run directory")->required();
    histogram->add_option("--out", out_dir, "output CSV path")->required();

    auto* stats = app.add_subcommand("stats", "IQM/mean/median/optimality-gap with bootstrap CIs");
    stats->add_option("--matrix", matrix_csv, "run matrix CSV (task,seed,normalized_return)")->required();
    stats->add_option("--out", out_dir, "output JSON path (default: stdout)");
    stats->add_option("--resamples", resamples, "bootstrap resamples");
    stats->add_option("--level", level, "confidence level");
    stats->add_option("--seed", seed, "bootstrap seed");

    auto* sweep = app.add_subcommand("sweep", "alpha or snapshot sweeps over seeds");
    add_common(sweep);
    auto* sweep_alpha = sweep->add_subcommand("alpha", "pretrain+finetune per regularization strength");
    sweep_alpha->fallthrough();
    sweep_alpha->add_option("--values", values, "comma-separated alpha values")->required();
    sweep_alpha->add_option("--seeds", seeds, "seed list, e.g. 0..9 or 0,1,2");
    sweep_alpha->add_option("--out", out_dir, "sweep output directory")->required();
    auto* sweep_snapshot = sweep->add_subcommand("snapshot", "finetune from several pretraining checkpoints");
    sweep_snapshot->fallthrough();
    sweep_snapshot->add_option("--fractions", fractions, "checkpoint fractions of n_pretrain, e.g. 0.25,0.5,1.0")
        ->required();
    sweep_snapshot->add_option("--seeds", seeds, "seed list");
    sweep_snapshot->add_option("--out", out_dir, "sweep output directory")->required();
    sweep->require_subcommand(1);

    CLI11_PARSE(app, argc, argv);

    try {
        if (pretrain->parsed()) {
            const auto cfg = load_config(config_path, overrides);
            const auto summary = harness::run_pretrain(cfg, seed, out_dir);
            std::printf("pretrain done: %lld steps, %d ensemble members -> %s\n",
                        static_cast<long long>(summary.steps), summary.snapshots, out_dir.c_str());
        } else if (finetune->parsed()) {
            harness::ExperimentConfig cfg;
            if (config_path.empty() && !pretrain_dir.empty())
                cfg = harness::ExperimentConfig::load(fs::path(pretrain_dir) / "config.resolved");
            else
                cfg = load_config(config_path, overrides);
            for (const auto& kv : overrides) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
                cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
            }
            cfg.validate();
            const auto summary = harness::run_finetune(cfg, pretrain_dir, checkpoint_step, seed, out_dir);
            std::printf("finetune done: final return %.3f -> %s\n", summary.final_return, out_dir.c_str());
        } else if (oracle->parsed()) {
            const auto cfg = load_config(config_path, overrides);
            const auto summary = harness::train_oracle(cfg, seed, out_dir);
            std::printf("oracle %s: mean distance to center %.4f -> %s\n",
                        summary.converged ? "converged" : "NOT CONVERGED (flagged)", summary.mean_distance,
                        summary.actor_file.string().c_str());
        } else if (evalkl->parsed()) {
            harness::eval_kl_curve(run_dir, reference, out_dir);
            std::printf("kl curve -> %s\n", out_dir.c_str());
        } else if (entropy->parsed()) {
            harness::entropy_report(run_dir, out_dir);
            std::printf("entropy report -> %s\n", out_dir.c_str());
        } else if (histogram->parsed()) {
            harness::histogram_report(run_dir, out_dir);
            std::printf("histogram -> %s\n", out_dir.c_str());
        } else if (stats->parsed()) {
            const auto report = harness::stats_report(matrix_csv, resamples, level, seed);
            if (out_dir.empty())
                std::printf("%s\n", report.c_str());
            else {
                write_text(out_dir, report + "\n");
                std::printf("stats -> %s\n", out_dir.c_str());
            }
        } else if (sweep->parsed()) {
            const auto cfg = load_config(config_path, overrides);
            const auto seed_list = parse_seeds(seeds);
            fs::create_directories(out_dir);
            if (sweep_alpha->parsed()) {
                csv::Writer summary(fs::path(out_dir) / "alpha_sweep.csv",
                                    {"alpha", "seed", "final_return"});
                std::stringstream ss(values);
                std::string item;
                while (std::getline(ss, item, ',')) {
                    const double alpha = std::stod(item);
                    for (const auto s : seed_list) {
                        auto run_cfg = cfg;
                        run_cfg.set("alpha", item);
                        run_cfg.set("polter", alpha > 0.0 ? "true" : "false");
                        const fs::path leg = fs::path(out_dir) / ("alpha_" + item + "_seed_" + std::to_string(s));
                        harness::run_pretrain(run_cfg, s, leg / "pretrain");
                        const auto ft = harness::run_finetune(run_cfg, leg / "pretrain", -1, s, leg / "finetune");
                        summary.row({alpha, static_cast<double>(s), ft.final_return});
                        summary.flush();
                    }
                }
                std::printf("alpha sweep -> %s\n", (fs::path(out_dir) / "alpha_sweep.csv").c_str());
            } else {
                csv::Writer summary(fs::path(out_dir) / "snapshot_sweep.csv",
                                    {"fraction", "checkpoint_step", "seed", "final_return"});
                for (const auto s : seed_list) {
                    const fs::path pre = fs::path(out_dir) / ("pretrain_seed_" + std::to_string(s));
                    if (!fs::exists(harness::RunPaths{pre}.config_file())) harness::run_pretrain(cfg, s, pre);
                    std::stringstream ss(fractions);
                    std::string item;
                    while (std::getline(ss, item, ',')) {
                        const double frac = std::stod(item);
                        const auto step = static_cast<std::int64_t>(frac * static_cast<double>(cfg.n_pretrain));
                        const fs::path leg =
                            fs::path(out_dir) / ("finetune_f" + item + "_seed_" + std::to_string(s));
                        const auto ft = harness::run_finetune(cfg, pre, step, s, leg);
                        summary.row({frac, static_cast<double>(step), static_cast<double>(s), ft.final_return});
                        summary.flush();
                    }
                }
                std::printf("snapshot sweep -> %s\n", (fs::path(out_dir) / "snapshot_sweep.csv").c_str());
            }
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric failure: %s\n", e.what());
        return 3;
    } catch (const MissingArtifact& e) {
        std::fprintf(stderr, "missing artifact: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
