#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "urlab/config.hpp"
#include "urlab/ddpg.hpp"

namespace urlab::harness {

// Layout of a run directory.
struct RunPaths {
    std::filesystem::path dir;

    std::filesystem::path config_file() const { return dir / "config.resolved"; }
    std::filesystem::path train_csv() const { return dir / "train.csv"; }
    std::filesystem::path trajectory_csv() const { return dir / "trajectory.csv"; }
    std::filesystem::path finetune_csv() const { return dir / "finetune.csv"; }
    std::filesystem::path checkpoints_dir() const { return dir / "checkpoints"; }
    std::filesystem::path ensemble_dir() const { return dir / "ensemble"; }
    std::filesystem::path ensemble_manifest() const { return ensemble_dir() / "manifest.json"; }
    std::filesystem::path intrinsic_dir() const { return dir / "intrinsic"; }
    std::filesystem::path run_meta() const { return dir / "run.json"; }
    std::filesystem::path checkpoint_file(std::int64_t step) const;
    std::filesystem::path checkpoint_sidecar(std::int64_t step) const;
};

// Full agent state (nets + targets + optimizer moments) with a JSON sidecar.
void save_agent_checkpoint(const std::filesystem::path& file, const ddpg::DdpgAgent& agent);
void load_agent_checkpoint(const std::filesystem::path& file, ddpg::DdpgAgent& agent);

// Sorted (step, file) pairs found under a run's checkpoints dir.
std::vector<std::pair<std::int64_t, std::filesystem::path>> list_checkpoints(const RunPaths& run);

struct PretrainSummary {
    std::int64_t steps = 0;
    int snapshots = 0;
    std::vector<std::int64_t> snapshot_steps;  // episode-boundary steps consumed
};

// Reward-free pretraining with intrinsic rewards and, when enabled, the
// ensemble-KL regularizer on the actor update.
PretrainSummary run_pretrain(const ExperimentConfig& cfg, std::uint64_t seed, const std::filesystem::path& run_dir);

struct FinetuneSummary {
    double final_return = 0.0;
    std::vector<std::pair<std::int64_t, double>> eval_curve;  // (step, mean return)
};

// Supervised finetuning on the target task. `pretrain_dir` empty = train from
// scratch (the no-pretraining baseline). checkpoint_step < 0 = latest.
FinetuneSummary run_finetune(const ExperimentConfig& cfg, const std::filesystem::path& pretrain_dir,
                             std::int64_t checkpoint_step, std::uint64_t seed, const std::filesystem::path& out_dir);

struct OracleSummary {
    double mean_distance = 0.0;  // per-step distance to center, averaged over eval episodes
    bool converged = false;
    std::filesystem::path actor_file;
};

// Trains the center-seeking reference policy with reward -||p||^2 and saves
// its actor snapshot to out_dir/oracle_actor.mlp.
OracleSummary train_oracle(const ExperimentConfig& cfg, std::uint64_t seed, const std::filesystem::path& out_dir);

// Per-checkpoint KL to a reference actor on seeded probe initial states.
void eval_kl_curve(const std::filesystem::path& run_dir, const std::filesystem::path& reference_actor,
                   const std::filesystem::path& out_csv);

// State-visitation entropy at the four checkpoint fractions of the run.
void entropy_report(const std::filesystem::path& run_dir, const std::filesystem::path& out_csv);

// Binned position/velocity visit counts over the whole run.
void histogram_report(const std::filesystem::path& run_dir, const std::filesystem::path& out_csv);

// IQM / mean / median / optimality gap with bootstrap CIs, as a JSON string.
std::string stats_report(const std::filesystem::path& matrix_csv, int n_resamples = 2000, double level = 0.95,
                         std::uint64_t seed = 0);

}  // namespace urlab::harness
