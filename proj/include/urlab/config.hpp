#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "urlab/ddpg.hpp"
#include "urlab/intrinsic.hpp"
#include "urlab/pointmass.hpp"
#include "urlab/polter.hpp"

namespace urlab::harness {

// Flat key=value experiment description. A run is reproducible from
// (config, seed) alone; the fully resolved config is stored in the run dir.
struct ExperimentConfig {
    // environment
    std::string env = "pointmass";
    int episode_len = 200;
    double dt = 0.05;
    double force_gain = 1.0;
    double damping = 0.95;
    double max_speed = 1.0;
    double reward_sigma = 0.5;

    // algorithm selection
    std::string algorithm = "rnd";  // rnd | icm | disagreement | apt
    bool polter = false;
    double alpha = 1.0;
    std::string kl_mode = "upper_bound";  // upper_bound | mean_action
    double policy_std = 0.2;              // sigma of the Gaussian policy reading
    std::string polter_star_reference;    // actor snapshot used as a fixed k=1 ensemble
    std::string schedule = "auto";        // auto = reference shape scaled to n_pretrain

    // agent
    std::string hidden = "256,256";
    double lr = 1e-4;
    double gamma = 0.99;
    int n_step = 3;
    double tau = 0.01;
    double noise_std = 0.2;
    double noise_std_final = -1.0;  // < 0: constant noise_std; >= 0: linear decay target
    double noise_clip = 0.3;
    int update_every = 2;
    int seed_frames = 4000;
    int batch_size = 256;
    std::int64_t buffer_capacity = 1000000;

    // intrinsic modules
    int rnd_embed_dim = 64;
    int icm_embed_dim = 32;
    int disagreement_ensemble = 5;
    int apt_k = 12;
    double apt_eps = 1e-6;

    // run lengths
    std::int64_t n_pretrain = 200000;
    std::int64_t n_finetune = 20000;
    std::int64_t oracle_steps = 30000;
    std::int64_t checkpoint_interval = 10000;
    std::int64_t eval_interval = 1000;
    int eval_episodes = 10;
    int finetune_seed_frames = 1000;
    std::int64_t finetune_critic_warmup = 0;  // critic-only update steps after the seed frames
    bool dump_states = true;

    // analysis defaults
    std::int64_t entropy_window = 50000;
    int bins_per_dim = 16;
    int probe_states = 20;
    std::int64_t probe_seed = 777;

    // finetuning behavior
    bool carry_critic = true;
    bool carry_optimizer = false;
    std::string target = "auto";  // auto = fixed random position per seed, or "x,y"
    double target_range = 0.9;

    void set(const std::string& key, const std::string& value);
    std::string serialize() const;

    static ExperimentConfig load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    // typed views
    std::vector<int> hidden_sizes() const;
    ddpg::DdpgConfig ddpg_config() const;
    intrinsic::IntrinsicConfig intrinsic_config() const;
    envs::PointMassConfig pointmass_config() const;
    polter::PolterConfig polter_config() const;
    polter::SnapshotSchedule snapshot_schedule() const;
    std::array<double, 2> resolve_target(std::uint64_t seed) const;

    void validate() const;
};

// key=value lines, '#' comments, `include <relative-path>` directives.
ExperimentConfig parse_config_text(const std::string& text, const std::filesystem::path& base_dir);

}  // namespace urlab::harness
