#include "urlab/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "urlab/csv.hpp"
#include "urlab/errors.hpp"
#include "urlab/eval_stats.hpp"
#include "urlab/intrinsic.hpp"
#include "urlab/policy_eval.hpp"
#include "urlab/pointmass.hpp"
#include "urlab/snapshot.hpp"

namespace urlab::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// RNG sub-streams; pretraining and finetuning use disjoint ids so a finetune
// never replays pretraining noise.
constexpr std::uint64_t kStreamAgentInit = 1;
constexpr std::uint64_t kStreamIntrinsicInit = 2;
constexpr std::uint64_t kStreamEnv = 3;
constexpr std::uint64_t kStreamAction = 4;
constexpr std::uint64_t kStreamSample = 5;
constexpr std::uint64_t kStreamFtAgentInit = 11;
constexpr std::uint64_t kStreamFtEnv = 12;
constexpr std::uint64_t kStreamFtAction = 13;
constexpr std::uint64_t kStreamFtSample = 14;
constexpr std::uint64_t kStreamFtEval = 15;
constexpr std::uint64_t kStreamOracle = 21;

constexpr int kObsDim = 4;
constexpr int kActDim = 2;

std::vector<float> float_obs(const envs::PointMassState& s) {
    const auto o = envs::observe(s);
    return {static_cast<float>(o[0]), static_cast<float>(o[1]), static_cast<float>(o[2]),
            static_cast<float>(o[3])};
}

// linear exploration-noise schedule; disabled when noise_std_final < 0
float noise_at(const ExperimentConfig& cfg, std::int64_t t, std::int64_t total) {
    if (cfg.noise_std_final < 0.0 || total <= 1) return static_cast<float>(cfg.noise_std);
    const double frac = static_cast<double>(t) / static_cast<double>(total - 1);
    return static_cast<float>(cfg.noise_std + (cfg.noise_std_final - cfg.noise_std) * frac);
}

std::string step_label(std::int64_t step) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%09lld", static_cast<long long>(step));
    return buf;
}

json agent_sidecar(const ExperimentConfig& cfg, std::int64_t step, std::uint64_t seed) {
    json j;
    j["step"] = step;
    j["seed"] = seed;
    j["obs_dim"] = kObsDim;
    j["act_dim"] = kActDim;
    j["algorithm"] = cfg.algorithm;
    j["hidden"] = cfg.hidden;
    j["lr"] = cfg.lr;
    j["gamma"] = cfg.gamma;
    j["n_step"] = cfg.n_step;
    j["tau"] = cfg.tau;
    j["noise_std"] = cfg.noise_std;
    j["noise_clip"] = cfg.noise_clip;
    j["batch_size"] = cfg.batch_size;
    return j;
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw MissingArtifact("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

constexpr char kAgentMagic[8] = {'A', 'G', 'N', 'T', 'S', 'N', 'P', '1'};

void write_checkpoint(const RunPaths& run, const ExperimentConfig& cfg, std::uint64_t seed, std::int64_t step,
                      const ddpg::DdpgAgent& agent) {
    save_agent_checkpoint(run.checkpoint_file(step), agent);
    write_json(run.checkpoint_sidecar(step), agent_sidecar(cfg, step, seed));
}

// Probe initial states shared by every run of an experiment: positions
// uniform on the plane, velocities zero.
std::vector<std::vector<float>> probe_initial_states(int count, std::uint64_t probe_seed) {
    Rng rng = make_rng(static_cast<std::uint64_t>(probe_seed), 0x9e0b5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<std::vector<float>> probes;
    probes.reserve(count);
    for (int i = 0; i < count; ++i) {
        const float x = static_cast<float>(u(rng));
        const float y = static_cast<float>(u(rng));
        probes.push_back({x, y, 0.0f, 0.0f});
    }
    return probes;
}

struct EvalStats {
    double mean = 0.0;
    double stderr_ = 0.0;
};

EvalStats evaluate_policy(const ddpg::DdpgAgent& agent, const envs::PointMassConfig& env_cfg,
                          const envs::PointMassTask& task, int episodes, Rng& rng) {
    std::vector<double> returns(episodes, 0.0);
    envs::PointMassEnv env(env_cfg, task);
    for (int e = 0; e < episodes; ++e) {
        env.reset(rng);
        double ret = 0.0;
        for (int t = 0; t < env_cfg.episode_len; ++t) {
            const auto obs = float_obs(env.state());
            const auto act = agent.act(obs, false, 0, rng);
            const auto res = env.step(std::vector<double>{static_cast<double>(act[0]), static_cast<double>(act[1])});
            ret += res.reward;
        }
        returns[e] = ret;
    }
    EvalStats s;
    for (double r : returns) s.mean += r;
    s.mean /= episodes;
    if (episodes > 1) {
        double var = 0.0;
        for (double r : returns) var += (r - s.mean) * (r - s.mean);
        var /= (episodes - 1);
        s.stderr_ = std::sqrt(var / episodes);
    }
    return s;
}

struct TrajectoryColumns {
    std::vector<double> step, pos_x, pos_y, vel_x, vel_y;
};

TrajectoryColumns load_trajectory(const RunPaths& run) {
    const auto table = csv::read(run.trajectory_csv());
    const int c_step = table.column("step");
    const int c_px = table.column("pos_x");
    const int c_py = table.column("pos_y");
    const int c_vx = table.column("vel_x");
    const int c_vy = table.column("vel_y");
    if (c_step < 0 || c_px < 0 || c_py < 0 || c_vx < 0 || c_vy < 0)
        throw MissingArtifact(run.trajectory_csv().string() + ": missing trajectory columns");
    TrajectoryColumns t;
    for (const auto& row : table.rows) {
        t.step.push_back(csv::to_double(row[c_step], "trajectory"));
        t.pos_x.push_back(csv::to_double(row[c_px], "trajectory"));
        t.pos_y.push_back(csv::to_double(row[c_py], "trajectory"));
        t.vel_x.push_back(csv::to_double(row[c_vx], "trajectory"));
        t.vel_y.push_back(csv::to_double(row[c_vy], "trajectory"));
    }
    return t;
}

}  // namespace

fs::path RunPaths::checkpoint_file(std::int64_t step) const {
    return checkpoints_dir() / ("checkpoint_" + step_label(step) + ".agent");
}

fs::path RunPaths::checkpoint_sidecar(std::int64_t step) const {
    return checkpoints_dir() / ("checkpoint_" + step_label(step) + ".json");
}

void save_agent_checkpoint(const fs::path& file, const ddpg::DdpgAgent& agent) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw MissingArtifact("cannot write " + file.string());
    out.write(kAgentMagic, 8);
    nn::save_mlp(out, agent.actor());
    nn::save_mlp(out, agent.critic());
    nn::save_mlp(out, agent.actor_target());
    nn::save_mlp(out, agent.critic_target());
    nn::save_adam(out, agent.actor_opt());
    nn::save_adam(out, agent.critic_opt());
}

void load_agent_checkpoint(const fs::path& file, ddpg::DdpgAgent& agent) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw MissingArtifact("checkpoint not found: " + file.string());
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kAgentMagic, 8) != 0)
        throw MissingArtifact("not an agent checkpoint: " + file.string());
    auto actor = nn::load_mlp(in);
    auto critic = nn::load_mlp(in);
    auto actor_targ = nn::load_mlp(in);
    auto critic_targ = nn::load_mlp(in);
    if (!actor.same_shape(agent.actor()) || !critic.same_shape(agent.critic()))
        throw ConfigError("checkpoint " + file.string() + " does not match the configured network shape");
    agent.actor() = std::move(actor);
    agent.critic() = std::move(critic);
    agent.actor_target() = std::move(actor_targ);
    agent.critic_target() = std::move(critic_targ);
    nn::load_adam(in, agent.actor_opt());
    nn::load_adam(in, agent.critic_opt());
}

std::vector<std::pair<std::int64_t, fs::path>> list_checkpoints(const RunPaths& run) {
    std::vector<std::pair<std::int64_t, fs::path>> found;
    if (!fs::exists(run.checkpoints_dir())) return found;
    for (const auto& entry : fs::directory_iterator(run.checkpoints_dir())) {
        const std::string name = entry.path().filename().string();
        long long step = 0;
        if (std::sscanf(name.c_str(), "checkpoint_%lld.agent", &step) == 1 && name.ends_with(".agent"))
            found.emplace_back(static_cast<std::int64_t>(step), entry.path());
    }
    std::sort(found.begin(), found.end());
    return found;
}

PretrainSummary run_pretrain(const ExperimentConfig& cfg, std::uint64_t seed, const fs::path& run_dir) {
    cfg.validate();
    RunPaths run{run_dir};
    if (fs::exists(run.config_file())) {
        // re-running into an existing directory is only allowed with the same
        // configuration; its checkpoints would not match otherwise
        const auto existing = ExperimentConfig::load(run.config_file());
        if (existing.serialize() != cfg.serialize())
            throw ConfigError(run_dir.string() + " already holds a run with a different config");
    }
    fs::create_directories(run.checkpoints_dir());
    cfg.save(run.config_file());

    const bool polter_active = cfg.polter && cfg.alpha > 0.0;
    const bool polter_star = polter_active && !cfg.polter_star_reference.empty();
    if (polter_active) fs::create_directories(run.ensemble_dir());

    envs::PointMassEnv env(cfg.pointmass_config(), envs::PointMassTask{});  // reward-free
    ddpg::DdpgAgent agent(kObsDim, kActDim, cfg.ddpg_config(), derive_seed(seed, kStreamAgentInit));
    auto intrinsic_module =
        intrinsic::make_intrinsic(cfg.intrinsic_config(), kObsDim, kActDim, derive_seed(seed, kStreamIntrinsicInit));
    ddpg::ReplayBuffer buffer(static_cast<std::size_t>(cfg.buffer_capacity), cfg.n_step,
                              static_cast<float>(cfg.gamma));

    polter::EnsemblePolicy<float> ensemble;
    polter::SnapshotSchedule schedule = cfg.snapshot_schedule();
    const polter::PolterConfig pcfg = cfg.polter_config();
    if (polter_star) {
        ensemble.members.push_back({nn::load_mlp_file(cfg.polter_star_reference), 0, 0});
        nn::save_mlp_file(run.ensemble_dir() / ("member_" + step_label(0) + ".mlp"), ensemble.members[0].actor);
    }

    Rng rng_env = make_rng(seed, kStreamEnv);
    Rng rng_action = make_rng(seed, kStreamAction);
    Rng rng_sample = make_rng(seed, kStreamSample);

    csv::Writer train_log(run.train_csv(),
                          {"step", "intrinsic_reward", "actor_loss", "critic_loss", "polter_term", "ensemble_k"});
    std::optional<csv::Writer> traj_log;
    if (cfg.dump_states)
        traj_log.emplace(run.trajectory_csv(),
                         std::vector<std::string>{"step", "pos_x", "pos_y", "vel_x", "vel_y", "action_x", "action_y",
                                                  "reward"});

    write_checkpoint(run, cfg, seed, 0, agent);

    PretrainSummary summary;
    for (std::int64_t t = 0; t < cfg.n_pretrain; ++t) {
        if (t % cfg.episode_len == 0) {
            env.reset(rng_env);
            if (polter_active && !polter_star) {
                const auto taken = polter::maybe_snapshot(ensemble, schedule, t, agent.actor());
                for (std::size_t i = 0; i < taken.size(); ++i) {
                    summary.snapshot_steps.push_back(t);
                    nn::save_mlp_file(run.ensemble_dir() /
                                      ("member_" + step_label(taken[i]) + ".mlp"),
                                  ensemble.members[ensemble.members.size() - taken.size() + i].actor);
                }
            }
        }
        const auto obs = float_obs(env.state());
        agent.set_noise_std(noise_at(cfg, t, cfg.n_pretrain));
        const auto action = agent.act(obs, true, t, rng_action);
        const auto res = env.step(std::vector<double>{static_cast<double>(action[0]), static_cast<double>(action[1])});
        buffer.add({obs, action, static_cast<float>(res.reward), float_obs(res.state), false,
                    static_cast<std::uint32_t>(t / cfg.episode_len)});
        if (traj_log)
            traj_log->row({static_cast<double>(t), res.state.pos[0], res.state.pos[1], res.state.vel[0],
                           res.state.vel[1], static_cast<double>(action[0]), static_cast<double>(action[1]),
                           res.reward});

        if (t >= cfg.seed_frames && t % cfg.update_every == 0) {
            auto batch = buffer.sample(cfg.batch_size, rng_sample);
            const auto ir = intrinsic_module->reward(batch);
            intrinsic_module->normalizer().observe(ir.reward);
            double reward_mean = 0.0;
            for (int b = 0; b < batch.size; ++b) {
                batch.reward[b] = intrinsic_module->normalizer().normalize(ir.reward[b]);
                reward_mean += batch.reward[b];
            }
            reward_mean /= batch.size;
            intrinsic_module->update(batch);

            float polter_value = 0.0f;
            ddpg::DdpgAgent::UpdateDiag diag;
            if (polter_active && ensemble.size() > 0) {
                const auto reg = polter::polter_term<float>(ensemble, agent.actor(), batch.obs, kObsDim, pcfg);
                polter_value = reg.value;
                diag = agent.update(batch, &reg.grads, static_cast<float>(cfg.alpha));
            } else {
                diag = agent.update(batch);
            }
            train_log.row({static_cast<double>(t), reward_mean, diag.actor_loss, diag.critic_loss,
                           static_cast<double>(polter_value), static_cast<double>(ensemble.size())});
        }
        if ((t + 1) % cfg.checkpoint_interval == 0) write_checkpoint(run, cfg, seed, t + 1, agent);
    }

    if (polter_active) {
        json manifest;
        manifest["sigma"] = pcfg.sigma;
        manifest["alpha"] = pcfg.alpha;
        manifest["kl_mode"] = cfg.kl_mode;
        manifest["members"] = json::array();
        for (const auto& m : ensemble.members) {
            json entry;
            entry["entry"] = m.entry;
            entry["added_at"] = m.added_at;
            entry["file"] = "member_" + step_label(m.entry) + ".mlp";
            entry["weight"] = ensemble.weight();
            manifest["members"].push_back(entry);
        }
        write_json(run.ensemble_manifest(), manifest);
    }

    const auto nets = intrinsic_module->nets();
    if (!nets.empty()) {
        fs::create_directories(run.intrinsic_dir());
        for (std::size_t i = 0; i < nets.size(); ++i)
            nn::save_mlp_file(run.intrinsic_dir() / ("net_" + std::to_string(i) + ".mlp"), *nets[i]);
    }

    summary.steps = cfg.n_pretrain;
    summary.snapshots = ensemble.size();
    json meta;
    meta["kind"] = "pretrain";
    meta["seed"] = seed;
    meta["steps"] = summary.steps;
    meta["snapshots"] = summary.snapshot_steps;
    meta["ensemble_size"] = summary.snapshots;
    write_json(run.run_meta(), meta);
    return summary;
}

FinetuneSummary run_finetune(const ExperimentConfig& cfg, const fs::path& pretrain_dir, std::int64_t checkpoint_step,
                             std::uint64_t seed, const fs::path& out_dir) {
    cfg.validate();
    RunPaths run{out_dir};
    fs::create_directories(run.checkpoints_dir());
    cfg.save(run.config_file());

    const auto target = cfg.resolve_target(seed);
    envs::PointMassTask task;
    task.kind = envs::PointMassReward::GaussianBump;
    task.target = target;
    task.reward_sigma = cfg.reward_sigma;

    auto agent_cfg = cfg.ddpg_config();
    agent_cfg.seed_frames = cfg.finetune_seed_frames;
    ddpg::DdpgAgent agent(kObsDim, kActDim, agent_cfg, derive_seed(seed, kStreamFtAgentInit));

    std::int64_t loaded_from = -1;
    if (!pretrain_dir.empty()) {
        RunPaths pre{pretrain_dir};
        auto checkpoints = list_checkpoints(pre);
        if (checkpoints.empty()) throw MissingArtifact("no checkpoints under " + pre.checkpoints_dir().string());
        fs::path file;
        if (checkpoint_step < 0) {
            file = checkpoints.back().second;
            loaded_from = checkpoints.back().first;
        } else {
            for (const auto& [step, path] : checkpoints)
                if (step == checkpoint_step) {
                    file = path;
                    loaded_from = step;
                }
            if (file.empty()) {
                std::string available;
                for (const auto& [step, _] : checkpoints) available += " " + std::to_string(step);
                throw MissingArtifact("checkpoint step " + std::to_string(checkpoint_step) +
                                      " not found; available:" + available);
            }
        }
        ddpg::DdpgAgent loaded(kObsDim, kActDim, agent_cfg, derive_seed(seed, kStreamFtAgentInit));
        load_agent_checkpoint(file, loaded);
        agent.actor() = loaded.actor();
        agent.actor_target() = loaded.actor_target();
        if (cfg.carry_critic) {
            agent.critic() = loaded.critic();
            agent.critic_target() = loaded.critic_target();
        }
        if (cfg.carry_optimizer) {
            agent.actor_opt() = loaded.actor_opt();
            agent.critic_opt() = loaded.critic_opt();
        }
    }

    envs::PointMassEnv env(cfg.pointmass_config(), task);
    ddpg::ReplayBuffer buffer(static_cast<std::size_t>(cfg.buffer_capacity), cfg.n_step,
                              static_cast<float>(cfg.gamma));
    Rng rng_env = make_rng(seed, kStreamFtEnv);
    Rng rng_action = make_rng(seed, kStreamFtAction);
    Rng rng_sample = make_rng(seed, kStreamFtSample);
    Rng rng_eval = make_rng(seed, kStreamFtEval);

    // no polter_term column here: the regularizer is a pretraining-only device
    csv::Writer log(run.finetune_csv(), {"step", "return_mean", "return_stderr", "critic_loss", "actor_loss"});
    FinetuneSummary summary;

    auto eval_point = [&](std::int64_t step, const ddpg::DdpgAgent::UpdateDiag& diag) {
        const auto stats = evaluate_policy(agent, cfg.pointmass_config(), task, cfg.eval_episodes, rng_eval);
        log.row({static_cast<double>(step), stats.mean, stats.stderr_, diag.critic_loss, diag.actor_loss});
        summary.eval_curve.emplace_back(step, stats.mean);
        summary.final_return = stats.mean;
    };

    ddpg::DdpgAgent::UpdateDiag diag;
    eval_point(0, diag);
    for (std::int64_t t = 0; t < cfg.n_finetune; ++t) {
        if (t % cfg.episode_len == 0) env.reset(rng_env);
        const auto obs = float_obs(env.state());
        agent.set_noise_std(noise_at(cfg, t, cfg.n_finetune));
        const auto action = agent.act(obs, true, t, rng_action);
        const auto res = env.step(std::vector<double>{static_cast<double>(action[0]), static_cast<double>(action[1])});
        buffer.add({obs, action, static_cast<float>(res.reward), float_obs(res.state), false,
                    static_cast<std::uint32_t>(t / cfg.episode_len)});
        if (t >= cfg.finetune_seed_frames && t % cfg.update_every == 0) {
            if (t < cfg.finetune_seed_frames + cfg.finetune_critic_warmup)
                diag = agent.update_critic_only(buffer.sample(cfg.batch_size, rng_sample));
            else
                diag = agent.update(buffer.sample(cfg.batch_size, rng_sample));
        }
        if ((t + 1) % cfg.eval_interval == 0) eval_point(t + 1, diag);
    }
    write_checkpoint(run, cfg, seed, cfg.n_finetune, agent);

    json meta;
    meta["kind"] = "finetune";
    meta["seed"] = seed;
    meta["steps"] = cfg.n_finetune;
    meta["target"] = {target[0], target[1]};
    meta["loaded_checkpoint_step"] = loaded_from;
    meta["pretrain_dir"] = pretrain_dir.string();
    meta["final_return"] = summary.final_return;
    write_json(run.run_meta(), meta);
    return summary;
}

OracleSummary train_oracle(const ExperimentConfig& cfg, std::uint64_t seed, const fs::path& out_dir) {
    cfg.validate();
    RunPaths run{out_dir};
    fs::create_directories(run.dir);
    cfg.save(run.config_file());

    envs::PointMassTask task;
    task.kind = envs::PointMassReward::NegSquaredDistance;
    task.target = {0.0, 0.0};

    auto agent_cfg = cfg.ddpg_config();
    agent_cfg.seed_frames = cfg.finetune_seed_frames;
    ddpg::DdpgAgent agent(kObsDim, kActDim, agent_cfg, derive_seed(seed, kStreamOracle));

    envs::PointMassEnv env(cfg.pointmass_config(), task);
    ddpg::ReplayBuffer buffer(static_cast<std::size_t>(cfg.buffer_capacity), cfg.n_step,
                              static_cast<float>(cfg.gamma));
    Rng rng_env = make_rng(seed, derive_seed(kStreamOracle, kStreamFtEnv));
    Rng rng_action = make_rng(seed, derive_seed(kStreamOracle, kStreamFtAction));
    Rng rng_sample = make_rng(seed, derive_seed(kStreamOracle, kStreamFtSample));
    Rng rng_eval = make_rng(seed, derive_seed(kStreamOracle, kStreamFtEval));

    for (std::int64_t t = 0; t < cfg.oracle_steps; ++t) {
        if (t % cfg.episode_len == 0) env.reset(rng_env);
        const auto obs = float_obs(env.state());
        agent.set_noise_std(noise_at(cfg, t, cfg.oracle_steps));
        const auto action = agent.act(obs, true, t, rng_action);
        const auto res = env.step(std::vector<double>{static_cast<double>(action[0]), static_cast<double>(action[1])});
        buffer.add({obs, action, static_cast<float>(res.reward), float_obs(res.state), false,
                    static_cast<std::uint32_t>(t / cfg.episode_len)});
        if (t >= cfg.finetune_seed_frames && t % cfg.update_every == 0)
            agent.update(buffer.sample(cfg.batch_size, rng_sample));
    }

    // convergence: mean distance-to-center per step over evaluation episodes
    OracleSummary summary;
    envs::PointMassEnv eval_env(cfg.pointmass_config(), task);
    double dist_acc = 0.0;
    std::int64_t dist_n = 0;
    for (int e = 0; e < cfg.eval_episodes; ++e) {
        eval_env.reset(rng_eval);
        for (int t = 0; t < cfg.episode_len; ++t) {
            const auto obs = float_obs(eval_env.state());
            const auto act = agent.act(obs, false, 0, rng_eval);
            const auto res =
                eval_env.step(std::vector<double>{static_cast<double>(act[0]), static_cast<double>(act[1])});
            dist_acc += std::sqrt(res.state.pos[0] * res.state.pos[0] + res.state.pos[1] * res.state.pos[1]);
            ++dist_n;
        }
    }
    summary.mean_distance = dist_acc / static_cast<double>(dist_n);
    summary.converged = summary.mean_distance < 0.1;
    summary.actor_file = run.dir / "oracle_actor.mlp";
    nn::save_mlp_file(summary.actor_file, agent.actor());
    save_agent_checkpoint(run.dir / "oracle_agent.agent", agent);

    json meta;
    meta["kind"] = "oracle";
    meta["seed"] = seed;
    meta["steps"] = cfg.oracle_steps;
    meta["mean_distance"] = summary.mean_distance;
    meta["converged"] = summary.converged;
    write_json(run.run_meta(), meta);
    return summary;
}

namespace {

// Accepts either a plain weight snapshot or an agent checkpoint (reads the
// actor block).
nn::Mlp<float> load_actor_any(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingArtifact("actor snapshot not found: " + path.string());
    char magic[8];
    in.read(magic, 8);
    if (!in) throw MissingArtifact("truncated snapshot: " + path.string());
    if (std::memcmp(magic, kAgentMagic, 8) == 0) return nn::load_mlp(in);
    in.seekg(0);
    return nn::load_mlp(in);
}

}  // namespace

void eval_kl_curve(const fs::path& run_dir, const fs::path& reference_actor, const fs::path& out_csv) {
    RunPaths run{run_dir};
    if (!fs::exists(run.config_file())) throw MissingArtifact("no resolved config under " + run_dir.string());
    const auto cfg = ExperimentConfig::load(run.config_file());
    if (!fs::exists(reference_actor))
        throw MissingArtifact("reference actor not found: " + reference_actor.string() +
                              " (run train-oracle first)");
    const auto reference = load_actor_any(reference_actor);
    const auto checkpoints = list_checkpoints(run);
    if (checkpoints.empty()) throw MissingArtifact("no checkpoints under " + run.checkpoints_dir().string());
    const auto probes = probe_initial_states(cfg.probe_states, static_cast<std::uint64_t>(cfg.probe_seed));

    csv::Writer out(out_csv, {"step", "kl_mean", "kl_stderr"});
    for (const auto& [step, file] : checkpoints) {
        const auto actor = load_actor_any(file);
        // per-probe KLs for the stderr band
        std::vector<double> kls;
        kls.reserve(probes.size());
        for (const auto& probe : probes)
            kls.push_back(analysis::empirical_policy_kl(reference, actor, {probe}, cfg.policy_std));
        double m = 0.0;
        for (double k : kls) m += k;
        m /= static_cast<double>(kls.size());
        double var = 0.0;
        for (double k : kls) var += (k - m) * (k - m);
        const double se = kls.size() > 1 ? std::sqrt(var / ((kls.size() - 1.0) * kls.size())) : 0.0;
        out.row({static_cast<double>(step), m, se});
    }
}

void entropy_report(const fs::path& run_dir, const fs::path& out_csv) {
    RunPaths run{run_dir};
    const auto cfg = ExperimentConfig::load(run.config_file());
    if (!fs::exists(run.trajectory_csv()))
        throw MissingArtifact("no trajectory dump under " + run_dir.string() + " (set dump_states = true)");
    const auto traj = load_trajectory(run);
    const double fractions[4] = {0.05, 0.25, 0.5, 1.0};

    analysis::HistogramSpec pos_spec{cfg.bins_per_dim, {-1.0, -1.0}, {1.0, 1.0}};
    analysis::HistogramSpec vel_spec{cfg.bins_per_dim,
                                     {-cfg.max_speed, -cfg.max_speed},
                                     {cfg.max_speed, cfg.max_speed}};
    analysis::HistogramSpec joint_spec{cfg.bins_per_dim,
                                       {-1.0, -1.0, -cfg.max_speed, -cfg.max_speed},
                                       {1.0, 1.0, cfg.max_speed, cfg.max_speed}};

    csv::Writer out(out_csv, {"fraction", "step", "n_states", "entropy_pos", "entropy_vel", "entropy_joint"});
    for (double frac : fractions) {
        const auto step = static_cast<std::int64_t>(std::llround(frac * static_cast<double>(cfg.n_pretrain)));
        // trailing window of states collected up to this step
        std::size_t end = 0;
        while (end < traj.step.size() && traj.step[end] < static_cast<double>(step)) ++end;
        const std::size_t want = static_cast<std::size_t>(std::min<std::int64_t>(cfg.entropy_window, step));
        if (end < want)
            throw MissingArtifact("entropy: need " + std::to_string(want) + " states before step " +
                                  std::to_string(step) + ", trajectory has " + std::to_string(end));
        const std::size_t begin = end - want;
        std::vector<std::vector<double>> pos, vel, joint;
        pos.reserve(want);
        vel.reserve(want);
        joint.reserve(want);
        for (std::size_t i = begin; i < end; ++i) {
            pos.push_back({traj.pos_x[i], traj.pos_y[i]});
            vel.push_back({traj.vel_x[i], traj.vel_y[i]});
            joint.push_back({traj.pos_x[i], traj.pos_y[i], traj.vel_x[i], traj.vel_y[i]});
        }
        out.row({frac, static_cast<double>(step), static_cast<double>(want),
                 analysis::state_visitation_entropy(pos, pos_spec), analysis::state_visitation_entropy(vel, vel_spec),
                 analysis::state_visitation_entropy(joint, joint_spec)});
    }
}

void histogram_report(const fs::path& run_dir, const fs::path& out_csv) {
    RunPaths run{run_dir};
    const auto cfg = ExperimentConfig::load(run.config_file());
    if (!fs::exists(run.trajectory_csv()))
        throw MissingArtifact("no trajectory dump under " + run_dir.string() + " (set dump_states = true)");
    const auto traj = load_trajectory(run);
    const int bins = cfg.bins_per_dim;

    auto bin_of = [bins](double v, double lo, double hi) {
        int b = static_cast<int>((v - lo) / (hi - lo) * bins);
        return std::max(0, std::min(bins - 1, b));
    };
    std::vector<std::int64_t> pos_counts(static_cast<std::size_t>(bins) * bins, 0);
    std::vector<std::int64_t> vel_counts(static_cast<std::size_t>(bins) * bins, 0);
    for (std::size_t i = 0; i < traj.step.size(); ++i) {
        pos_counts[static_cast<std::size_t>(bin_of(traj.pos_x[i], -1.0, 1.0)) * bins +
                   bin_of(traj.pos_y[i], -1.0, 1.0)]++;
        vel_counts[static_cast<std::size_t>(bin_of(traj.vel_x[i], -cfg.max_speed, cfg.max_speed)) * bins +
                   bin_of(traj.vel_y[i], -cfg.max_speed, cfg.max_speed)]++;
    }
    csv::Writer out(out_csv, {"plane", "ix", "iy", "count"});
    for (int ix = 0; ix < bins; ++ix)
        for (int iy = 0; iy < bins; ++iy)
            out.row_raw({"position", std::to_string(ix), std::to_string(iy),
                         std::to_string(pos_counts[static_cast<std::size_t>(ix) * bins + iy])});
    for (int ix = 0; ix < bins; ++ix)
        for (int iy = 0; iy < bins; ++iy)
            out.row_raw({"velocity", std::to_string(ix), std::to_string(iy),
                         std::to_string(vel_counts[static_cast<std::size_t>(ix) * bins + iy])});
}

std::string stats_report(const fs::path& matrix_csv, int n_resamples, double level, std::uint64_t seed) {
    const auto matrix = analysis::RunMatrix::from_csv(matrix_csv);
    const auto scores = matrix.flatten();
    json report;
    report["tasks"] = matrix.tasks.size();
    report["seeds"] = matrix.seeds.size();
    report["level"] = level;
    report["resamples"] = n_resamples;
    const std::pair<const char*, analysis::Statistic> stats[] = {
        {"iqm", analysis::Statistic::Iqm},
        {"mean", analysis::Statistic::Mean},
        {"median", analysis::Statistic::Median},
        {"optimality_gap", analysis::Statistic::OptimalityGap},
    };
    for (const auto& [name, stat] : stats) {
        const auto ci = analysis::bootstrap_ci(matrix, stat, n_resamples, level, seed);
        json entry;
        entry["statistic"] = name;
        entry["point"] = analysis::evaluate_statistic(stat, scores);
        entry["ci_low"] = ci.lo;
        entry["ci_high"] = ci.hi;
        report["statistics"].push_back(entry);
    }
    return report.dump(2);
}

}  // namespace urlab::harness
