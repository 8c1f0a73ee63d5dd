#pragma once

#include <array>
#include <span>

#include "urlab/rng.hpp"

namespace urlab::envs {

// 2-D plane in [-1,1]^2. A force moves a damped mass; walls clamp the
// position and zero the touching velocity component, so policies that keep
// pushing end up stuck on edges and corners.
struct PointMassState {
    std::array<double, 2> pos{0.0, 0.0};
    std::array<double, 2> vel{0.0, 0.0};
};

enum class PointMassReward {
    Free,               // pretraining: reward is exactly 0
    GaussianBump,       // finetuning: exp(-||p - target||^2 / sigma^2)
    NegSquaredDistance  // oracle training: -||p - target||^2
};

struct PointMassTask {
    PointMassReward kind = PointMassReward::Free;
    std::array<double, 2> target{0.0, 0.0};
    double reward_scale = 1.0;
    double reward_sigma = 0.2;
};

struct PointMassConfig {
    double dt = 0.05;
    double force_gain = 1.0;
    double damping = 0.95;
    double max_speed = 1.0;
    int episode_len = 200;
};

struct PointMassStep {
    PointMassState state;
    double reward = 0.0;
    bool done = false;  // episodes end by time limit only, never terminal
};

// Semi-implicit Euler: v' = clamp(damping*v + dt*gain*a), p' = clamp(p + dt*v').
PointMassStep pointmass_step(const PointMassConfig& cfg, const PointMassTask& task, const PointMassState& state,
                             std::span<const double> action);

// Position uniform on the plane, velocity zero.
PointMassState pointmass_reset(Rng& rng);

inline std::array<double, 4> observe(const PointMassState& s) {
    return {s.pos[0], s.pos[1], s.vel[0], s.vel[1]};
}

// Stateful wrapper used by the training loop.
class PointMassEnv {
public:
    PointMassEnv(const PointMassConfig& cfg, const PointMassTask& task) : cfg_(cfg), task_(task) {}

    const PointMassState& reset(Rng& rng) {
        state_ = pointmass_reset(rng);
        steps_ = 0;
        return state_;
    }

    PointMassStep step(std::span<const double> action) {
        auto r = pointmass_step(cfg_, task_, state_, action);
        state_ = r.state;
        ++steps_;
        return r;
    }

    bool episode_over() const { return steps_ >= cfg_.episode_len; }
    const PointMassState& state() const { return state_; }
    const PointMassConfig& config() const { return cfg_; }
    const PointMassTask& task() const { return task_; }

private:
    PointMassConfig cfg_;
    PointMassTask task_;
    PointMassState state_;
    int steps_ = 0;
};

}  // namespace urlab::envs
