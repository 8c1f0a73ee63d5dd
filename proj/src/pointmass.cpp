#include "urlab/pointmass.hpp"

#include <cmath>
#include <stdexcept>

namespace urlab::envs {

PointMassStep pointmass_step(const PointMassConfig& cfg, const PointMassTask& task, const PointMassState& state,
                             std::span<const double> action) {
    if (action.size() != 2) throw std::invalid_argument("pointmass: action must have 2 components");
    for (double a : action)
        if (!std::isfinite(a)) throw std::invalid_argument("pointmass: non-finite action component");

    PointMassState next;
    for (int i = 0; i < 2; ++i) next.vel[i] = cfg.damping * state.vel[i] + cfg.dt * cfg.force_gain * action[i];
    const double speed = std::sqrt(next.vel[0] * next.vel[0] + next.vel[1] * next.vel[1]);
    if (speed > cfg.max_speed) {
        const double scale = cfg.max_speed / speed;
        next.vel[0] *= scale;
        next.vel[1] *= scale;
    }
    for (int i = 0; i < 2; ++i) {
        double p = state.pos[i] + cfg.dt * next.vel[i];
        if (p < -1.0) {
            p = -1.0;
            next.vel[i] = 0.0;
        } else if (p > 1.0) {
            p = 1.0;
            next.vel[i] = 0.0;
        }
        next.pos[i] = p;
    }

    double reward = 0.0;  // reward-free pretraining emits exactly 0
    if (task.kind != PointMassReward::Free) {
        const double dx = next.pos[0] - task.target[0];
        const double dy = next.pos[1] - task.target[1];
        const double d2 = dx * dx + dy * dy;
        if (task.kind == PointMassReward::GaussianBump)
            reward = task.reward_scale * std::exp(-d2 / (task.reward_sigma * task.reward_sigma));
        else
            reward = -task.reward_scale * d2;
    }
    return {next, reward, false};
}

PointMassState pointmass_reset(Rng& rng) {
    std::uniform_real_distribution<double> pos(-1.0, 1.0);
    PointMassState s;
    s.pos = {pos(rng), pos(rng)};
    s.vel = {0.0, 0.0};
    return s;
}

}  // namespace urlab::envs
