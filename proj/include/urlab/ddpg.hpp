#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "urlab/adam.hpp"
#include "urlab/errors.hpp"
#include "urlab/mlp.hpp"
#include "urlab/replay.hpp"
#include "urlab/rng.hpp"

namespace urlab::ddpg {

struct DdpgConfig {
    std::vector<int> hidden{256, 256};
    float lr = 1e-4f;
    float gamma = 0.99f;
    int n_step = 3;
    float tau = 0.01f;          // target EMA rate
    float noise_std = 0.2f;
    float noise_clip = 0.3f;
    int update_every = 2;
    int seed_frames = 4000;
    int batch_size = 256;
};

template <typename S>
struct LossResult {
    S value = S(0);
    nn::MlpGradients<S> grads;
};

namespace detail {
template <typename S>
std::vector<S> concat(std::span<const S> a, std::span<const S> b) {
    std::vector<S> out;
    out.reserve(a.size() + b.size());
    out.insert(out.end(), a.begin(), a.end());
    out.insert(out.end(), b.begin(), b.end());
    return out;
}
}  // namespace detail

// Mean squared TD error against the frozen targets:
//   y = batch.reward + batch.discount * Q_targ(boot_obs, mu_targ(boot_obs)).
// batch.reward already carries the n-step sum and batch.discount gamma^n(1-d).
template <typename S>
LossResult<S> critic_loss(const nn::Mlp<S>& critic, const nn::Mlp<S>& critic_targ, const nn::Mlp<S>& actor_targ,
                          const Batch<S>& batch) {
    LossResult<S> result;
    result.grads = critic.make_gradients();
    nn::ForwardTrace<S> trace;
    S total = S(0);
    std::vector<S> targets(batch.size);
    for (int b = 0; b < batch.size; ++b) {
        const auto boot = batch.boot_obs_row(b);
        const auto a_next = actor_targ.forward(boot);
        const auto q_next = critic_targ.forward(detail::concat<S>(boot, a_next));
        targets[b] = batch.reward[b] + batch.discount[b] * q_next[0];
        if (!std::isfinite(static_cast<double>(targets[b]))) throw NumericError("critic_loss: non-finite TD target");
    }
    const S inv = S(1) / static_cast<S>(batch.size);
    for (int b = 0; b < batch.size; ++b) {
        const auto input = detail::concat<S>(batch.obs_row(b), batch.act_row(b));
        const auto q = critic.forward(input, trace);
        const S err = q[0] - targets[b];
        total += err * err;
        const S out_grad[1] = {S(2) * err * inv};
        critic.backward(trace, out_grad, result.grads);
    }
    result.value = total * inv;
    return result;
}

// -mean Q(s, mu(s)); gradients flow into the actor only, the critic is frozen.
template <typename S>
LossResult<S> actor_loss(const nn::Mlp<S>& actor, const nn::Mlp<S>& critic, const Batch<S>& batch) {
    LossResult<S> result;
    result.grads = actor.make_gradients();
    auto critic_scratch = critic.make_gradients();
    nn::ForwardTrace<S> actor_trace, critic_trace;
    S total = S(0);
    const S inv = S(1) / static_cast<S>(batch.size);
    const int obs_dim = batch.obs_dim;
    for (int b = 0; b < batch.size; ++b) {
        const auto obs = batch.obs_row(b);
        const auto action = actor.forward(obs, actor_trace);
        const auto q = critic.forward(detail::concat<S>(obs, action), critic_trace);
        total += q[0];
        critic_scratch.zero();
        const S out_grad[1] = {-inv};
        critic.backward(critic_trace, out_grad, critic_scratch);
        // slice of the critic's input gradient belonging to the action
        std::span<const S> action_grad(critic_scratch.input.data() + obs_dim, action.size());
        actor.backward(actor_trace, action_grad, result.grads);
    }
    result.value = -total * inv;
    return result;
}

// Off-policy actor-critic on a deterministic policy, EMA target copies,
// clipped Gaussian exploration noise, uniform actions for the seed frames.
class DdpgAgent {
public:
    DdpgAgent(int obs_dim, int act_dim, const DdpgConfig& cfg, std::uint64_t seed);

    // explore=false: mu(s). explore=true: uniform before seed_frames, then
    // mu(s) + clip(eps, -c, c) re-clamped to the action box.
    std::vector<float> act(std::span<const float> obs, bool explore, std::int64_t step, Rng& rng) const;

    struct UpdateDiag {
        float critic_loss = 0.0f;
        float actor_loss = 0.0f;
    };

    // One critic step + one actor step (optionally with extra actor-gradient
    // terms pre-accumulated by the caller) + one EMA target update.
    UpdateDiag update(const Batch<float>& batch, const nn::MlpGradients<float>* extra_actor_grads = nullptr,
                      float extra_scale = 0.0f);

    // Critic step + target EMA only; the actor is left untouched. Used to
    // warm a fresh critic up before letting it steer a pretrained actor.
    UpdateDiag update_critic_only(const Batch<float>& batch);

    void ema_targets();

    const nn::Mlp<float>& actor() const { return actor_; }
    nn::Mlp<float>& actor() { return actor_; }
    const nn::Mlp<float>& critic() const { return critic_; }
    nn::Mlp<float>& critic() { return critic_; }
    const nn::Mlp<float>& actor_target() const { return actor_targ_; }
    nn::Mlp<float>& actor_target() { return actor_targ_; }
    const nn::Mlp<float>& critic_target() const { return critic_targ_; }
    nn::Mlp<float>& critic_target() { return critic_targ_; }
    nn::AdamOptimizer<float>& actor_opt() { return actor_opt_; }
    nn::AdamOptimizer<float>& critic_opt() { return critic_opt_; }
    const nn::AdamOptimizer<float>& actor_opt() const { return actor_opt_; }
    const nn::AdamOptimizer<float>& critic_opt() const { return critic_opt_; }

    const DdpgConfig& config() const { return cfg_; }
    int obs_dim() const { return obs_dim_; }
    int act_dim() const { return act_dim_; }

    void set_noise_std(float std) { cfg_.noise_std = std; }
    void reset_optimizers();

private:
    int obs_dim_;
    int act_dim_;
    DdpgConfig cfg_;
    nn::Mlp<float> actor_, critic_, actor_targ_, critic_targ_;
    nn::AdamOptimizer<float> actor_opt_, critic_opt_;
};

}  // namespace urlab::ddpg
