#include "urlab/ddpg.hpp"

#include <algorithm>

namespace urlab::ddpg {

namespace {

std::vector<int> net_sizes(int in, const std::vector<int>& hidden, int out) {
    std::vector<int> sizes;
    sizes.push_back(in);
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(out);
    return sizes;
}

std::vector<nn::Activation> net_acts(std::size_t n_layers, nn::Activation last) {
    std::vector<nn::Activation> acts(n_layers, nn::Activation::ReLU);
    acts.back() = last;
    return acts;
}

}  // namespace

DdpgAgent::DdpgAgent(int obs_dim, int act_dim, const DdpgConfig& cfg, std::uint64_t seed)
    : obs_dim_(obs_dim), act_dim_(act_dim), cfg_(cfg) {
    const auto actor_sizes = net_sizes(obs_dim, cfg.hidden, act_dim);
    const auto critic_sizes = net_sizes(obs_dim + act_dim, cfg.hidden, 1);
    // ReLU hidden, Tanh actor output scaled to the [-1,1] action box.
    actor_ = nn::Mlp<float>(actor_sizes, net_acts(actor_sizes.size() - 1, nn::Activation::Tanh),
                            derive_seed(seed, 1));
    critic_ = nn::Mlp<float>(critic_sizes, net_acts(critic_sizes.size() - 1, nn::Activation::Identity),
                             derive_seed(seed, 2));
    actor_targ_ = actor_;
    critic_targ_ = critic_;
    actor_opt_ = nn::AdamOptimizer<float>(actor_, cfg.lr);
    critic_opt_ = nn::AdamOptimizer<float>(critic_, cfg.lr);
}

std::vector<float> DdpgAgent::act(std::span<const float> obs, bool explore, std::int64_t step, Rng& rng) const {
    if (static_cast<int>(obs.size()) != obs_dim_)
        throw std::invalid_argument("act: observation size " + std::to_string(obs.size()) + ", expected " +
                                    std::to_string(obs_dim_));
    if (explore && step < cfg_.seed_frames) {
        std::uniform_real_distribution<float> uniform(-1.0f, 1.0f);
        std::vector<float> a(act_dim_);
        for (auto& v : a) v = uniform(rng);
        return a;
    }
    auto a = actor_.forward(obs);
    if (explore) {
        std::normal_distribution<float> noise(0.0f, cfg_.noise_std);
        for (auto& v : a) {
            const float eps = std::clamp(noise(rng), -cfg_.noise_clip, cfg_.noise_clip);
            v = std::clamp(v + eps, -1.0f, 1.0f);
        }
    }
    return a;
}

DdpgAgent::UpdateDiag DdpgAgent::update(const Batch<float>& batch, const nn::MlpGradients<float>* extra_actor_grads,
                                        float extra_scale) {
    UpdateDiag diag;
    auto critic_result = critic_loss(critic_, critic_targ_, actor_targ_, batch);
    critic_opt_.step(critic_, critic_result.grads);
    diag.critic_loss = critic_result.value;

    auto actor_result = actor_loss(actor_, critic_, batch);
    if (extra_actor_grads != nullptr && extra_scale != 0.0f)
        actor_result.grads.add_scaled(*extra_actor_grads, extra_scale);
    actor_opt_.step(actor_, actor_result.grads);
    diag.actor_loss = actor_result.value;

    ema_targets();
    return diag;
}

DdpgAgent::UpdateDiag DdpgAgent::update_critic_only(const Batch<float>& batch) {
    UpdateDiag diag;
    auto critic_result = critic_loss(critic_, critic_targ_, actor_targ_, batch);
    critic_opt_.step(critic_, critic_result.grads);
    diag.critic_loss = critic_result.value;
    ema_targets();
    return diag;
}

void DdpgAgent::ema_targets() {
    actor_targ_.ema_from(actor_, cfg_.tau);
    critic_targ_.ema_from(critic_, cfg_.tau);
}

void DdpgAgent::reset_optimizers() {
    actor_opt_ = nn::AdamOptimizer<float>(actor_, cfg_.lr);
    critic_opt_ = nn::AdamOptimizer<float>(critic_, cfg_.lr);
}

}  // namespace urlab::ddpg
