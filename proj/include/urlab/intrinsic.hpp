#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "urlab/adam.hpp"
#include "urlab/mlp.hpp"
#include "urlab/replay.hpp"

namespace urlab::intrinsic {

enum class Variant { Rnd, Icm, Disagreement, Apt };

Variant variant_from_string(const std::string& name);
std::string variant_to_string(Variant v);

struct IntrinsicConfig {
    Variant variant = Variant::Rnd;
    std::vector<int> hidden{256, 256};
    int rnd_embed_dim = 64;
    int icm_embed_dim = 32;
    int ensemble_size = 5;   // disagreement forward models
    int apt_k = 12;          // latent nearest neighbors
    float apt_eps = 1e-6f;   // distance floor inside the log
    float lr = 1e-4f;
};

// Running std without mean subtraction; rewards are divided by the std so the
// stream keeps a bounded scale while preserving sign. The second moment is an
// exponential moving average (bias-corrected), so the scale tracks the recent
// reward distribution instead of being frozen by early large errors.
class RewardNormalizer {
public:
    explicit RewardNormalizer(double horizon = 50000.0) : beta_(1.0 / horizon) {}

    void observe(std::span<const float> raw);
    float normalize(float raw) const;
    double running_std() const;
    double count() const { return count_; }

private:
    double beta_;
    double count_ = 0.0;
    double ema_sq_ = 0.0;
    double correction_ = 0.0;  // 1 - (1-beta)^count
};

struct IntrinsicResult {
    std::vector<float> reward;  // raw, per batch row
    float loss = 0.0f;          // current self-supervised loss
};

class IntrinsicModule {
public:
    virtual ~IntrinsicModule() = default;
    virtual Variant variant() const = 0;

    // Raw rewards and the predictor loss for this batch; no state mutated.
    virtual IntrinsicResult reward(const ddpg::Batch<float>& batch) const = 0;

    // One gradient step on the learned predictors; returns the loss.
    virtual float update(const ddpg::Batch<float>& batch) = 0;

    // Learned nets for snapshotting, in a stable order (empty for APT).
    virtual std::vector<const nn::Mlp<float>*> nets() const = 0;

    RewardNormalizer& normalizer() { return normalizer_; }
    const RewardNormalizer& normalizer() const { return normalizer_; }

private:
    RewardNormalizer normalizer_;
};

std::unique_ptr<IntrinsicModule> make_intrinsic(const IntrinsicConfig& cfg, int obs_dim, int act_dim,
                                                std::uint64_t seed);

// Exposed for tests: the frozen target net of RND.
class RndModule : public IntrinsicModule {
public:
    RndModule(const IntrinsicConfig& cfg, int obs_dim, std::uint64_t seed);
    Variant variant() const override { return Variant::Rnd; }
    IntrinsicResult reward(const ddpg::Batch<float>& batch) const override;
    float update(const ddpg::Batch<float>& batch) override;
    std::vector<const nn::Mlp<float>*> nets() const override { return {&target_, &predictor_}; }

    const nn::Mlp<float>& target() const { return target_; }
    const nn::Mlp<float>& predictor() const { return predictor_; }
    nn::Mlp<float>& predictor() { return predictor_; }

    // prediction error ||f_target(x) - f_pred(x)||^2 for one observation
    float prediction_error(std::span<const float> obs) const;

private:
    nn::Mlp<float> target_;     // frozen after construction
    nn::Mlp<float> predictor_;
    nn::AdamOptimizer<float> opt_;
};

class IcmModule : public IntrinsicModule {
public:
    IcmModule(const IntrinsicConfig& cfg, int obs_dim, int act_dim, std::uint64_t seed);
    Variant variant() const override { return Variant::Icm; }
    IntrinsicResult reward(const ddpg::Batch<float>& batch) const override;
    float update(const ddpg::Batch<float>& batch) override;
    std::vector<const nn::Mlp<float>*> nets() const override { return {&encoder_, &forward_, &inverse_}; }

    std::vector<float> predict_action(std::span<const float> obs, std::span<const float> next_obs) const;

private:
    int act_dim_;
    nn::Mlp<float> encoder_;   // obs -> embedding
    nn::Mlp<float> forward_;   // embedding + action -> embedding
    nn::Mlp<float> inverse_;   // embedding pair -> action
    nn::AdamOptimizer<float> enc_opt_, fwd_opt_, inv_opt_;
};

class DisagreementModule : public IntrinsicModule {
public:
    DisagreementModule(const IntrinsicConfig& cfg, int obs_dim, int act_dim, std::uint64_t seed);
    Variant variant() const override { return Variant::Disagreement; }
    IntrinsicResult reward(const ddpg::Batch<float>& batch) const override;
    float update(const ddpg::Batch<float>& batch) override;
    std::vector<const nn::Mlp<float>*> nets() const override;

    std::vector<nn::Mlp<float>>& members() { return members_; }

private:
    nn::Mlp<float> make_member(int obs_dim, int act_dim, const IntrinsicConfig& cfg, std::uint64_t seed) const;
    std::vector<nn::Mlp<float>> members_;  // obs + action -> predicted next obs
    std::vector<nn::AdamOptimizer<float>> opts_;
};

class AptModule : public IntrinsicModule {
public:
    AptModule(const IntrinsicConfig& cfg);
    Variant variant() const override { return Variant::Apt; }
    IntrinsicResult reward(const ddpg::Batch<float>& batch) const override;
    float update(const ddpg::Batch<float>& batch) override;  // identity encoder: nothing to train
    std::vector<const nn::Mlp<float>*> nets() const override { return {}; }

private:
    int k_;
    float eps_;
};

}  // namespace urlab::intrinsic
