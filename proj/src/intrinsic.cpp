#include "urlab/intrinsic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "urlab/errors.hpp"

namespace urlab::intrinsic {

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

nn::Mlp<float> make_net(int in, const std::vector<int>& hidden, int out, nn::Activation last, std::uint64_t seed) {
    const auto sizes = net_sizes(in, hidden, out);
    return nn::Mlp<float>(sizes, net_acts(sizes.size() - 1, last), seed);
}

std::vector<float> concat(std::span<const float> a, std::span<const float> b) {
    std::vector<float> out;
    out.reserve(a.size() + b.size());
    out.insert(out.end(), a.begin(), a.end());
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

void check_batch(const ddpg::Batch<float>& batch) {
    if (batch.size <= 0) throw std::invalid_argument("intrinsic: empty batch");
}

}  // namespace

Variant variant_from_string(const std::string& name) {
    if (name == "rnd") return Variant::Rnd;
    if (name == "icm") return Variant::Icm;
    if (name == "disagreement") return Variant::Disagreement;
    if (name == "apt") return Variant::Apt;
    throw ConfigError("unknown intrinsic algorithm: " + name);
}

std::string variant_to_string(Variant v) {
    switch (v) {
        case Variant::Rnd: return "rnd";
        case Variant::Icm: return "icm";
        case Variant::Disagreement: return "disagreement";
        case Variant::Apt: return "apt";
    }
    return "?";
}

void RewardNormalizer::observe(std::span<const float> raw) {
    for (float r : raw) {
        count_ += 1.0;
        ema_sq_ = (1.0 - beta_) * ema_sq_ + beta_ * static_cast<double>(r) * r;
        correction_ = (1.0 - beta_) * correction_ + beta_;
    }
}

double RewardNormalizer::running_std() const {
    if (count_ < 2.0) return 1.0;
    // second moment about zero: rewards are scaled, not centered
    return std::sqrt(std::max(ema_sq_ / correction_, 0.0));
}

float RewardNormalizer::normalize(float raw) const {
    return static_cast<float>(raw / (running_std() + 1e-8));
}

// --- RND ---------------------------------------------------------------

RndModule::RndModule(const IntrinsicConfig& cfg, int obs_dim, std::uint64_t seed)
    : target_(make_net(obs_dim, cfg.hidden, cfg.rnd_embed_dim, nn::Activation::Identity, derive_seed(seed, 11))),
      predictor_(make_net(obs_dim, cfg.hidden, cfg.rnd_embed_dim, nn::Activation::Identity, derive_seed(seed, 12))),
      opt_(predictor_, cfg.lr) {}

float RndModule::prediction_error(std::span<const float> obs) const {
    const auto t = target_.forward(obs);
    const auto p = predictor_.forward(obs);
    float err = 0.0f;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const float d = t[i] - p[i];
        err += d * d;
    }
    return err;
}

IntrinsicResult RndModule::reward(const ddpg::Batch<float>& batch) const {
    check_batch(batch);
    IntrinsicResult res;
    res.reward.resize(batch.size);
    float total = 0.0f;
    for (int b = 0; b < batch.size; ++b) {
        res.reward[b] = prediction_error(batch.next_obs_row(b));
        total += res.reward[b];
    }
    res.loss = total / batch.size;
    return res;
}

float RndModule::update(const ddpg::Batch<float>& batch) {
    check_batch(batch);
    auto grads = predictor_.make_gradients();
    nn::ForwardTrace<float> trace;
    std::vector<float> out_grad(predictor_.output_size());
    float total = 0.0f;
    const float inv = 1.0f / batch.size;
    for (int b = 0; b < batch.size; ++b) {
        const auto obs = batch.next_obs_row(b);
        const auto t = target_.forward(obs);
        const auto p = predictor_.forward(obs, trace);
        float err = 0.0f;
        for (std::size_t i = 0; i < t.size(); ++i) {
            const float d = p[i] - t[i];
            err += d * d;
            out_grad[i] = 2.0f * d * inv;
        }
        total += err;
        predictor_.backward(trace, out_grad, grads);
    }
    opt_.step(predictor_, grads);
    return total * inv;
}

// --- ICM ---------------------------------------------------------------

IcmModule::IcmModule(const IntrinsicConfig& cfg, int obs_dim, int act_dim, std::uint64_t seed)
    : act_dim_(act_dim),
      encoder_(make_net(obs_dim, cfg.hidden, cfg.icm_embed_dim, nn::Activation::Identity, derive_seed(seed, 21))),
      forward_(make_net(cfg.icm_embed_dim + act_dim, cfg.hidden, cfg.icm_embed_dim, nn::Activation::Identity,
                        derive_seed(seed, 22))),
      inverse_(make_net(2 * cfg.icm_embed_dim, cfg.hidden, act_dim, nn::Activation::Tanh, derive_seed(seed, 23))),
      enc_opt_(encoder_, cfg.lr),
      fwd_opt_(forward_, cfg.lr),
      inv_opt_(inverse_, cfg.lr) {}

std::vector<float> IcmModule::predict_action(std::span<const float> obs, std::span<const float> next_obs) const {
    const auto e = encoder_.forward(obs);
    const auto e2 = encoder_.forward(next_obs);
    return inverse_.forward(concat(e, e2));
}

IntrinsicResult IcmModule::reward(const ddpg::Batch<float>& batch) const {
    check_batch(batch);
    IntrinsicResult res;
    res.reward.resize(batch.size);
    float total = 0.0f;
    for (int b = 0; b < batch.size; ++b) {
        const auto e = encoder_.forward(batch.obs_row(b));
        const auto e2 = encoder_.forward(batch.next_obs_row(b));
        const auto pred = forward_.forward(concat(e, batch.act_row(b)));
        float err = 0.0f;
        for (std::size_t i = 0; i < e2.size(); ++i) {
            const float d = pred[i] - e2[i];
            err += d * d;
        }
        res.reward[b] = err;
        total += err;
    }
    res.loss = total / batch.size;
    return res;
}

float IcmModule::update(const ddpg::Batch<float>& batch) {
    check_batch(batch);
    auto enc_grads = encoder_.make_gradients();
    auto fwd_grads = forward_.make_gradients();
    auto inv_grads = inverse_.make_gradients();
    auto inv_scratch = inverse_.make_gradients();
    nn::ForwardTrace<float> enc_trace, enc2_trace, fwd_trace, inv_trace;
    const float inv_b = 1.0f / batch.size;
    const int emb = encoder_.output_size();
    float total = 0.0f;
    for (int b = 0; b < batch.size; ++b) {
        const auto e = encoder_.forward(batch.obs_row(b), enc_trace);
        const auto e2 = encoder_.forward(batch.next_obs_row(b), enc2_trace);

        // forward-model loss trains the forward net only
        const auto pred = forward_.forward(concat(e, batch.act_row(b)), fwd_trace);
        std::vector<float> fwd_out(emb);
        float fwd_err = 0.0f;
        for (int i = 0; i < emb; ++i) {
            const float d = pred[i] - e2[i];
            fwd_err += d * d;
            fwd_out[i] = 2.0f * d * inv_b;
        }
        forward_.backward(fwd_trace, fwd_out, fwd_grads);

        // inverse-model loss trains the inverse net and the encoder
        const auto apred = inverse_.forward(concat(e, e2), inv_trace);
        std::vector<float> inv_out(act_dim_);
        float inv_err = 0.0f;
        for (int i = 0; i < act_dim_; ++i) {
            const float d = apred[i] - batch.act[static_cast<std::size_t>(b) * act_dim_ + i];
            inv_err += d * d;
            inv_out[i] = 2.0f * d * inv_b;
        }
        inv_scratch.zero();
        inverse_.backward(inv_trace, inv_out, inv_scratch);
        inv_grads.add_scaled(inv_scratch, 1.0f);
        encoder_.backward(enc_trace, std::span<const float>(inv_scratch.input.data(), emb), enc_grads);
        encoder_.backward(enc2_trace, std::span<const float>(inv_scratch.input.data() + emb, emb), enc_grads);

        total += fwd_err + inv_err;
    }
    enc_opt_.step(encoder_, enc_grads);
    fwd_opt_.step(forward_, fwd_grads);
    inv_opt_.step(inverse_, inv_grads);
    return total * inv_b;
}

// --- Disagreement -------------------------------------------------------

nn::Mlp<float> DisagreementModule::make_member(int obs_dim, int act_dim, const IntrinsicConfig& cfg,
                                               std::uint64_t seed) const {
    return make_net(obs_dim + act_dim, cfg.hidden, obs_dim, nn::Activation::Identity, seed);
}

DisagreementModule::DisagreementModule(const IntrinsicConfig& cfg, int obs_dim, int act_dim, std::uint64_t seed) {
    if (cfg.ensemble_size < 2) throw std::invalid_argument("disagreement: ensemble needs >= 2 members");
    for (int j = 0; j < cfg.ensemble_size; ++j)
        members_.push_back(make_member(obs_dim, act_dim, cfg, derive_seed(seed, 31 + j)));
    for (auto& m : members_) opts_.emplace_back(m, cfg.lr);
}

std::vector<const nn::Mlp<float>*> DisagreementModule::nets() const {
    std::vector<const nn::Mlp<float>*> out;
    for (const auto& m : members_) out.push_back(&m);
    return out;
}

IntrinsicResult DisagreementModule::reward(const ddpg::Batch<float>& batch) const {
    check_batch(batch);
    IntrinsicResult res;
    res.reward.resize(batch.size);
    const int obs_dim = batch.obs_dim;
    const int n = static_cast<int>(members_.size());
    std::vector<std::vector<float>> preds(n);
    float total_loss = 0.0f;
    for (int b = 0; b < batch.size; ++b) {
        const auto input = concat(batch.obs_row(b), batch.act_row(b));
        for (int j = 0; j < n; ++j) preds[j] = members_[j].forward(input);
        // variance across members, averaged over observation dims; double
        // accumulation keeps identical members at exactly zero
        double var_sum = 0.0;
        for (int i = 0; i < obs_dim; ++i) {
            double mean = 0.0;
            for (int j = 0; j < n; ++j) mean += preds[j][i];
            mean /= n;
            double var = 0.0;
            for (int j = 0; j < n; ++j) {
                const double d = preds[j][i] - mean;
                var += d * d;
            }
            var_sum += var / n;
        }
        res.reward[b] = static_cast<float>(var_sum / obs_dim);
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < obs_dim; ++i) {
                const float d = preds[j][i] - batch.next_obs[static_cast<std::size_t>(b) * obs_dim + i];
                total_loss += d * d;
            }
    }
    res.loss = total_loss / (batch.size * n);
    return res;
}

float DisagreementModule::update(const ddpg::Batch<float>& batch) {
    check_batch(batch);
    const int obs_dim = batch.obs_dim;
    const float inv_b = 1.0f / batch.size;
    float total = 0.0f;
    nn::ForwardTrace<float> trace;
    std::vector<float> out_grad(obs_dim);
    for (std::size_t j = 0; j < members_.size(); ++j) {
        auto grads = members_[j].make_gradients();
        for (int b = 0; b < batch.size; ++b) {
            const auto input = concat(batch.obs_row(b), batch.act_row(b));
            const auto pred = members_[j].forward(input, trace);
            float err = 0.0f;
            for (int i = 0; i < obs_dim; ++i) {
                const float d = pred[i] - batch.next_obs[static_cast<std::size_t>(b) * obs_dim + i];
                err += d * d;
                out_grad[i] = 2.0f * d * inv_b;
            }
            total += err;
            members_[j].backward(trace, out_grad, grads);
        }
        opts_[j].step(members_[j], grads);
    }
    return total / (batch.size * members_.size());
}

// --- APT ---------------------------------------------------------------

AptModule::AptModule(const IntrinsicConfig& cfg) : k_(cfg.apt_k), eps_(cfg.apt_eps) {
    if (k_ < 1) throw std::invalid_argument("apt: k must be >= 1");
    if (eps_ <= 0.0f) throw std::invalid_argument("apt: distance floor must be positive");
}

IntrinsicResult AptModule::reward(const ddpg::Batch<float>& batch) const {
    check_batch(batch);
    if (batch.size < k_ + 1)
        throw std::invalid_argument("apt: batch of " + std::to_string(batch.size) + " is smaller than k+1=" +
                                    std::to_string(k_ + 1));
    // particle reward: mean log distance to the k nearest latent neighbors,
    // identity encoder over the observation
    IntrinsicResult res;
    res.reward.resize(batch.size);
    const int dim = batch.obs_dim;
    std::vector<float> dists(batch.size);
    for (int b = 0; b < batch.size; ++b) {
        const auto zb = batch.next_obs_row(b);
        int n = 0;
        for (int o = 0; o < batch.size; ++o) {
            if (o == b) continue;
            const auto zo = batch.next_obs_row(o);
            float d2 = 0.0f;
            for (int i = 0; i < dim; ++i) {
                const float d = zb[i] - zo[i];
                d2 += d * d;
            }
            dists[n++] = std::sqrt(d2);
        }
        std::nth_element(dists.begin(), dists.begin() + (k_ - 1), dists.begin() + n);
        float acc = 0.0f;
        for (int i = 0; i < k_; ++i) acc += std::log(std::max(dists[i], eps_));
        res.reward[b] = acc / k_;
    }
    res.loss = 0.0f;
    return res;
}

float AptModule::update(const ddpg::Batch<float>&) { return 0.0f; }

// --- factory -------------------------------------------------------------

std::unique_ptr<IntrinsicModule> make_intrinsic(const IntrinsicConfig& cfg, int obs_dim, int act_dim,
                                                std::uint64_t seed) {
    switch (cfg.variant) {
        case Variant::Rnd: return std::make_unique<RndModule>(cfg, obs_dim, seed);
        case Variant::Icm: return std::make_unique<IcmModule>(cfg, obs_dim, act_dim, seed);
        case Variant::Disagreement: return std::make_unique<DisagreementModule>(cfg, obs_dim, act_dim, seed);
        case Variant::Apt: return std::make_unique<AptModule>(cfg);
    }
    throw ConfigError("unknown intrinsic variant");
}

}  // namespace urlab::intrinsic
