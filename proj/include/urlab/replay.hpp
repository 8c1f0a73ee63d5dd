#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "urlab/rng.hpp"

namespace urlab::ddpg {

struct Transition {
    std::vector<float> obs;
    std::vector<float> act;
    float reward = 0.0f;        // extrinsic at collection time (0 during pretraining)
    std::vector<float> next_obs;
    bool done = false;          // true termination only, never time-limit truncation
    std::uint32_t episode = 0;
};

// n-step minibatch. `next_obs` is s_{t+1} (intrinsic modules), `boot_obs` is
// s_{t+n} (bootstrap). `reward` holds sum_{i<n} gamma^i r_{t+i} and `discount`
// gamma^n * (1 - d).
template <typename S>
struct Batch {
    int size = 0;
    int obs_dim = 0;
    int act_dim = 0;
    std::vector<S> obs;       // size x obs_dim, row-major
    std::vector<S> act;       // size x act_dim
    std::vector<S> next_obs;  // size x obs_dim
    std::vector<S> boot_obs;  // size x obs_dim
    std::vector<S> reward;    // size
    std::vector<S> discount;  // size

    std::span<const S> obs_row(int i) const { return {obs.data() + static_cast<std::size_t>(i) * obs_dim, static_cast<std::size_t>(obs_dim)}; }
    std::span<const S> act_row(int i) const { return {act.data() + static_cast<std::size_t>(i) * act_dim, static_cast<std::size_t>(act_dim)}; }
    std::span<const S> next_obs_row(int i) const { return {next_obs.data() + static_cast<std::size_t>(i) * obs_dim, static_cast<std::size_t>(obs_dim)}; }
    std::span<const S> boot_obs_row(int i) const { return {boot_obs.data() + static_cast<std::size_t>(i) * obs_dim, static_cast<std::size_t>(obs_dim)}; }

    template <typename T>
    Batch<T> cast() const {
        Batch<T> out;
        out.size = size;
        out.obs_dim = obs_dim;
        out.act_dim = act_dim;
        out.obs.assign(obs.begin(), obs.end());
        out.act.assign(act.begin(), act.end());
        out.next_obs.assign(next_obs.begin(), next_obs.end());
        out.boot_obs.assign(boot_obs.begin(), boot_obs.end());
        out.reward.assign(reward.begin(), reward.end());
        out.discount.assign(discount.begin(), discount.end());
        return out;
    }
};

// Ring buffer with n-step sampling. Windows never straddle an episode
// boundary; a true terminal may only sit on the window's last slot, where it
// zeroes the bootstrap discount.
class ReplayBuffer {
public:
    ReplayBuffer(std::size_t capacity, int n_step, float gamma);

    void add(Transition t);
    std::size_t size() const { return count_; }
    std::size_t capacity() const { return capacity_; }
    int n_step() const { return n_step_; }

    Batch<float> sample(int batch_size, Rng& rng) const;

    const Transition& at(std::size_t logical) const;  // 0 = oldest

private:
    bool valid_head(std::size_t logical) const;

    std::size_t capacity_;
    int n_step_;
    float gamma_;
    std::vector<Transition> storage_;
    std::size_t next_ = 0;   // physical slot for the next insert
    std::size_t count_ = 0;
};

}  // namespace urlab::ddpg
