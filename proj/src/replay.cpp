#include "urlab/replay.hpp"

#include <cmath>
#include <stdexcept>

namespace urlab::ddpg {

ReplayBuffer::ReplayBuffer(std::size_t capacity, int n_step, float gamma)
    : capacity_(capacity), n_step_(n_step), gamma_(gamma) {
    if (capacity == 0) throw std::invalid_argument("replay: capacity must be positive");
    if (n_step < 1) throw std::invalid_argument("replay: n_step must be >= 1");
    storage_.reserve(std::min(capacity, std::size_t(1) << 20));
}

void ReplayBuffer::add(Transition t) {
    if (count_ < capacity_) {
        storage_.push_back(std::move(t));
        ++count_;
        next_ = count_ % capacity_;
    } else {
        storage_[next_] = std::move(t);
        next_ = (next_ + 1) % capacity_;
    }
}

const Transition& ReplayBuffer::at(std::size_t logical) const {
    if (logical >= count_) throw std::out_of_range("replay: index past end");
    if (count_ < capacity_) return storage_[logical];
    return storage_[(next_ + logical) % capacity_];
}

bool ReplayBuffer::valid_head(std::size_t logical) const {
    if (logical + n_step_ > count_) return false;
    const std::uint32_t episode = at(logical).episode;
    for (int i = 1; i < n_step_; ++i)
        if (at(logical + i).episode != episode) return false;
    return true;
}

Batch<float> ReplayBuffer::sample(int batch_size, Rng& rng) const {
    if (batch_size <= 0) throw std::invalid_argument("replay: batch_size must be positive");
    if (count_ < static_cast<std::size_t>(n_step_)) throw std::runtime_error("replay: not enough transitions");

    const Transition& probe = at(0);
    Batch<float> batch;
    batch.size = batch_size;
    batch.obs_dim = static_cast<int>(probe.obs.size());
    batch.act_dim = static_cast<int>(probe.act.size());
    batch.obs.resize(static_cast<std::size_t>(batch_size) * batch.obs_dim);
    batch.act.resize(static_cast<std::size_t>(batch_size) * batch.act_dim);
    batch.next_obs.resize(static_cast<std::size_t>(batch_size) * batch.obs_dim);
    batch.boot_obs.resize(static_cast<std::size_t>(batch_size) * batch.obs_dim);
    batch.reward.resize(batch_size);
    batch.discount.resize(batch_size);

    std::uniform_int_distribution<std::size_t> pick(0, count_ - 1);
    for (int b = 0; b < batch_size; ++b) {
        std::size_t head = 0;
        bool found = false;
        for (int attempt = 0; attempt < 10000; ++attempt) {
            head = pick(rng);
            if (valid_head(head)) {
                found = true;
                break;
            }
        }
        if (!found) throw std::runtime_error("replay: no valid n-step window found");

        const Transition& first = at(head);
        const Transition& last = at(head + n_step_ - 1);
        float reward = 0.0f;
        float g = 1.0f;
        for (int i = 0; i < n_step_; ++i) {
            reward += g * at(head + i).reward;
            g *= gamma_;
        }
        std::copy(first.obs.begin(), first.obs.end(), batch.obs.begin() + static_cast<std::size_t>(b) * batch.obs_dim);
        std::copy(first.act.begin(), first.act.end(), batch.act.begin() + static_cast<std::size_t>(b) * batch.act_dim);
        std::copy(first.next_obs.begin(), first.next_obs.end(),
                  batch.next_obs.begin() + static_cast<std::size_t>(b) * batch.obs_dim);
        std::copy(last.next_obs.begin(), last.next_obs.end(),
                  batch.boot_obs.begin() + static_cast<std::size_t>(b) * batch.obs_dim);
        batch.reward[b] = reward;
        batch.discount[b] = last.done ? 0.0f : g;  // g == gamma^n here
    }
    return batch;
}

}  // namespace urlab::ddpg
