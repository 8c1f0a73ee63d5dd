#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "urlab/ddpg.hpp"
#include "urlab/mlp.hpp"

namespace urlab::polter {

// Pretraining step indices at which the current actor is frozen into the
// ensemble. Entries are consumed at episode boundaries: an entry fires at the
// first boundary at-or-after it, exactly once.
struct SnapshotSchedule {
    std::vector<std::int64_t> entries;
    std::size_t consumed = 0;

    // {25k, 50k, 100k, 200k, 400k, 800k, 1.6M}: k=7 members over 2M steps.
    static SnapshotSchedule reference();

    // Reference shape scaled to a different pretraining length.
    static SnapshotSchedule scaled(std::int64_t n_pretrain);

    bool exhausted() const { return consumed >= entries.size(); }
    std::int64_t next_entry() const { return exhausted() ? -1 : entries[consumed]; }
    void validate() const;
};

template <typename S>
struct EnsembleMember {
    nn::Mlp<S> actor;       // frozen copy
    std::int64_t entry = 0;      // schedule entry this member consumed
    std::int64_t added_at = 0;   // episode-boundary step at which it was added
};

// Uniform mixture of frozen actor snapshots; weights are all 1/k.
template <typename S>
struct EnsemblePolicy {
    std::vector<EnsembleMember<S>> members;

    int size() const { return static_cast<int>(members.size()); }
    double weight() const { return members.empty() ? 0.0 : 1.0 / members.size(); }

    std::vector<S> mean_action(std::span<const S> obs) const {
        std::vector<S> mean;
        for (const auto& m : members) {
            auto a = m.actor.forward(obs);
            if (mean.empty())
                mean = std::move(a);
            else
                for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += a[i];
        }
        const S inv = S(1) / static_cast<S>(members.size());
        for (auto& v : mean) v *= inv;
        return mean;
    }
};

enum class KlMode { UpperBound, MeanAction };

struct PolterConfig {
    double alpha = 1.0;   // regularization strength; 0 disables exactly
    double sigma = 0.2;   // Gaussian std interpreting each deterministic actor
    KlMode mode = KlMode::UpperBound;
};

// Called at episode boundaries. Consumes every unconsumed entry <= step and
// freezes a copy of the actor for each; returns the consumed entries.
template <typename S>
std::vector<std::int64_t> maybe_snapshot(EnsemblePolicy<S>& ensemble, SnapshotSchedule& schedule, std::int64_t step,
                                         const nn::Mlp<S>& actor) {
    std::vector<std::int64_t> taken;
    while (!schedule.exhausted() && schedule.next_entry() <= step) {
        ensemble.members.push_back({actor, schedule.entries[schedule.consumed], step});
        taken.push_back(schedule.entries[schedule.consumed]);
        ++schedule.consumed;
    }
    return taken;
}

// KL term between the snapshot mixture and the current actor, both read as
// Gaussians N(mu(s), sigma^2 I) on the given states:
//   UpperBound: mean_b (1/k) sum_k ||mu_k(s_b) - mu(s_b)||^2 / (2 sigma^2)
//   MeanAction: mean_b ||mean_k mu_k(s_b) - mu(s_b)||^2 / (2 sigma^2)
// UpperBound >= MeanAction, equal iff all members agree; both share the same
// actor gradient (mu - mean_k mu_k)/sigma^2 since they differ by a
// member-spread constant. Gradients flow into the current actor only.
// k = 0 returns 0 with zero gradients. The caller scales by alpha.
template <typename S>
ddpg::LossResult<S> polter_term(const EnsemblePolicy<S>& ensemble, const nn::Mlp<S>& actor,
                                std::span<const S> states, int obs_dim, const PolterConfig& cfg) {
    ddpg::LossResult<S> result;
    result.grads = actor.make_gradients();
    if (ensemble.members.empty()) return result;
    if (obs_dim <= 0 || states.size() % static_cast<std::size_t>(obs_dim) != 0)
        throw std::invalid_argument("polter_term: state batch not a multiple of obs_dim");
    const int batch = static_cast<int>(states.size()) / obs_dim;
    if (batch == 0) throw std::invalid_argument("polter_term: empty state batch");

    const int act_dim = actor.output_size();
    const S inv_k = S(1) / static_cast<S>(ensemble.members.size());
    const S inv_b = S(1) / static_cast<S>(batch);
    const S inv_2s2 = S(1) / (S(2) * static_cast<S>(cfg.sigma) * static_cast<S>(cfg.sigma));

    nn::ForwardTrace<S> trace;
    std::vector<S> out_grad(act_dim);
    S total = S(0);
    for (int b = 0; b < batch; ++b) {
        const std::span<const S> obs = states.subspan(static_cast<std::size_t>(b) * obs_dim, obs_dim);
        const auto mu = actor.forward(obs, trace);
        std::vector<S> mean_member(act_dim, S(0));
        S spread = S(0);
        for (const auto& m : ensemble.members) {
            const auto mu_k = m.actor.forward(obs);
            S d2 = S(0);
            for (int i = 0; i < act_dim; ++i) {
                const S d = mu_k[i] - mu[i];
                d2 += d * d;
                mean_member[i] += mu_k[i];
            }
            spread += d2;
        }
        for (auto& v : mean_member) v *= inv_k;
        S value;
        if (cfg.mode == KlMode::UpperBound) {
            value = inv_k * spread * inv_2s2;
        } else {
            S d2 = S(0);
            for (int i = 0; i < act_dim; ++i) {
                const S d = mean_member[i] - mu[i];
                d2 += d * d;
            }
            value = d2 * inv_2s2;
        }
        total += value;
        for (int i = 0; i < act_dim; ++i)
            out_grad[i] = (mu[i] - mean_member[i]) * S(2) * inv_2s2 * inv_b;
        actor.backward(trace, out_grad, result.grads);
    }
    result.value = total * inv_b;
    return result;
}

}  // namespace urlab::polter
