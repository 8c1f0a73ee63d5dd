#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "support/gradcheck.hpp"
#include "urlab/ddpg.hpp"
#include "urlab/polter.hpp"

using namespace urlab;
using namespace urlab::polter;
using nn::Activation;
using nn::Mlp;

namespace {

// Actor whose output is exactly its bias vector.
template <typename S>
Mlp<S> constant_actor(std::vector<S> out) {
    Mlp<S> net({4, static_cast<int>(out.size())}, {Activation::Identity}, 0);
    std::fill(net.layers()[0].weight.begin(), net.layers()[0].weight.end(), S(0));
    net.layers()[0].bias = std::move(out);
    return net;
}

template <typename S>
std::vector<S> flat_states(Rng& rng, int n, int dim) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<S> v(static_cast<std::size_t>(n) * dim);
    for (auto& x : v) x = static_cast<S>(u(rng));
    return v;
}

double dot(const nn::MlpGradients<double>& a, const nn::MlpGradients<double>& b) {
    double acc = 0.0;
    for (std::size_t li = 0; li < a.layers.size(); ++li) {
        for (std::size_t i = 0; i < a.layers[li].weight.size(); ++i)
            acc += a.layers[li].weight[i] * b.layers[li].weight[i];
        for (std::size_t i = 0; i < a.layers[li].bias.size(); ++i)
            acc += a.layers[li].bias[i] * b.layers[li].bias[i];
    }
    return acc;
}

}  // namespace

TEST_CASE("schedule: reference entries and scaling") {
    const auto ref = SnapshotSchedule::reference();
    const std::vector<std::int64_t> expected{25000, 50000, 100000, 200000, 400000, 800000, 1600000};
    CHECK(ref.entries == expected);

    const auto desk = SnapshotSchedule::scaled(200000);
    const std::vector<std::int64_t> desk_expected{2500, 5000, 10000, 20000, 40000, 80000, 160000};
    CHECK(desk.entries == desk_expected);
}

TEST_CASE("maybe_snapshot: inactive before the first entry") {
    EnsemblePolicy<float> ensemble;
    auto schedule = SnapshotSchedule::reference();
    const auto actor = constant_actor<float>({0.1f, 0.2f});
    const auto taken = maybe_snapshot(ensemble, schedule, 24800, actor);
    CHECK(taken.empty());
    CHECK(ensemble.size() == 0);
    CHECK(ensemble.weight() == 0.0);
}

TEST_CASE("maybe_snapshot: crossing the third entry gives k=3 with uniform weights") {
    EnsemblePolicy<float> ensemble;
    auto schedule = SnapshotSchedule::reference();
    const auto actor = constant_actor<float>({0.1f, 0.2f});
    maybe_snapshot(ensemble, schedule, 100000, actor);
    CHECK(ensemble.size() == 3);
    CHECK(ensemble.weight() == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(std::abs(ensemble.size() * ensemble.weight() - 1.0) < 1e-15);
}

TEST_CASE("maybe_snapshot: full reference run consumes all 7 entries at their steps") {
    EnsemblePolicy<float> ensemble;
    auto schedule = SnapshotSchedule::reference();
    const auto actor = constant_actor<float>({0.0f, 0.0f});
    const int episode_len = 200;  // every entry is a multiple of the episode length
    for (std::int64_t t = 0; t < 2000000; t += episode_len) maybe_snapshot(ensemble, schedule, t, actor);
    REQUIRE(ensemble.size() == 7);
    for (int i = 0; i < 7; ++i) {
        CHECK(ensemble.members[i].entry == SnapshotSchedule::reference().entries[i]);
        CHECK(ensemble.members[i].added_at == ensemble.members[i].entry);
    }
    CHECK(schedule.exhausted());
}

TEST_CASE("maybe_snapshot: 1000 random (schedule, episode length) pairs consume each entry at the first boundary at-or-after it") {
    Rng rng(2024);
    for (int trial = 0; trial < 1000; ++trial) {
        std::uniform_int_distribution<int> len_dist(1, 500);
        std::uniform_int_distribution<std::int64_t> total_dist(500, 20000);
        std::uniform_int_distribution<int> n_entries(1, 9);
        const int episode_len = len_dist(rng);
        const std::int64_t total = total_dist(rng);

        SnapshotSchedule schedule;
        std::uniform_int_distribution<std::int64_t> entry_dist(0, total + 2000);
        std::vector<std::int64_t> entries;
        const int n = n_entries(rng);
        for (int i = 0; i < n; ++i) entries.push_back(entry_dist(rng));
        std::sort(entries.begin(), entries.end());
        entries.erase(std::unique(entries.begin(), entries.end()), entries.end());
        schedule.entries = entries;

        EnsemblePolicy<float> ensemble;
        const auto actor = constant_actor<float>({0.0f, 0.0f});
        for (std::int64_t t = 0; t < total; t += episode_len) maybe_snapshot(ensemble, schedule, t, actor);

        // oracle: first multiple of episode_len at-or-after each entry, if it exists below total
        std::size_t expected_members = 0;
        for (const auto e : entries) {
            const std::int64_t boundary = ((e + episode_len - 1) / episode_len) * episode_len;
            if (boundary < total) {
                REQUIRE(expected_members < ensemble.members.size());
                CHECK(ensemble.members[expected_members].entry == e);
                CHECK(ensemble.members[expected_members].added_at == boundary);
                ++expected_members;
            }
        }
        CHECK(ensemble.members.size() == expected_members);  // each entry at most once
    }
}

TEST_CASE("ensemble: members are frozen copies") {
    EnsemblePolicy<float> ensemble;
    auto schedule = SnapshotSchedule::reference();
    auto actor = constant_actor<float>({0.5f, -0.5f});
    maybe_snapshot(ensemble, schedule, 30000, actor);
    const auto frozen = ensemble.members[0].actor;
    actor.layers()[0].bias = {9.0f, 9.0f};  // keep training the live actor
    CHECK(ensemble.members[0].actor.bitwise_equal(frozen));
    CHECK_FALSE(ensemble.members[0].actor.bitwise_equal(actor));
}

TEST_CASE("polter_term: zero for k=0 and when the actor matches every member") {
    PolterConfig cfg;
    Rng rng(3);
    const auto states = flat_states<double>(rng, 6, 4);

    EnsemblePolicy<double> empty;
    const auto actor = constant_actor<double>({0.3, -0.3});
    const auto none = polter_term<double>(empty, actor, states, 4, cfg);
    CHECK(none.value == 0.0);

    EnsemblePolicy<double> ensemble;
    ensemble.members.push_back({actor, 0, 0});
    ensemble.members.push_back({actor, 1, 1});
    const auto res = polter_term<double>(ensemble, actor, states, 4, cfg);
    CHECK(res.value == 0.0);
    for (const auto& lg : res.grads.layers) {
        for (double g : lg.weight) CHECK(g == 0.0);
        for (double g : lg.bias) CHECK(g == 0.0);
    }
}

TEST_CASE("polter_term: k=1 Gaussian KL with equal stds is ||dmu||^2 / (2 sigma^2)") {
    PolterConfig cfg;
    cfg.sigma = 0.2;
    EnsemblePolicy<double> ensemble;
    ensemble.members.push_back({constant_actor<double>({0.2, 0.0}), 0, 0});
    const auto actor = constant_actor<double>({0.0, 0.0});
    Rng rng(5);
    const auto states = flat_states<double>(rng, 10, 4);
    for (const auto mode : {KlMode::UpperBound, KlMode::MeanAction}) {
        cfg.mode = mode;
        const auto res = polter_term<double>(ensemble, actor, states, 4, cfg);
        CHECK(res.value == doctest::Approx(0.5).epsilon(1e-12));
    }
}

TEST_CASE("polter_term: upper bound dominates the mean-action form, equality iff members agree") {
    Rng rng(17);
    PolterConfig upper, mean;
    upper.mode = KlMode::UpperBound;
    mean.mode = KlMode::MeanAction;
    for (int trial = 0; trial < 50; ++trial) {
        EnsemblePolicy<double> ensemble;
        const int k = 1 + static_cast<int>(rng() % 5);
        for (int i = 0; i < k; ++i)
            ensemble.members.push_back({testsupport::random_net(rng, 4, 2, true, Activation::Tanh), i, i});
        const auto actor = testsupport::random_net(rng, 4, 2, true, Activation::Tanh);
        const auto states = flat_states<double>(rng, 5, 4);
        const auto vu = polter_term<double>(ensemble, actor, states, 4, upper);
        const auto vm = polter_term<double>(ensemble, actor, states, 4, mean);
        CHECK(vu.value >= vm.value - 1e-12);
        CHECK(vu.value >= 0.0);
        CHECK(vm.value >= 0.0);
    }
    // agreement case: all members identical -> the two modes coincide
    EnsemblePolicy<double> agree;
    const auto shared = testsupport::random_net(rng, 4, 2, true, Activation::Tanh);
    for (int i = 0; i < 4; ++i) agree.members.push_back({shared, i, i});
    const auto actor = testsupport::random_net(rng, 4, 2, true, Activation::Tanh);
    const auto states = flat_states<double>(rng, 5, 4);
    const auto vu = polter_term<double>(agree, actor, states, 4, upper);
    const auto vm = polter_term<double>(agree, actor, states, 4, mean);
    CHECK(vu.value == doctest::Approx(vm.value).epsilon(1e-12));
}

TEST_CASE("polter_term: actor gradients match finite differences in both modes") {
    Rng rng(4242);
    double worst = 0.0;
    for (int trial = 0; trial < 25; ++trial) {
        PolterConfig cfg;
        cfg.sigma = 0.2;
        cfg.mode = (trial % 2 == 0) ? KlMode::UpperBound : KlMode::MeanAction;
        EnsemblePolicy<double> ensemble;
        const int k = 1 + static_cast<int>(rng() % 4);
        for (int i = 0; i < k; ++i)
            ensemble.members.push_back({testsupport::random_net(rng, 4, 2, true, Activation::Tanh), i, i});
        auto actor = testsupport::random_net(rng, 4, 2, true, Activation::Tanh);
        const auto states = flat_states<double>(rng, 4, 4);
        const auto res = polter_term<double>(ensemble, actor, states, 4, cfg);
        const auto loss = [&]() { return polter_term<double>(ensemble, actor, states, 4, cfg).value; };
        worst = std::max(worst, testsupport::check_param_gradients(actor, loss, res.grads));
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("regularized update: alpha = 0 is bitwise identical to the plain update") {
    ddpg::DdpgConfig cfg;
    cfg.hidden = {8, 8};
    ddpg::DdpgAgent plain(4, 2, cfg, 321), regularized(4, 2, cfg, 321);
    EnsemblePolicy<float> ensemble;
    ensemble.members.push_back({constant_actor<float>({0.9f, -0.9f}), 0, 0});
    PolterConfig pcfg;
    pcfg.sigma = 0.2;

    Rng rng_a(6), rng_b(6);
    for (int step = 0; step < 10; ++step) {
        ddpg::Batch<float> batch;
        batch.size = 8;
        batch.obs_dim = 4;
        batch.act_dim = 2;
        batch.obs = flat_states<float>(rng_a, 8, 4);
        batch.act = flat_states<float>(rng_a, 8, 2);
        batch.next_obs = flat_states<float>(rng_a, 8, 4);
        batch.boot_obs = flat_states<float>(rng_a, 8, 4);
        batch.reward = flat_states<float>(rng_a, 8, 1);
        batch.discount.assign(8, 0.97f);
        ddpg::Batch<float> batch_b = batch;
        (void)rng_b;

        plain.update(batch);
        // alpha = 0: the caller skips the term entirely; scale 0 must also be exact
        const auto reg = polter_term<float>(ensemble, regularized.actor(), batch_b.obs, 4, pcfg);
        regularized.update(batch_b, &reg.grads, 0.0f);
    }
    CHECK(plain.actor().bitwise_equal(regularized.actor()));
    CHECK(plain.critic().bitwise_equal(regularized.critic()));
    CHECK(plain.actor_target().bitwise_equal(regularized.actor_target()));
}

TEST_CASE("regularized update: large alpha dominates the update direction") {
    Rng rng(88);
    auto actor = testsupport::random_net(rng, 4, 2, true, Activation::Tanh);
    auto critic = testsupport::random_net(rng, 6, 1, true);
    EnsemblePolicy<double> ensemble;
    ensemble.members.push_back({constant_actor<double>({0.8, 0.8}), 0, 0});
    PolterConfig pcfg;
    pcfg.sigma = 0.2;

    ddpg::Batch<double> batch;
    batch.size = 8;
    batch.obs_dim = 4;
    batch.act_dim = 2;
    batch.obs = flat_states<double>(rng, 8, 4);
    batch.act = flat_states<double>(rng, 8, 2);
    batch.next_obs = flat_states<double>(rng, 8, 4);
    batch.boot_obs = flat_states<double>(rng, 8, 4);
    batch.reward.assign(8, 0.0);
    batch.discount.assign(8, 0.97);

    const double alpha = 1000.0;
    const auto task = ddpg::actor_loss(actor, critic, batch);
    const auto reg = polter_term<double>(ensemble, actor, batch.obs, 4, pcfg);
    auto combined = task.grads;
    combined.add_scaled(reg.grads, alpha);
    const double cosine = dot(combined, reg.grads) / std::sqrt(dot(combined, combined) * dot(reg.grads, reg.grads));
    CHECK(cosine > 0.9);
}

TEST_CASE("ensemble: mean action averages the members") {
    EnsemblePolicy<double> ensemble;
    ensemble.members.push_back({constant_actor<double>({1.0, 0.0}), 0, 0});
    ensemble.members.push_back({constant_actor<double>({0.0, 1.0}), 1, 1});
    const std::vector<double> obs{0.1, 0.2, 0.3, 0.4};
    const auto mean = ensemble.mean_action(obs);
    CHECK(mean[0] == doctest::Approx(0.5));
    CHECK(mean[1] == doctest::Approx(0.5));
}
