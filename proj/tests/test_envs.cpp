#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "urlab/pointmass.hpp"
#include "urlab/tabular.hpp"
#include "urlab/tabular_analysis.hpp"

using namespace urlab;
using namespace urlab::envs;

namespace {

// Second integrator, written separately from the library path: advances raw
// doubles with its own clamp logic.
struct RefPoint {
    double px, py, vx, vy;
};

RefPoint reference_step(const PointMassConfig& c, RefPoint s, double ax, double ay) {
    double nvx = c.damping * s.vx + c.dt * c.force_gain * ax;
    double nvy = c.damping * s.vy + c.dt * c.force_gain * ay;
    const double speed = std::hypot(nvx, nvy);
    if (speed > c.max_speed) {
        nvx = nvx / speed * c.max_speed;
        nvy = nvy / speed * c.max_speed;
    }
    double npx = s.px + c.dt * nvx;
    double npy = s.py + c.dt * nvy;
    if (npx > 1.0) { npx = 1.0; nvx = 0.0; }
    if (npx < -1.0) { npx = -1.0; nvx = 0.0; }
    if (npy > 1.0) { npy = 1.0; nvy = 0.0; }
    if (npy < -1.0) { npy = -1.0; nvy = 0.0; }
    return {npx, npy, nvx, nvy};
}

}  // namespace

TEST_CASE("pointmass: zero velocity and zero action is a fixed point") {
    PointMassConfig cfg;
    PointMassState s;
    s.pos = {0.3, -0.4};
    const auto r = pointmass_step(cfg, PointMassTask{}, s, std::vector<double>{0.0, 0.0});
    CHECK(r.state.pos[0] == 0.3);
    CHECK(r.state.pos[1] == -0.4);
    CHECK(r.state.vel[0] == 0.0);
    CHECK(r.state.vel[1] == 0.0);
    CHECK(r.reward == 0.0);
    CHECK_FALSE(r.done);
}

TEST_CASE("pointmass: one semi-implicit Euler step by hand") {
    PointMassConfig cfg;
    cfg.dt = 0.05;
    cfg.force_gain = 1.0;
    cfg.damping = 1.0;
    PointMassState s;  // origin, at rest
    const auto r = pointmass_step(cfg, PointMassTask{}, s, std::vector<double>{1.0, 0.0});
    CHECK(r.state.vel[0] == doctest::Approx(0.05).epsilon(1e-15));
    CHECK(r.state.vel[1] == 0.0);
    CHECK(r.state.pos[0] == doctest::Approx(0.0025).epsilon(1e-15));
    CHECK(r.state.pos[1] == 0.0);
}

TEST_CASE("pointmass: 100-step constant-force rollout matches the reference integrator") {
    PointMassConfig cfg;  // defaults: damping 0.95, walls active
    PointMassState s;
    s.pos = {-0.9, 0.2};
    RefPoint ref{-0.9, 0.2, 0.0, 0.0};
    for (int t = 0; t < 100; ++t) {
        const auto r = pointmass_step(cfg, PointMassTask{}, s, std::vector<double>{0.8, -0.3});
        s = r.state;
        ref = reference_step(cfg, ref, 0.8, -0.3);
        CHECK(std::abs(s.pos[0] - ref.px) < 1e-12);
        CHECK(std::abs(s.pos[1] - ref.py) < 1e-12);
        CHECK(std::abs(s.vel[0] - ref.vx) < 1e-12);
        CHECK(std::abs(s.vel[1] - ref.vy) < 1e-12);
    }
}

TEST_CASE("pointmass: reset is deterministic per seed, uniform, and at rest") {
    Rng a(123), b(123);
    const auto s1 = pointmass_reset(a);
    const auto s2 = pointmass_reset(b);
    CHECK(s1.pos[0] == s2.pos[0]);
    CHECK(s1.pos[1] == s2.pos[1]);

    Rng rng(7);
    double mx = 0.0, my = 0.0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        const auto s = pointmass_reset(rng);
        CHECK(s.vel[0] == 0.0);
        CHECK(s.vel[1] == 0.0);
        CHECK(std::abs(s.pos[0]) <= 1.0);
        CHECK(std::abs(s.pos[1]) <= 1.0);
        mx += s.pos[0];
        my += s.pos[1];
    }
    CHECK(std::abs(mx / n) < 0.02);
    CHECK(std::abs(my / n) < 0.02);
}

TEST_CASE("pointmass: reward-free episodes sum to exactly zero") {
    PointMassConfig cfg;
    PointMassEnv env(cfg, PointMassTask{});
    Rng rng(5);
    env.reset(rng);
    Rng act_rng(9);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double total = 0.0;
    for (int t = 0; t < cfg.episode_len; ++t) total += env.step(std::vector<double>{u(act_rng), u(act_rng)}).reward;
    CHECK(total == 0.0);
}

TEST_CASE("pointmass: position never leaves the plane and wall contact zeroes velocity") {
    PointMassConfig cfg;
    PointMassState s;
    s.pos = {0.99, 0.0};
    auto r = pointmass_step(cfg, PointMassTask{}, s, std::vector<double>{1.0, 0.0});
    for (int t = 0; t < 400; ++t) {
        r = pointmass_step(cfg, PointMassTask{}, r.state, std::vector<double>{1.0, 0.0});
        CHECK(r.state.pos[0] <= 1.0);
    }
    CHECK(r.state.pos[0] == 1.0);
    CHECK(r.state.vel[0] == 0.0);  // stuck on the wall

    Rng rng(2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    PointMassState w;
    for (int t = 0; t < 5000; ++t) {
        w = pointmass_step(cfg, PointMassTask{}, w, std::vector<double>{u(rng), u(rng)}).state;
        CHECK(std::abs(w.pos[0]) <= 1.0);
        CHECK(std::abs(w.pos[1]) <= 1.0);
        CHECK(std::hypot(w.vel[0], w.vel[1]) <= cfg.max_speed + 1e-12);
    }
}

TEST_CASE("pointmass: dense target reward peaks at the target") {
    PointMassTask task;
    task.kind = PointMassReward::GaussianBump;
    task.target = {0.5, 0.5};
    task.reward_sigma = 0.2;
    PointMassConfig cfg;
    PointMassState s;
    s.pos = {0.5, 0.5};
    const auto at_target = pointmass_step(cfg, task, s, std::vector<double>{0.0, 0.0});
    CHECK(at_target.reward == doctest::Approx(1.0).epsilon(1e-12));
    s.pos = {-0.5, -0.5};
    const auto far = pointmass_step(cfg, task, s, std::vector<double>{0.0, 0.0});
    CHECK(far.reward < 1e-6);
}

TEST_CASE("pointmass: non-finite actions are rejected") {
    PointMassConfig cfg;
    PointMassState s;
    CHECK_THROWS_AS(pointmass_step(cfg, PointMassTask{}, s,
                                   std::vector<double>{std::numeric_limits<double>::quiet_NaN(), 0.0}),
                    std::invalid_argument);
}

TEST_CASE("tabular: deterministic chain follows the unique trajectory") {
    // 3-state chain 0 -> 1 -> 2 -> 2 with a single action
    TabularMdp mdp;
    mdp.n_states = 3;
    mdp.n_actions = 1;
    mdp.gamma = 0.9;
    mdp.transition.assign(9, 0.0);
    mdp.p(0, 0, 1) = 1.0;
    mdp.p(1, 0, 2) = 1.0;
    mdp.p(2, 0, 2) = 1.0;  // absorbing
    mdp.reward.assign(3, 0.0);
    mdp.initial = {1.0, 0.0, 0.0};
    mdp.validate();
    const auto pi = uniform_policy(mdp);
    Rng rng(1);
    const auto states = tabular_rollout(mdp, pi, 6, rng);
    const std::vector<int> expected{0, 1, 2, 2, 2, 2, 2};
    CHECK(states == expected);
}

TEST_CASE("tabular: non-stochastic policy row is rejected") {
    GridMdpConfig gcfg;
    const auto mdp = make_grid_mdp(gcfg);
    auto pi = uniform_policy(mdp);
    pi[0] = 0.7;  // row 0 now sums to 0.95
    Rng rng(1);
    CHECK_THROWS_AS(tabular_rollout(mdp, pi, 3, rng), std::invalid_argument);
}

TEST_CASE("tabular: empirical state frequencies match the exact marginal within 3 SE") {
    GridMdpConfig gcfg;
    gcfg.width = 3;
    gcfg.height = 3;
    gcfg.slip = 0.2;
    const auto mdp = make_grid_mdp(gcfg);
    const auto pi = uniform_policy(mdp);
    const int horizon = 4;
    const int n_rollouts = 100000;

    std::vector<std::vector<int>> counts(horizon + 1, std::vector<int>(mdp.n_states, 0));
    Rng rng(42);
    for (int r = 0; r < n_rollouts; ++r) {
        const auto states = tabular_rollout(mdp, pi, horizon, rng);
        for (int t = 0; t <= horizon; ++t) counts[t][states[t]]++;
    }
    for (int t = 0; t <= horizon; ++t) {
        const auto exact = analysis::state_marginal(mdp, pi, t);
        for (int s = 0; s < mdp.n_states; ++s) {
            const double p = exact[s];
            const double se = std::sqrt(std::max(p * (1.0 - p) / n_rollouts, 1e-12));
            const double freq = static_cast<double>(counts[t][s]) / n_rollouts;
            CHECK(std::abs(freq - p) <= 3.0 * se + 1e-9);
        }
    }
}

TEST_CASE("tabular: bad transition rows are rejected") {
    TabularMdp mdp;
    mdp.n_states = 2;
    mdp.n_actions = 1;
    mdp.gamma = 0.9;
    mdp.transition = {0.5, 0.4, 0.0, 1.0};  // first row sums to 0.9
    mdp.reward.assign(2, 0.0);
    mdp.initial = {1.0, 0.0};
    CHECK_THROWS_AS(mdp.validate(), std::invalid_argument);
}
