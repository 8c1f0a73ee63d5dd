#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "urlab/errors.hpp"
#include "urlab/eval_stats.hpp"
#include "urlab/policy_eval.hpp"
#include "urlab/tabular.hpp"
#include "urlab/tabular_analysis.hpp"

using namespace urlab;
using namespace urlab::analysis;
using envs::TabularMdp;
using envs::TabularPolicy;

namespace {

TabularMdp random_mdp(Rng& rng, int n_states, int n_actions, double gamma) {
    TabularMdp mdp;
    mdp.n_states = n_states;
    mdp.n_actions = n_actions;
    mdp.gamma = gamma;
    mdp.transition.assign(static_cast<std::size_t>(n_states) * n_actions * n_states, 0.0);
    mdp.reward.assign(n_states, 0.0);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    for (int s = 0; s < n_states; ++s)
        for (int a = 0; a < n_actions; ++a) {
            double total = 0.0;
            std::vector<double> row(n_states);
            for (auto& v : row) {
                v = u(rng);
                total += v;
            }
            // exact unit row sum: last entry absorbs the rounding残差
            double acc = 0.0;
            for (int t = 0; t < n_states - 1; ++t) {
                mdp.p(s, a, t) = row[t] / total;
                acc += mdp.p(s, a, t);
            }
            mdp.p(s, a, n_states - 1) = 1.0 - acc;
        }
    mdp.initial.assign(n_states, 0.0);
    double acc = 0.0;
    std::vector<double> p0(n_states);
    double total = 0.0;
    for (auto& v : p0) {
        v = u(rng);
        total += v;
    }
    for (int s = 0; s < n_states - 1; ++s) {
        mdp.initial[s] = p0[s] / total;
        acc += mdp.initial[s];
    }
    mdp.initial[n_states - 1] = 1.0 - acc;
    for (int s = 0; s < n_states; ++s) mdp.reward[s] = u(rng);
    mdp.validate();
    return mdp;
}

TabularPolicy random_policy(Rng& rng, const TabularMdp& mdp) {
    TabularPolicy pi(static_cast<std::size_t>(mdp.n_states) * mdp.n_actions, 0.0);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    for (int s = 0; s < mdp.n_states; ++s) {
        double total = 0.0;
        std::vector<double> row(mdp.n_actions);
        for (auto& v : row) {
            v = u(rng);
            total += v;
        }
        double acc = 0.0;
        for (int a = 0; a < mdp.n_actions - 1; ++a) {
            pi[static_cast<std::size_t>(s) * mdp.n_actions + a] = row[a] / total;
            acc += row[a] / total;
        }
        pi[static_cast<std::size_t>(s) * mdp.n_actions + mdp.n_actions - 1] = 1.0 - acc;
    }
    return pi;
}

// Brute-force occupancy: truncated geometric sum with the marginal advanced
// step by step.
std::vector<double> occupancy_brute_force(const TabularMdp& mdp, const TabularPolicy& pi, int horizon) {
    const int n = mdp.n_states;
    std::vector<double> rho(n, 0.0);
    std::vector<double> marginal = mdp.initial;
    std::vector<double> next(n);
    double w = 1.0 - mdp.gamma;
    for (int t = 0; t <= horizon; ++t) {
        for (int s = 0; s < n; ++s) rho[s] += w * marginal[s];
        w *= mdp.gamma;
        std::fill(next.begin(), next.end(), 0.0);
        for (int s = 0; s < n; ++s) {
            if (marginal[s] == 0.0) continue;
            for (int a = 0; a < mdp.n_actions; ++a) {
                const double pa = pi[static_cast<std::size_t>(s) * mdp.n_actions + a];
                if (pa == 0.0) continue;
                const double w_sa = marginal[s] * pa;
                for (int s2 = 0; s2 < n; ++s2) next[s2] += w_sa * mdp.p(s, a, s2);
            }
        }
        marginal.swap(next);
    }
    return rho;
}

// Brute-force trajectory KL: enumerate every (s0,a0,...,s_{H-1},a_{H-1})
// branch and accumulate P_a(tau) * log-ratio of the action probabilities.
double trajectory_kl_brute_force(const TabularMdp& mdp, const TabularPolicy& pi_a, const TabularPolicy& pi_b,
                                 int horizon) {
    double total = 0.0;
    struct Node {
        int state;
        int depth;
        double prob;
        double log_ratio;
    };
    std::vector<Node> stack;
    for (int s0 = 0; s0 < mdp.n_states; ++s0)
        if (mdp.initial[s0] > 0.0) stack.push_back({s0, 0, mdp.initial[s0], 0.0});
    while (!stack.empty()) {
        const Node node = stack.back();
        stack.pop_back();
        if (node.depth == horizon) {
            total += node.prob * node.log_ratio;
            continue;
        }
        for (int a = 0; a < mdp.n_actions; ++a) {
            const double pa = pi_a[static_cast<std::size_t>(node.state) * mdp.n_actions + a];
            if (pa == 0.0) continue;
            const double pb = pi_b[static_cast<std::size_t>(node.state) * mdp.n_actions + a];
            const double ratio = std::log(pa / pb);
            for (int s2 = 0; s2 < mdp.n_states; ++s2) {
                const double pt = mdp.p(node.state, a, s2);
                if (pt == 0.0) continue;
                stack.push_back({s2, node.depth + 1, node.prob * pa * pt, node.log_ratio + ratio});
            }
        }
    }
    return total;
}

}  // namespace

TEST_CASE("occupancy: absorbing start state is a point mass") {
    TabularMdp mdp;
    mdp.n_states = 2;
    mdp.n_actions = 1;
    mdp.gamma = 0.7;
    mdp.transition.assign(4, 0.0);
    mdp.p(0, 0, 0) = 1.0;  // absorbing
    mdp.p(1, 0, 0) = 1.0;
    mdp.reward.assign(2, 0.0);
    mdp.initial = {1.0, 0.0};
    mdp.validate();
    const auto occ = occupancy(mdp, envs::uniform_policy(mdp));
    CHECK(occ.rho[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(occ.rho[1] == doctest::Approx(0.0));
}

TEST_CASE("occupancy: two-state cycle sums the geometric series") {
    TabularMdp mdp;
    mdp.n_states = 2;
    mdp.n_actions = 1;
    mdp.gamma = 0.99;
    mdp.transition.assign(4, 0.0);
    mdp.p(0, 0, 1) = 1.0;
    mdp.p(1, 0, 0) = 1.0;
    mdp.reward.assign(2, 0.0);
    mdp.initial = {1.0, 0.0};
    mdp.validate();
    const auto occ = occupancy(mdp, envs::uniform_policy(mdp));
    CHECK(occ.rho[0] == doctest::Approx(1.0 / 1.99).epsilon(1e-12));
    CHECK(occ.rho[1] == doctest::Approx(0.99 / 1.99).epsilon(1e-12));

    const auto brute = occupancy_brute_force(mdp, envs::uniform_policy(mdp), 5000);
    CHECK(std::abs(occ.rho[0] - brute[0]) < 1e-8);
    CHECK(std::abs(occ.rho[1] - brute[1]) < 1e-8);
}

TEST_CASE("occupancy: stationarity residual below 1e-10 and matches brute force on random MDPs") {
    Rng rng(101);
    for (int trial = 0; trial < 20; ++trial) {
        const auto mdp = random_mdp(rng, 6, 3, 0.95);
        const auto pi = random_policy(rng, mdp);
        const auto occ = occupancy(mdp, pi);
        double mass = 0.0;
        for (double v : occ.rho) mass += v;
        CHECK(std::abs(mass - 1.0) < 1e-10);
        CHECK(stationarity_residual(mdp, pi, occ) < 1e-10);
        const auto brute = occupancy_brute_force(mdp, pi, 2000);
        for (int s = 0; s < mdp.n_states; ++s) CHECK(std::abs(occ.rho[s] - brute[s]) < 1e-8);
    }
}

TEST_CASE("adaptation objective: oracle candidate has zero regret, identical prior zero cost") {
    envs::GridMdpConfig gcfg;
    const auto mdp = make_grid_mdp(gcfg);
    std::vector<double> reward(mdp.n_states, 0.0);
    reward[24] = 1.0;  // far corner task
    const auto oracle = value_iteration(mdp, reward);

    const auto at_oracle = adaptation_objective(mdp, envs::uniform_policy(mdp), reward, oracle.greedy);
    CHECK(std::abs(at_oracle.regret) < 1e-12);
    CHECK(at_oracle.information_cost > 0.0);  // oracle occupancy differs from the uniform prior's
}

TEST_CASE("adaptation objective: prior equal to candidate has zero information cost") {
    envs::GridMdpConfig gcfg;
    const auto mdp = make_grid_mdp(gcfg);
    std::vector<double> reward(mdp.n_states, 0.0);
    reward[12] = 1.0;
    Rng rng(7);
    const auto pi = random_policy(rng, mdp);
    const auto res = adaptation_objective(mdp, pi, reward, pi);
    CHECK(res.information_cost == doctest::Approx(0.0));
    CHECK(res.regret >= -1e-12);
}

TEST_CASE("adaptation objective: grid-enumerated minimizer matches exhaustive brute force") {
    envs::GridMdpConfig gcfg;
    gcfg.width = 5;
    gcfg.height = 5;
    const auto mdp = make_grid_mdp(gcfg);
    std::vector<double> reward(mdp.n_states, 0.0);
    reward[24] = 5.0;  // strong enough that regret trades off against the information cost
    const auto oracle = value_iteration(mdp, reward);
    const auto uniform = envs::uniform_policy(mdp);
    const auto prior = uniform;

    // candidate family: blend uniform <-> task-greedy on a lambda grid
    auto blend = [&](double lambda) {
        TabularPolicy pi(uniform.size());
        for (std::size_t i = 0; i < pi.size(); ++i)
            pi[i] = (1.0 - lambda) * uniform[i] + lambda * oracle.greedy[i];
        return pi;
    };

    int best_fast = -1, best_brute = -1;
    double best_fast_val = 1e300, best_brute_val = 1e300;
    const auto rho_plus = occupancy(mdp, oracle.greedy);
    const double oracle_value = expected_reward(rho_plus.rho, reward);
    for (int i = 0; i <= 20; ++i) {
        const double lambda = i / 20.0;
        const auto pi = blend(lambda);
        const auto obj = adaptation_objective(mdp, prior, reward, pi);
        const double fast_val = obj.regret + obj.information_cost;
        if (fast_val < best_fast_val) {
            best_fast_val = fast_val;
            best_fast = i;
        }
        // independent route: truncated-sum occupancies and direct formulas
        const auto rho_cand = occupancy_brute_force(mdp, pi, 4000);
        const auto rho_prior = occupancy_brute_force(mdp, prior, 4000);
        const double regret = oracle_value - expected_reward(rho_cand, reward);
        const double info = kl_divergence(rho_cand, rho_prior);
        const double brute_val = regret + info;
        CHECK(std::abs(brute_val - fast_val) < 1e-6);
        if (brute_val < best_brute_val) {
            best_brute_val = brute_val;
            best_brute = i;
        }
    }
    CHECK(best_fast == best_brute);
    CHECK(best_fast_val == doctest::Approx(best_brute_val).epsilon(1e-8));
}

TEST_CASE("kl chain: identical policies give zero everywhere") {
    Rng rng(5);
    const auto mdp = random_mdp(rng, 4, 2, 0.9);
    const auto pi = random_policy(rng, mdp);
    const auto kl = kl_chain_decomposition(mdp, pi, pi, 5);
    CHECK(kl.total == 0.0);
    CHECK(kl.initial == 0.0);
    CHECK(kl.conditional == 0.0);
}

TEST_CASE("kl chain: matches brute-force trajectory enumeration on 100 random pairs") {
    Rng rng(99);
    for (int trial = 0; trial < 100; ++trial) {
        const auto mdp = random_mdp(rng, 3, 2, 0.9);
        const auto pi_a = random_policy(rng, mdp);
        const auto pi_b = random_policy(rng, mdp);
        const int horizon = 3;
        const auto kl = kl_chain_decomposition(mdp, pi_a, pi_b, horizon);
        const double brute = trajectory_kl_brute_force(mdp, pi_a, pi_b, horizon);
        CHECK(std::abs(kl.total - brute) < 1e-10);
        CHECK(std::abs(kl.total - (kl.initial + kl.conditional)) < 1e-10);
        CHECK(kl.initial >= 0.0);
        CHECK(kl.conditional >= -1e-15);
    }
}

TEST_CASE("kl chain: policies differing only at the initial state still pay a conditional term") {
    // start state 0 is revisited later, so the difference costs KL again at t >= 1
    Rng rng(3);
    const auto mdp = random_mdp(rng, 3, 2, 0.9);
    auto pi_a = random_policy(rng, mdp);
    auto pi_b = pi_a;
    pi_b[0] = 0.8;  // state 0 row changed
    pi_b[1] = 0.2;
    const int horizon = 3;
    const auto kl = kl_chain_decomposition(mdp, pi_a, pi_b, horizon);
    CHECK(kl.initial > 0.0);
    CHECK(kl.conditional > 0.0);
    const double brute = trajectory_kl_brute_force(mdp, pi_a, pi_b, horizon);
    CHECK(std::abs(kl.total - brute) < 1e-10);
}

TEST_CASE("kl chain: support mismatch reports infinite KL explicitly") {
    Rng rng(9);
    const auto mdp = random_mdp(rng, 3, 2, 0.9);
    const auto pi_a = random_policy(rng, mdp);
    auto pi_b = pi_a;
    pi_b[0] = 1.0;
    pi_b[1] = 0.0;  // action 1 impossible under b but possible under a
    const auto kl = kl_chain_decomposition(mdp, pi_a, pi_b, 2);
    CHECK(std::isinf(kl.total));
}

TEST_CASE("identity: -KL(rho||rho*) equals E_rho[log rho*] + H(rho)") {
    Rng rng(123);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 8;
        std::vector<double> rho(n), ref(n);
        double s1 = 0.0, s2 = 0.0;
        for (int i = 0; i < n; ++i) {
            rho[i] = u(rng);
            ref[i] = u(rng);
            s1 += rho[i];
            s2 += ref[i];
        }
        for (int i = 0; i < n; ++i) {
            rho[i] /= s1;
            ref[i] /= s2;
        }
        double cross = 0.0;
        for (int i = 0; i < n; ++i) cross += rho[i] * std::log(ref[i]);
        const double lhs = -kl_divergence(rho, ref);
        const double rhs = cross + shannon_entropy(rho);
        CHECK(std::abs(lhs - rhs) < 1e-10);
    }
}

TEST_CASE("empirical policy kl: closed form and zero case") {
    // identical actors -> 0
    nn::Mlp<float> ref({4, 2}, {nn::Activation::Identity}, 3);
    CHECK(empirical_policy_kl(ref, ref, {{0.1f, 0.2f, 0.3f, 0.4f}}, 0.2) == 0.0);

    // constant actors differing by (0.1, 0.1), sigma 0.2 -> 0.02/0.08 = 0.25
    nn::Mlp<float> a({4, 2}, {nn::Activation::Identity}, 0);
    nn::Mlp<float> b({4, 2}, {nn::Activation::Identity}, 0);
    for (auto* net : {&a, &b}) {
        std::fill(net->layers()[0].weight.begin(), net->layers()[0].weight.end(), 0.0f);
        net->layers()[0].bias = {0.0f, 0.0f};
    }
    b.layers()[0].bias = {0.1f, 0.1f};
    std::vector<std::vector<float>> probes(20, std::vector<float>{0.0f, 0.0f, 0.0f, 0.0f});
    CHECK(empirical_policy_kl(a, b, probes, 0.2) == doctest::Approx(0.25).epsilon(1e-6));

    CHECK_THROWS_AS(empirical_policy_kl(a, b, {}, 0.2), std::invalid_argument);
}

TEST_CASE("entropy: degenerate, exactly uniform, and Monte Carlo uniform") {
    HistogramSpec spec;
    spec.bins_per_dim = 4;
    spec.lo = {-1.0, -1.0};
    spec.hi = {1.0, 1.0};

    // everything in one bin -> 0
    std::vector<std::vector<double>> clump(100, {0.1, 0.1});
    CHECK(state_visitation_entropy(clump, spec) == doctest::Approx(0.0));

    // one state per bin center -> ln(16)
    std::vector<std::vector<double>> uniform_states;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            uniform_states.push_back({-1.0 + (i + 0.5) * 0.5, -1.0 + (j + 0.5) * 0.5});
    CHECK(state_visitation_entropy(uniform_states, spec) == doctest::Approx(std::log(16.0)).epsilon(1e-12));

    // 1e5 uniform samples over [-1,1]^2 with 16x16 bins -> within 0.01 of ln 256
    HistogramSpec fine;
    fine.bins_per_dim = 16;
    fine.lo = {-1.0, -1.0};
    fine.hi = {1.0, 1.0};
    Rng rng(77);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<std::vector<double>> samples;
    samples.reserve(100000);
    for (int i = 0; i < 100000; ++i) samples.push_back({u(rng), u(rng)});
    CHECK(state_visitation_entropy(samples, fine) == doctest::Approx(std::log(256.0)).epsilon(0.0019));

    CHECK_THROWS_AS(state_visitation_entropy({}, spec), std::invalid_argument);
}

TEST_CASE("iqm: golden values and fractional trimming") {
    CHECK(iqm(std::vector<double>{1, 2, 3, 4}) == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(iqm(std::vector<double>{0, 1, 2, 3, 4, 5, 6, 100}) == doctest::Approx(3.5).epsilon(1e-12));
    // n=6: half-weighted boundaries
    CHECK(iqm(std::vector<double>{0, 1, 2, 3, 4, 5}) ==
          doctest::Approx((0.5 * 1 + 2 + 3 + 0.5 * 4) / 3.0).epsilon(1e-12));
    CHECK_THROWS_AS(iqm(std::vector<double>{1, 2, 3}), std::invalid_argument);
}

TEST_CASE("iqm: permutation invariant and monotone") {
    Rng rng(11);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> scores(12);
        for (auto& s : scores) s = u(rng);
        auto shuffled = scores;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        CHECK(iqm(scores) == doctest::Approx(iqm(shuffled)).epsilon(1e-12));
        auto bumped = scores;
        for (auto& s : bumped) s += 0.1;
        CHECK(iqm(bumped) > iqm(scores));
    }
}

TEST_CASE("optimality gap and constant matrices") {
    std::vector<double> ones(40, 1.0);
    CHECK(optimality_gap(ones) == 0.0);
    std::vector<double> mixed{1.2, 0.8, 0.5, 1.0};
    CHECK(optimality_gap(mixed) == doctest::Approx((0.0 + 0.2 + 0.5 + 0.0) / 4.0));

    RunMatrix m;
    m.tasks = {"a", "b", "c"};
    m.seeds = {"0", "1", "2", "3"};
    m.scores.assign(3, std::vector<double>(4, 0.77));
    CHECK(iqm(m.flatten()) == doctest::Approx(0.77).epsilon(1e-12));
    const auto ci = bootstrap_ci(m, Statistic::Iqm, 500, 0.95, 1);
    CHECK(ci.lo == doctest::Approx(0.77));
    CHECK(ci.hi == doctest::Approx(0.77));
    CHECK(ci.hi - ci.lo == doctest::Approx(0.0));
}

TEST_CASE("bootstrap: CI width shrinks as seeds grow") {
    Rng rng(2025);
    std::normal_distribution<double> noise(0.7, 0.15);
    auto make_matrix = [&](int n_seeds) {
        RunMatrix m;
        m.tasks = {"t0", "t1", "t2"};
        for (int s = 0; s < n_seeds; ++s) m.seeds.push_back(std::to_string(s));
        m.scores.assign(3, {});
        for (auto& row : m.scores)
            for (int s = 0; s < n_seeds; ++s) row.push_back(noise(rng));
        return m;
    };
    const auto narrow = bootstrap_ci(make_matrix(40), Statistic::Iqm, 1000, 0.95, 7);
    const auto wide = bootstrap_ci(make_matrix(10), Statistic::Iqm, 1000, 0.95, 7);
    CHECK(narrow.hi - narrow.lo < wide.hi - wide.lo);
}

TEST_CASE("run matrix: csv round trip and rectangularity errors") {
    const auto dir = std::filesystem::temp_directory_path() / "urlab_stats_test";
    std::filesystem::create_directories(dir);
    RunMatrix m;
    m.tasks = {"reach_a", "reach_b"};
    m.seeds = {"0", "1", "2"};
    m.scores = {{0.5, 0.6, 0.7}, {0.9, 1.0, 1.1}};
    const auto path = dir / "matrix.csv";
    m.to_csv(path);
    const auto back = RunMatrix::from_csv(path);
    CHECK(back.tasks == m.tasks);
    CHECK(back.seeds == m.seeds);
    CHECK(back.scores == m.scores);

    // drop one row -> ragged -> rejected
    std::ofstream ragged(dir / "ragged.csv");
    ragged << "task,seed,normalized_return\n";
    ragged << "a,0,1.0\n";
    ragged << "a,1,1.0\n";
    ragged << "b,0,1.0\n";
    ragged.close();
    CHECK_THROWS_AS(RunMatrix::from_csv(dir / "ragged.csv"), ConfigError);
    std::filesystem::remove_all(dir);
}
