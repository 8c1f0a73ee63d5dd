#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "urlab/rng.hpp"

namespace urlab::envs {

// Exact finite MDP: transition tensor P(s'|s,a), state reward r(s),
// discount gamma, initial distribution p0.
struct TabularMdp {
    int n_states = 0;
    int n_actions = 0;
    std::vector<double> transition;  // [s][a][s'] row-stochastic in s'
    std::vector<double> reward;      // r(s)
    double gamma = 0.99;
    std::vector<double> initial;     // p0(s)

    double p(int s, int a, int s_next) const {
        return transition[(static_cast<std::size_t>(s) * n_actions + a) * n_states + s_next];
    }
    double& p(int s, int a, int s_next) {
        return transition[(static_cast<std::size_t>(s) * n_actions + a) * n_states + s_next];
    }

    // Throws if any P(.|s,a) row or p0 is off by more than 1e-12 from 1.
    void validate() const;
};

// pi[s*n_actions + a], rows stochastic.
using TabularPolicy = std::vector<double>;

TabularPolicy uniform_policy(const TabularMdp& mdp);
void validate_policy(const TabularMdp& mdp, const TabularPolicy& pi);

// Monte Carlo trajectory (s_0 .. s_horizon) from p0, pi, P.
std::vector<int> tabular_rollout(const TabularMdp& mdp, const TabularPolicy& pi, int horizon, Rng& rng);

struct GridMdpConfig {
    int width = 5;
    int height = 5;
    double slip = 0.1;    // probability mass spread over the 3 unintended moves
    double gamma = 0.99;
    int start_state = 0;  // p0 = point mass here; negative = uniform p0
};

// Grid world with 4 actions (up/down/left/right); bumping a wall stays put.
// Rewards default to zero; tasks supply their own reward vector.
TabularMdp make_grid_mdp(const GridMdpConfig& cfg);

}  // namespace urlab::envs
