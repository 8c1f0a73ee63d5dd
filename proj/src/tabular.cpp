#include "urlab/tabular.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace urlab::envs {

void TabularMdp::validate() const {
    if (n_states <= 0 || n_actions <= 0) throw std::invalid_argument("tabular: empty state or action space");
    if (gamma <= 0.0 || gamma >= 1.0) throw std::invalid_argument("tabular: gamma must be in (0,1)");
    if (transition.size() != static_cast<std::size_t>(n_states) * n_actions * n_states)
        throw std::invalid_argument("tabular: transition tensor size mismatch");
    if (initial.size() != static_cast<std::size_t>(n_states)) throw std::invalid_argument("tabular: p0 size mismatch");
    if (reward.size() != static_cast<std::size_t>(n_states))
        throw std::invalid_argument("tabular: reward vector size mismatch");
    for (int s = 0; s < n_states; ++s)
        for (int a = 0; a < n_actions; ++a) {
            double sum = 0.0;
            for (int t = 0; t < n_states; ++t) sum += p(s, a, t);
            if (std::abs(sum - 1.0) > 1e-12)
                throw std::invalid_argument("tabular: P(.|" + std::to_string(s) + "," + std::to_string(a) +
                                            ") sums to " + std::to_string(sum));
        }
    double sum = 0.0;
    for (double v : initial) sum += v;
    if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("tabular: p0 sums to " + std::to_string(sum));
}

TabularPolicy uniform_policy(const TabularMdp& mdp) {
    return TabularPolicy(static_cast<std::size_t>(mdp.n_states) * mdp.n_actions, 1.0 / mdp.n_actions);
}

void validate_policy(const TabularMdp& mdp, const TabularPolicy& pi) {
    if (pi.size() != static_cast<std::size_t>(mdp.n_states) * mdp.n_actions)
        throw std::invalid_argument("tabular policy: size mismatch");
    for (int s = 0; s < mdp.n_states; ++s) {
        double sum = 0.0;
        for (int a = 0; a < mdp.n_actions; ++a) {
            const double v = pi[static_cast<std::size_t>(s) * mdp.n_actions + a];
            if (v < 0.0) throw std::invalid_argument("tabular policy: negative probability at state " + std::to_string(s));
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw std::invalid_argument("tabular policy: row " + std::to_string(s) + " sums to " + std::to_string(sum));
    }
}

namespace {

int sample_index(std::span<const double> probs, Rng& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double u = unit(rng);
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;
}

}  // namespace

std::vector<int> tabular_rollout(const TabularMdp& mdp, const TabularPolicy& pi, int horizon, Rng& rng) {
    validate_policy(mdp, pi);
    std::vector<int> states;
    states.reserve(horizon + 1);
    int s = sample_index(mdp.initial, rng);
    states.push_back(s);
    for (int t = 0; t < horizon; ++t) {
        const int a = sample_index(std::span<const double>(pi).subspan(static_cast<std::size_t>(s) * mdp.n_actions,
                                                                       mdp.n_actions),
                                   rng);
        const auto row = std::span<const double>(mdp.transition)
                             .subspan((static_cast<std::size_t>(s) * mdp.n_actions + a) * mdp.n_states, mdp.n_states);
        s = sample_index(row, rng);
        states.push_back(s);
    }
    return states;
}

TabularMdp make_grid_mdp(const GridMdpConfig& cfg) {
    TabularMdp mdp;
    mdp.n_states = cfg.width * cfg.height;
    mdp.n_actions = 4;
    mdp.gamma = cfg.gamma;
    mdp.transition.assign(static_cast<std::size_t>(mdp.n_states) * mdp.n_actions * mdp.n_states, 0.0);
    mdp.reward.assign(mdp.n_states, 0.0);
    mdp.initial.assign(mdp.n_states, 0.0);
    if (cfg.start_state >= 0)
        mdp.initial[cfg.start_state] = 1.0;
    else
        mdp.initial.assign(mdp.n_states, 1.0 / mdp.n_states);

    // actions: 0 up (y-1), 1 down (y+1), 2 left (x-1), 3 right (x+1)
    const int dx[4] = {0, 0, -1, 1};
    const int dy[4] = {-1, 1, 0, 0};
    auto idx = [&](int x, int y) { return y * cfg.width + x; };
    for (int y = 0; y < cfg.height; ++y)
        for (int x = 0; x < cfg.width; ++x) {
            const int s = idx(x, y);
            for (int a = 0; a < mdp.n_actions; ++a) {
                for (int move = 0; move < 4; ++move) {
                    const double prob = (move == a) ? 1.0 - cfg.slip : cfg.slip / 3.0;
                    int nx = x + dx[move];
                    int ny = y + dy[move];
                    if (nx < 0 || nx >= cfg.width || ny < 0 || ny >= cfg.height) {
                        nx = x;
                        ny = y;
                    }
                    mdp.p(s, a, idx(nx, ny)) += prob;
                }
            }
        }
    mdp.validate();
    return mdp;
}

}  // namespace urlab::envs
