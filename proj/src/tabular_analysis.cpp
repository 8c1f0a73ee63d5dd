#include "urlab/tabular_analysis.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace urlab::analysis {

namespace {

// P_pi(s -> s') = sum_a pi(a|s) P(s'|s,a)
std::vector<double> policy_transition(const envs::TabularMdp& mdp, const envs::TabularPolicy& pi) {
    const int n = mdp.n_states;
    std::vector<double> P(static_cast<std::size_t>(n) * n, 0.0);
    for (int s = 0; s < n; ++s)
        for (int a = 0; a < mdp.n_actions; ++a) {
            const double pa = pi[static_cast<std::size_t>(s) * mdp.n_actions + a];
            if (pa == 0.0) continue;
            for (int t = 0; t < n; ++t) P[static_cast<std::size_t>(s) * n + t] += pa * mdp.p(s, a, t);
        }
    return P;
}

// Dense Gaussian elimination with partial pivoting; fine for oracle-sized MDPs.
std::vector<double> solve_linear(std::vector<double> A, std::vector<double> b) {
    const int n = static_cast<int>(b.size());
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(A[static_cast<std::size_t>(r) * n + col]) >
                std::abs(A[static_cast<std::size_t>(pivot) * n + col]))
                pivot = r;
        if (std::abs(A[static_cast<std::size_t>(pivot) * n + col]) < 1e-300)
            throw std::runtime_error("occupancy: singular stationarity system");
        if (pivot != col) {
            for (int c = 0; c < n; ++c)
                std::swap(A[static_cast<std::size_t>(pivot) * n + c], A[static_cast<std::size_t>(col) * n + c]);
            std::swap(b[pivot], b[col]);
        }
        const double diag = A[static_cast<std::size_t>(col) * n + col];
        for (int r = col + 1; r < n; ++r) {
            const double f = A[static_cast<std::size_t>(r) * n + col] / diag;
            if (f == 0.0) continue;
            for (int c = col; c < n; ++c)
                A[static_cast<std::size_t>(r) * n + c] -= f * A[static_cast<std::size_t>(col) * n + c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n, 0.0);
    for (int r = n - 1; r >= 0; --r) {
        double acc = b[r];
        for (int c = r + 1; c < n; ++c) acc -= A[static_cast<std::size_t>(r) * n + c] * x[c];
        x[r] = acc / A[static_cast<std::size_t>(r) * n + r];
    }
    return x;
}

double row_kl(const envs::TabularMdp& mdp, const envs::TabularPolicy& pi_a, const envs::TabularPolicy& pi_b, int s) {
    double kl = 0.0;
    for (int a = 0; a < mdp.n_actions; ++a) {
        const double pa = pi_a[static_cast<std::size_t>(s) * mdp.n_actions + a];
        const double pb = pi_b[static_cast<std::size_t>(s) * mdp.n_actions + a];
        if (pa == 0.0) continue;
        if (pb == 0.0) return std::numeric_limits<double>::infinity();
        kl += pa * std::log(pa / pb);
    }
    return kl;
}

}  // namespace

OccupancyMeasure occupancy(const envs::TabularMdp& mdp, const envs::TabularPolicy& pi) {
    mdp.validate();
    envs::validate_policy(mdp, pi);
    const int n = mdp.n_states;
    const auto P = policy_transition(mdp, pi);
    // (I - gamma P^T) rho = (1-gamma) p0
    std::vector<double> A(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            A[static_cast<std::size_t>(i) * n + j] =
                (i == j ? 1.0 : 0.0) - mdp.gamma * P[static_cast<std::size_t>(j) * n + i];
    std::vector<double> b(n);
    for (int i = 0; i < n; ++i) b[i] = (1.0 - mdp.gamma) * mdp.initial[i];
    OccupancyMeasure occ;
    occ.gamma = mdp.gamma;
    occ.rho = solve_linear(std::move(A), std::move(b));
    return occ;
}

double stationarity_residual(const envs::TabularMdp& mdp, const envs::TabularPolicy& pi, const OccupancyMeasure& occ) {
    const int n = mdp.n_states;
    const auto P = policy_transition(mdp, pi);
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
        double flow = 0.0;
        for (int j = 0; j < n; ++j) flow += P[static_cast<std::size_t>(j) * n + i] * occ.rho[j];
        const double r = occ.rho[i] - (1.0 - mdp.gamma) * mdp.initial[i] - mdp.gamma * flow;
        worst = std::max(worst, std::abs(r));
    }
    return worst;
}

std::vector<double> state_marginal(const envs::TabularMdp& mdp, const envs::TabularPolicy& pi, int t) {
    const int n = mdp.n_states;
    const auto P = policy_transition(mdp, pi);
    std::vector<double> m = mdp.initial;
    std::vector<double> next(n);
    for (int step = 0; step < t; ++step) {
        std::fill(next.begin(), next.end(), 0.0);
        for (int s = 0; s < n; ++s) {
            if (m[s] == 0.0) continue;
            for (int u = 0; u < n; ++u) next[u] += m[s] * P[static_cast<std::size_t>(s) * n + u];
        }
        m.swap(next);
    }
    return m;
}

double expected_reward(std::span<const double> rho, std::span<const double> reward) {
    if (rho.size() != reward.size()) throw std::invalid_argument("expected_reward: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < rho.size(); ++i) acc += rho[i] * reward[i];
    return acc;
}

double kl_divergence(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("kl: length mismatch");
    double kl = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == 0.0) continue;
        if (b[i] == 0.0) return std::numeric_limits<double>::infinity();
        kl += a[i] * std::log(a[i] / b[i]);
    }
    return kl;
}

double shannon_entropy(std::span<const double> p) {
    double h = 0.0;
    for (double v : p)
        if (v > 0.0) h -= v * std::log(v);
    return h;
}

ValueIterationResult value_iteration(const envs::TabularMdp& mdp, std::span<const double> reward, double tol) {
    if (reward.size() != static_cast<std::size_t>(mdp.n_states))
        throw std::invalid_argument("value_iteration: reward length mismatch");
    const int n = mdp.n_states;
    std::vector<double> v(n, 0.0), next(n);
    for (int iter = 0; iter < 1000000; ++iter) {
        double delta = 0.0;
        for (int s = 0; s < n; ++s) {
            double best = -std::numeric_limits<double>::infinity();
            for (int a = 0; a < mdp.n_actions; ++a) {
                double q = 0.0;
                for (int t = 0; t < n; ++t) q += mdp.p(s, a, t) * v[t];
                best = std::max(best, q);
            }
            next[s] = reward[s] + mdp.gamma * best;
            delta = std::max(delta, std::abs(next[s] - v[s]));
        }
        v.swap(next);
        if (delta < tol) break;
    }
    ValueIterationResult res;
    res.value = v;
    res.greedy.assign(static_cast<std::size_t>(n) * mdp.n_actions, 0.0);
    for (int s = 0; s < n; ++s) {
        int best_a = 0;
        double best = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < mdp.n_actions; ++a) {
            double q = 0.0;
            for (int t = 0; t < n; ++t) q += mdp.p(s, a, t) * v[t];
            if (q > best) {
                best = q;
                best_a = a;
            }
        }
        res.greedy[static_cast<std::size_t>(s) * mdp.n_actions + best_a] = 1.0;
    }
    return res;
}

AdaptationObjective adaptation_objective(const envs::TabularMdp& mdp, const envs::TabularPolicy& prior,
                                         std::span<const double> task_reward, const envs::TabularPolicy& candidate) {
    if (task_reward.size() != static_cast<std::size_t>(mdp.n_states))
        throw std::invalid_argument("adaptation_objective: reward length mismatch");
    const auto oracle = value_iteration(mdp, task_reward);
    const auto rho_plus = occupancy(mdp, oracle.greedy);
    const auto rho_star = occupancy(mdp, candidate);
    const auto rho_prior = occupancy(mdp, prior);
    AdaptationObjective out;
    out.regret = expected_reward(rho_plus.rho, task_reward) - expected_reward(rho_star.rho, task_reward);
    out.information_cost = kl_divergence(rho_star.rho, rho_prior.rho);
    return out;
}

KlChain kl_chain_decomposition(const envs::TabularMdp& mdp, const envs::TabularPolicy& pi_a,
                               const envs::TabularPolicy& pi_b, int horizon) {
    mdp.validate();
    envs::validate_policy(mdp, pi_a);
    envs::validate_policy(mdp, pi_b);
    if (horizon < 1) throw std::invalid_argument("kl_chain: horizon must be >= 1");
    const int n = mdp.n_states;
    // The KL expectation runs over pi_a trajectories, so marginals evolve under pi_a.
    KlChain out;
    std::vector<double> marginal = mdp.initial;
    for (int t = 0; t < horizon; ++t) {
        double term = 0.0;
        for (int s = 0; s < n; ++s) {
            const double w = marginal[s];
            if (w == 0.0) continue;
            term += w * row_kl(mdp, pi_a, pi_b, s);  // +inf on support mismatch
        }
        if (t == 0)
            out.initial = term;
        else
            out.conditional += term;
        out.total += term;
        if (t + 1 < horizon) marginal = state_marginal(mdp, pi_a, t + 1);
    }
    return out;
}

}  // namespace urlab::analysis
