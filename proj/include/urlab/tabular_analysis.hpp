#pragma once

#include <span>
#include <vector>

#include "urlab/tabular.hpp"

namespace urlab::analysis {

// Discounted state-occupancy rho(s) = (1-gamma) sum_t gamma^t P_t(s),
// solved exactly from the stationarity system rho = (1-gamma) p0 + gamma P_pi^T rho.
struct OccupancyMeasure {
    std::vector<double> rho;
    double gamma = 0.0;
};

OccupancyMeasure occupancy(const envs::TabularMdp& mdp, const envs::TabularPolicy& pi);

// || rho - (1-gamma) p0 - gamma P_pi^T rho ||_inf
double stationarity_residual(const envs::TabularMdp& mdp, const envs::TabularPolicy& pi, const OccupancyMeasure& occ);

// Exact state marginal P_t under pi (P_0 = p0).
std::vector<double> state_marginal(const envs::TabularMdp& mdp, const envs::TabularPolicy& pi, int t);

// E_{s~rho}[r(s)]
double expected_reward(std::span<const double> rho, std::span<const double> reward);

// sum_i a_i log(a_i/b_i); returns +inf on support mismatch.
double kl_divergence(std::span<const double> a, std::span<const double> b);

// -sum_i p_i log p_i (nats)
double shannon_entropy(std::span<const double> p);

struct ValueIterationResult {
    std::vector<double> value;
    envs::TabularPolicy greedy;
};

// V(s) = r(s) + gamma max_a sum_s' P(s'|s,a) V(s'), iterated to sup-norm tol.
ValueIterationResult value_iteration(const envs::TabularMdp& mdp, std::span<const double> reward, double tol = 1e-13);

struct AdaptationObjective {
    double regret = 0.0;            // E_{rho+}[r] - E_{rho*}[r], oracle from value iteration
    double information_cost = 0.0;  // D_KL(rho* || rho_prior) over state marginals
};

AdaptationObjective adaptation_objective(const envs::TabularMdp& mdp, const envs::TabularPolicy& prior,
                                         std::span<const double> task_reward, const envs::TabularPolicy& candidate);

// Trajectory-level KL over horizon H factored by the chain rule:
//   total = sum_{t=0}^{H-1} E_{s_t ~ P_t^a} D_KL(pi_a(.|s_t) || pi_b(.|s_t))
//   initial = the t = 0 term, conditional = the rest.
struct KlChain {
    double total = 0.0;
    double initial = 0.0;
    double conditional = 0.0;
};

KlChain kl_chain_decomposition(const envs::TabularMdp& mdp, const envs::TabularPolicy& pi_a,
                               const envs::TabularPolicy& pi_b, int horizon);

}  // namespace urlab::analysis
