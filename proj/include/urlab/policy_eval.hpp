#pragma once

#include <span>
#include <vector>

#include "urlab/mlp.hpp"

namespace urlab::analysis {

// Equal-std Gaussian KL between two deterministic actors on probe states:
// mean_s ||mu_ref(s) - mu_subject(s)||^2 / (2 sigma^2).
double empirical_policy_kl(const nn::Mlp<float>& reference, const nn::Mlp<float>& subject,
                           const std::vector<std::vector<float>>& probe_states, double sigma);

struct HistogramSpec {
    int bins_per_dim = 16;
    std::vector<double> lo;  // per dimension
    std::vector<double> hi;
};

// Joint histogram over all dimensions of the given states; out-of-range
// values clamp into the edge bins.
std::vector<double> normalized_histogram(const std::vector<std::vector<double>>& states, const HistogramSpec& spec);

// Shannon entropy (nats) of the normalized joint histogram.
double state_visitation_entropy(const std::vector<std::vector<double>>& states, const HistogramSpec& spec);

}  // namespace urlab::analysis
