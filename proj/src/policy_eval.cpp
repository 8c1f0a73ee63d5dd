#include "urlab/policy_eval.hpp"

#include <cmath>
#include <stdexcept>

#include "urlab/tabular_analysis.hpp"

namespace urlab::analysis {

double empirical_policy_kl(const nn::Mlp<float>& reference, const nn::Mlp<float>& subject,
                           const std::vector<std::vector<float>>& probe_states, double sigma) {
    if (probe_states.empty()) throw std::invalid_argument("empirical_policy_kl: no probe states");
    if (sigma <= 0.0) throw std::invalid_argument("empirical_policy_kl: sigma must be positive");
    double total = 0.0;
    for (const auto& s : probe_states) {
        const auto mu_ref = reference.forward(std::span<const float>(s));
        const auto mu_sub = subject.forward(std::span<const float>(s));
        if (mu_ref.size() != mu_sub.size()) throw std::invalid_argument("empirical_policy_kl: action dim mismatch");
        double d2 = 0.0;
        for (std::size_t i = 0; i < mu_ref.size(); ++i) {
            const double d = static_cast<double>(mu_ref[i]) - static_cast<double>(mu_sub[i]);
            d2 += d * d;
        }
        total += d2 / (2.0 * sigma * sigma);
    }
    return total / static_cast<double>(probe_states.size());
}

std::vector<double> normalized_histogram(const std::vector<std::vector<double>>& states, const HistogramSpec& spec) {
    if (states.empty()) throw std::invalid_argument("histogram: empty state list");
    const std::size_t dims = states.front().size();
    if (dims == 0 || spec.lo.size() != dims || spec.hi.size() != dims)
        throw std::invalid_argument("histogram: bounds do not match state dimension");
    if (spec.bins_per_dim < 1) throw std::invalid_argument("histogram: bins_per_dim must be >= 1");
    for (std::size_t d = 0; d < dims; ++d)
        if (!(spec.hi[d] > spec.lo[d])) throw std::invalid_argument("histogram: empty bound interval");

    std::size_t n_bins = 1;
    for (std::size_t d = 0; d < dims; ++d) n_bins *= static_cast<std::size_t>(spec.bins_per_dim);
    std::vector<double> counts(n_bins, 0.0);
    for (const auto& s : states) {
        if (s.size() != dims) throw std::invalid_argument("histogram: inconsistent state dimension");
        std::size_t idx = 0;
        for (std::size_t d = 0; d < dims; ++d) {
            const double u = (s[d] - spec.lo[d]) / (spec.hi[d] - spec.lo[d]);
            int bin = static_cast<int>(u * spec.bins_per_dim);
            bin = std::max(0, std::min(spec.bins_per_dim - 1, bin));
            idx = idx * spec.bins_per_dim + static_cast<std::size_t>(bin);
        }
        counts[idx] += 1.0;
    }
    const double inv = 1.0 / static_cast<double>(states.size());
    for (auto& c : counts) c *= inv;
    return counts;
}

double state_visitation_entropy(const std::vector<std::vector<double>>& states, const HistogramSpec& spec) {
    const auto hist = normalized_histogram(states, spec);
    return shannon_entropy(hist);
}

}  // namespace urlab::analysis
