#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "urlab/errors.hpp"
#include "urlab/mlp.hpp"

namespace urlab::nn {

// Adam with bias correction. Moment buffers mirror the network's layers.
template <typename S>
class AdamOptimizer {
public:
    struct Moments {
        std::vector<S> m_weight, v_weight;
        std::vector<S> m_bias, v_bias;
    };

    AdamOptimizer() = default;

    explicit AdamOptimizer(const Mlp<S>& net, S lr = S(1e-4), S beta1 = S(0.9), S beta2 = S(0.999),
                           S epsilon = S(1e-8))
        : lr_(lr), beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {
        moments_.resize(net.layers().size());
        for (std::size_t li = 0; li < net.layers().size(); ++li) {
            moments_[li].m_weight.assign(net.layers()[li].weight.size(), S(0));
            moments_[li].v_weight.assign(net.layers()[li].weight.size(), S(0));
            moments_[li].m_bias.assign(net.layers()[li].bias.size(), S(0));
            moments_[li].v_bias.assign(net.layers()[li].bias.size(), S(0));
        }
    }

    void step(Mlp<S>& net, const MlpGradients<S>& grads) {
        if (grads.layers.size() != moments_.size()) throw std::invalid_argument("adam: gradient shape mismatch");
        for (std::size_t li = 0; li < grads.layers.size(); ++li) {
            for (S g : grads.layers[li].weight)
                if (!std::isfinite(g))
                    throw NumericError("adam: non-finite gradient in layer " + std::to_string(li) + " weights");
            for (S g : grads.layers[li].bias)
                if (!std::isfinite(g))
                    throw NumericError("adam: non-finite gradient in layer " + std::to_string(li) + " bias");
        }
        ++step_count_;
        const S bc1 = S(1) - static_cast<S>(std::pow(static_cast<double>(beta1_), static_cast<double>(step_count_)));
        const S bc2 = S(1) - static_cast<S>(std::pow(static_cast<double>(beta2_), static_cast<double>(step_count_)));
        for (std::size_t li = 0; li < moments_.size(); ++li) {
            auto& mo = moments_[li];
            auto& layer = net.layers()[li];
            update_block(layer.weight, grads.layers[li].weight, mo.m_weight, mo.v_weight, bc1, bc2);
            update_block(layer.bias, grads.layers[li].bias, mo.m_bias, mo.v_bias, bc1, bc2);
        }
    }

    std::uint64_t step_count() const { return step_count_; }
    S learning_rate() const { return lr_; }

    std::vector<Moments>& moments() { return moments_; }
    const std::vector<Moments>& moments() const { return moments_; }
    void set_step_count(std::uint64_t n) { step_count_ = n; }

private:
    void update_block(std::vector<S>& params, const std::vector<S>& grad, std::vector<S>& m, std::vector<S>& v,
                      S bc1, S bc2) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            m[i] = beta1_ * m[i] + (S(1) - beta1_) * grad[i];
            v[i] = beta2_ * v[i] + (S(1) - beta2_) * grad[i] * grad[i];
            const S mhat = m[i] / bc1;
            const S vhat = v[i] / bc2;
            params[i] -= lr_ * mhat / (std::sqrt(vhat) + epsilon_);
        }
    }

    S lr_ = S(1e-4);
    S beta1_ = S(0.9);
    S beta2_ = S(0.999);
    S epsilon_ = S(1e-8);
    std::uint64_t step_count_ = 0;
    std::vector<Moments> moments_;
};

}  // namespace urlab::nn
