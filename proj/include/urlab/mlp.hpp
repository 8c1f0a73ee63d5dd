#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "urlab/rng.hpp"

namespace urlab::nn {

enum class Activation : std::uint8_t { Identity = 0, ReLU = 1, Tanh = 2 };

inline const char* activation_name(Activation a) {
    switch (a) {
        case Activation::Identity: return "identity";
        case Activation::ReLU: return "relu";
        case Activation::Tanh: return "tanh";
    }
    return "?";
}

template <typename S>
struct LayerGradients {
    std::vector<S> weight;  // out x in, row-major
    std::vector<S> bias;
};

template <typename S>
struct MlpGradients {
    std::vector<LayerGradients<S>> layers;
    std::vector<S> input;  // gradient w.r.t. the network input

    void zero() {
        for (auto& l : layers) {
            std::fill(l.weight.begin(), l.weight.end(), S(0));
            std::fill(l.bias.begin(), l.bias.end(), S(0));
        }
        std::fill(input.begin(), input.end(), S(0));
    }

    void add_scaled(const MlpGradients& other, S scale) {
        for (std::size_t li = 0; li < layers.size(); ++li) {
            for (std::size_t i = 0; i < layers[li].weight.size(); ++i)
                layers[li].weight[i] += scale * other.layers[li].weight[i];
            for (std::size_t i = 0; i < layers[li].bias.size(); ++i)
                layers[li].bias[i] += scale * other.layers[li].bias[i];
        }
    }
};

// Per-call forward cache; backward() refuses to run without one.
template <typename S>
struct ForwardTrace {
    std::vector<std::vector<S>> inputs;  // input vector of each layer
    std::vector<std::vector<S>> pre;     // pre-activation of each layer
    bool valid = false;
};

// Dense feed-forward network with analytic backprop. Forward evaluation is
// const and safe to share across threads; any mutation needs exclusive access.
template <typename S>
class Mlp {
public:
    struct Layer {
        int in = 0;
        int out = 0;
        Activation act = Activation::Identity;
        std::vector<S> weight;  // out x in, row-major
        std::vector<S> bias;
    };

    Mlp() = default;

    Mlp(const std::vector<int>& layer_sizes, const std::vector<Activation>& activations, std::uint64_t seed) {
        if (layer_sizes.size() < 2) throw std::invalid_argument("mlp: need at least input and output sizes");
        if (activations.size() != layer_sizes.size() - 1)
            throw std::invalid_argument("mlp: expected " + std::to_string(layer_sizes.size() - 1) +
                                        " activations, got " + std::to_string(activations.size()));
        for (int n : layer_sizes)
            if (n <= 0) throw std::invalid_argument("mlp: layer sizes must be positive");
        Rng rng(derive_seed(seed, 0x6d6c7031));
        layers_.resize(layer_sizes.size() - 1);
        for (std::size_t li = 0; li < layers_.size(); ++li) {
            Layer& l = layers_[li];
            l.in = layer_sizes[li];
            l.out = layer_sizes[li + 1];
            l.act = activations[li];
            l.weight.resize(static_cast<std::size_t>(l.out) * l.in);
            l.bias.resize(l.out);
            // Uniform fan-in init, range +-1/sqrt(fan_in).
            const double bound = 1.0 / std::sqrt(static_cast<double>(l.in));
            std::uniform_real_distribution<double> dist(-bound, bound);
            for (auto& w : l.weight) w = static_cast<S>(dist(rng));
            for (auto& b : l.bias) b = static_cast<S>(dist(rng));
        }
    }

    int input_size() const { return layers_.empty() ? 0 : layers_.front().in; }
    int output_size() const { return layers_.empty() ? 0 : layers_.back().out; }

    std::vector<int> layer_sizes() const {
        std::vector<int> sizes;
        if (layers_.empty()) return sizes;
        sizes.push_back(layers_.front().in);
        for (const auto& l : layers_) sizes.push_back(l.out);
        return sizes;
    }

    std::vector<Activation> activations() const {
        std::vector<Activation> acts;
        for (const auto& l : layers_) acts.push_back(l.act);
        return acts;
    }

    const std::vector<Layer>& layers() const { return layers_; }
    std::vector<Layer>& layers() { return layers_; }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
        return n;
    }

    std::vector<S> forward(std::span<const S> input) const {
        if (static_cast<int>(input.size()) != input_size())
            throw std::invalid_argument("mlp forward: input size " + std::to_string(input.size()) +
                                        ", expected " + std::to_string(input_size()));
        std::vector<S> x(input.begin(), input.end());
        std::vector<S> z;
        for (const Layer& l : layers_) {
            z.resize(l.out);
            for (int o = 0; o < l.out; ++o) {
                S acc = l.bias[o];
                const S* wrow = l.weight.data() + static_cast<std::size_t>(o) * l.in;
                for (int i = 0; i < l.in; ++i) acc += wrow[i] * x[i];
                z[o] = activate(l.act, acc);
            }
            x.swap(z);
        }
        return x;
    }

    std::vector<S> forward(std::span<const S> input, ForwardTrace<S>& trace) const {
        if (static_cast<int>(input.size()) != input_size())
            throw std::invalid_argument("mlp forward: input size " + std::to_string(input.size()) +
                                        ", expected " + std::to_string(input_size()));
        trace.inputs.assign(layers_.size(), {});
        trace.pre.assign(layers_.size(), {});
        std::vector<S> x(input.begin(), input.end());
        for (std::size_t li = 0; li < layers_.size(); ++li) {
            const Layer& l = layers_[li];
            trace.inputs[li] = x;
            std::vector<S> z(l.out);
            for (int o = 0; o < l.out; ++o) {
                S acc = l.bias[o];
                const S* wrow = l.weight.data() + static_cast<std::size_t>(o) * l.in;
                for (int i = 0; i < l.in; ++i) acc += wrow[i] * x[i];
                z[o] = acc;
            }
            trace.pre[li] = z;
            x.resize(l.out);
            for (int o = 0; o < l.out; ++o) x[o] = activate(l.act, z[o]);
        }
        trace.valid = true;
        return x;
    }

    // Accumulates into `grads`; caller zeroes between batches.
    void backward(const ForwardTrace<S>& trace, std::span<const S> output_grad, MlpGradients<S>& grads) const {
        if (!trace.valid || trace.pre.size() != layers_.size())
            throw std::logic_error("mlp backward: forward trace missing or stale");
        if (static_cast<int>(output_grad.size()) != output_size())
            throw std::invalid_argument("mlp backward: output_grad size " + std::to_string(output_grad.size()) +
                                        ", expected " + std::to_string(output_size()));
        std::vector<S> g(output_grad.begin(), output_grad.end());
        for (int li = static_cast<int>(layers_.size()) - 1; li >= 0; --li) {
            const Layer& l = layers_[li];
            const auto& z = trace.pre[li];
            const auto& x = trace.inputs[li];
            std::vector<S> dz(l.out);
            for (int o = 0; o < l.out; ++o) dz[o] = g[o] * activate_grad(l.act, z[o]);
            auto& lg = grads.layers[li];
            for (int o = 0; o < l.out; ++o) {
                S* wg = lg.weight.data() + static_cast<std::size_t>(o) * l.in;
                for (int i = 0; i < l.in; ++i) wg[i] += dz[o] * x[i];
                lg.bias[o] += dz[o];
            }
            std::vector<S> gprev(l.in, S(0));
            for (int o = 0; o < l.out; ++o) {
                const S* wrow = l.weight.data() + static_cast<std::size_t>(o) * l.in;
                for (int i = 0; i < l.in; ++i) gprev[i] += wrow[i] * dz[o];
            }
            g = std::move(gprev);
        }
        for (std::size_t i = 0; i < g.size(); ++i) grads.input[i] += g[i];
    }

    MlpGradients<S> make_gradients() const {
        MlpGradients<S> g;
        g.layers.resize(layers_.size());
        for (std::size_t li = 0; li < layers_.size(); ++li) {
            g.layers[li].weight.assign(layers_[li].weight.size(), S(0));
            g.layers[li].bias.assign(layers_[li].bias.size(), S(0));
        }
        g.input.assign(input_size(), S(0));
        return g;
    }

    // p <- (1 - rate) * p + rate * p_online
    void ema_from(const Mlp& online, S rate) {
        if (!same_shape(online)) throw std::invalid_argument("mlp ema: shape mismatch");
        for (std::size_t li = 0; li < layers_.size(); ++li) {
            auto& t = layers_[li];
            const auto& o = online.layers_[li];
            for (std::size_t i = 0; i < t.weight.size(); ++i)
                t.weight[i] = (S(1) - rate) * t.weight[i] + rate * o.weight[i];
            for (std::size_t i = 0; i < t.bias.size(); ++i)
                t.bias[i] = (S(1) - rate) * t.bias[i] + rate * o.bias[i];
        }
    }

    bool same_shape(const Mlp& other) const {
        if (layers_.size() != other.layers_.size()) return false;
        for (std::size_t li = 0; li < layers_.size(); ++li)
            if (layers_[li].in != other.layers_[li].in || layers_[li].out != other.layers_[li].out ||
                layers_[li].act != other.layers_[li].act)
                return false;
        return true;
    }

    bool bitwise_equal(const Mlp& other) const {
        if (!same_shape(other)) return false;
        for (std::size_t li = 0; li < layers_.size(); ++li) {
            if (std::memcmp(layers_[li].weight.data(), other.layers_[li].weight.data(),
                            layers_[li].weight.size() * sizeof(S)) != 0)
                return false;
            if (std::memcmp(layers_[li].bias.data(), other.layers_[li].bias.data(),
                            layers_[li].bias.size() * sizeof(S)) != 0)
                return false;
        }
        return true;
    }

    template <typename T>
    Mlp<T> cast() const {
        Mlp<T> out;
        out.layers().resize(layers_.size());
        for (std::size_t li = 0; li < layers_.size(); ++li) {
            auto& dst = out.layers()[li];
            const auto& src = layers_[li];
            dst.in = src.in;
            dst.out = src.out;
            dst.act = src.act;
            dst.weight.assign(src.weight.begin(), src.weight.end());
            dst.bias.assign(src.bias.begin(), src.bias.end());
        }
        return out;
    }

    static S activate(Activation a, S z) {
        switch (a) {
            case Activation::Identity: return z;
            case Activation::ReLU: return z > S(0) ? z : S(0);
            case Activation::Tanh: return std::tanh(z);
        }
        return z;
    }

    static S activate_grad(Activation a, S z) {
        switch (a) {
            case Activation::Identity: return S(1);
            case Activation::ReLU: return z > S(0) ? S(1) : S(0);
            case Activation::Tanh: {
                const S t = std::tanh(z);
                return S(1) - t * t;
            }
        }
        return S(1);
    }

private:
    std::vector<Layer> layers_;
};

}  // namespace urlab::nn
