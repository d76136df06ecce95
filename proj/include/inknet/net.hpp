#pragma once

#include <array>
#include <string>
#include <vector>

#include "inknet/layers.hpp"
#include "inknet/rng.hpp"
#include "inknet/tensor.hpp"

namespace inknet::tensornet {

enum class LayerKind { Conv, MP2, SSMP, LeakyRelu, Dropout, Linear };

struct LayerDesc {
    LayerKind kind;
    int out_channels = 0;  // Conv
    int kernel = 0;        // Conv: 2 or 3
    double alpha = 0.0;    // SSMP
    double slope = 0.0;    // LeakyRelu
    double p = 0.0;        // Dropout
};

inline constexpr double kLeakySlope = 0.333;

// Declarative layer chain. Compact tokens, dash- or space-separated:
//   "32C3"      conv, 32 output channels, 3x3 kernel (leaky ReLU follows)
//   "MP2"       2x2 max pooling, stride 2
//   "SSMP1.5"   spatial stochastic max pooling, alpha 1.5
//   "drop0.1"   dropout, ratio 0.1
//   "linear" / "output"   final linear layer over the categories
// A trailing linear layer is required; "input" tokens are ignored.
struct NetworkSpec {
    std::array<int, 3> input{0, 0, 0};  // channels, height, width
    int categories = 0;
    std::vector<LayerDesc> layers;

    static NetworkSpec parse(const std::string& compact, std::array<int, 3> input,
                             int categories);
    std::string compact() const;

    // Shape after each layer; index 0 is the input. Throws ConfigError on an
    // invalid chain (odd MP2 extent, extent lost to a conv, missing linear).
    std::vector<std::array<int, 3>> shape_chain() const;
    void validate() const { shape_chain(); }

    // Presets: "baseline" and "ssmp" follow the full-scale architectures
    // (inputs 106 and 96); "toy" is the small benchmark net (input 24);
    // "gradcheck" is the 4-category net used by the finite-difference suite.
    static std::string preset(const std::string& name);
    static std::array<int, 3> preset_input(const std::string& name, int channels);
};

enum class RunMode { Train, Eval };

// Everything a forward pass needs to draw its stochastic pieces. Streams are
// keyed by (seed, purpose, k1, k2, k3, layer, axis); with all fields fixed a
// forward pass is a pure function.
struct ForwardCtx {
    RunMode mode = RunMode::Eval;
    std::uint64_t seed = 0;
    std::uint64_t purpose = rngkey::kSsmpEval;  // kSsmpTrain during training
    std::uint64_t k1 = 0, k2 = 0, k3 = 0;       // (epoch, step, sample) / (sample, replica, 0)
    int epoch = 0;                              // SSMP3 threshold switching
    SsmpStrategy ssmp;

    static ForwardCtx train(std::uint64_t seed, int epoch, std::uint64_t step,
                            std::uint64_t sample, SsmpStrategy s) {
        return {RunMode::Train, seed, rngkey::kSsmpTrain,
                std::uint64_t(epoch), step, sample, epoch, s};
    }
    static ForwardCtx eval(std::uint64_t seed, std::uint64_t sample, std::uint64_t replica,
                           int epoch, SsmpStrategy s) {
        return {RunMode::Eval, seed, rngkey::kSsmpEval, sample, replica, 0, epoch, s};
    }
};

// Per-pass caches consumed by backward.
template <typename T>
struct Trace {
    std::vector<Tensor<T>> acts;  // acts[i] is the input of layer i
    std::vector<std::pair<StrideSeries, StrideSeries>> plans;
    std::vector<std::vector<std::int32_t>> argmax;
    std::vector<std::vector<std::uint8_t>> masks;
    Tensor<T> logits;
};

template <typename T>
struct Gradients {
    std::vector<Tensor<T>> w, b;  // aligned with spec.layers; empty when none
};

template <typename T>
class Network {
public:
    NetworkSpec spec;
    std::vector<Tensor<T>> weights, biases;  // aligned with spec.layers

    Network() = default;
    explicit Network(NetworkSpec s) : spec(std::move(s)) { allocate(); }

    // He-style fan-in scaled Gaussian init, zero biases; keyed by layer index.
    void init_params(std::uint64_t seed);

    Tensor<T> forward(const Tensor<T>& x, const ForwardCtx& ctx, Trace<T>* trace = nullptr) const;
    Gradients<T> backward(const Trace<T>& trace, const Tensor<T>& dlogits) const;

    Gradients<T> zero_grads() const;

    template <typename U>
    Network<U> cast() const {
        Network<U> out;
        out.spec = spec;
        for (const auto& t : weights) out.weights.push_back(t.template cast<U>());
        for (const auto& t : biases) out.biases.push_back(t.template cast<U>());
        return out;
    }

private:
    void allocate();
};

// --- implementation --------------------------------------------------------

template <typename T>
void Network<T>::allocate() {
    const auto chain = spec.shape_chain();
    weights.assign(spec.layers.size(), {});
    biases.assign(spec.layers.size(), {});
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerDesc& L = spec.layers[i];
        const auto& in = chain[i];
        if (L.kind == LayerKind::Conv) {
            weights[i] = Tensor<T>(L.out_channels, in[0], L.kernel * L.kernel);
            biases[i] = Tensor<T>(L.out_channels, 1, 1);
        } else if (L.kind == LayerKind::Linear) {
            weights[i] = Tensor<T>(spec.categories, in[0] * in[1] * in[2], 1);
            biases[i] = Tensor<T>(spec.categories, 1, 1);
        }
    }
}

template <typename T>
void Network<T>::init_params(std::uint64_t seed) {
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        if (weights[i].size() == 0) continue;
        RngStream rng = RngStream::keyed(seed, {rngkey::kInit, std::uint64_t(i)});
        const double fan_in = double(weights[i].h) * weights[i].w;
        const double scale = std::sqrt(2.0 / fan_in);
        for (auto& v : weights[i].v) v = T(scale * rng.gaussian());
        biases[i].fill(T(0));
    }
}

template <typename T>
Tensor<T> Network<T>::forward(const Tensor<T>& x, const ForwardCtx& ctx, Trace<T>* trace) const {
    const std::size_t n = spec.layers.size();
    Trace<T> local;
    Trace<T>& tr = trace ? *trace : local;
    tr.acts.clear();
    tr.plans.assign(n, {});
    tr.argmax.assign(n, {});
    tr.masks.assign(n, {});

    Tensor<T> cur = x;
    for (std::size_t i = 0; i < n; ++i) {
        const LayerDesc& L = spec.layers[i];
        if (trace) tr.acts.push_back(cur);
        switch (L.kind) {
            case LayerKind::Conv:
                cur = conv_forward(cur, weights[i], biases[i], L.kernel);
                break;
            case LayerKind::MP2:
                cur = mp2_forward(cur, tr.argmax[i]);
                break;
            case LayerKind::SSMP: {
                RngStream rr = RngStream::keyed(
                    ctx.seed, {ctx.purpose, ctx.k1, ctx.k2, ctx.k3, std::uint64_t(i), 0});
                RngStream rc = RngStream::keyed(
                    ctx.seed, {ctx.purpose, ctx.k1, ctx.k2, ctx.k3, std::uint64_t(i), 1});
                tr.plans[i].first = ssmp_plan(cur.h, L.alpha, ctx.ssmp, ctx.epoch, rr);
                tr.plans[i].second = ssmp_plan(cur.w, L.alpha, ctx.ssmp, ctx.epoch, rc);
                cur = ssmp_forward(cur, tr.plans[i].first, tr.plans[i].second, tr.argmax[i]);
                break;
            }
            case LayerKind::LeakyRelu:
                cur = leaky_relu_forward(cur, L.slope);
                break;
            case LayerKind::Dropout: {
                RngStream rng = RngStream::keyed(
                    ctx.seed, {rngkey::kDropout, ctx.k1, ctx.k2, ctx.k3, std::uint64_t(i)});
                cur = dropout_forward(cur, L.p, rng, ctx.mode == RunMode::Train, tr.masks[i]);
                break;
            }
            case LayerKind::Linear:
                cur = linear_forward(cur, weights[i], biases[i]);
                break;
        }
    }
    if (trace) tr.logits = cur;
    return cur;
}

template <typename T>
Gradients<T> Network<T>::zero_grads() const {
    Gradients<T> g;
    g.w.resize(spec.layers.size());
    g.b.resize(spec.layers.size());
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        if (weights[i].size()) g.w[i] = Tensor<T>(weights[i].c, weights[i].h, weights[i].w);
        if (biases[i].size()) g.b[i] = Tensor<T>(biases[i].c, biases[i].h, biases[i].w);
    }
    return g;
}

template <typename T>
Gradients<T> Network<T>::backward(const Trace<T>& trace, const Tensor<T>& dlogits) const {
    Gradients<T> g = zero_grads();
    Tensor<T> d = dlogits;
    for (int i = int(spec.layers.size()) - 1; i >= 0; --i) {
        const LayerDesc& L = spec.layers[i];
        const Tensor<T>& x = trace.acts[i];
        switch (L.kind) {
            case LayerKind::Conv: {
                Tensor<T> dx;
                conv_backward(x, weights[i], L.kernel, d, dx, g.w[i], g.b[i]);
                d = std::move(dx);
                break;
            }
            case LayerKind::MP2:
                d = mp2_backward(x, d, trace.argmax[i]);
                break;
            case LayerKind::SSMP:
                d = ssmp_backward(x, d, trace.argmax[i]);
                break;
            case LayerKind::LeakyRelu:
                d = leaky_relu_backward(x, L.slope, d);
                break;
            case LayerKind::Dropout:
                d = dropout_backward(d, L.p, trace.masks[i]);
                break;
            case LayerKind::Linear: {
                Tensor<T> dx;
                // linear_forward flattens; reshape the gradient back.
                Tensor<T> dflat = d;
                linear_backward(x, weights[i], dflat, dx, g.w[i], g.b[i]);
                d = std::move(dx);
                break;
            }
        }
    }
    return g;
}

}  // namespace inknet::tensornet
