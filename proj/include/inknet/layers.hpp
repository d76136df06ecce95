#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "inknet/rng.hpp"
#include "inknet/tensor.hpp"

namespace inknet::tensornet {

// ---------------------------------------------------------------------------
// Convolution: valid (unpadded) correlation, stride 1, kernel 2x2 or 3x3.
// Weights are (out_c, in_c, K, K) flattened into a tensor of shape
// (out_c, in_c, K*K); bias is (out_c, 1, 1).

template <typename T>
Tensor<T> conv_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, int K) {
    if (w.h != x.c || w.w != K * K || b.c != w.c)
        throw ConfigError("conv: weight shape " + w.shape_str() + " does not match input " +
                          x.shape_str());
    if (x.h < K || x.w < K) throw ConfigError("conv: input smaller than kernel");
    const int oh = x.h - K + 1, ow = x.w - K + 1;
    Tensor<T> y(w.c, oh, ow);
    for (int oc = 0; oc < w.c; ++oc) {
        const T bias = b.v[oc];
        for (int oy = 0; oy < oh; ++oy) {
            T* yrow = y.row(oc, oy);
            for (int ox = 0; ox < ow; ++ox) yrow[ox] = bias;
        }
        for (int c = 0; c < x.c; ++c) {
            const T* wk = w.row(oc, c);
            for (int ky = 0; ky < K; ++ky)
                for (int kx = 0; kx < K; ++kx) {
                    const T wv = wk[ky * K + kx];
                    for (int oy = 0; oy < oh; ++oy) {
                        const T* xrow = x.row(c, oy + ky) + kx;
                        T* yrow = y.row(oc, oy);
                        for (int ox = 0; ox < ow; ++ox) yrow[ox] += wv * xrow[ox];
                    }
                }
        }
    }
    return y;
}

template <typename T>
void conv_backward(const Tensor<T>& x, const Tensor<T>& w, int K, const Tensor<T>& dy,
                   Tensor<T>& dx, Tensor<T>& dw, Tensor<T>& db) {
    const int oh = dy.h, ow = dy.w;
    dx = Tensor<T>(x.c, x.h, x.w);
    dw = Tensor<T>(w.c, w.h, w.w);
    db = Tensor<T>(w.c, 1, 1);
    for (int oc = 0; oc < w.c; ++oc) {
        T acc = T(0);
        for (int oy = 0; oy < oh; ++oy) {
            const T* drow = dy.row(oc, oy);
            for (int ox = 0; ox < ow; ++ox) acc += drow[ox];
        }
        db.v[oc] = acc;
        for (int c = 0; c < x.c; ++c) {
            const T* wk = w.row(oc, c);
            T* dwk = dw.row(oc, c);
            for (int ky = 0; ky < K; ++ky)
                for (int kx = 0; kx < K; ++kx) {
                    const T wv = wk[ky * K + kx];
                    T wacc = T(0);
                    for (int oy = 0; oy < oh; ++oy) {
                        const T* xrow = x.row(c, oy + ky) + kx;
                        T* dxrow = dx.row(c, oy + ky) + kx;
                        const T* drow = dy.row(oc, oy);
                        for (int ox = 0; ox < ow; ++ox) {
                            wacc += xrow[ox] * drow[ox];
                            dxrow[ox] += wv * drow[ox];
                        }
                    }
                    dwk[ky * K + kx] += wacc;
                }
        }
    }
}

// ---------------------------------------------------------------------------
// Leaky ReLU, y = x > 0 ? x : a*x. The subgradient at 0 is a.

template <typename T>
Tensor<T> leaky_relu_forward(const Tensor<T>& x, double a) {
    Tensor<T> y = x;
    const T slope = T(a);
    for (auto& v : y.v) v = v > T(0) ? v : slope * v;
    return y;
}

template <typename T>
Tensor<T> leaky_relu_backward(const Tensor<T>& x, double a, const Tensor<T>& dy) {
    Tensor<T> dx = dy;
    const T slope = T(a);
    for (std::size_t i = 0; i < x.v.size(); ++i)
        if (!(x.v[i] > T(0))) dx.v[i] *= slope;
    return dx;
}

// ---------------------------------------------------------------------------
// Dropout. Train mode zeroes units with probability p and scales survivors by
// 1/(1-p); eval mode is the identity. The keep mask is reused on backward.

template <typename T>
Tensor<T> dropout_forward(const Tensor<T>& x, double p, RngStream& rng, bool train,
                          std::vector<std::uint8_t>& mask) {
    if (p < 0.0 || p >= 1.0) throw ConfigError("dropout: p must be in [0,1)");
    if (!train || p == 0.0) {
        mask.clear();
        return x;
    }
    const T scale = T(1.0 / (1.0 - p));
    mask.assign(x.size(), 0);
    Tensor<T> y = x;
    for (std::size_t i = 0; i < y.v.size(); ++i) {
        if (rng.uniform() >= p) {
            mask[i] = 1;
            y.v[i] *= scale;
        } else {
            y.v[i] = T(0);
        }
    }
    return y;
}

template <typename T>
Tensor<T> dropout_backward(const Tensor<T>& dy, double p, const std::vector<std::uint8_t>& mask) {
    if (mask.empty()) return dy;
    const T scale = T(1.0 / (1.0 - p));
    Tensor<T> dx = dy;
    for (std::size_t i = 0; i < dx.v.size(); ++i) dx.v[i] = mask[i] ? dx.v[i] * scale : T(0);
    return dx;
}

// ---------------------------------------------------------------------------
// Plain 2x2 max pooling with stride 2. Requires even extents; ties go to the
// first element in scan order.

template <typename T>
Tensor<T> mp2_forward(const Tensor<T>& x, std::vector<std::int32_t>& argmax) {
    if (x.h % 2 != 0 || x.w % 2 != 0)
        throw ConfigError("mp2: extents must be even, got " + x.shape_str());
    Tensor<T> y(x.c, x.h / 2, x.w / 2);
    argmax.assign(y.size(), 0);
    std::size_t o = 0;
    for (int c = 0; c < x.c; ++c)
        for (int oy = 0; oy < y.h; ++oy)
            for (int ox = 0; ox < y.w; ++ox, ++o) {
                const int iy = oy * 2, ix = ox * 2;
                T best = x.at(c, iy, ix);
                std::int32_t bi = int((std::size_t(c) * x.h + iy) * x.w + ix);
                for (int dy = 0; dy < 2; ++dy)
                    for (int dx = 0; dx < 2; ++dx) {
                        const T v = x.at(c, iy + dy, ix + dx);
                        if (v > best) {
                            best = v;
                            bi = int((std::size_t(c) * x.h + iy + dy) * x.w + ix + dx);
                        }
                    }
                y.v[o] = best;
                argmax[o] = bi;
            }
    return y;
}

template <typename T>
Tensor<T> mp2_backward(const Tensor<T>& x, const Tensor<T>& dy,
                       const std::vector<std::int32_t>& argmax) {
    Tensor<T> dx(x.c, x.h, x.w);
    for (std::size_t o = 0; o < dy.v.size(); ++o) dx.v[argmax[o]] += dy.v[o];
    return dx;
}

// ---------------------------------------------------------------------------
// Spatial stochastic max-pooling. A plan is the per-axis series of 2x2 window
// start offsets; strides between consecutive starts are fractional on
// average, reducing the extent by roughly the requested alpha.

enum class SsmpKind { SSMP1, SSMP2, SSMP3 };

struct SsmpStrategy {
    SsmpKind kind = SsmpKind::SSMP1;
    int switch_epoch = 0;  // SSMP3: first epoch with a shared threshold

    // Thresholds shared across positions for this epoch?
    bool shared_threshold(int epoch) const {
        switch (kind) {
            case SsmpKind::SSMP1: return false;
            case SsmpKind::SSMP2: return true;
            case SsmpKind::SSMP3: return epoch >= switch_epoch;
        }
        return false;
    }
};

SsmpKind parse_ssmp_kind(const std::string& name);
std::string ssmp_kind_name(SsmpKind k);

struct StrideSeries {
    double alpha_requested = 0.0;
    double alpha_effective = 0.0;
    std::vector<int> starts;  // a_0 .. a_{n_out-1}

    int n_out() const { return int(starts.size()); }
};

// Output extent floor(n_in/alpha + 0.5), alpha renewed to n_in/n_out, then
// a_i = floor(i*alpha + th_i) for all but the last start, which is pinned to
// n_in-2. Starts are clamped non-decreasing and <= n_in-2 afterwards.
inline StrideSeries ssmp_plan(int n_in, double alpha, const SsmpStrategy& strategy, int epoch,
                              RngStream& rng) {
    if (!(alpha > 1.0 && alpha <= 2.0))
        throw ConfigError("ssmp: alpha must be in (1,2], got " + std::to_string(alpha));
    if (n_in < 3) throw ConfigError("ssmp: extent must be >= 3, got " + std::to_string(n_in));

    StrideSeries plan;
    plan.alpha_requested = alpha;
    const int n_out = int(std::floor(double(n_in) / alpha + 0.5));
    plan.alpha_effective = double(n_in) / double(n_out);
    plan.starts.resize(n_out);

    const bool shared = strategy.shared_threshold(epoch);
    const double th_shared = shared ? rng.uniform() : 0.0;
    for (int i = 0; i < n_out - 1; ++i) {
        const double th = shared ? th_shared : rng.uniform();
        plan.starts[i] = int(std::floor(double(i) * plan.alpha_effective + th));
    }
    plan.starts[n_out - 1] = n_in - 2;
    for (int i = 0; i < n_out; ++i) {
        plan.starts[i] = std::min(plan.starts[i], n_in - 2);
        if (i > 0) plan.starts[i] = std::max(plan.starts[i], plan.starts[i - 1]);
    }
    return plan;
}

template <typename T>
Tensor<T> ssmp_forward(const Tensor<T>& x, const StrideSeries& rows, const StrideSeries& cols,
                       std::vector<std::int32_t>& argmax) {
    if (rows.starts.empty() || cols.starts.empty()) throw ConfigError("ssmp: empty plan");
    if (rows.starts.back() != x.h - 2 || cols.starts.back() != x.w - 2)
        throw ConfigError("ssmp: plan does not match input " + x.shape_str());
    Tensor<T> y(x.c, rows.n_out(), cols.n_out());
    argmax.assign(y.size(), 0);
    std::size_t o = 0;
    for (int c = 0; c < x.c; ++c)
        for (int oy = 0; oy < y.h; ++oy) {
            const int iy = rows.starts[oy];
            for (int ox = 0; ox < y.w; ++ox, ++o) {
                const int ix = cols.starts[ox];
                T best = x.at(c, iy, ix);
                std::int32_t bi = int((std::size_t(c) * x.h + iy) * x.w + ix);
                for (int dy = 0; dy < 2; ++dy)
                    for (int dx = 0; dx < 2; ++dx) {
                        const T v = x.at(c, iy + dy, ix + dx);
                        if (v > best) {
                            best = v;
                            bi = int((std::size_t(c) * x.h + iy + dy) * x.w + ix + dx);
                        }
                    }
                y.v[o] = best;
                argmax[o] = bi;
            }
        }
    return y;
}

template <typename T>
Tensor<T> ssmp_backward(const Tensor<T>& x, const Tensor<T>& dy,
                        const std::vector<std::int32_t>& argmax) {
    Tensor<T> dx(x.c, x.h, x.w);
    // Overlapping windows can pick the same input; gradients accumulate.
    for (std::size_t o = 0; o < dy.v.size(); ++o) dx.v[argmax[o]] += dy.v[o];
    return dx;
}

// ---------------------------------------------------------------------------
// Final linear layer on the flattened input: logits = w * x + b with w of
// shape (categories, F, 1).

template <typename T>
Tensor<T> linear_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
    const std::size_t F = x.size();
    if (std::size_t(w.h) != F || w.c != b.c)
        throw ConfigError("linear: weight shape " + w.shape_str() + " does not match input " +
                          x.shape_str());
    Tensor<T> y(w.c, 1, 1);
    for (int k = 0; k < w.c; ++k) {
        const T* wr = w.v.data() + std::size_t(k) * F;
        T acc = b.v[k];
        for (std::size_t i = 0; i < F; ++i) acc += wr[i] * x.v[i];
        y.v[k] = acc;
    }
    return y;
}

template <typename T>
void linear_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& dy, Tensor<T>& dx,
                     Tensor<T>& dw, Tensor<T>& db) {
    const std::size_t F = x.size();
    dx = Tensor<T>(x.c, x.h, x.w);
    dw = Tensor<T>(w.c, w.h, w.w);
    db = Tensor<T>(w.c, 1, 1);
    for (int k = 0; k < w.c; ++k) {
        const T g = dy.v[k];
        const T* wr = w.v.data() + std::size_t(k) * F;
        T* dwr = dw.v.data() + std::size_t(k) * F;
        db.v[k] = g;
        for (std::size_t i = 0; i < F; ++i) {
            dwr[i] = g * x.v[i];
            dx.v[i] += g * wr[i];
        }
    }
}

// ---------------------------------------------------------------------------
// Softmax cross-entropy with max subtraction. Returns loss; fills the
// probability vector and, when requested, the logits gradient p - onehot.

template <typename T>
T softmax_xent(const Tensor<T>& logits, int label, std::vector<T>& probs,
               Tensor<T>* dlogits = nullptr) {
    const int n = int(logits.size());
    if (label < 0 || label >= n) throw ConfigError("softmax: label out of range");
    T mx = logits.v[0];
    for (T v : logits.v) mx = std::max(mx, v);
    probs.resize(n);
    T z = T(0);
    for (int i = 0; i < n; ++i) {
        probs[i] = std::exp(logits.v[i] - mx);
        z += probs[i];
    }
    for (int i = 0; i < n; ++i) probs[i] /= z;
    if (dlogits) {
        *dlogits = Tensor<T>(n, 1, 1);
        for (int i = 0; i < n; ++i) dlogits->v[i] = probs[i];
        dlogits->v[label] -= T(1);
    }
    return -std::log(std::max(probs[label], std::numeric_limits<T>::min()));
}

}  // namespace inknet::tensornet
