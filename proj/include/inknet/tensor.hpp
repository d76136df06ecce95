#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace inknet::tensornet {

// Bad layer chains, shape mismatches, malformed configs. The CLI maps it to
// exit code 2 alongside ink::DataError.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dense (channels, height, width) tensor; vectors use (n, 1, 1).
template <typename T>
struct Tensor {
    int c = 0, h = 0, w = 0;
    std::vector<T> v;

    Tensor() = default;
    Tensor(int c_, int h_, int w_) : c(c_), h(h_), w(w_), v(std::size_t(c_) * h_ * w_, T(0)) {}

    std::size_t size() const { return v.size(); }
    bool same_shape(const Tensor& o) const { return c == o.c && h == o.h && w == o.w; }

    T& at(int ci, int yi, int xi) { return v[(std::size_t(ci) * h + yi) * w + xi]; }
    T at(int ci, int yi, int xi) const { return v[(std::size_t(ci) * h + yi) * w + xi]; }

    T* row(int ci, int yi) { return v.data() + (std::size_t(ci) * h + yi) * w; }
    const T* row(int ci, int yi) const { return v.data() + (std::size_t(ci) * h + yi) * w; }

    void fill(T x) { std::fill(v.begin(), v.end(), x); }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out(c, h, w);
        for (std::size_t i = 0; i < v.size(); ++i) out.v[i] = U(v[i]);
        return out;
    }

    std::string shape_str() const {
        return std::to_string(c) + "x" + std::to_string(h) + "x" + std::to_string(w);
    }
};

}  // namespace inknet::tensornet
