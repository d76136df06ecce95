#pragma once

#include <cstdint>
#include <cmath>
#include <initializer_list>

namespace inknet {

// SplitMix64 finalizer (Steele, Lea & Flood; Vigna's public-domain reference).
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Counter-based stream: the state advances by a fixed increment and every
// output is a hash of the state, so a stream is a pure function of its key.
// Streams are cheap; derive a fresh one per (seed, purpose, epoch, ...) key
// instead of sharing one across threads.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : state_(seed) {}

    // Key-derived stream. Components are folded in hash_combine style so
    // (7, {1,2}) and (7, {2,1}) land far apart.
    static RngStream keyed(std::uint64_t seed, std::initializer_list<std::uint64_t> key) {
        std::uint64_t h = mix64(seed + 0x9E3779B97F4A7C15ULL);
        for (std::uint64_t c : key)
            h = mix64(h ^ (c + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2)));
        return RngStream(h);
    }

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix64(state_);
    }

    // Uniform in [0,1), 53-bit resolution.
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller; draws two uniforms, returns one.
    double gaussian() {
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();  // log(0) guard
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return n ? next_u64() % n : 0; }

    std::uint64_t state() const { return state_; }
    void set_state(std::uint64_t s) { state_ = s; }

private:
    std::uint64_t state_;
};

// Stream purposes, folded into keys so independent uses never collide.
namespace rngkey {
inline constexpr std::uint64_t kTemplate  = 0x01;
inline constexpr std::uint64_t kJitter    = 0x02;
inline constexpr std::uint64_t kShuffle   = 0x03;
inline constexpr std::uint64_t kDistort   = 0x04;
inline constexpr std::uint64_t kInit      = 0x05;
inline constexpr std::uint64_t kDropout   = 0x06;
inline constexpr std::uint64_t kSsmpTrain = 0x07;
inline constexpr std::uint64_t kSsmpEval  = 0x08;
inline constexpr std::uint64_t kDistortEval = 0x09;
}  // namespace rngkey

}  // namespace inknet
