#pragma once

#include <cstddef>
#include <vector>

#include "inknet/ink.hpp"

namespace inknet::sigfeat {

// Coefficient count of a depth-m signature over R^d: (d^(m+1)-1)/(d-1).
std::size_t sig_length(int d, int m);

// Offset of level k within the flat coefficient vector.
std::size_t level_offset(int d, int k);

// Truncated tensor-algebra element, stored level-major: level 0 (the constant
// 1), then level 1 (d entries), level 2 (d^2 entries, row-major multi-index),
// ..., level m.
struct TruncatedSignature {
    int d = 0;
    int m = 0;
    std::vector<double> coeffs;

    TruncatedSignature() = default;
    TruncatedSignature(int d_, int m_);  // identity signature (1, 0, ..., 0)

    double level1(int axis) const { return coeffs[1 + axis]; }
    // Entry of level 2 at multi-index (i,j).
    double level2(int i, int j) const { return coeffs[level_offset(d, 2) + i * d + j]; }
};

// Signature of a single straight segment: level k is delta^(tensor k)/k!.
TruncatedSignature segment_signature(const std::vector<double>& delta, int m);

// Truncated tensor product: level k of the result is sum over i+j=k of
// level_i(a) (x) level_j(b). Chen's identity makes this path concatenation.
TruncatedSignature chen_concat(const TruncatedSignature& a, const TruncatedSignature& b);

// Signature of a piecewise-linear path given as n rows of d coordinates.
// n = 1 (or 0 segments) yields the identity signature.
TruncatedSignature path_signature(const std::vector<std::vector<double>>& points, int m);

// Test oracle: evaluates the iterated integrals by nested ordered sums over
// the refined polyline, accumulating each increment's simplex contributions
// directly instead of multiplying signatures. Exact on polylines, so it must
// agree with path_signature up to rounding at any refine level.
TruncatedSignature iterated_sum_oracle(const std::vector<std::vector<double>>& points, int m,
                                       int refine);

}  // namespace inknet::sigfeat
