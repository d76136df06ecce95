#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace inknet::tensornet {

struct GradCheckResult {
    std::string name;
    double max_rel_err;
};

// Central finite differences (eps 1e-5) against each layer's analytic
// backward, all in double. Stochastic pieces (dropout masks, SSMP plans) are
// frozen by reusing the same keyed stream for every evaluation.
std::vector<GradCheckResult> gradcheck_layers(std::uint64_t seed);

// Whole-net check on the 4-category gradcheck preset: every parameter of
// every layer, frozen stochasticity, double precision.
GradCheckResult gradcheck_whole_net(std::uint64_t seed);

}  // namespace inknet::tensornet
