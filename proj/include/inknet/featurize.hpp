#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "inknet/ink.hpp"
#include "inknet/signature.hpp"

namespace inknet::sigfeat {

enum class FeatureMode { Bitmap, Sig2d, Sig3d };

FeatureMode parse_feature_mode(const std::string& name);  // bitmap|sig2d|sig3d
std::string feature_mode_name(FeatureMode mode);

// Channel count for a mode at truncation depth m: 1, L(2,m) or L(3,m).
int feature_channels(FeatureMode mode, int m);

// Sliding window of +-W resampled points; in-window displacements are scaled
// by 1/(2W) and the window's time column is rescaled to [0,1].
struct WindowSpec {
    int W = 4;
};

// N x G x G grid of per-pixel signature coefficients (channel 0 doubles as
// the presence bitmap). Stored in float; all signature arithmetic is double.
struct FeatureMap {
    int n = 0;
    int g = 0;
    std::vector<float> values;  // [c][y][x] row-major

    float& at(int c, int y, int x) { return values[(std::size_t(c) * g + y) * g + x]; }
    float at(int c, int y, int x) const { return values[(std::size_t(c) * g + y) * g + x]; }
};

FeatureMap featurize(const ink::Character& c, FeatureMode mode, int m = 4,
                     WindowSpec win = {}, int grid_px = 64, int box_px = 50);

// Rasterization without the leading normalize step, for callers that have
// already placed the character on the grid (the trainer distorts in grid
// coordinates after normalizing once, so translation draws survive).
FeatureMap featurize_prenormalized(const ink::Character& c, FeatureMode mode, int m = 4,
                                   WindowSpec win = {}, int grid_px = 64);

// Feature dump container ("SIGF"): header, category inventory, then per
// record a label index (0xFFFFFFFF when unlabeled) and N*G*G float32 values,
// little-endian.
struct FeatureSet {
    int n = 0;
    int g = 0;
    std::vector<std::string> categories;
    std::vector<std::int32_t> labels;  // -1 when unlabeled
    std::vector<float> data;           // count * n * g * g

    std::size_t count() const { return labels.size(); }
    const float* record(std::size_t i) const {
        return data.data() + i * std::size_t(n) * g * g;
    }
    void append(const FeatureMap& fm, std::int32_t label);
};

void write_sigf(const FeatureSet& fs, const std::string& path);
FeatureSet read_sigf(const std::string& path);

}  // namespace inknet::sigfeat
