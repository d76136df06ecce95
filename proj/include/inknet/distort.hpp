#pragma once

#include <vector>

#include "inknet/ink.hpp"
#include "inknet/rng.hpp"

namespace inknet::distort {

// One set of affine distortion parameters, drawn once per character and
// shared by all its strokes.
struct DistortionSample {
    double xi_sx = 0.0;  // horizontal stretch offset (scale is 1+xi_sx)
    double xi_sy = 0.0;  // vertical stretch offset
    double xi_hx = 0.0;  // first slant factor
    double xi_hy = 0.0;  // second slant factor
    double xi_rot = 0.0;  // rotation angle, radians
    double tx = 0.0;  // translation, pixels
    double ty = 0.0;
};

// Translation draws are scaled by kappa pixels (G/8 for the default grid).
inline constexpr double kDefaultKappa = 8.0;

// Seven independent draws from U(-theta, theta); fixed draw order so a given
// stream state always yields the same sample.
DistortionSample draw_distortion(double theta, RngStream& rng, double kappa = kDefaultKappa);

// Rotation-only variant used by the orientation-confusion demo.
DistortionSample draw_rotation_only(double theta, RngStream& rng);

// Applies stretch, both slants, rotation, then translation, with coordinates
// taken about the bounding-box center and restored afterwards.
ink::Character apply(const ink::Character& c, const DistortionSample& s);

// Stepwise schedule of distortion degrees, strictly decreasing across stages.
struct DropSchedule {
    struct Stage {
        double theta;
        int epochs;
    };
    enum class Mode { FixedEpochs, LossPlateau };

    std::vector<Stage> stages;
    Mode mode = Mode::FixedEpochs;
    int patience = 3;                  // plateau mode: epochs without improvement
    double min_rel_improve = 0.005;    // plateau mode: required relative loss drop

    int total_epochs() const;
    void validate() const;  // throws ink::DataError on bad stage ordering

    // Single fixed degree for the whole run.
    static DropSchedule fixed(double theta, int epochs);
    // Thetas spread over near-equal stage lengths (earlier stages absorb the
    // remainder), e.g. {0.3,0.2,0.1} over 70 -> 24/23/23.
    static DropSchedule staged(const std::vector<double>& thetas, int epochs);
};

// Degree in force at `epoch`. In plateau mode the stage advances early when
// the best in-stage loss stalls for `patience` epochs; the stage budget still
// caps it. loss_history holds the training losses of epochs 0..epoch-1.
double schedule_theta(int epoch, const DropSchedule& sched,
                      const std::vector<double>& loss_history);

}  // namespace inknet::distort
