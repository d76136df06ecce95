#include "inknet/distort.hpp"

#include <cmath>
#include <limits>

namespace inknet::distort {

DistortionSample draw_distortion(double theta, RngStream& rng, double kappa) {
    if (theta < 0.0) throw ink::DataError("draw_distortion: theta must be >= 0");
    DistortionSample s;
    s.xi_sx = rng.uniform(-theta, theta);
    s.xi_sy = rng.uniform(-theta, theta);
    s.xi_hx = rng.uniform(-theta, theta);
    s.xi_hy = rng.uniform(-theta, theta);
    s.xi_rot = rng.uniform(-theta, theta);
    s.tx = kappa * rng.uniform(-theta, theta);
    s.ty = kappa * rng.uniform(-theta, theta);
    return s;
}

DistortionSample draw_rotation_only(double theta, RngStream& rng) {
    if (theta < 0.0) throw ink::DataError("draw_rotation_only: theta must be >= 0");
    DistortionSample s;
    s.xi_rot = rng.uniform(-theta, theta);
    return s;
}

ink::Character apply(const ink::Character& c, const DistortionSample& s) {
    // Row-vector convention: [x y] <- [x y] * M, composed left to right as
    // stretch, slant, slant, rotation. M = M1*M2*M3*M4 collapses the chain.
    const double m1[4] = {1.0 + s.xi_sx, 0.0, 0.0, 1.0 + s.xi_sy};
    const double m2[4] = {1.0, s.xi_hx, 0.0, 1.0};
    const double m3[4] = {1.0, 0.0, s.xi_hy, 1.0};
    const double cr = std::cos(s.xi_rot), sr = std::sin(s.xi_rot);
    const double m4[4] = {cr, -sr, sr, cr};

    auto matmul = [](const double a[4], const double b[4], double out[4]) {
        out[0] = a[0] * b[0] + a[1] * b[2];
        out[1] = a[0] * b[1] + a[1] * b[3];
        out[2] = a[2] * b[0] + a[3] * b[2];
        out[3] = a[2] * b[1] + a[3] * b[3];
    };
    double m12[4], m123[4], m[4];
    matmul(m1, m2, m12);
    matmul(m12, m3, m123);
    matmul(m123, m4, m);

    const ink::Box b = ink::bounding_box(c);
    const double cx = 0.5 * (b.xmin + b.xmax);
    const double cy = 0.5 * (b.ymin + b.ymax);

    ink::Character out = c;
    for (auto& stroke : out.strokes)
        for (auto& p : stroke.points) {
            const double x = p.x - cx;
            const double y = p.y - cy;
            p.x = x * m[0] + y * m[2] + cx + s.tx;
            p.y = x * m[1] + y * m[3] + cy + s.ty;
        }
    return out;
}

int DropSchedule::total_epochs() const {
    int t = 0;
    for (const auto& st : stages) t += st.epochs;
    return t;
}

void DropSchedule::validate() const {
    if (stages.empty()) throw ink::DataError("schedule: no stages");
    for (std::size_t i = 0; i < stages.size(); ++i) {
        if (stages[i].theta < 0.0) throw ink::DataError("schedule: theta must be >= 0");
        if (stages[i].epochs <= 0) throw ink::DataError("schedule: stage epochs must be positive");
        if (i > 0 && !(stages[i].theta < stages[i - 1].theta))
            throw ink::DataError("schedule: thetas must be strictly decreasing");
    }
    if (mode == Mode::LossPlateau) {
        if (patience < 1) throw ink::DataError("schedule: patience must be >= 1");
        if (min_rel_improve < 0.0) throw ink::DataError("schedule: min_rel_improve must be >= 0");
    }
}

DropSchedule DropSchedule::fixed(double theta, int epochs) {
    DropSchedule s;
    s.stages.push_back({theta, epochs});
    return s;
}

DropSchedule DropSchedule::staged(const std::vector<double>& thetas, int epochs) {
    DropSchedule s;
    const int n = int(thetas.size());
    if (n == 0) throw ink::DataError("schedule: no thetas");
    const int base = epochs / n;
    const int extra = epochs % n;
    for (int i = 0; i < n; ++i) s.stages.push_back({thetas[i], base + (i < extra ? 1 : 0)});
    return s;
}

double schedule_theta(int epoch, const DropSchedule& sched,
                      const std::vector<double>& loss_history) {
    sched.validate();
    if (sched.mode == DropSchedule::Mode::FixedEpochs) {
        int start = 0;
        for (const auto& st : sched.stages) {
            if (epoch < start + st.epochs) return st.theta;
            start += st.epochs;
        }
        return sched.stages.back().theta;  // past the budget: hold the last degree
    }

    // Plateau mode: replay the history. A stage ends when the best in-stage
    // loss has not dropped by min_rel_improve for `patience` epochs, or when
    // its epoch budget runs out, whichever comes first.
    std::size_t stage = 0;
    int stage_start = 0;
    double best = std::numeric_limits<double>::infinity();
    int wait = 0;
    for (int e = 0; e < epoch; ++e) {
        if (e < int(loss_history.size())) {
            const double loss = loss_history[e];
            if (loss < best * (1.0 - sched.min_rel_improve)) {
                best = loss;
                wait = 0;
            } else {
                ++wait;
            }
        }
        const bool budget_spent = (e - stage_start + 1) >= sched.stages[stage].epochs;
        if ((wait >= sched.patience || budget_spent) && stage + 1 < sched.stages.size()) {
            ++stage;
            stage_start = e + 1;
            best = std::numeric_limits<double>::infinity();
            wait = 0;
        }
    }
    return sched.stages[stage].theta;
}

}  // namespace inknet::distort
