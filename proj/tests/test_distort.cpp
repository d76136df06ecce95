#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "inknet/distort.hpp"

using namespace inknet;
using namespace inknet::distort;

namespace {

ink::Character sample_char(RngStream& rng, int strokes = 2, int pts = 5) {
    ink::Character c;
    for (int s = 0; s < strokes; ++s) {
        ink::Stroke st;
        for (int p = 0; p < pts; ++p)
            st.points.push_back({rng.uniform(0, 50), rng.uniform(0, 50)});
        c.strokes.push_back(st);
    }
    return c;
}

// Row-vector affine transform mirrored from the equations, used to compose
// two applications independently of apply's internals.
struct Affine {
    double m[4];
    double ox, oy;
    ink::Point operator()(ink::Point p) const {
        return {p.x * m[0] + p.y * m[2] + ox, p.x * m[1] + p.y * m[3] + oy};
    }
};

Affine affine_of(const DistortionSample& s, const ink::Character& c) {
    auto mul = [](const double a[4], const double b[4], double out[4]) {
        out[0] = a[0] * b[0] + a[1] * b[2];
        out[1] = a[0] * b[1] + a[1] * b[3];
        out[2] = a[2] * b[0] + a[3] * b[2];
        out[3] = a[2] * b[1] + a[3] * b[3];
    };
    const double m1[4] = {1 + s.xi_sx, 0, 0, 1 + s.xi_sy};
    const double m2[4] = {1, s.xi_hx, 0, 1};
    const double m3[4] = {1, 0, s.xi_hy, 1};
    const double cr = std::cos(s.xi_rot), sr = std::sin(s.xi_rot);
    const double m4[4] = {cr, -sr, sr, cr};
    double t[4], u[4];
    Affine a{};
    mul(m1, m2, t);
    mul(t, m3, u);
    mul(u, m4, a.m);
    const ink::Box b = ink::bounding_box(c);
    const double cx = 0.5 * (b.xmin + b.xmax), cy = 0.5 * (b.ymin + b.ymax);
    // (p - C) M + C + t
    a.ox = -(cx * a.m[0] + cy * a.m[2]) + cx + s.tx;
    a.oy = -(cx * a.m[1] + cy * a.m[3]) + cy + s.ty;
    return a;
}

}  // namespace

TEST_CASE("theta zero draws the all-zero sample and apply is the identity") {
    RngStream rng(1);
    const DistortionSample s = draw_distortion(0.0, rng);
    CHECK(s.xi_sx == 0.0);
    CHECK(s.xi_sy == 0.0);
    CHECK(s.xi_hx == 0.0);
    CHECK(s.xi_hy == 0.0);
    CHECK(s.xi_rot == 0.0);
    CHECK(s.tx == 0.0);
    CHECK(s.ty == 0.0);

    RngStream cr(2);
    const ink::Character c = sample_char(cr);
    const ink::Character out = apply(c, s);
    for (std::size_t i = 0; i < c.strokes.size(); ++i)
        for (std::size_t p = 0; p < c.strokes[i].points.size(); ++p) {
            CHECK(out.strokes[i].points[p].x == c.strokes[i].points[p].x);
            CHECK(out.strokes[i].points[p].y == c.strokes[i].points[p].y);
        }
}

TEST_CASE("draws stay inside the uniform support with a centered mean") {
    const double theta = 0.3;
    RngStream rng(3);
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const DistortionSample s = draw_distortion(theta, rng);
        for (double v : {s.xi_sx, s.xi_sy, s.xi_hx, s.xi_hy, s.xi_rot}) {
            CHECK(std::fabs(v) <= theta);
            sum += v;
        }
        CHECK(std::fabs(s.tx) <= theta * kDefaultKappa);
        CHECK(std::fabs(s.ty) <= theta * kDefaultKappa);
    }
    // 3 sigma of the mean of 5n draws from U(-theta,theta)
    const double sigma = theta / std::sqrt(3.0) / std::sqrt(5.0 * n);
    CHECK(std::fabs(sum / (5.0 * n)) < 3.0 * sigma);
}

TEST_CASE("same stream state twice gives identical samples") {
    RngStream a(9), b(9);
    for (int i = 0; i < 10; ++i) {
        const auto s1 = draw_distortion(0.25, a);
        const auto s2 = draw_distortion(0.25, b);
        CHECK(s1.xi_rot == s2.xi_rot);
        CHECK(s1.tx == s2.tx);
        CHECK(s1.xi_hy == s2.xi_hy);
    }
}

TEST_CASE("rotation-only samples preserve pairwise distances") {
    RngStream rng(4);
    const ink::Character c = sample_char(rng, 3, 6);
    DistortionSample s;
    s.xi_rot = 0.7;
    const ink::Character out = apply(c, s);
    std::vector<ink::Point> before, after;
    for (std::size_t i = 0; i < c.strokes.size(); ++i)
        for (std::size_t p = 0; p < c.strokes[i].points.size(); ++p) {
            before.push_back(c.strokes[i].points[p]);
            after.push_back(out.strokes[i].points[p]);
        }
    for (std::size_t i = 0; i < before.size(); ++i)
        for (std::size_t j = i + 1; j < before.size(); ++j) {
            const double d0 = std::hypot(before[i].x - before[j].x, before[i].y - before[j].y);
            const double d1 = std::hypot(after[i].x - after[j].x, after[i].y - after[j].y);
            CHECK(std::fabs(d1 - d0) <= 1e-9 * std::max(1.0, d0));
        }
    CHECK(out.strokes.size() == c.strokes.size());
}

TEST_CASE("pure horizontal stretch doubles the x extent about the center") {
    ink::Character c;
    c.strokes.push_back({{{0.0, 0.0}, {10.0, 0.0}}});
    DistortionSample s;
    s.xi_sx = 1.0;  // scale 2 in x
    const ink::Character out = apply(c, s);
    CHECK(out.strokes[0].points[0].x == doctest::Approx(-5.0).epsilon(1e-12));
    CHECK(out.strokes[0].points[1].x == doctest::Approx(15.0).epsilon(1e-12));
    CHECK(out.strokes[0].points[0].y == doctest::Approx(0.0));
    CHECK(out.strokes[0].points[1].y == doctest::Approx(0.0));
}

TEST_CASE("two applications compose like the affine product") {
    RngStream rng(6);
    for (int trial = 0; trial < 10; ++trial) {
        const ink::Character c = sample_char(rng);
        RngStream dr(100 + trial);
        const DistortionSample s1 = draw_distortion(0.3, dr);
        const DistortionSample s2 = draw_distortion(0.2, dr);

        const ink::Character once = apply(c, s1);
        const ink::Character twice = apply(once, s2);

        const Affine a1 = affine_of(s1, c);
        const Affine a2 = affine_of(s2, once);
        for (std::size_t i = 0; i < c.strokes.size(); ++i)
            for (std::size_t p = 0; p < c.strokes[i].points.size(); ++p) {
                const ink::Point q = a2(a1(c.strokes[i].points[p]));
                const ink::Point r = twice.strokes[i].points[p];
                CHECK(std::fabs(q.x - r.x) <= 1e-9 * std::max(1.0, std::fabs(q.x)));
                CHECK(std::fabs(q.y - r.y) <= 1e-9 * std::max(1.0, std::fabs(q.y)));
            }
    }
}

TEST_CASE("fixed-epochs schedule follows its stage boundaries") {
    DropSchedule sched;
    sched.stages = {{0.3, 24}, {0.2, 23}, {0.1, 23}};
    const std::vector<double> no_losses;
    CHECK(schedule_theta(0, sched, no_losses) == 0.3);
    CHECK(schedule_theta(23, sched, no_losses) == 0.3);
    CHECK(schedule_theta(24, sched, no_losses) == 0.2);
    CHECK(schedule_theta(46, sched, no_losses) == 0.2);
    CHECK(schedule_theta(47, sched, no_losses) == 0.1);
    CHECK(schedule_theta(69, sched, no_losses) == 0.1);
}

TEST_CASE("single fixed stage holds its degree") {
    const DropSchedule sched = DropSchedule::fixed(0.3, 70);
    for (int e = 0; e < 70; ++e) CHECK(schedule_theta(e, sched, {}) == 0.3);
}

TEST_CASE("staged splits epochs evenly with the remainder up front") {
    const DropSchedule s = DropSchedule::staged({0.3, 0.2, 0.1}, 70);
    REQUIRE(s.stages.size() == 3);
    CHECK(s.stages[0].epochs == 24);
    CHECK(s.stages[1].epochs == 23);
    CHECK(s.stages[2].epochs == 23);
    CHECK(s.total_epochs() == 70);
}

TEST_CASE("plateau mode advances on stalls but never before progress stops") {
    DropSchedule sched;
    sched.stages = {{0.3, 10}, {0.2, 10}, {0.1, 10}};
    sched.mode = DropSchedule::Mode::LossPlateau;
    sched.patience = 3;
    sched.min_rel_improve = 0.005;

    // strictly improving: holds until the stage budget
    std::vector<double> improving;
    for (int e = 0; e < 30; ++e) improving.push_back(10.0 * std::pow(0.9, e));
    for (int e = 0; e < 10; ++e) CHECK(schedule_theta(e, sched, improving) == 0.3);
    CHECK(schedule_theta(10, sched, improving) == 0.2);

    // flat: the first epoch sets the best, then `patience` stalls advance it
    const std::vector<double> flat(30, 5.0);
    CHECK(schedule_theta(3, sched, flat) == 0.3);
    CHECK(schedule_theta(4, sched, flat) == 0.2);
    CHECK(schedule_theta(7, sched, flat) == 0.2);
    CHECK(schedule_theta(8, sched, flat) == 0.1);
    CHECK(schedule_theta(20, sched, flat) == 0.1);
}

TEST_CASE("schedule output is non-increasing in the epoch") {
    RngStream rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        DropSchedule sched;
        sched.stages = {{0.4, 5}, {0.25, 7}, {0.1, 8}};
        sched.mode = trial % 2 ? DropSchedule::Mode::LossPlateau
                               : DropSchedule::Mode::FixedEpochs;
        std::vector<double> losses;
        for (int e = 0; e < 20; ++e) losses.push_back(rng.uniform(0.1, 3.0));
        double prev = 1e9;
        for (int e = 0; e < 20; ++e) {
            const double th = schedule_theta(e, sched, losses);
            CHECK(th <= prev);
            prev = th;
        }
    }
}

TEST_CASE("schedules validate their invariants") {
    DropSchedule empty;
    CHECK_THROWS_AS(schedule_theta(0, empty, {}), ink::DataError);
    DropSchedule increasing;
    increasing.stages = {{0.1, 5}, {0.3, 5}};
    CHECK_THROWS_AS(increasing.validate(), ink::DataError);
    RngStream rng(1);
    CHECK_THROWS_AS(draw_distortion(-0.1, rng), ink::DataError);
}
