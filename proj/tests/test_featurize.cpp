#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "inknet/featurize.hpp"
#include "inknet/rng.hpp"

using namespace inknet;
using namespace inknet::sigfeat;

namespace {

ink::Character hbar() {
    ink::Character c;
    c.strokes.push_back({{{5.0, 25.0}, {45.0, 25.0}}});
    return c;
}

}  // namespace

TEST_CASE("channel counts per mode") {
    CHECK(feature_channels(FeatureMode::Bitmap, 4) == 1);
    CHECK(feature_channels(FeatureMode::Sig2d, 4) == 31);
    CHECK(feature_channels(FeatureMode::Sig3d, 4) == 121);
    CHECK(feature_channels(FeatureMode::Sig2d, 3) == 15);
    CHECK_THROWS_AS(parse_feature_mode("sig4d"), ink::DataError);
}

TEST_CASE("hbar bitmap is one horizontal run") {
    const FeatureMap fm = featurize(hbar(), FeatureMode::Bitmap, 4, {}, 64, 50);
    REQUIRE(fm.n == 1);
    REQUIRE(fm.g == 64);
    int lit_rows = 0, lit_row = -1;
    for (int y = 0; y < 64; ++y) {
        int run = 0;
        for (int x = 0; x < 64; ++x) run += fm.at(0, y, x) > 0 ? 1 : 0;
        if (run > 0) {
            ++lit_rows;
            lit_row = y;
            CHECK(run == 50);  // box pixels 7..56
        }
    }
    CHECK(lit_rows == 1);
    CHECK((lit_row == 31 || lit_row == 32));
}

TEST_CASE("everything outside the centered box is zero") {
    RngStream rng(4);
    ink::Character c;
    for (int s = 0; s < 3; ++s) {
        ink::Stroke st;
        for (int p = 0; p < 6; ++p)
            st.points.push_back({rng.uniform(-30, 80), rng.uniform(-30, 80)});
        c.strokes.push_back(st);
    }
    const int G = 64, H = 50;
    const int lo = (G - H) / 2, hi = lo + H - 1;  // pixel rows 7..56
    for (FeatureMode mode : {FeatureMode::Bitmap, FeatureMode::Sig2d, FeatureMode::Sig3d}) {
        const FeatureMap fm = featurize(c, mode, 2, {}, G, H);
        for (int ch = 0; ch < fm.n; ++ch)
            for (int y = 0; y < G; ++y)
                for (int x = 0; x < G; ++x)
                    if (y < lo || y > hi || x < lo || x > hi)
                        CHECK(fm.at(ch, y, x) == 0.0f);
    }
}

TEST_CASE("channel 0 is the presence bitmap") {
    RngStream rng(5);
    ink::Character c;
    ink::Stroke st;
    for (int p = 0; p < 8; ++p) st.points.push_back({rng.uniform(0, 50), rng.uniform(0, 50)});
    c.strokes.push_back(st);

    const FeatureMap sig = featurize(c, FeatureMode::Sig2d, 4, {}, 64, 50);
    const FeatureMap bmp = featurize(c, FeatureMode::Bitmap, 4, {}, 64, 50);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) {
            CHECK(sig.at(0, y, x) == bmp.at(0, y, x));
            CHECK((sig.at(0, y, x) == 0.0f || sig.at(0, y, x) == 1.0f));
            if (sig.at(0, y, x) == 0.0f)
                for (int ch = 1; ch < sig.n; ++ch) CHECK(sig.at(ch, y, x) == 0.0f);
        }
}

TEST_CASE("single-point characters land on the grid center") {
    ink::Character c;
    c.strokes.push_back({{{10.0, 20.0}}});
    const FeatureMap fm = featurize(c, FeatureMode::Sig3d, 4, {}, 64, 50);
    CHECK(fm.n == 121);
    int lit = 0;
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x)
            if (fm.at(0, y, x) != 0.0f) {
                ++lit;
                CHECK((y == 31 || y == 32));
                CHECK((x == 31 || x == 32));
                // identity signature at an isolated point
                for (int ch = 1; ch < fm.n; ++ch) CHECK(fm.at(ch, y, x) == 0.0f);
            }
    CHECK(lit == 1);
}

TEST_CASE("sig3d windows stay bounded") {
    RngStream rng(6);
    ink::Character c;
    for (int s = 0; s < 2; ++s) {
        ink::Stroke st;
        for (int p = 0; p < 10; ++p)
            st.points.push_back({rng.uniform(0, 50), rng.uniform(0, 50)});
        c.strokes.push_back(st);
    }
    const FeatureMap fm = featurize(c, FeatureMode::Sig3d, 4, {}, 64, 50);
    for (float v : fm.values) {
        CHECK(std::isfinite(v));
        CHECK(std::fabs(v) <= 8.0f);  // scaled windows keep level-4 terms small
    }
}

TEST_CASE("sigf round trip is exact") {
    RngStream rng(7);
    FeatureSet fs;
    fs.categories = {"a", "b", "long name with spaces"};
    for (int i = 0; i < 5; ++i) {
        FeatureMap fm;
        fm.n = 3;
        fm.g = 4;
        fm.values.resize(48);
        for (auto& v : fm.values) v = float(rng.uniform(-2, 2));
        fs.append(fm, i % 2 ? -1 : i % 3);
    }
    const std::string path = "/tmp/inknet_test_roundtrip.sigf";
    write_sigf(fs, path);
    const FeatureSet back = read_sigf(path);
    CHECK(back.n == fs.n);
    CHECK(back.g == fs.g);
    CHECK(back.categories == fs.categories);
    CHECK(back.labels == fs.labels);
    REQUIRE(back.data.size() == fs.data.size());
    for (std::size_t i = 0; i < fs.data.size(); ++i) CHECK(back.data[i] == fs.data[i]);
    std::remove(path.c_str());
}

TEST_CASE("sigf rejects truncated and corrupt files") {
    FeatureSet fs;
    fs.categories = {"a"};
    FeatureMap fm;
    fm.n = 2;
    fm.g = 3;
    fm.values.assign(18, 1.0f);
    fs.append(fm, 0);
    const std::string path = "/tmp/inknet_test_trunc.sigf";
    write_sigf(fs, path);

    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    std::ofstream out(path, std::ios::binary);
    out.write(bytes.data(), std::streamsize(bytes.size() / 2));
    out.close();
    CHECK_THROWS_AS(read_sigf(path), ink::DataError);

    std::ofstream bad(path, std::ios::binary);
    bad << "NOPE";
    bad.close();
    CHECK_THROWS_AS(read_sigf(path), ink::DataError);
    std::remove(path.c_str());
}

TEST_CASE("featurize validates the window") {
    CHECK_THROWS_AS(featurize(hbar(), FeatureMode::Sig2d, 4, {0}, 64, 50), ink::DataError);
}
