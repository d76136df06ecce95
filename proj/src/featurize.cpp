#include "inknet/featurize.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace inknet::sigfeat {

FeatureMode parse_feature_mode(const std::string& name) {
    if (name == "bitmap") return FeatureMode::Bitmap;
    if (name == "sig2d") return FeatureMode::Sig2d;
    if (name == "sig3d") return FeatureMode::Sig3d;
    throw ink::DataError("unknown feature mode: " + name);
}

std::string feature_mode_name(FeatureMode mode) {
    switch (mode) {
        case FeatureMode::Bitmap: return "bitmap";
        case FeatureMode::Sig2d: return "sig2d";
        case FeatureMode::Sig3d: return "sig3d";
    }
    return "?";
}

int feature_channels(FeatureMode mode, int m) {
    switch (mode) {
        case FeatureMode::Bitmap: return 1;
        case FeatureMode::Sig2d: return int(sig_length(2, m));
        case FeatureMode::Sig3d: return int(sig_length(3, m));
    }
    return 0;
}

static int to_pixel(double v, int grid_px) {
    long p = std::lround(v);
    return int(std::clamp(p, 0L, long(grid_px - 1)));
}

FeatureMap featurize_prenormalized(const ink::Character& c, FeatureMode mode, int m,
                                   WindowSpec win, int grid_px) {
    if (win.W < 1) throw ink::DataError("featurize: window W must be >= 1");
    const int N = feature_channels(mode, m);
    FeatureMap fm;
    fm.n = N;
    fm.g = grid_px;
    fm.values.assign(std::size_t(N) * grid_px * grid_px, 0.0f);

    const ink::Character rc = ink::resample(c, 1.0);

    if (mode == FeatureMode::Bitmap) {
        for (const auto& s : rc.strokes)
            for (const auto& p : s.points)
                fm.at(0, to_pixel(p.y, grid_px), to_pixel(p.x, grid_px)) = 1.0f;
        return fm;
    }

    const bool timed = (mode == FeatureMode::Sig3d);
    const double coord_scale = 1.0 / double(2 * win.W);
    std::vector<ink::TimedPath> timed_paths;
    if (timed) timed_paths = ink::add_time(rc);

    std::vector<std::vector<double>> window;
    for (std::size_t si = 0; si < rc.strokes.size(); ++si) {
        const auto& pts = rc.strokes[si].points;
        const int n = int(pts.size());
        for (int i = 0; i < n; ++i) {
            const int lo = std::max(0, i - win.W);
            const int hi = std::min(n - 1, i + win.W);
            window.clear();
            if (timed) {
                const auto& rows = timed_paths[si].rows;
                const double t0 = rows[lo].t, t1 = rows[hi].t;
                const double tspan = t1 > t0 ? t1 - t0 : 1.0;
                for (int k = lo; k <= hi; ++k)
                    window.push_back({(rows[k].t - t0) / tspan,
                                      (pts[k].x - pts[lo].x) * coord_scale,
                                      (pts[k].y - pts[lo].y) * coord_scale});
            } else {
                for (int k = lo; k <= hi; ++k)
                    window.push_back({(pts[k].x - pts[lo].x) * coord_scale,
                                      (pts[k].y - pts[lo].y) * coord_scale});
            }
            const TruncatedSignature sig = path_signature(window, m);
            const int px = to_pixel(pts[i].x, grid_px);
            const int py = to_pixel(pts[i].y, grid_px);
            for (int ch = 0; ch < N; ++ch) fm.at(ch, py, px) = float(sig.coeffs[ch]);
        }
    }
    return fm;
}

FeatureMap featurize(const ink::Character& c, FeatureMode mode, int m, WindowSpec win,
                     int grid_px, int box_px) {
    return featurize_prenormalized(ink::normalize(c, box_px, grid_px), mode, m, win, grid_px);
}

void FeatureSet::append(const FeatureMap& fm, std::int32_t label) {
    if (count() == 0 && data.empty()) {
        n = fm.n;
        g = fm.g;
    }
    if (fm.n != n || fm.g != g) throw ink::DataError("feature set: shape mismatch");
    labels.push_back(label);
    data.insert(data.end(), fm.values.begin(), fm.values.end());
}

namespace {

constexpr char kMagic[4] = {'S', 'I', 'G', 'F'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kNoLabel = 0xFFFFFFFFu;

void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in, const char* field) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4))
        throw ink::DataError(std::string("sigf: truncated at ") + field);
    return std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 | std::uint32_t(b[2]) << 16 |
           std::uint32_t(b[3]) << 24;
}

}  // namespace

void write_sigf(const FeatureSet& fs, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ink::DataError("cannot open " + path + " for writing");
    out.write(kMagic, 4);
    put_u32(out, kVersion);
    put_u32(out, std::uint32_t(fs.n));
    put_u32(out, std::uint32_t(fs.g));
    put_u32(out, std::uint32_t(fs.count()));
    put_u32(out, std::uint32_t(fs.categories.size()));
    for (const auto& cat : fs.categories) {
        put_u32(out, std::uint32_t(cat.size()));
        out.write(cat.data(), std::streamsize(cat.size()));
    }
    const std::size_t rec = std::size_t(fs.n) * fs.g * fs.g;
    for (std::size_t i = 0; i < fs.count(); ++i) {
        put_u32(out, fs.labels[i] < 0 ? kNoLabel : std::uint32_t(fs.labels[i]));
        // float32 little-endian; this build targets little-endian hosts.
        out.write(reinterpret_cast<const char*>(fs.data.data() + i * rec),
                  std::streamsize(rec * sizeof(float)));
    }
    if (!out) throw ink::DataError("sigf: write failed for " + path);
}

FeatureSet read_sigf(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ink::DataError("cannot open " + path);
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        throw ink::DataError("sigf: bad magic in " + path);
    const std::uint32_t version = get_u32(in, "version");
    if (version != kVersion)
        throw ink::DataError("sigf: unsupported version " + std::to_string(version));
    FeatureSet fs;
    fs.n = int(get_u32(in, "channels"));
    fs.g = int(get_u32(in, "grid"));
    const std::uint32_t count = get_u32(in, "count");
    const std::uint32_t ncat = get_u32(in, "categories");
    for (std::uint32_t i = 0; i < ncat; ++i) {
        const std::uint32_t len = get_u32(in, "category name length");
        std::string name(len, '\0');
        if (!in.read(name.data(), len)) throw ink::DataError("sigf: truncated category name");
        fs.categories.push_back(std::move(name));
    }
    const std::size_t rec = std::size_t(fs.n) * fs.g * fs.g;
    fs.labels.reserve(count);
    fs.data.resize(std::size_t(count) * rec);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t label = get_u32(in, "label");
        if (label != kNoLabel && label >= ncat)
            throw ink::DataError("sigf: label index out of range");
        fs.labels.push_back(label == kNoLabel ? -1 : std::int32_t(label));
        if (!in.read(reinterpret_cast<char*>(fs.data.data() + i * rec),
                     std::streamsize(rec * sizeof(float))))
            throw ink::DataError("sigf: truncated record " + std::to_string(i));
    }
    return fs;
}

}  // namespace inknet::sigfeat
