#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace inknet::ink {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

struct Stroke {
    std::vector<Point> points;  // never empty in a valid character
};

/// One handwritten character: ordered strokes plus an optional label.
struct Character {
    std::vector<Stroke> strokes;
    std::optional<std::string> label;

    std::size_t point_count() const {
        std::size_t n = 0;
        for (const auto& s : strokes) n += s.points.size();
        return n;
    }
};

// (t, x, y) rows with t strictly increasing; produced only by add_time.
struct TimedPath {
    struct Row {
        double t, x, y;
    };
    std::vector<Row> rows;
};

struct Dataset {
    std::vector<Character> items;
    std::vector<std::string> categories;

    int category_index(const std::string& label) const;
};

// Thrown on malformed input data or invariant violations; the CLI maps it
// to exit code 2.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Canonical line-delimited format: one JSON object per line,
//   {"label": <string or null>, "strokes": [[[x,y],...], ...]}
Dataset parse_canonical(std::istream& in);
Dataset parse_canonical_file(const std::string& path);  // "-" reads stdin
void serialize(const Dataset& d, std::ostream& out);
void serialize_file(const Dataset& d, const std::string& path);  // "-" writes stdout

// Axis-aligned bounding box over every point of the character.
struct Box {
    double xmin, ymin, xmax, ymax;
    double width() const { return xmax - xmin; }
    double height() const { return ymax - ymin; }
};
Box bounding_box(const Character& c);

// Scales the character isotropically so the longer side of its bounding box
// spans exactly `box_px` pixel rows/columns (extent box_px-1), centered on
// the grid center ((grid_px-1)/2, (grid_px-1)/2). A degenerate bounding box
// moves to the center without scaling.
Character normalize(const Character& c, int box_px = 50, int grid_px = 64);

// Piecewise-linear densification: consecutive points at most max_step apart,
// all original points kept exactly.
Stroke resample(const Stroke& s, double max_step = 1.0);
Character resample(const Character& c, double max_step = 1.0);

// Appends the writing-order time channel: one global counter over all points
// of the character, normalized to [0,1]. One TimedPath per stroke.
std::vector<TimedPath> add_time(const Character& c);

// Deterministic synthetic dataset. Categories 0 and 1 are the fixed "hbar"
// and "vbar" templates; the rest are random polylines on a 50x50 canvas.
// Instances are the template plus i.i.d. Gaussian jitter per coordinate.
Dataset synth_dataset(int n_categories, int per_category, double jitter, std::uint64_t seed);

// Instance streams are keyed by (seed, category, instance_offset + i), so a
// disjoint test split comes from the same seed with a different offset.
Dataset synth_dataset(int n_categories, int per_category, double jitter, std::uint64_t seed,
                      int instance_offset);

}  // namespace inknet::ink
