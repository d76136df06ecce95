#include "inknet/ink.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "inknet/rng.hpp"

namespace inknet::ink {

using nlohmann::json;

int Dataset::category_index(const std::string& label) const {
    auto it = std::find(categories.begin(), categories.end(), label);
    return it == categories.end() ? -1 : int(it - categories.begin());
}

static void require_finite(double v, std::size_t line_no) {
    if (!std::isfinite(v))
        throw DataError("line " + std::to_string(line_no) + ": non-finite coordinate");
}

Dataset parse_canonical(std::istream& in) {
    Dataset d;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw DataError("line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!j.is_object() || !j.contains("strokes"))
            throw DataError("line " + std::to_string(line_no) + ": expected object with \"strokes\"");

        Character c;
        if (j.contains("label") && !j["label"].is_null()) {
            if (!j["label"].is_string())
                throw DataError("line " + std::to_string(line_no) + ": label must be string or null");
            c.label = j["label"].get<std::string>();
        }
        const json& strokes = j["strokes"];
        if (!strokes.is_array() || strokes.empty())
            throw DataError("line " + std::to_string(line_no) + ": strokes must be a non-empty array");
        for (const json& js : strokes) {
            if (!js.is_array())
                throw DataError("line " + std::to_string(line_no) + ": stroke must be an array");
            if (js.empty())
                throw DataError("line " + std::to_string(line_no) + ": empty stroke");
            Stroke s;
            for (const json& jp : js) {
                if (!jp.is_array() || jp.size() != 2 || !jp[0].is_number() || !jp[1].is_number())
                    throw DataError("line " + std::to_string(line_no) + ": point must be [x,y]");
                Point p{jp[0].get<double>(), jp[1].get<double>()};
                require_finite(p.x, line_no);
                require_finite(p.y, line_no);
                s.points.push_back(p);
            }
            c.strokes.push_back(std::move(s));
        }
        if (c.label && d.category_index(*c.label) < 0) d.categories.push_back(*c.label);
        d.items.push_back(std::move(c));
    }
    return d;
}

Dataset parse_canonical_file(const std::string& path) {
    if (path == "-") return parse_canonical(std::cin);
    std::ifstream f(path);
    if (!f) throw DataError("cannot open " + path);
    return parse_canonical(f);
}

void serialize(const Dataset& d, std::ostream& out) {
    for (const Character& c : d.items) {
        json strokes = json::array();
        for (const Stroke& s : c.strokes) {
            json js = json::array();
            for (const Point& p : s.points) js.push_back(json::array({p.x, p.y}));
            strokes.push_back(std::move(js));
        }
        json j;
        j["label"] = c.label ? json(*c.label) : json(nullptr);
        j["strokes"] = std::move(strokes);
        out << j.dump() << '\n';
    }
}

void serialize_file(const Dataset& d, const std::string& path) {
    if (path == "-") {
        serialize(d, std::cout);
        return;
    }
    std::ofstream f(path);
    if (!f) throw DataError("cannot open " + path + " for writing");
    serialize(d, f);
}

Box bounding_box(const Character& c) {
    Box b{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
          -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const auto& s : c.strokes)
        for (const auto& p : s.points) {
            b.xmin = std::min(b.xmin, p.x);
            b.ymin = std::min(b.ymin, p.y);
            b.xmax = std::max(b.xmax, p.x);
            b.ymax = std::max(b.ymax, p.y);
        }
    if (c.point_count() == 0) throw DataError("bounding_box: character has no points");
    return b;
}

Character normalize(const Character& c, int box_px, int grid_px) {
    if (box_px <= 0 || grid_px < box_px)
        throw DataError("normalize: need 0 < box_px <= grid_px");
    Box b = bounding_box(c);
    const double longer = std::max(b.width(), b.height());
    // Longer side covers box_px pixels, i.e. a coordinate extent of box_px-1,
    // so every rounded pixel stays inside the centered box.
    const double scale = longer > 0.0 ? double(box_px - 1) / longer : 0.0;
    const double cx = 0.5 * (b.xmin + b.xmax);
    const double cy = 0.5 * (b.ymin + b.ymax);
    const double gc = 0.5 * double(grid_px - 1);

    Character out = c;
    for (auto& s : out.strokes)
        for (auto& p : s.points) {
            p.x = (p.x - cx) * scale + gc;
            p.y = (p.y - cy) * scale + gc;
        }
    return out;
}

Stroke resample(const Stroke& s, double max_step) {
    if (max_step <= 0.0) throw DataError("resample: max_step must be positive");
    Stroke out;
    if (s.points.empty()) return out;
    out.points.push_back(s.points.front());
    for (std::size_t i = 1; i < s.points.size(); ++i) {
        const Point& a = s.points[i - 1];
        const Point& b = s.points[i];
        const double len = std::hypot(b.x - a.x, b.y - a.y);
        const int pieces = std::max(1, int(std::ceil(len / max_step - 1e-12)));
        for (int k = 1; k < pieces; ++k) {
            const double t = double(k) / double(pieces);
            out.points.push_back({a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t});
        }
        out.points.push_back(b);  // endpoint kept exactly
    }
    return out;
}

Character resample(const Character& c, double max_step) {
    Character out;
    out.label = c.label;
    out.strokes.reserve(c.strokes.size());
    for (const auto& s : c.strokes) out.strokes.push_back(resample(s, max_step));
    return out;
}

std::vector<TimedPath> add_time(const Character& c) {
    const std::size_t total = c.point_count();
    const double denom = total > 1 ? double(total - 1) : 1.0;
    std::vector<TimedPath> out;
    out.reserve(c.strokes.size());
    std::size_t idx = 0;
    for (const auto& s : c.strokes) {
        TimedPath tp;
        tp.rows.reserve(s.points.size());
        for (const auto& p : s.points) {
            tp.rows.push_back({double(idx) / denom, p.x, p.y});
            ++idx;
        }
        out.push_back(std::move(tp));
    }
    return out;
}

static Character make_template(int category, std::uint64_t seed) {
    Character c;
    if (category == 0) {  // hbar
        c.strokes.push_back({{{5, 25}, {45, 25}}});
        return c;
    }
    if (category == 1) {  // vbar
        c.strokes.push_back({{{25, 5}, {25, 45}}});
        return c;
    }
    RngStream rng = RngStream::keyed(seed, {rngkey::kTemplate, std::uint64_t(category)});
    const int n_strokes = 2 + int(rng.below(4));  // 2..5
    for (int s = 0; s < n_strokes; ++s) {
        Stroke st;
        const int n_pts = 3 + int(rng.below(6));  // 3..8
        for (int p = 0; p < n_pts; ++p)
            st.points.push_back({rng.uniform(0.0, 50.0), rng.uniform(0.0, 50.0)});
        c.strokes.push_back(std::move(st));
    }
    return c;
}

static std::string category_name(int k) {
    if (k == 0) return "hbar";
    if (k == 1) return "vbar";
    char buf[16];
    std::snprintf(buf, sizeof buf, "cat%02d", k);
    return buf;
}

Dataset synth_dataset(int n_categories, int per_category, double jitter, std::uint64_t seed) {
    return synth_dataset(n_categories, per_category, jitter, seed, 0);
}

Dataset synth_dataset(int n_categories, int per_category, double jitter, std::uint64_t seed,
                      int instance_offset) {
    if (n_categories < 2) throw DataError("synth_dataset: need at least 2 categories");
    if (per_category < 1) throw DataError("synth_dataset: need at least 1 instance per category");
    Dataset d;
    for (int k = 0; k < n_categories; ++k) d.categories.push_back(category_name(k));
    for (int k = 0; k < n_categories; ++k) {
        const Character tmpl = make_template(k, seed);
        for (int i = 0; i < per_category; ++i) {
            RngStream rng = RngStream::keyed(
                seed, {rngkey::kJitter, std::uint64_t(k), std::uint64_t(instance_offset + i)});
            Character inst = tmpl;
            inst.label = d.categories[k];
            for (auto& s : inst.strokes)
                for (auto& p : s.points) {
                    p.x += jitter * rng.gaussian();
                    p.y += jitter * rng.gaussian();
                }
            d.items.push_back(std::move(inst));
        }
    }
    return d;
}

}  // namespace inknet::ink
