#include "emorec/roi.h"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace emorec::roi {

namespace {

constexpr std::array<std::size_t, 12> kEyes = {36, 37, 38, 39, 40, 41, 42, 43, 44, 45, 46, 47};
constexpr std::array<std::size_t, 10> kEyebrows = {17, 18, 19, 20, 21, 22, 23, 24, 25, 26};
constexpr std::array<std::size_t, 9> kNose = {27, 28, 29, 30, 31, 32, 33, 34, 35};
constexpr std::array<std::size_t, 20> kMouth = {48, 49, 50, 51, 52, 53, 54, 55, 56, 57,
                                                58, 59, 60, 61, 62, 63, 64, 65, 66, 67};

// Priority for overlapping regions, most specific first.
constexpr std::array<RegionLabel, 4> kPriority = {RegionLabel::Eyes, RegionLabel::Eyebrows, RegionLabel::Mouth,
                                                  RegionLabel::Nose};

constexpr int kMarginSides = 16;

}  // namespace

std::string_view to_string(RegionLabel r) {
    switch (r) {
        case RegionLabel::Eyes: return "eyes";
        case RegionLabel::Eyebrows: return "eyebrows";
        case RegionLabel::Nose: return "nose";
        case RegionLabel::Mouth: return "mouth";
        case RegionLabel::Outside: return "outside";
    }
    return "?";
}

double cross(Point2 o, Point2 a, Point2 b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); }

std::vector<Point2> convex_hull(std::span<const Point2> points) {
    std::vector<Point2> pts(points.begin(), points.end());
    for (const auto& p : pts) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y))
            throw DegenerateGeometryError("convex hull input contains a non-finite point");
    }
    std::sort(pts.begin(), pts.end(), [](Point2 a, Point2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() < 3) throw DegenerateGeometryError("convex hull needs at least three distinct points");

    std::vector<Point2> hull(2 * pts.size());
    std::size_t k = 0;
    for (const auto& p : pts) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
        hull[k++] = p;
    }
    for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
        while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    if (hull.size() < 3) throw DegenerateGeometryError("convex hull input is collinear");

    auto start = std::min_element(hull.begin(), hull.end(),
                                  [](Point2 a, Point2 b) { return a.y < b.y || (a.y == b.y && a.x < b.x); });
    std::rotate(hull.begin(), start, hull.end());
    return hull;
}

bool contains(const std::vector<Point2>& convex_ccw, Point2 p) {
    const std::size_t n = convex_ccw.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (cross(convex_ccw[i], convex_ccw[(i + 1) % n], p) < 0.0) return false;
    }
    return n >= 3;
}

std::span<const std::size_t> landmark_group(RegionLabel label) {
    switch (label) {
        case RegionLabel::Eyes: return kEyes;
        case RegionLabel::Eyebrows: return kEyebrows;
        case RegionLabel::Nose: return kNose;
        case RegionLabel::Mouth: return kMouth;
        case RegionLabel::Outside: break;
    }
    return {};
}

RegionSet build_regions(const LandmarkFrame& frame, const RoiConfig& cfg) {
    double min_x = frame.points[0].x, max_x = min_x;
    for (const auto& p : frame.points) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y))
            throw DegenerateGeometryError("landmark frame contains a non-finite coordinate");
        min_x = std::min(min_x, p.x);
        max_x = std::max(max_x, p.x);
    }
    const double margin = cfg.margin_fraction * (max_x - min_x);

    RegionSet regions;
    for (auto label : {RegionLabel::Eyes, RegionLabel::Eyebrows, RegionLabel::Nose, RegionLabel::Mouth}) {
        std::vector<Point2> pts;
        for (auto idx : landmark_group(label)) pts.push_back(frame.points[idx]);
        auto hull = convex_hull(pts);
        if (margin > 0.0) {
            std::vector<Point2> grown;
            grown.reserve(hull.size() * kMarginSides);
            for (const auto& v : hull) {
                for (int s = 0; s < kMarginSides; ++s) {
                    const double a = 2.0 * std::numbers::pi * s / kMarginSides;
                    grown.push_back({v.x + margin * std::cos(a), v.y + margin * std::sin(a)});
                }
            }
            hull = convex_hull(grown);
        }
        regions.push_back({label, std::move(hull)});
    }
    return regions;
}

RegionLabel label_point(Point2 p, const RegionSet& regions) {
    for (auto label : kPriority) {
        for (const auto& r : regions) {
            if (r.label == label && contains(r.vertices, p)) return label;
        }
    }
    return RegionLabel::Outside;
}

std::size_t nearest_frame(std::span<const LandmarkFrame> frames, double t) {
    auto it = std::lower_bound(frames.begin(), frames.end(), t,
                               [](const LandmarkFrame& f, double v) { return f.t < v; });
    if (it == frames.begin()) return 0;
    if (it == frames.end()) return frames.size() - 1;
    const auto hi = static_cast<std::size_t>(it - frames.begin());
    const std::size_t lo = hi - 1;
    return (t - frames[lo].t) <= (frames[hi].t - t) ? lo : hi;
}

Point2 gaze_to_stimulus(Point2 gaze, const RoiConfig& cfg) {
    return {(gaze.x - cfg.offset.x) * cfg.scale.x, (gaze.y - cfg.offset.y) * cfg.scale.y};
}

std::vector<RegionLabel> label_samples(const signal::TrialWindow& trial, std::span<const LandmarkFrame> frames,
                                       std::span<const RegionSet> regions, const RoiConfig& cfg) {
    if (frames.empty() || frames.size() != regions.size())
        throw ValidationError("region labelling needs one region set per landmark frame");
    std::vector<RegionLabel> labels;
    labels.reserve(trial.samples.size());
    for (const auto& s : trial.samples) {
        if (!s.valid) continue;
        const auto f = nearest_frame(frames, s.t);
        labels.push_back(label_point(gaze_to_stimulus({s.x, s.y}, cfg), regions[f]));
    }
    return labels;
}

std::array<double, kRegionCount> region_proportions(const signal::TrialWindow& trial,
                                                    std::span<const LandmarkFrame> frames,
                                                    std::span<const RegionSet> regions, const RoiConfig& cfg,
                                                    const std::vector<events::Fixation>* fixations) {
    std::array<std::size_t, kRegionCount> counts{};
    std::size_t total = 0;
    if (cfg.per_fixation) {
        if (fixations == nullptr) throw ValidationError("per-fixation proportions need detected fixations");
        if (frames.empty() || frames.size() != regions.size())
            throw ValidationError("region labelling needs one region set per landmark frame");
        for (const auto& fx : *fixations) {
            const auto f = nearest_frame(frames, 0.5 * (fx.start_t + fx.end_t));
            ++counts[static_cast<std::size_t>(label_point(gaze_to_stimulus(fx.centroid, cfg), regions[f]))];
            ++total;
        }
    } else {
        for (auto label : label_samples(trial, frames, regions, cfg)) {
            ++counts[static_cast<std::size_t>(label)];
            ++total;
        }
    }
    if (total == 0) throw EmptyTrialError("trial " + trial.trial_id + " has nothing to attribute to regions");
    std::array<double, kRegionCount> out{};
    for (std::size_t r = 0; r < kRegionCount; ++r) out[r] = static_cast<double>(counts[r]) / static_cast<double>(total);
    return out;
}

}  // namespace emorec::roi
