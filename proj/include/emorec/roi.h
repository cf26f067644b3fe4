#pragma once

#include "emorec/common.h"
#include "emorec/events.h"
#include "emorec/signal.h"

#include <array>
#include <span>
#include <vector>

namespace emorec::roi {

inline constexpr std::size_t kLandmarkCount = 68;

struct LandmarkFrame {
    double t = 0.0;  // ms since clip onset
    std::array<Point2, kLandmarkCount> points{};
};

/// Region order is also the order of the proportion channels.
enum class RegionLabel : std::uint8_t { Eyes, Eyebrows, Nose, Mouth, Outside };

inline constexpr std::size_t kRegionCount = 5;
std::string_view to_string(RegionLabel r);

struct RegionPolygon {
    RegionLabel label = RegionLabel::Outside;
    std::vector<Point2> vertices;  // convex, counter-clockwise
};

using RegionSet = std::vector<RegionPolygon>;

struct RoiConfig {
    /// Outward margin applied to each region hull, as a fraction of face width.
    double margin_fraction = 0.02;
    /// Gaze (normalized screen) to stimulus coordinates: s = (g - offset) * scale.
    Point2 offset{0.0, 0.0};
    Point2 scale{1.0, 1.0};
    /// Count fixation centroids instead of raw gaze samples.
    bool per_fixation = false;
};

/// z-component of (a - o) x (b - o).
double cross(Point2 o, Point2 a, Point2 b);

/// Andrew's monotone chain. Returns the strictly convex hull in CCW order
/// (positive signed area in x/y), starting at the lowest-y, then lowest-x
/// vertex. Throws DegenerateGeometryError for fewer than three distinct or
/// all-collinear points.
std::vector<Point2> convex_hull(std::span<const Point2> points);

/// Inclusive of the boundary.
bool contains(const std::vector<Point2>& convex_ccw, Point2 p);

/// Landmark index groups of the 68-point layout.
std::span<const std::size_t> landmark_group(RegionLabel label);

/// Eyes, Eyebrows, Nose and Mouth hulls for one frame, each grown by the
/// configured margin (Minkowski sum with a small regular polygon).
RegionSet build_regions(const LandmarkFrame& frame, const RoiConfig& cfg = {});

/// Containment test per region. Multi-hits resolve Eyes > Eyebrows > Mouth > Nose.
RegionLabel label_point(Point2 p, const RegionSet& regions);

/// Index of the frame nearest in time to t; ties go to the earlier frame.
/// Frames must be sorted by time and non-empty.
std::size_t nearest_frame(std::span<const LandmarkFrame> frames, double t);

Point2 gaze_to_stimulus(Point2 gaze, const RoiConfig& cfg);

/// Per-sample region labels of the trial's valid samples.
std::vector<RegionLabel> label_samples(const signal::TrialWindow& trial, std::span<const LandmarkFrame> frames,
                                       std::span<const RegionSet> regions, const RoiConfig& cfg);

/// Fraction of valid gaze samples (or fixations, when cfg.per_fixation) per
/// region, in RegionLabel order. Throws EmptyTrialError if nothing counts.
std::array<double, kRegionCount> region_proportions(const signal::TrialWindow& trial,
                                                    std::span<const LandmarkFrame> frames,
                                                    std::span<const RegionSet> regions, const RoiConfig& cfg = {},
                                                    const std::vector<events::Fixation>* fixations = nullptr);

}  // namespace emorec::roi
