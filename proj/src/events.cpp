#include "emorec/events.h"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace emorec::events {

namespace {

constexpr double kTimeSlackMs = 1e-6;

struct AnglePoint {
    double t;
    Point2 deg;
    Point2 norm;
};

std::vector<AnglePoint> valid_points(const signal::TrialWindow& trial, const signal::SignalConfig& geometry) {
    std::vector<AnglePoint> pts;
    pts.reserve(trial.samples.size());
    for (const auto& s : trial.samples) {
        if (!s.valid) continue;
        const Point2 n{s.x, s.y};
        pts.push_back({s.t, to_visual_angle(n, geometry), n});
    }
    return pts;
}

double dispersion(const std::vector<AnglePoint>& pts, std::size_t first, std::size_t last) {
    double min_x = pts[first].deg.x, max_x = min_x;
    double min_y = pts[first].deg.y, max_y = min_y;
    for (std::size_t k = first + 1; k <= last; ++k) {
        min_x = std::min(min_x, pts[k].deg.x);
        max_x = std::max(max_x, pts[k].deg.x);
        min_y = std::min(min_y, pts[k].deg.y);
        max_y = std::max(max_y, pts[k].deg.y);
    }
    return (max_x - min_x) + (max_y - min_y);
}

double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double population_variance(const std::vector<double>& v, double m) {
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size());
}

}  // namespace

void EventConfig::validate() const {
    if (!(dispersion_threshold_deg > 0.0) || !(min_fixation_ms > 0.0) || !(velocity_threshold_deg_s > 0.0))
        throw ValidationError("event detector thresholds must be positive");
}

Point2 to_visual_angle(Point2 p, const signal::SignalConfig& cfg) {
    constexpr double kRadToDeg = 180.0 / std::numbers::pi;
    const double dx_cm = (p.x - 0.5) * cfg.screen_width_cm;
    const double dy_cm = (p.y - 0.5) * cfg.screen_height_cm();
    return {dx_cm / cfg.viewing_distance_cm * kRadToDeg, dy_cm / cfg.viewing_distance_cm * kRadToDeg};
}

std::vector<Fixation> detect_fixations(const signal::TrialWindow& trial, const EventConfig& cfg,
                                       const signal::SignalConfig& geometry) {
    const auto pts = valid_points(trial, geometry);
    const std::size_t n = pts.size();
    std::vector<Fixation> out;

    std::size_t i = 0;
    while (i < n) {
        // Smallest window starting at i that spans the minimum duration.
        std::size_t j = i;
        while (j < n && pts[j].t - pts[i].t < cfg.min_fixation_ms - kTimeSlackMs) ++j;
        if (j >= n) break;

        if (dispersion(pts, i, j) > cfg.dispersion_threshold_deg) {
            ++i;
            continue;
        }

        // Grow while the window stays compact; track the bounding box incrementally.
        double min_x = pts[i].deg.x, max_x = min_x, min_y = pts[i].deg.y, max_y = min_y;
        for (std::size_t k = i; k <= j; ++k) {
            min_x = std::min(min_x, pts[k].deg.x);
            max_x = std::max(max_x, pts[k].deg.x);
            min_y = std::min(min_y, pts[k].deg.y);
            max_y = std::max(max_y, pts[k].deg.y);
        }
        while (j + 1 < n) {
            const auto& p = pts[j + 1].deg;
            const double d = (std::max(max_x, p.x) - std::min(min_x, p.x)) +
                             (std::max(max_y, p.y) - std::min(min_y, p.y));
            if (d > cfg.dispersion_threshold_deg) break;
            min_x = std::min(min_x, p.x);
            max_x = std::max(max_x, p.x);
            min_y = std::min(min_y, p.y);
            max_y = std::max(max_y, p.y);
            ++j;
        }

        Fixation f;
        f.start_t = pts[i].t;
        f.end_t = pts[j].t;
        f.duration = f.end_t - f.start_t;
        f.dispersion = (max_x - min_x) + (max_y - min_y);
        double cx = 0.0, cy = 0.0;
        for (std::size_t k = i; k <= j; ++k) {
            cx += pts[k].norm.x;
            cy += pts[k].norm.y;
        }
        const auto count = static_cast<double>(j - i + 1);
        f.centroid = {cx / count, cy / count};
        out.push_back(f);
        i = j + 1;
    }
    return out;
}

std::vector<double> angular_velocity(const signal::TrialWindow& trial, const signal::SignalConfig& geometry) {
    const auto pts = valid_points(trial, geometry);
    const std::size_t n = pts.size();
    std::vector<double> v(n, 0.0);
    if (n < 2) return v;
    auto speed = [&](std::size_t a, std::size_t b) {
        const double dt_s = (pts[b].t - pts[a].t) / 1000.0;
        return dt_s > 0.0 ? distance(pts[a].deg, pts[b].deg) / dt_s : 0.0;
    };
    v[0] = speed(0, 1);
    v[n - 1] = speed(n - 2, n - 1);
    for (std::size_t k = 1; k + 1 < n; ++k) v[k] = speed(k - 1, k + 1);
    return v;
}

std::vector<Saccade> detect_saccades(const signal::TrialWindow& trial, const EventConfig& cfg,
                                     const signal::SignalConfig& geometry) {
    const auto pts = valid_points(trial, geometry);
    const auto vel = angular_velocity(trial, geometry);
    const std::size_t n = pts.size();
    std::vector<Saccade> out;

    for (std::size_t a = 0; a < n;) {
        if (!(vel[a] > cfg.velocity_threshold_deg_s)) {
            ++a;
            continue;
        }
        std::size_t b = a;
        while (b + 1 < n && vel[b + 1] > cfg.velocity_threshold_deg_s) ++b;

        std::size_t peak = a;
        for (std::size_t k = a; k <= b; ++k) {
            if (vel[k] > vel[peak]) peak = k;
        }

        // A lone supra-threshold sample still moves the eye between its
        // neighbours; widen it so the event has non-zero extent.
        std::size_t first = a, last = b;
        if (first == last) {
            if (last + 1 < n) ++last;
            else if (first > 0) --first;
        }

        Saccade s;
        s.start_t = pts[first].t;
        s.end_t = pts[last].t;
        s.duration = s.end_t - s.start_t;
        s.amplitude = distance(pts[first].deg, pts[last].deg);
        s.peak_velocity = vel[peak];

        const std::size_t onset = a > 0 ? a - 1 : a;
        const double rise_s = (pts[peak].t - pts[onset].t) / 1000.0;
        s.mean_acceleration = rise_s > 0.0 ? (vel[peak] - vel[onset]) / rise_s : 0.0;

        if (s.duration > 0.0) out.push_back(s);
        a = b + 1;
    }
    return out;
}

EventSequence detect_events(const signal::TrialWindow& trial, const EventConfig& cfg,
                            const signal::SignalConfig& geometry) {
    return {detect_fixations(trial, cfg, geometry), detect_saccades(trial, cfg, geometry)};
}

FixationStats fixation_stats(const std::vector<Fixation>& fixations) {
    FixationStats st;
    if (fixations.empty()) return st;
    std::vector<double> dur, disp;
    dur.reserve(fixations.size());
    disp.reserve(fixations.size());
    for (const auto& f : fixations) {
        dur.push_back(f.duration);
        disp.push_back(f.dispersion);
    }
    st.empty = false;
    st.dur_mean = mean(dur);
    st.dur_median = median(dur);
    st.dur_var = population_variance(dur, st.dur_mean);
    st.disp_mean = mean(disp);
    st.disp_median = median(disp);
    st.disp_var = population_variance(disp, st.disp_mean);
    return st;
}

PupilStats pupil_stats(const signal::TrialWindow& trial) {
    std::vector<double> vals;
    vals.reserve(trial.samples.size());
    for (const auto& s : trial.samples) {
        if (s.valid) vals.push_back(s.pupil);
    }
    if (vals.empty()) throw EmptyTrialError("trial " + trial.trial_id + " has no valid pupil samples");
    PupilStats st;
    st.mean = mean(vals);
    st.min = *std::min_element(vals.begin(), vals.end());
    st.max = *std::max_element(vals.begin(), vals.end());
    st.var = population_variance(vals, st.mean);
    return st;
}

}  // namespace emorec::events
