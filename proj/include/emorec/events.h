#pragma once

#include "emorec/common.h"
#include "emorec/signal.h"

#include <vector>

namespace emorec::events {

struct Fixation {
    double start_t = 0.0;
    double end_t = 0.0;
    Point2 centroid;          // normalized screen coordinates
    double duration = 0.0;    // ms
    double dispersion = 0.0;  // degrees of visual angle
};

struct Saccade {
    double start_t = 0.0;
    double end_t = 0.0;
    double amplitude = 0.0;          // degrees
    double duration = 0.0;           // ms
    double peak_velocity = 0.0;      // deg/s
    double mean_acceleration = 0.0;  // deg/s^2
};

struct EventConfig {
    double dispersion_threshold_deg = 1.0;
    double min_fixation_ms = 100.0;
    double velocity_threshold_deg_s = 30.0;

    void validate() const;
};

struct EventSequence {
    std::vector<Fixation> fixations;
    std::vector<Saccade> saccades;
};

/// Small-angle conversion of a normalized screen point to degrees, with the
/// origin at the screen center. Linear in each coordinate.
Point2 to_visual_angle(Point2 p, const signal::SignalConfig& cfg);

/// Dispersion-threshold identification (I-DT). Dispersion is
/// (max x - min x) + (max y - min y) in degrees. Windows start at the first
/// unconsumed sample, must span min_fixation_ms, and grow greedily while the
/// dispersion stays within threshold.
std::vector<Fixation> detect_fixations(const signal::TrialWindow& trial, const EventConfig& cfg,
                                       const signal::SignalConfig& geometry);

/// Angular speed per sample in deg/s: central differences inside,
/// one-sided at the ends.
std::vector<double> angular_velocity(const signal::TrialWindow& trial, const signal::SignalConfig& geometry);

/// Velocity-threshold identification (I-VT). A saccade is a maximal run of
/// samples whose speed exceeds the threshold. Acceleration is the rise from
/// the last sub-threshold sample before onset to the peak, divided by the
/// rise time.
std::vector<Saccade> detect_saccades(const signal::TrialWindow& trial, const EventConfig& cfg,
                                     const signal::SignalConfig& geometry);

EventSequence detect_events(const signal::TrialWindow& trial, const EventConfig& cfg,
                            const signal::SignalConfig& geometry);

struct FixationStats {
    double dur_mean = 0.0;
    double dur_median = 0.0;
    double dur_var = 0.0;
    double disp_mean = 0.0;
    double disp_median = 0.0;
    double disp_var = 0.0;
    bool empty = true;
};

// Population variance throughout.
FixationStats fixation_stats(const std::vector<Fixation>& fixations);

struct PupilStats {
    double mean = 0.0;
    double min = 0.0;
    double max = 0.0;
    double var = 0.0;
};

/// Statistics of the (baseline-corrected) pupil over valid samples.
/// Throws EmptyTrialError when there are none.
PupilStats pupil_stats(const signal::TrialWindow& trial);

}  // namespace emorec::events
