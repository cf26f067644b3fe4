#pragma once

#include "emorec/common.h"

#include <string>
#include <utility>
#include <vector>

namespace emorec::signal {

/// One eye-tracker sample. `t` is milliseconds since trial onset once a
/// trial has been cut from the session stream.
struct GazeSample {
    double t = 0.0;
    double x = 0.0;      // pixels on input, [0,1] after normalize_gaze
    double y = 0.0;
    double pupil = 0.0;  // mm; relative to baseline after correct_pupil
    bool valid = true;
    bool clamped = false;  // set by normalize_gaze when the point fell off-screen
};

struct TrialWindow {
    std::string trial_id;
    std::string clip_id;
    Emotion stimulus_emotion = Emotion::Neutral;
    double start_t = 0.0;  // session time, ms
    double end_t = 0.0;
    std::vector<GazeSample> samples;

    double duration() const { return end_t - start_t; }
};

struct EnvironmentReading {
    double lux = 0.0;
    double temp = 0.0;
};

/// Raw Big-Five scores on the 0-50 questionnaire scale, order O, C, E, A, N.
struct PersonalityScores {
    std::array<double, 5> raw{};
};

struct SessionRecording {
    std::string participant_id;
    std::vector<TrialWindow> trials;
    EnvironmentReading environment;
    PersonalityScores personality;
    double sample_rate = 150.0;
};

struct SignalConfig {
    double blink_pad_ms = 100.0;
    double max_loss_fraction = 0.30;
    double screen_width_px = 1920.0;
    double screen_height_px = 1080.0;
    double screen_width_cm = 53.0;
    double viewing_distance_cm = 60.0;

    /// Throws ValidationError when a field is out of range.
    void validate() const;
    double screen_height_cm() const { return screen_width_cm * screen_height_px / screen_width_px; }
};

struct FilterResult {
    TrialWindow trial;
    double loss_fraction = 0.0;
};

/// Drops blink/tracking-loss samples (valid == false or pupil <= 0) together
/// with every sample within blink_pad_ms of such a run.
/// Throws EmptyTrialError when nothing survives.
FilterResult filter_quality(const TrialWindow& trial, const SignalConfig& cfg);

/// Pixel coordinates to [0,1]^2. Off-screen samples are clamped and flagged.
TrialWindow normalize_gaze(const TrialWindow& trial, const SignalConfig& cfg);

/// Mean pupil over valid samples of the session's Neutral trials.
/// Throws NoNeutralTrialsError when there is no such sample.
double pupil_baseline(const SessionRecording& session);

/// Mean pupil over every valid sample of the session.
double session_mean_pupil(const SessionRecording& session);

struct Baseline {
    double value = 0.0;
    bool fallback = false;  // true when no neutral trial was usable
};

Baseline pupil_baseline_or_fallback(const SessionRecording& session);

TrialWindow correct_pupil(const TrialWindow& trial, double baseline);

/// Cuts a session-time sample stream into trial windows [start_t, end_t).
/// Samples of each trial are re-timed relative to the trial onset.
void assign_samples(std::vector<TrialWindow>& trials, const std::vector<GazeSample>& stream);

}  // namespace emorec::signal
