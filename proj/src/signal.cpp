#include "emorec/signal.h"

#include <algorithm>
#include <cmath>

namespace emorec::signal {

namespace {

bool is_lost(const GazeSample& s) { return !s.valid || !(s.pupil > 0.0); }

// Timestamps are derived from a sample clock, so allow for float round-off
// when comparing against the pad distance.
constexpr double kTimeSlackMs = 1e-6;

}  // namespace

void SignalConfig::validate() const {
    if (!(blink_pad_ms >= 0.0)) throw ValidationError("blink_pad_ms must be >= 0");
    if (!(max_loss_fraction > 0.0 && max_loss_fraction < 1.0))
        throw ValidationError("max_loss_fraction must lie in (0, 1)");
    if (!(screen_width_px > 0.0) || !(screen_height_px > 0.0))
        throw ValidationError("screen dimensions in pixels must be positive");
    if (!(screen_width_cm > 0.0) || !(viewing_distance_cm > 0.0))
        throw ValidationError("screen width and viewing distance must be positive");
}

FilterResult filter_quality(const TrialWindow& trial, const SignalConfig& cfg) {
    const auto& in = trial.samples;
    const std::size_t n = in.size();
    if (n == 0) throw EmptyTrialError("trial " + trial.trial_id + " has no samples");

    // Collect [first, last] timestamps of each lost run.
    std::vector<std::pair<double, double>> runs;
    for (std::size_t i = 0; i < n;) {
        if (!is_lost(in[i])) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < n && is_lost(in[j + 1])) ++j;
        runs.emplace_back(in[i].t, in[j].t);
        i = j + 1;
    }

    FilterResult out;
    out.trial = trial;
    out.trial.samples.clear();
    out.trial.samples.reserve(n);

    // Both the samples and the runs are time-ordered, so one sweep suffices.
    std::size_t r = 0;
    for (const auto& s : in) {
        while (r < runs.size() && runs[r].second + cfg.blink_pad_ms + kTimeSlackMs < s.t) ++r;
        bool drop = is_lost(s);
        if (!drop && r < runs.size()) drop = s.t >= runs[r].first - cfg.blink_pad_ms - kTimeSlackMs;
        if (!drop) out.trial.samples.push_back(s);
    }

    const std::size_t removed = n - out.trial.samples.size();
    out.loss_fraction = static_cast<double>(removed) / static_cast<double>(n);
    if (out.trial.samples.empty())
        throw EmptyTrialError("trial " + trial.trial_id + " lost every sample to quality filtering");
    return out;
}

TrialWindow normalize_gaze(const TrialWindow& trial, const SignalConfig& cfg) {
    if (!(cfg.screen_width_px > 0.0) || !(cfg.screen_height_px > 0.0))
        throw ValidationError("screen dimensions must be non-zero for gaze normalization");
    TrialWindow out = trial;
    for (auto& s : out.samples) {
        double x = s.x / cfg.screen_width_px;
        double y = s.y / cfg.screen_height_px;
        if (x < 0.0 || x > 1.0 || y < 0.0 || y > 1.0) {
            x = std::clamp(x, 0.0, 1.0);
            y = std::clamp(y, 0.0, 1.0);
            s.clamped = true;
        }
        s.x = x;
        s.y = y;
    }
    return out;
}

double pupil_baseline(const SessionRecording& session) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& trial : session.trials) {
        if (trial.stimulus_emotion != Emotion::Neutral) continue;
        for (const auto& s : trial.samples) {
            if (is_lost(s)) continue;
            sum += s.pupil;
            ++count;
        }
    }
    if (count == 0)
        throw NoNeutralTrialsError("session " + session.participant_id +
                                   " has no valid samples in Neutral trials");
    return sum / static_cast<double>(count);
}

double session_mean_pupil(const SessionRecording& session) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& trial : session.trials) {
        for (const auto& s : trial.samples) {
            if (is_lost(s)) continue;
            sum += s.pupil;
            ++count;
        }
    }
    if (count == 0) throw EmptyTrialError("session " + session.participant_id + " has no valid samples");
    return sum / static_cast<double>(count);
}

Baseline pupil_baseline_or_fallback(const SessionRecording& session) {
    try {
        return {pupil_baseline(session), false};
    } catch (const NoNeutralTrialsError&) {
        return {session_mean_pupil(session), true};
    }
}

TrialWindow correct_pupil(const TrialWindow& trial, double baseline) {
    TrialWindow out = trial;
    for (auto& s : out.samples) {
        if (s.valid) s.pupil -= baseline;
    }
    return out;
}

void assign_samples(std::vector<TrialWindow>& trials, const std::vector<GazeSample>& stream) {
    for (auto& trial : trials) {
        trial.samples.clear();
        auto lo = std::lower_bound(stream.begin(), stream.end(), trial.start_t,
                                   [](const GazeSample& s, double t) { return s.t < t; });
        for (auto it = lo; it != stream.end() && it->t < trial.end_t; ++it) {
            GazeSample s = *it;
            s.t -= trial.start_t;
            trial.samples.push_back(s);
        }
    }
}

}  // namespace emorec::signal
