#include "emorec/synth.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace emorec::dataset {

namespace {

using roi::LandmarkFrame;
using roi::RegionLabel;

// Values are quantized to the precision the file writers use, so the
// in-memory dataset and a write/read round trip agree bit for bit.
double quantize(double v, double scale) { return std::round(v * scale) / scale; }

std::string numbered(char prefix, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%c%03zu", prefix, i);
    return buf;
}

// Dwell probabilities over Eyes, Eyebrows, Nose, Mouth, Outside.
std::array<double, roi::kRegionCount> dwell_profile(Emotion e) {
    switch (e) {
        case Emotion::Anger: return {0.50, 0.20, 0.10, 0.10, 0.10};
        case Emotion::Disgust: return {0.15, 0.10, 0.40, 0.25, 0.10};
        case Emotion::Fear: return {0.55, 0.20, 0.05, 0.10, 0.10};
        case Emotion::Happy: return {0.15, 0.05, 0.10, 0.60, 0.10};
        case Emotion::Neutral: return {0.30, 0.10, 0.25, 0.25, 0.10};
        case Emotion::Sad: return {0.30, 0.35, 0.10, 0.15, 0.10};
    }
    return {0.2, 0.2, 0.2, 0.2, 0.2};
}

constexpr std::array<double, roi::kRegionCount> kGenericDwell = {0.30, 0.15, 0.20, 0.25, 0.10};

std::size_t draw_index(std::span<const double> probs, Rng& rng) {
    double u = rng.uniform();
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (u < probs[i]) return i;
        u -= probs[i];
    }
    return probs.size() - 1;
}

void ellipse(LandmarkFrame& f, std::size_t first, std::size_t count, Point2 center, double rx, double ry,
             double start_deg) {
    for (std::size_t k = 0; k < count; ++k) {
        const double a = (start_deg + 360.0 * static_cast<double>(k) / static_cast<double>(count)) *
                         std::numbers::pi / 180.0;
        f.points[first + k] = {center.x + rx * std::cos(a), center.y - ry * std::sin(a)};
    }
}

LandmarkFrame clip_frame(double t_ms, Point2 offset, double phase) {
    LandmarkFrame f = face_template();
    const double ts = t_ms / 1000.0;
    const double sway_x = 0.004 * std::sin(2.0 * std::numbers::pi * 0.5 * ts + phase);
    const double sway_y = 0.002 * std::sin(2.0 * std::numbers::pi * 0.3 * ts + 2.0 * phase);
    // Speech moves the lips.
    const double open = std::abs(std::sin(2.0 * std::numbers::pi * 3.0 * ts + phase));
    ellipse(f, 48, 12, {0.5, 0.59}, 0.05, 0.02 + 0.006 * open, 180.0);
    ellipse(f, 60, 8, {0.5, 0.59}, 0.03, 0.004 + 0.008 * open, 180.0);
    f.t = t_ms;
    for (auto& p : f.points) {
        p.x = quantize(p.x + offset.x + sway_x, 1e6);
        p.y = quantize(p.y + offset.y + sway_y, 1e6);
    }
    return f;
}

// A fixation target inside the chosen region of the given frame.
Point2 region_target(RegionLabel region, const LandmarkFrame& f, Rng& rng) {
    if (region == RegionLabel::Outside) {
        const double a = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double r = rng.uniform(0.2, 0.32);
        return {std::clamp(0.5 + r * std::cos(a), 0.02, 0.98), std::clamp(0.52 + r * std::sin(a), 0.02, 0.98)};
    }
    std::size_t first = 0, count = 0;
    switch (region) {
        case RegionLabel::Eyes:
            first = rng.bernoulli(0.5) ? 36 : 42;
            count = 6;
            break;
        case RegionLabel::Eyebrows:
            first = rng.bernoulli(0.5) ? 17 : 22;
            count = 5;
            break;
        case RegionLabel::Nose:
            first = 28;
            count = 8;
            break;
        default:
            first = 48;
            count = 12;
            break;
    }
    Point2 c{0.0, 0.0};
    for (std::size_t k = 0; k < count; ++k) {
        c.x += f.points[first + k].x;
        c.y += f.points[first + k].y;
    }
    c.x /= static_cast<double>(count);
    c.y /= static_cast<double>(count);
    const auto& lm = f.points[first + static_cast<std::size_t>(rng.below(count))];
    const double u = rng.uniform(0.0, 0.6);
    return {c.x + u * (lm.x - c.x), c.y + u * (lm.y - c.y)};
}

int to_likert(double latent) { return static_cast<int>(std::clamp<long long>(std::llround(latent), 1, 9)); }

struct Segment {
    double start = 0.0;
    double end = 0.0;
    Point2 from;
    Point2 to;
    bool saccade = false;
};

}  // namespace

void SynthConfig::validate() const {
    if (n_participants == 0 || trials_per_participant == 0)
        throw ValidationError("synthetic participant and trial counts must be positive");
    auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!unit(personality_coupling) || !unit(stimulus_coupling) || !unit(gaze_noise))
        throw ValidationError("synthetic couplings and gaze noise must lie in [0, 1]");
    if (rating_noise < 0.0 || blink_rate_hz < 0.0 || !unit(heavy_loss_probability))
        throw ValidationError("synthetic noise parameters out of range");
    if (!(sample_rate > 0.0) || !(landmark_fps > 0.0)) throw ValidationError("sample rates must be positive");
    geometry.validate();
}

std::array<double, 2> emotion_prototype(Emotion e) {
    switch (e) {
        case Emotion::Anger: return {2.0, 8.0};
        case Emotion::Disgust: return {2.5, 5.0};
        case Emotion::Fear: return {3.0, 7.5};
        case Emotion::Happy: return {8.0, 7.0};
        case Emotion::Neutral: return {5.0, 2.5};
        case Emotion::Sad: return {2.0, 3.0};
    }
    return {5.0, 5.0};
}

LandmarkFrame face_template() {
    LandmarkFrame f;
    // Jaw 0-16: lower half-ellipse from the left temple to the right.
    for (std::size_t i = 0; i <= 16; ++i) {
        const double phi = std::numbers::pi - std::numbers::pi * static_cast<double>(i) / 16.0;
        f.points[i] = {0.5 + 0.15 * std::cos(phi), 0.45 + 0.2 * std::sin(phi)};
    }
    // Eyebrows 17-21 and 22-26.
    for (std::size_t k = 0; k < 5; ++k) {
        const double arch = 0.015 * std::sin(std::numbers::pi * static_cast<double>(k) / 4.0);
        f.points[17 + k] = {0.38 + 0.0225 * static_cast<double>(k), 0.40 - arch};
        f.points[22 + k] = {0.53 + 0.0225 * static_cast<double>(k), 0.40 - arch};
    }
    // Nose bridge 27-30, nostrils 31-35.
    for (std::size_t k = 0; k < 4; ++k) f.points[27 + k] = {0.5, 0.43 + 0.03 * static_cast<double>(k)};
    for (std::size_t k = 0; k < 5; ++k)
        f.points[31 + k] = {0.47 + 0.015 * static_cast<double>(k), k == 2 ? 0.545 : 0.535};
    ellipse(f, 36, 6, {0.44, 0.44}, 0.03, 0.012, 180.0);
    ellipse(f, 42, 6, {0.56, 0.44}, 0.03, 0.012, 180.0);
    ellipse(f, 48, 12, {0.5, 0.59}, 0.05, 0.02, 180.0);
    ellipse(f, 60, 8, {0.5, 0.59}, 0.03, 0.006, 180.0);
    return f;
}

SynthDataset synth_generate(const SynthConfig& cfg) {
    cfg.validate();
    SynthDataset out;

    // Clips are shared by all participants.
    Rng clip_rng = Rng::substream(cfg.seed, "clips");
    for (std::size_t c = 0; c < cfg.trials_per_participant; ++c) {
        ClipInfo info;
        info.clip_id = numbered('C', c);
        info.emotion = kAllEmotions[c % kEmotionCount];
        info.duration_ms = static_cast<double>(2000 + clip_rng.below(2001));
        const Point2 offset{clip_rng.uniform(-0.01, 0.01), clip_rng.uniform(-0.01, 0.01)};
        const double phase = clip_rng.uniform(0.0, 2.0 * std::numbers::pi);
        std::vector<LandmarkFrame> frames;
        for (std::size_t k = 0;; ++k) {
            const double t = quantize(static_cast<double>(k) * 1000.0 / cfg.landmark_fps, 1000.0);
            if (t > info.duration_ms) break;
            frames.push_back(clip_frame(t, offset, phase));
        }
        out.landmarks.emplace(info.clip_id, std::move(frames));
        out.clips.push_back(info);
    }

    const double W = cfg.geometry.screen_width_px;
    const double H = cfg.geometry.screen_height_px;
    const double dt = 1000.0 / cfg.sample_rate;

    for (std::size_t p = 0; p < cfg.n_participants; ++p) {
        const std::string pid = numbered('P', p + 1);
        Rng rng = Rng::substream(cfg.seed, "participant/" + pid);

        signal::SessionRecording session;
        session.participant_id = pid;
        session.sample_rate = cfg.sample_rate;
        for (auto& t : session.personality.raw) t = std::clamp(std::round(rng.normal(25.0, 9.0)), 0.0, 50.0);
        session.environment.lux = quantize(rng.uniform(150.0, 450.0), 100.0);
        session.environment.temp = quantize(rng.uniform(20.0, 25.0), 100.0);

        std::array<double, features::kTraitCount> d{};
        for (std::size_t k = 0; k < d.size(); ++k) d[k] = session.personality.raw[k] / 50.0 - 0.5;
        const double open = d[0], consc = d[1], extra = d[2], agree = d[3], neuro = d[4];

        const double pupil_base = rng.uniform(2.8, 4.2);
        const double bias_v = rng.normal(0.0, 0.3 * cfg.rating_noise);
        const double bias_a = rng.normal(0.0, 0.3 * cfg.rating_noise);

        std::vector<std::size_t> order(out.clips.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        rng.shuffle(order);

        double cursor_ms = 1000.0;
        for (std::size_t ti = 0; ti < order.size(); ++ti) {
            const auto& clip = out.clips[order[ti]];
            const auto& frames = out.landmarks.at(clip.clip_id);
            const auto proto = emotion_prototype(clip.emotion);
            const double cs = cfg.stimulus_coupling, cp = cfg.personality_coupling;

            // Ratings.
            EmotionRating rating;
            rating.participant_id = pid;
            rating.trial_id = numbered('T', ti);
            const double pv = 5.0 + cs * (proto[0] - 5.0) + bias_v + rng.normal(0.0, cfg.rating_noise);
            const double pa = 5.0 + cs * (proto[1] - 5.0) + bias_a + rng.normal(0.0, cfg.rating_noise);
            const double fv = 5.0 + 0.5 * (1.0 - cp) * (proto[0] - 5.0) +
                              cp * (0.2 * (proto[0] - 5.0) + 8.0 * (extra - neuro + 0.5 * agree)) + bias_v +
                              rng.normal(0.0, cfg.rating_noise);
            const double fa = 5.0 + 0.5 * (1.0 - cp) * (proto[1] - 5.0) +
                              cp * (0.2 * (proto[1] - 5.0) + 8.0 * (neuro + 0.6 * open - 0.4 * consc)) + bias_a +
                              rng.normal(0.0, cfg.rating_noise);
            rating.values[index_of(TargetLabel::PerceivedValence)] = to_likert(pv);
            rating.values[index_of(TargetLabel::PerceivedArousal)] = to_likert(pa);
            rating.values[index_of(TargetLabel::FeltValence)] = to_likert(fv);
            rating.values[index_of(TargetLabel::FeltArousal)] = to_likert(fa);
            out.ratings.push_back(rating);

            signal::TrialWindow trial;
            trial.trial_id = rating.trial_id;
            trial.clip_id = clip.clip_id;
            trial.stimulus_emotion = clip.emotion;
            trial.start_t = cursor_ms;
            trial.end_t = cursor_ms + clip.duration_ms;
            cursor_ms = trial.end_t + 2000.0;

            // Scan path: fixations on regions joined by short saccades.
            std::array<double, roi::kRegionCount> dwell{};
            const auto profile = dwell_profile(clip.emotion);
            for (std::size_t r = 0; r < dwell.size(); ++r)
                dwell[r] = (1.0 - cfg.gaze_noise) * profile[r] + cfg.gaze_noise * kGenericDwell[r];

            std::vector<Segment> path;
            Point2 here = region_target(static_cast<RegionLabel>(draw_index(dwell, rng)), frames.front(), rng);
            double t = 0.0;
            while (t < clip.duration_ms) {
                const double fix_end = t + rng.uniform(150.0, 450.0);
                path.push_back({t, fix_end, here, here, false});
                const auto& frame = frames[roi::nearest_frame(frames, fix_end)];
                const Point2 next = region_target(static_cast<RegionLabel>(draw_index(dwell, rng)), frame, rng);
                const double sac_end = fix_end + rng.uniform(20.0, 40.0);
                path.push_back({fix_end, sac_end, here, next, true});
                here = next;
                t = sac_end;
            }

            const double arousal_gain = 0.25 * (proto[1] - 5.0) / 4.0 + 0.05 * (fa - 5.0) / 4.0;
            const double lux_term = -0.0015 * (session.environment.lux - 300.0);
            double drift = 0.0;

            // Blink runs and, rarely, a long tracking loss.
            std::vector<std::pair<double, double>> lost;
            const double blinks_expected = cfg.blink_rate_hz * clip.duration_ms / 1000.0;
            const auto n_blinks = static_cast<std::size_t>(std::floor(blinks_expected + rng.uniform()));
            for (std::size_t b = 0; b < n_blinks; ++b) {
                const double s = rng.uniform(0.0, clip.duration_ms);
                lost.emplace_back(s, s + rng.uniform(80.0, 160.0));
            }
            if (rng.bernoulli(cfg.heavy_loss_probability)) {
                const double s = rng.uniform(0.0, 0.3 * clip.duration_ms);
                lost.emplace_back(s, s + rng.uniform(0.45, 0.65) * clip.duration_ms);
            }

            std::size_t seg = 0;
            const auto start_us = static_cast<long long>(trial.start_t) * 1000;
            for (std::size_t k = 0;; ++k) {
                const long long us = start_us + std::llround(static_cast<double>(k) * dt * 1000.0);
                const double session_t = static_cast<double>(us) / 1000.0;
                if (session_t >= trial.end_t) break;
                const double ts = session_t - trial.start_t;

                signal::GazeSample s;
                s.t = ts;
                bool is_lost = false;
                for (const auto& [a, b] : lost) is_lost = is_lost || (ts >= a && ts <= b);

                while (seg + 1 < path.size() && ts >= path[seg].end) ++seg;
                const auto& sg = path[seg];
                Point2 g = sg.to;
                if (sg.saccade) {
                    const double u = std::clamp((ts - sg.start) / (sg.end - sg.start), 0.0, 1.0);
                    const double w = u * u * (3.0 - 2.0 * u);
                    g = {sg.from.x + w * (sg.to.x - sg.from.x), sg.from.y + w * (sg.to.y - sg.from.y)};
                } else {
                    g.x += rng.normal(0.0, 0.0008);
                    g.y += rng.normal(0.0, 0.0008);
                }
                drift = 0.95 * drift + rng.normal(0.0, 0.01);
                const double pupil =
                    pupil_base + arousal_gain * (1.0 - std::exp(-ts / 700.0)) + lux_term + drift;

                if (is_lost) {
                    s.valid = false;
                    s.x = 0.0;
                    s.y = 0.0;
                    s.pupil = 0.0;
                } else {
                    s.valid = true;
                    s.x = quantize(g.x * W, 1000.0);
                    s.y = quantize(g.y * H, 1000.0);
                    s.pupil = quantize(std::max(pupil, 0.5), 10000.0);
                }
                trial.samples.push_back(s);
            }
            session.trials.push_back(std::move(trial));
        }
        out.sessions.push_back(std::move(session));
    }
    return out;
}

std::map<std::string, std::vector<ClassBin>> planted_mode_ratings(std::size_t n_clips, std::size_t n_raters,
                                                                  double modal_share, Rng& rng) {
    std::map<std::string, std::vector<ClassBin>> out;
    for (std::size_t c = 0; c < n_clips; ++c) {
        const auto mode = static_cast<std::size_t>(rng.below(kClassCount));
        auto& bins = out[numbered('C', c)];
        for (std::size_t r = 0; r < n_raters; ++r) {
            if (rng.bernoulli(modal_share)) {
                bins.push_back(bin_from_index(mode));
            } else {
                const auto other = (mode + 1 + static_cast<std::size_t>(rng.below(2))) % kClassCount;
                bins.push_back(bin_from_index(other));
            }
        }
    }
    return out;
}

}  // namespace emorec::dataset
