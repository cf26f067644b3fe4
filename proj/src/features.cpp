#include "emorec/features.h"

#include <algorithm>
#include <cmath>
#include <optional>

namespace emorec::features {

namespace {

constexpr std::array<std::string_view, kChannels> kChannelNames = {
    "prop_eyes",      "prop_eyebrows", "prop_nose",      "prop_mouth",    "prop_outside",       "pupil_corrected",
    "fix_duration",   "fix_dispersion", "sacc_amplitude", "sacc_duration", "sacc_peak_velocity", "sacc_acceleration"};

}  // namespace

std::string_view channel_name(std::size_t channel) { return kChannelNames.at(channel); }

std::vector<double> query_times(double start, double end, std::size_t n) {
    std::vector<double> q(n);
    if (n == 1) {
        q[0] = start;
        return q;
    }
    const double step = (end - start) / static_cast<double>(n - 1);
    for (std::size_t k = 0; k < n; ++k) q[k] = start + step * static_cast<double>(k);
    q[n - 1] = end;
    return q;
}

std::vector<double> resample_linear(std::span<const TimedValue> series, std::span<const double> times) {
    if (series.empty()) throw ValidationError("cannot interpolate an empty channel");
    std::vector<double> out(times.size());
    for (std::size_t k = 0; k < times.size(); ++k) {
        const double q = times[k];
        if (q <= series.front().t) {
            out[k] = series.front().value;
            continue;
        }
        if (q >= series.back().t) {
            out[k] = series.back().value;
            continue;
        }
        auto hi = std::lower_bound(series.begin(), series.end(), q,
                                   [](const TimedValue& p, double t) { return p.t < t; });
        if (hi->t == q) {
            out[k] = hi->value;
            continue;
        }
        auto lo = hi - 1;
        const double w = (q - lo->t) / (hi->t - lo->t);
        out[k] = lo->value + w * (hi->value - lo->value);
    }
    return out;
}

std::vector<double> resample_events(std::span<const EventSpan> events, std::span<const double> times) {
    std::vector<double> out(times.size(), 0.0);
    for (std::size_t k = 0; k < times.size(); ++k) {
        for (const auto& e : events) {
            if (e.start_t <= times[k] && times[k] <= e.end_t) {
                out[k] = e.value;
                break;
            }
        }
    }
    return out;
}

TrialSequence interpolate_sequence(std::span<const ChannelSeries> channels, double start, double end) {
    if (channels.size() != kChannels)
        throw DimensionMismatchError("expected " + std::to_string(kChannels) + " channel series, got " +
                                     std::to_string(channels.size()));
    if (!(end > start)) throw ValidationError("trial span must be positive");
    const auto times = query_times(start, end, kSteps);
    TrialSequence seq;
    for (std::size_t c = 0; c < kChannels; ++c) {
        const auto& ch = channels[c];
        const auto vals = ch.kind == ChannelSeries::Kind::Sampled ? resample_linear(ch.points, times)
                                                                  : resample_events(ch.events, times);
        for (std::size_t k = 0; k < kSteps; ++k) seq.at(k, c) = vals[k];
    }
    return seq;
}

std::vector<ChannelSeries> trial_channels(const signal::TrialWindow& trial, const events::EventSequence& ev,
                                          std::span<const roi::RegionLabel> labels) {
    const double span = trial.duration();
    if (!(span > 0.0)) throw ValidationError("trial " + trial.trial_id + " has a non-positive duration");

    std::vector<const signal::GazeSample*> valid;
    for (const auto& s : trial.samples) {
        if (s.valid) valid.push_back(&s);
    }
    if (valid.size() != labels.size())
        throw DimensionMismatchError("one region label per valid sample expected");
    if (valid.empty()) throw EmptyTrialError("trial " + trial.trial_id + " has no valid samples");

    std::vector<ChannelSeries> out(kChannels);

    // Windowed region proportions at each query time.
    const auto times = query_times(0.0, span, kSteps);
    const double half = 0.5 * span / static_cast<double>(kSteps - 1);
    std::array<std::vector<TimedValue>, roi::kRegionCount> props;
    for (double q : times) {
        std::array<std::size_t, roi::kRegionCount> counts{};
        std::size_t total = 0;
        for (std::size_t i = 0; i < valid.size(); ++i) {
            if (std::abs(valid[i]->t - q) <= half) {
                ++counts[static_cast<std::size_t>(labels[i])];
                ++total;
            }
        }
        if (total == 0) continue;
        for (std::size_t r = 0; r < roi::kRegionCount; ++r)
            props[r].push_back({q, static_cast<double>(counts[r]) / static_cast<double>(total)});
    }
    if (props[0].empty()) {
        // Sparse trial: fall back to whole-trial proportions.
        std::array<std::size_t, roi::kRegionCount> counts{};
        for (auto l : labels) ++counts[static_cast<std::size_t>(l)];
        for (std::size_t r = 0; r < roi::kRegionCount; ++r)
            props[r].push_back({0.0, static_cast<double>(counts[r]) / static_cast<double>(labels.size())});
    }
    for (std::size_t r = 0; r < roi::kRegionCount; ++r) out[r] = ChannelSeries::sampled(std::move(props[r]));

    std::vector<TimedValue> pupil;
    pupil.reserve(valid.size());
    for (const auto* s : valid) pupil.push_back({s->t, s->pupil});
    out[static_cast<std::size_t>(Channel::PupilCorrected)] = ChannelSeries::sampled(std::move(pupil));

    std::vector<EventSpan> fdur, fdisp;
    for (const auto& f : ev.fixations) {
        fdur.push_back({f.start_t, f.end_t, f.duration});
        fdisp.push_back({f.start_t, f.end_t, f.dispersion});
    }
    out[static_cast<std::size_t>(Channel::FixDuration)] = ChannelSeries::stepwise(std::move(fdur));
    out[static_cast<std::size_t>(Channel::FixDispersion)] = ChannelSeries::stepwise(std::move(fdisp));

    std::vector<EventSpan> amp, dur, peak, acc;
    for (const auto& s : ev.saccades) {
        amp.push_back({s.start_t, s.end_t, s.amplitude});
        dur.push_back({s.start_t, s.end_t, s.duration});
        peak.push_back({s.start_t, s.end_t, s.peak_velocity});
        acc.push_back({s.start_t, s.end_t, s.mean_acceleration});
    }
    out[static_cast<std::size_t>(Channel::SaccAmplitude)] = ChannelSeries::stepwise(std::move(amp));
    out[static_cast<std::size_t>(Channel::SaccDuration)] = ChannelSeries::stepwise(std::move(dur));
    out[static_cast<std::size_t>(Channel::SaccPeakVelocity)] = ChannelSeries::stepwise(std::move(peak));
    out[static_cast<std::size_t>(Channel::SaccAcceleration)] = ChannelSeries::stepwise(std::move(acc));
    return out;
}

TrialSequence build_sequence(const signal::TrialWindow& trial, const events::EventSequence& ev,
                             std::span<const roi::RegionLabel> labels) {
    const auto channels = trial_channels(trial, ev, labels);
    return interpolate_sequence(channels, 0.0, trial.duration());
}

PersonalityProfile scale_personality(const std::array<double, kTraitCount>& raw) {
    PersonalityProfile p;
    for (std::size_t i = 0; i < kTraitCount; ++i) {
        if (!(raw[i] >= 0.0 && raw[i] <= 50.0))
            throw ValidationError("personality score " + std::string(kTraitNames[i]) + " = " +
                                  std::to_string(raw[i]) + " outside [0, 50]");
        p.traits[i] = raw[i] / 50.0;
    }
    return p;
}

StimulusOneHot one_hot_stimulus(Emotion e) {
    StimulusOneHot v{};
    v[static_cast<std::size_t>(e)] = 1.0;
    return v;
}

StimulusOneHot one_hot_stimulus(std::string_view label) { return one_hot_stimulus(parse_emotion(label)); }

Emotion argmax_stimulus(const StimulusOneHot& v) {
    return kAllEmotions[static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin())];
}

// --- scalers ---------------------------------------------------------------

std::string_view to_string(ScaleMethod m) {
    switch (m) {
        case ScaleMethod::None: return "none";
        case ScaleMethod::MinMax: return "minmax";
        case ScaleMethod::Standard: return "standard";
    }
    return "?";
}

ScaleMethod parse_scale_method(std::string_view s) {
    if (s == "none") return ScaleMethod::None;
    if (s == "minmax") return ScaleMethod::MinMax;
    if (s == "standard") return ScaleMethod::Standard;
    throw ValidationError("unknown scale method '" + std::string(s) + "'");
}

double ChannelScaler::apply(double v) const {
    if (constant) return v;
    switch (method) {
        case ScaleMethod::None: return v;
        case ScaleMethod::MinMax: return (v - a) / (b - a);
        case ScaleMethod::Standard: return (v - a) / b;
    }
    return v;
}

ScaleMethod method_for_slot(std::size_t slot) {
    if (slot >= kScalerSlots) throw DimensionMismatchError("scaler slot out of range");
    if (slot < roi::kRegionCount) return ScaleMethod::None;
    if (slot == static_cast<std::size_t>(Channel::SaccAmplitude) ||
        slot == static_cast<std::size_t>(Channel::SaccDuration))
        return ScaleMethod::MinMax;
    return ScaleMethod::Standard;
}

std::string slot_name(std::size_t slot) {
    if (slot < kChannels) return std::string(channel_name(slot));
    return "env_" + std::string(kEnvNames.at(slot - kChannels));
}

namespace {

template <typename Fn>
void for_slot_values(const FeatureRecord& r, std::size_t slot, Fn&& fn) {
    if (slot < kChannels) {
        for (std::size_t k = 0; k < kSteps; ++k) fn(r.sequence.at(k, slot));
    } else {
        fn(r.environment[slot - kChannels]);
    }
}

}  // namespace

ScalerParams fit_scalers(std::span<const FeatureRecord> train) {
    if (train.size() < 2) throw ValidationError("fitting scalers needs at least two training records");
    ScalerParams params;
    params.channels.resize(kScalerSlots);
    for (std::size_t slot = 0; slot < kScalerSlots; ++slot) {
        auto& sc = params.channels[slot];
        sc.name = slot_name(slot);
        sc.method = method_for_slot(slot);
        switch (sc.method) {
            case ScaleMethod::None:
                sc.a = 0.0;
                sc.b = 1.0;
                break;
            case ScaleMethod::MinMax: {
                double lo = INFINITY, hi = -INFINITY;
                for (const auto& r : train)
                    for_slot_values(r, slot, [&](double v) {
                        lo = std::min(lo, v);
                        hi = std::max(hi, v);
                    });
                sc.a = lo;
                sc.b = hi;
                sc.constant = !(hi > lo);
                break;
            }
            case ScaleMethod::Standard: {
                double sum = 0.0;
                std::size_t n = 0;
                for (const auto& r : train)
                    for_slot_values(r, slot, [&](double v) {
                        sum += v;
                        ++n;
                    });
                const double mean = sum / static_cast<double>(n);
                double ss = 0.0;
                for (const auto& r : train) for_slot_values(r, slot, [&](double v) { ss += (v - mean) * (v - mean); });
                const double sd = std::sqrt(ss / static_cast<double>(n));
                sc.a = mean;
                sc.b = sd;
                sc.constant = !(sd > 1e-12 * std::max(1.0, std::abs(mean)));
                break;
            }
        }
    }
    return params;
}

FeatureRecord apply_scalers(const FeatureRecord& record, const ScalerParams& params) {
    if (params.channels.size() != kScalerSlots)
        throw DimensionMismatchError("scaler parameters describe " + std::to_string(params.channels.size()) +
                                     " slots, expected " + std::to_string(kScalerSlots));
    for (std::size_t slot = 0; slot < kScalerSlots; ++slot) {
        if (params.channels[slot].name != slot_name(slot))
            throw DimensionMismatchError("scaler slot " + std::to_string(slot) + " is '" +
                                         params.channels[slot].name + "', expected '" + slot_name(slot) + "'");
    }
    FeatureRecord out = record;
    for (std::size_t c = 0; c < kChannels; ++c) {
        const auto& sc = params.channels[c];
        for (std::size_t k = 0; k < kSteps; ++k) out.sequence.at(k, c) = sc.apply(record.sequence.at(k, c));
    }
    for (std::size_t e = 0; e < kEnvCount; ++e) out.environment[e] = params.channels[kChannels + e].apply(record.environment[e]);
    return out;
}

}  // namespace emorec::features
