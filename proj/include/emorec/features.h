#pragma once

#include "emorec/common.h"
#include "emorec/events.h"
#include "emorec/roi.h"
#include "emorec/signal.h"

#include <array>
#include <span>
#include <string>
#include <vector>

namespace emorec::features {

inline constexpr std::size_t kSteps = 15;
inline constexpr std::size_t kChannels = 12;
inline constexpr std::size_t kSequenceSize = kSteps * kChannels;
inline constexpr std::size_t kTraitCount = 5;
inline constexpr std::size_t kEnvCount = 2;

// Sequence channel order.
enum class Channel : std::uint8_t {
    PropEyes,
    PropEyebrows,
    PropNose,
    PropMouth,
    PropOutside,
    PupilCorrected,
    FixDuration,
    FixDispersion,
    SaccAmplitude,
    SaccDuration,
    SaccPeakVelocity,
    SaccAcceleration,
};

std::string_view channel_name(std::size_t channel);
inline constexpr std::array<std::string_view, kTraitCount> kTraitNames = {
    "openness", "conscientiousness", "extraversion", "agreeableness", "neuroticism"};
inline constexpr std::array<std::string_view, kEnvCount> kEnvNames = {"lux", "temp"};

/// 15 x 12, row-major (step-major).
struct TrialSequence {
    std::array<double, kSequenceSize> values{};

    double& at(std::size_t step, std::size_t channel) { return values[step * kChannels + channel]; }
    double at(std::size_t step, std::size_t channel) const { return values[step * kChannels + channel]; }
};

struct TimedValue {
    double t = 0.0;
    double value = 0.0;
};

struct EventSpan {
    double start_t = 0.0;
    double end_t = 0.0;
    double value = 0.0;
};

/// Input for one sequence channel. Sampled channels are interpolated
/// linearly with constant extrapolation; event channels are step functions
/// that read the active event's value and 0 between events.
struct ChannelSeries {
    enum class Kind { Sampled, Events };
    Kind kind = Kind::Sampled;
    std::vector<TimedValue> points;  // sorted by t
    std::vector<EventSpan> events;   // sorted, non-overlapping

    static ChannelSeries sampled(std::vector<TimedValue> pts) { return {Kind::Sampled, std::move(pts), {}}; }
    static ChannelSeries stepwise(std::vector<EventSpan> ev) { return {Kind::Events, {}, std::move(ev)}; }
};

/// n equally spaced times covering [start, end] inclusive.
std::vector<double> query_times(double start, double end, std::size_t n = kSteps);

/// Throws ValidationError on an empty series.
std::vector<double> resample_linear(std::span<const TimedValue> series, std::span<const double> times);
std::vector<double> resample_events(std::span<const EventSpan> events, std::span<const double> times);

/// Resamples twelve channel series onto 15 steps spanning [start, end].
TrialSequence interpolate_sequence(std::span<const ChannelSeries> channels, double start, double end);

/// Channel inputs for one cleaned, normalized, baseline-corrected trial.
/// `labels` holds one region label per valid sample. Proportions at a step
/// use the samples within half an inter-step interval of the query time;
/// steps whose window is empty are filled by interpolating the others.
std::vector<ChannelSeries> trial_channels(const signal::TrialWindow& trial, const events::EventSequence& ev,
                                          std::span<const roi::RegionLabel> labels);

TrialSequence build_sequence(const signal::TrialWindow& trial, const events::EventSequence& ev,
                             std::span<const roi::RegionLabel> labels);

struct PersonalityProfile {
    std::array<double, kTraitCount> traits{};  // [0, 1]
};

/// Raw 0-50 scores divided by 50. Throws ValidationError outside [0, 50].
PersonalityProfile scale_personality(const std::array<double, kTraitCount>& raw);

using StimulusOneHot = std::array<double, kEmotionCount>;
StimulusOneHot one_hot_stimulus(Emotion e);
StimulusOneHot one_hot_stimulus(std::string_view label);
Emotion argmax_stimulus(const StimulusOneHot& v);

struct FeatureRecord {
    std::string participant_id;
    std::string trial_id;
    TrialSequence sequence;
    PersonalityProfile personality;
    StimulusOneHot stimulus{};
    std::array<double, kEnvCount> environment{};
    std::array<ClassBin, kTargetCount> labels{};

    ClassBin label(TargetLabel t) const { return labels[index_of(t)]; }
};

enum class ScaleMethod : std::uint8_t { None, MinMax, Standard };
std::string_view to_string(ScaleMethod m);
ScaleMethod parse_scale_method(std::string_view s);

/// One scaled slot: a sequence channel (pooled over steps) or an environment entry.
struct ChannelScaler {
    std::string name;
    ScaleMethod method = ScaleMethod::None;
    double a = 0.0;  // min or mean
    double b = 1.0;  // max or std
    bool constant = false;  // degenerate statistics; passed through unchanged

    double apply(double v) const;
};

/// 12 sequence slots followed by 2 environment slots.
struct ScalerParams {
    std::vector<ChannelScaler> channels;
};

inline constexpr std::size_t kScalerSlots = kChannels + kEnvCount;

/// The fixed channel-to-method map.
ScaleMethod method_for_slot(std::size_t slot);
std::string slot_name(std::size_t slot);

/// Statistics from training records only. Needs at least two records.
ScalerParams fit_scalers(std::span<const FeatureRecord> train);

/// Affine, unclamped transform. Throws DimensionMismatchError if params do
/// not describe the expected slots.
FeatureRecord apply_scalers(const FeatureRecord& record, const ScalerParams& params);

}  // namespace emorec::features
