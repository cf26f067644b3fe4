#pragma once

#include "emorec/dataset.h"
#include "emorec/roi.h"
#include "emorec/signal.h"

#include <map>
#include <string>
#include <vector>

namespace emorec::dataset {

/// Parameters of the synthetic study generator.
///
/// Perceived ratings follow the stimulus emotion's valence/arousal prototype
/// scaled by `stimulus_coupling`. Felt ratings mix a damped stimulus response
/// with a trait-driven shift weighted by `personality_coupling` (extraversion
/// and agreeableness raise felt valence, neuroticism lowers it; neuroticism
/// and openness raise felt arousal). `gaze_noise` blends the emotion-specific
/// region dwell profile toward a generic one. `rating_noise` is the standard
/// deviation of latent rating noise on the 1-9 scale and also scales the
/// per-participant rating bias.
struct SynthConfig {
    std::size_t n_participants = 73;
    std::size_t trials_per_participant = 84;
    std::uint64_t seed = 0;
    double personality_coupling = 0.8;
    double stimulus_coupling = 0.9;
    double gaze_noise = 0.5;
    double rating_noise = 0.8;
    double blink_rate_hz = 0.25;
    double heavy_loss_probability = 0.02;
    double sample_rate = 150.0;
    double landmark_fps = 30.0;
    signal::SignalConfig geometry;

    void validate() const;
};

struct ClipInfo {
    std::string clip_id;
    Emotion emotion = Emotion::Neutral;
    double duration_ms = 0.0;
};

/// Everything the generator produces, in the same shape the readers return.
/// Trial samples carry trial-relative times and raw pixel coordinates.
struct SynthDataset {
    std::vector<ClipInfo> clips;
    std::vector<signal::SessionRecording> sessions;
    std::map<std::string, std::vector<roi::LandmarkFrame>> landmarks;  // by clip id
    std::vector<EmotionRating> ratings;
};

SynthDataset synth_generate(const SynthConfig& cfg);

/// Canonical frontal 68-point face centered on the stimulus.
roi::LandmarkFrame face_template();

/// Latent-free helper used by the generator: rating prototypes per emotion
/// on the 1-9 scale, {valence, arousal}.
std::array<double, 2> emotion_prototype(Emotion e);

/// Ratings for `n_clips` clips by `n_raters` raters where each rater picks the
/// clip's planted modal bin with probability `modal_share` and one of the
/// other two bins otherwise.
std::map<std::string, std::vector<ClassBin>> planted_mode_ratings(std::size_t n_clips, std::size_t n_raters,
                                                                  double modal_share, Rng& rng);

}  // namespace emorec::dataset
