#pragma once

#include "emorec/baseline.h"
#include "emorec/dataset.h"
#include "emorec/eval.h"
#include "emorec/events.h"
#include "emorec/features.h"
#include "emorec/roi.h"
#include "emorec/signal.h"
#include "emorec/synth.h"
#include "emorec/train.h"

#include <filesystem>
#include <json.hpp>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace emorec::pipeline {

namespace fs = std::filesystem;

/// One JSON config driving every command. Relative paths resolve against the
/// manifest's directory. Per-component seeds default to named substreams of
/// `seed` unless a section sets its own.
struct Manifest {
    fs::path base_dir = ".";
    fs::path sessions_dir = "data/sessions";
    fs::path landmarks_dir = "data/landmarks";
    fs::path ratings_file = "data/ratings.csv";
    fs::path out_dir = "out";
    std::optional<fs::path> features_file;  // default <out>/features.csv

    std::uint64_t seed = 0;
    signal::SignalConfig signal;
    events::EventConfig events;
    roi::RoiConfig roi;
    dataset::SynthConfig synth;
    net::ModelConfig model;
    net::TrainConfig train;
    dataset::SplitSpec split;
    net::GridSpec grid = net::default_grid();
    baseline::SvmConfig svm;
    std::string feature_set = "eye+personality+stimulus";
    std::string svm_layout = "stimulus";
    TargetLabel target = TargetLabel::PerceivedValence;
    std::size_t threads = 1;

    fs::path resolve(const fs::path& p) const;
    fs::path sessions() const { return resolve(sessions_dir); }
    fs::path landmarks() const { return resolve(landmarks_dir); }
    fs::path ratings() const { return resolve(ratings_file); }
    fs::path out() const { return resolve(out_dir); }
    fs::path features() const { return features_file ? resolve(*features_file) : out() / "features.csv"; }

    /// Re-derives component seeds that were not pinned explicitly.
    void set_seed(std::uint64_t s);

    bool synth_seed_pinned = false;
    bool split_seed_pinned = false;
    bool train_seed_pinned = false;
    bool svm_seed_pinned = false;
};

/// Unknown keys are rejected so typos do not pass silently.
Manifest manifest_from_json(const nlohmann::json& j, const fs::path& base_dir);
Manifest load_manifest(const fs::path& path);

// --- feature extraction ----------------------------------------------------

struct DroppedTrial {
    std::string participant_id;
    std::string trial_id;
    std::string reason;
};

struct FeatureRun {
    std::vector<features::FeatureRecord> records;
    std::vector<DroppedTrial> dropped;
    std::size_t baseline_fallbacks = 0;
};

/// signal -> events -> roi -> features for every trial. Trials failing the
/// quality filter, lacking landmarks, or lacking a rating are dropped and logged.
FeatureRun extract_features(const std::vector<signal::SessionRecording>& sessions,
                            const std::map<std::string, std::vector<roi::LandmarkFrame>>& landmarks,
                            const std::vector<dataset::EmotionRating>& ratings, const Manifest& m);

/// Features of one trial whose samples are already filtered and normalized.
features::TrialSequence trial_sequence(const signal::TrialWindow& trial, double pupil_baseline,
                                       std::span<const roi::LandmarkFrame> frames, const Manifest& m);

// --- results table ---------------------------------------------------------

struct ResultRow {
    std::string label;
    eval::F1Scores f1;
    double macro_f1 = 0.0;
    std::optional<double> learning_rate;  // empty prints N/A
    std::optional<double> dropout;
};

std::string format_results_csv(const std::vector<ResultRow>& rows);

// --- commands --------------------------------------------------------------

struct SynthOutcome {
    std::vector<fs::path> files;
    std::size_t trials = 0;
};
SynthOutcome cmd_synth(const Manifest& m);

struct FeaturesOutcome {
    fs::path features_file;
    fs::path drop_log;
    std::size_t rows = 0;
    std::size_t dropped = 0;
};
/// `log` receives one line per dropped trial.
FeaturesOutcome cmd_features(const Manifest& m, std::ostream& log);

struct TrainOutcome {
    net::Checkpoint checkpoint;
    ResultRow row;
    fs::path checkpoint_file;
    fs::path results_file;
};
TrainOutcome cmd_train(const Manifest& m, TargetLabel target, net::FeatureSet feature_set);

struct GridOutcome {
    net::GridResult result;
    std::vector<ResultRow> rows;  // sorted by macro F1, descending
    fs::path results_file;
    fs::path checkpoint_file;  // best cell; empty when every cell failed
};
GridOutcome cmd_gridsearch(const Manifest& m, TargetLabel target, net::FeatureSet feature_set, std::ostream& log);

struct SvmOutcome {
    baseline::LinearSvmModel model;
    ResultRow row;
    fs::path results_file;
};
SvmOutcome cmd_svm(const Manifest& m, TargetLabel target, baseline::SvmLayout layout);

enum class SplitName { Train, Val, Test, All };
SplitName parse_split_name(std::string_view s);
std::string_view to_string(SplitName s);

struct EvalOutcome {
    nlohmann::json report;
    fs::path report_file;
};
EvalOutcome cmd_eval(const Manifest& m, const fs::path& checkpoint_file, SplitName split);

/// Mean modal share per target, computed over clips from the ratings and the
/// session sidecars' trial-to-clip mapping.
std::map<TargetLabel, double> rating_agreement(const std::vector<signal::SessionRecording>& sessions,
                                               const std::vector<dataset::EmotionRating>& ratings);

/// Records of one split under the manifest's split spec, stratified on `target`.
std::vector<features::FeatureRecord> select_split(const std::vector<features::FeatureRecord>& records,
                                                  const dataset::SplitIndices& idx, SplitName split);
dataset::SplitIndices split_for(const Manifest& m, const std::vector<features::FeatureRecord>& records,
                                TargetLabel target);

}  // namespace emorec::pipeline
