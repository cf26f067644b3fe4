#pragma once

#include "emorec/common.h"
#include "emorec/features.h"
#include "emorec/rng.h"

#include <array>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace emorec::dataset {

/// Likert ratings, 1-9, for one trial.
struct EmotionRating {
    std::string participant_id;
    std::string trial_id;
    std::array<int, kTargetCount> values{5, 5, 5, 5};  // TargetLabel order

    int value(TargetLabel t) const { return values[index_of(t)]; }
};

/// 1-3 Low, 4-6 Medium, 7-9 High. Throws ValidationError otherwise.
ClassBin bin_rating(int rating);

struct SplitSpec {
    double train_fraction = 0.64;
    double val_fraction = 0.16;
    double test_fraction = 0.20;
    std::uint64_t seed = 0;
    TargetLabel stratify_on = TargetLabel::PerceivedValence;
    bool subject_independent = false;

    void validate() const;
};

/// Index sets into the input list.
struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
    std::vector<std::size_t> test;
};

/// Per class: shuffle, then take round(n_c * train_fraction) for train and
/// round(n_c * val_fraction) for validation; the rest is test.
/// Throws ValidationError if a class has no members.
SplitIndices stratified_split(std::span<const ClassBin> labels, const SplitSpec& spec);

/// Whole participants are assigned to one split (shuffled, then cut by fractions).
SplitIndices participant_split(std::span<const std::string> participant_ids, const SplitSpec& spec);

/// Dispatches on spec.subject_independent and spec.stratify_on.
SplitIndices split_records(std::span<const features::FeatureRecord> records, const SplitSpec& spec);

struct ClassWeights {
    std::array<double, kClassCount> w{1.0, 1.0, 1.0};

    double operator[](ClassBin c) const { return w[index_of(c)]; }
};

/// w_c = N / (3 n_c), adjusted by a few ulps so that w_c * n_c is the same
/// double for every class. Throws ValidationError if a class is missing.
ClassWeights class_weights(std::span<const ClassBin> labels);

/// Mean over clips of the modal bin's share of raters, times 100.
/// Throws ValidationError for no clips or an empty clip.
double agreement(const std::map<std::string, std::vector<ClassBin>>& ratings_by_clip);

/// Adds N(0, sigma^2) per trait and clamps to [0, 1].
features::PersonalityProfile perturb_traits(const features::PersonalityProfile& profile, double sigma, Rng& rng);

}  // namespace emorec::dataset
