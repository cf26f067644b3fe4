#include "emorec/dataset.h"

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>

namespace emorec::dataset {

ClassBin bin_rating(int rating) {
    if (rating < 1 || rating > 9) throw ValidationError("rating " + std::to_string(rating) + " outside 1..9");
    if (rating <= 3) return ClassBin::Low;
    if (rating <= 6) return ClassBin::Medium;
    return ClassBin::High;
}

void SplitSpec::validate() const {
    if (train_fraction < 0.0 || val_fraction < 0.0 || test_fraction < 0.0)
        throw ValidationError("split fractions must be non-negative");
    if (std::abs(train_fraction + val_fraction + test_fraction - 1.0) > 1e-9)
        throw ValidationError("split fractions must sum to 1");
}

SplitIndices stratified_split(std::span<const ClassBin> labels, const SplitSpec& spec) {
    spec.validate();
    std::array<std::vector<std::size_t>, kClassCount> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[index_of(labels[i])].push_back(i);
    for (std::size_t c = 0; c < kClassCount; ++c) {
        if (by_class[c].empty())
            throw ValidationError("stratification class " + std::string(to_string(bin_from_index(c))) +
                                  " has no records");
    }

    Rng rng(spec.seed);
    SplitIndices out;
    for (auto& members : by_class) {
        rng.shuffle(members);
        const std::size_t n = members.size();
        const auto n_train = std::min(n, static_cast<std::size_t>(std::llround(static_cast<double>(n) * spec.train_fraction)));
        const auto n_val =
            std::min(n - n_train, static_cast<std::size_t>(std::llround(static_cast<double>(n) * spec.val_fraction)));
        out.train.insert(out.train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_train));
        out.val.insert(out.val.end(), members.begin() + static_cast<std::ptrdiff_t>(n_train),
                       members.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
        out.test.insert(out.test.end(), members.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), members.end());
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.val.begin(), out.val.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

SplitIndices participant_split(std::span<const std::string> participant_ids, const SplitSpec& spec) {
    spec.validate();
    const std::set<std::string> uniq(participant_ids.begin(), participant_ids.end());
    std::vector<std::string> people(uniq.begin(), uniq.end());
    Rng rng(spec.seed);
    rng.shuffle(people);
    const std::size_t n = people.size();
    const auto n_train = std::min(n, static_cast<std::size_t>(std::llround(static_cast<double>(n) * spec.train_fraction)));
    const auto n_val =
        std::min(n - n_train, static_cast<std::size_t>(std::llround(static_cast<double>(n) * spec.val_fraction)));
    std::map<std::string, int> where;
    for (std::size_t i = 0; i < n; ++i) where[people[i]] = i < n_train ? 0 : (i < n_train + n_val ? 1 : 2);

    SplitIndices out;
    for (std::size_t i = 0; i < participant_ids.size(); ++i) {
        switch (where[participant_ids[i]]) {
            case 0: out.train.push_back(i); break;
            case 1: out.val.push_back(i); break;
            default: out.test.push_back(i); break;
        }
    }
    return out;
}

SplitIndices split_records(std::span<const features::FeatureRecord> records, const SplitSpec& spec) {
    if (spec.subject_independent) {
        std::vector<std::string> ids;
        ids.reserve(records.size());
        for (const auto& r : records) ids.push_back(r.participant_id);
        return participant_split(ids, spec);
    }
    std::vector<ClassBin> labels;
    labels.reserve(records.size());
    for (const auto& r : records) labels.push_back(r.label(spec.stratify_on));
    return stratified_split(labels, spec);
}

namespace {

// A weight w with fl(w * n) == target, searched around target / n.
std::optional<double> exact_factor(double target, double n) {
    double up = target / n, down = up;
    if (up * n == target) return up;
    for (int k = 0; k < 4; ++k) {
        up = std::nextafter(up, INFINITY);
        down = std::nextafter(down, -INFINITY);
        if (up * n == target) return up;
        if (down * n == target) return down;
    }
    return std::nullopt;
}

}  // namespace

ClassWeights class_weights(std::span<const ClassBin> labels) {
    std::array<std::size_t, kClassCount> counts{};
    for (auto l : labels) ++counts[index_of(l)];
    for (std::size_t c = 0; c < kClassCount; ++c)
        if (counts[c] == 0)
            throw ValidationError("class " + std::string(to_string(bin_from_index(c))) +
                                  " is missing from the training labels");

    // w_c * n_c must be the same double for every class. The shared product walks
    // outward from N/3 one ulp at a time until all three classes hit it exactly.
    const double third = static_cast<double>(labels.size()) / 3.0;
    double above = third, below = third;
    for (int step = 0; step < 4096; ++step) {
        const double target = step == 0 ? third : (step % 2 ? (above = std::nextafter(above, INFINITY))
                                                            : (below = std::nextafter(below, -INFINITY)));
        ClassWeights cw;
        bool ok = true;
        for (std::size_t c = 0; c < kClassCount && ok; ++c) {
            const auto w = exact_factor(target, static_cast<double>(counts[c]));
            if (w) cw.w[c] = *w;
            else ok = false;
        }
        if (ok) return cw;
    }
    ClassWeights cw;
    for (std::size_t c = 0; c < kClassCount; ++c) cw.w[c] = third / static_cast<double>(counts[c]);
    return cw;
}

double agreement(const std::map<std::string, std::vector<ClassBin>>& ratings_by_clip) {
    if (ratings_by_clip.empty()) throw ValidationError("agreement needs at least one rated clip");
    double sum = 0.0;
    for (const auto& [clip, bins] : ratings_by_clip) {
        if (bins.empty()) throw ValidationError("clip " + clip + " has no ratings");
        std::array<std::size_t, kClassCount> counts{};
        for (auto b : bins) ++counts[index_of(b)];
        const auto modal = *std::max_element(counts.begin(), counts.end());
        sum += static_cast<double>(modal) / static_cast<double>(bins.size());
    }
    return 100.0 * sum / static_cast<double>(ratings_by_clip.size());
}

features::PersonalityProfile perturb_traits(const features::PersonalityProfile& profile, double sigma, Rng& rng) {
    if (sigma == 0.0) return profile;
    features::PersonalityProfile out = profile;
    for (auto& t : out.traits) t = std::clamp(t + rng.normal(0.0, sigma), 0.0, 1.0);
    return out;
}

}  // namespace emorec::dataset
