#include "emorec/dataset.h"
#include "emorec/synth.h"

#include "support.h"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

using namespace emorec;
using namespace emorec::dataset;

namespace {

std::vector<ClassBin> labels_with_counts(std::size_t low, std::size_t med, std::size_t high) {
    std::vector<ClassBin> v;
    v.insert(v.end(), low, ClassBin::Low);
    v.insert(v.end(), med, ClassBin::Medium);
    v.insert(v.end(), high, ClassBin::High);
    return v;
}

std::array<std::size_t, kClassCount> count_in(const std::vector<std::size_t>& idx, const std::vector<ClassBin>& y) {
    std::array<std::size_t, kClassCount> c{};
    for (auto i : idx) ++c[index_of(y[i])];
    return c;
}

// Pearson chi-square statistic of a contingency table.
template <std::size_t R, std::size_t C>
double chi_square(const std::array<std::array<double, C>, R>& t) {
    std::array<double, R> rows{};
    std::array<double, C> cols{};
    double n = 0;
    for (std::size_t r = 0; r < R; ++r)
        for (std::size_t c = 0; c < C; ++c) {
            rows[r] += t[r][c];
            cols[c] += t[r][c];
            n += t[r][c];
        }
    double chi = 0;
    for (std::size_t r = 0; r < R; ++r)
        for (std::size_t c = 0; c < C; ++c) {
            const double e = rows[r] * cols[c] / n;
            if (e > 0) chi += (t[r][c] - e) * (t[r][c] - e) / e;
        }
    return chi;
}

std::size_t tertile(double raw) { return raw < 22.0 ? 0 : (raw <= 28.0 ? 1 : 2); }

// Felt label bins against the neuroticism tertile, one trial per participant
// so observations are independent.
double felt_vs_neuroticism(double coupling, TargetLabel target) {
    SynthConfig cfg;
    cfg.n_participants = 5000;
    cfg.trials_per_participant = 1;
    cfg.seed = 19;
    cfg.personality_coupling = coupling;
    const auto data = synth_generate(cfg);
    std::array<std::array<double, 3>, 3> table{};
    for (std::size_t p = 0; p < data.sessions.size(); ++p) {
        const auto& r = data.ratings[p];
        REQUIRE(r.participant_id == data.sessions[p].participant_id);
        const auto bin = index_of(bin_rating(r.value(target)));
        ++table[tertile(data.sessions[p].personality.raw[4])][bin];
    }
    return chi_square(table);
}

}  // namespace

TEST_CASE("rating bins follow the 1-3 / 4-6 / 7-9 edges") {
    CHECK(bin_rating(1) == ClassBin::Low);
    CHECK(bin_rating(3) == ClassBin::Low);
    CHECK(bin_rating(4) == ClassBin::Medium);
    CHECK(bin_rating(6) == ClassBin::Medium);
    CHECK(bin_rating(7) == ClassBin::High);
    CHECK(bin_rating(9) == ClassBin::High);
    for (int r = 1; r < 9; ++r) CHECK(index_of(bin_rating(r)) <= index_of(bin_rating(r + 1)));
    CHECK_THROWS_AS(bin_rating(0), ValidationError);
    CHECK_THROWS_AS(bin_rating(10), ValidationError);
}

TEST_CASE("stratified split of 50/30/20 puts 32/19/13 in train") {
    const auto y = labels_with_counts(50, 30, 20);
    SplitSpec spec;
    spec.seed = 3;
    const auto s = stratified_split(y, spec);
    const auto tr = count_in(s.train, y);
    CHECK(tr[0] == 32);
    CHECK(tr[1] == 19);
    CHECK(tr[2] == 13);
    // Each split is within one record of its target per class.
    const std::array<std::size_t, 3> n{50, 30, 20};
    const auto va = count_in(s.val, y);
    const auto te = count_in(s.test, y);
    for (std::size_t c = 0; c < 3; ++c) {
        CHECK(std::abs(static_cast<double>(va[c]) - n[c] * spec.val_fraction) <= 1.0);
        CHECK(std::abs(static_cast<double>(te[c]) - n[c] * spec.test_fraction) <= 1.0);
    }
}

TEST_CASE("splits partition the input and are reproducible") {
    Rng rng(8);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<ClassBin> y(30 + rng.below(200));
        for (auto& l : y) l = bin_from_index(rng.below(3));
        y[0] = ClassBin::Low;
        y[1] = ClassBin::Medium;
        y[2] = ClassBin::High;
        SplitSpec spec;
        spec.seed = rng.next_u64();
        const auto a = stratified_split(y, spec);
        const auto b = stratified_split(y, spec);
        CHECK(a.train == b.train);
        CHECK(a.val == b.val);
        CHECK(a.test == b.test);
        std::vector<std::size_t> all;
        for (const auto* part : {&a.train, &a.val, &a.test}) all.insert(all.end(), part->begin(), part->end());
        std::sort(all.begin(), all.end());
        REQUIRE(all.size() == y.size());
        for (std::size_t i = 0; i < all.size(); ++i) CHECK(all[i] == i);
    }
}

TEST_CASE("degenerate and invalid splits") {
    const auto y = labels_with_counts(4, 5, 6);
    SplitSpec spec;
    spec.train_fraction = 1.0;
    spec.val_fraction = 0.0;
    spec.test_fraction = 0.0;
    const auto s = stratified_split(y, spec);
    CHECK(s.train.size() == y.size());
    CHECK(s.val.empty());
    CHECK(s.test.empty());

    CHECK_THROWS_AS(stratified_split(labels_with_counts(5, 0, 5), SplitSpec{}), ValidationError);
    SplitSpec bad;
    bad.train_fraction = 0.9;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("participant split keeps each participant in one part") {
    std::vector<std::string> ids;
    for (int p = 0; p < 20; ++p)
        for (int t = 0; t < 7; ++t) ids.push_back("P" + std::to_string(p));
    SplitSpec spec;
    spec.subject_independent = true;
    spec.seed = 1;
    const auto s = participant_split(ids, spec);
    std::map<std::string, std::set<int>> where;
    int part = 0;
    for (const auto* idx : {&s.train, &s.val, &s.test}) {
        for (auto i : *idx) where[ids[i]].insert(part);
        ++part;
    }
    CHECK(where.size() == 20);
    for (const auto& [id, parts] : where) CHECK(parts.size() == 1);
    CHECK(s.train.size() + s.val.size() + s.test.size() == ids.size());
}

TEST_CASE("class weights are inverse frequency normalized to mean one") {
    const auto a = class_weights(labels_with_counts(10, 10, 10));
    for (double w : a.w) CHECK(w == 1.0);
    const auto b = class_weights(labels_with_counts(10, 20, 10));
    CHECK(b[ClassBin::Low] == doctest::Approx(4.0 / 3.0));
    CHECK(b[ClassBin::Medium] == doctest::Approx(2.0 / 3.0));
    CHECK(b[ClassBin::High] == doctest::Approx(4.0 / 3.0));
    CHECK(b[ClassBin::Low] / b[ClassBin::Medium] == 2.0);
    CHECK_THROWS_AS(class_weights(labels_with_counts(3, 0, 2)), ValidationError);
}

TEST_CASE("class weights times class counts are exactly equal") {
    Rng rng(2);
    for (int rep = 0; rep < 20000; ++rep) {
        const std::size_t bound = rep < 10000 ? 300 : 100000;
        const std::size_t n0 = 1 + rng.below(bound), n1 = 1 + rng.below(bound), n2 = 1 + rng.below(bound);
        const auto w = class_weights(labels_with_counts(n0, n1, n2));
        const double total = static_cast<double>(n0 + n1 + n2);
        const std::array<std::size_t, 3> n{n0, n1, n2};
        const double product = w.w[0] * static_cast<double>(n0);
        for (std::size_t c = 0; c < 3; ++c) {
            CHECK(w.w[c] * static_cast<double>(n[c]) == product);
            // Long double keeps the reference quotient independent of the double path.
            const long double ref = static_cast<long double>(total) / (3.0L * n[c]);
            CHECK(std::abs(static_cast<long double>(w.w[c]) - ref) / ref < 1e-13L);
        }
    }
}

TEST_CASE("agreement is the mean modal share") {
    std::map<std::string, std::vector<ClassBin>> unanimous{{"a", {ClassBin::Low, ClassBin::Low}},
                                                            {"b", {ClassBin::High, ClassBin::High, ClassBin::High}}};
    CHECK(agreement(unanimous) == 100.0);
    std::map<std::string, std::vector<ClassBin>> split{{"a", {ClassBin::Low, ClassBin::High}},
                                                        {"b", {ClassBin::Medium, ClassBin::Low}}};
    CHECK(agreement(split) == 50.0);
    CHECK_THROWS_AS(agreement({}), ValidationError);
    CHECK_THROWS_AS(agreement({{"a", {}}}), ValidationError);

    Rng rng(56);
    const auto planted = planted_mode_ratings(200, 400, 0.56, rng);
    const double pct = agreement(planted);
    CHECK(pct >= 55.0);
    CHECK(pct <= 57.0);
    CHECK(agreement(planted_mode_ratings(50, 300, 0.2, rng)) >= 100.0 / 3.0 - 1e-9);
}

TEST_CASE("trait perturbation has the requested spread and stays in range") {
    features::PersonalityProfile mid;
    mid.traits.fill(0.5);
    Rng rng(99);
    std::array<double, features::kTraitCount> sum{}, sq{};
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        const auto p = perturb_traits(mid, 0.02, rng);
        for (std::size_t k = 0; k < features::kTraitCount; ++k) {
            sum[k] += p.traits[k];
            sq[k] += p.traits[k] * p.traits[k];
        }
    }
    for (std::size_t k = 0; k < features::kTraitCount; ++k) {
        const double mean = sum[k] / n;
        const double sd = std::sqrt(sq[k] / n - mean * mean);
        CHECK(sd >= 0.015);
        CHECK(sd <= 0.025);
    }

    features::PersonalityProfile edge;
    edge.traits = {1.0, 0.0, 1.0, 0.0, 1.0};
    for (int i = 0; i < 1000; ++i) {
        const auto p = perturb_traits(edge, 0.3, rng);
        for (double t : p.traits) {
            CHECK(t >= 0.0);
            CHECK(t <= 1.0);
        }
    }
    const auto same = perturb_traits(mid, 0.0, rng);
    CHECK(same.traits == mid.traits);
}

TEST_CASE("synthetic felt labels ignore personality when the coupling is zero") {
    // Chi-square, 4 degrees of freedom: 13.28 is the p = 0.01 critical value.
    CHECK(felt_vs_neuroticism(0.0, TargetLabel::FeltValence) < 13.28);
    CHECK(felt_vs_neuroticism(0.0, TargetLabel::FeltArousal) < 13.28);
    CHECK(felt_vs_neuroticism(0.8, TargetLabel::FeltValence) > 100.0);
    CHECK(felt_vs_neuroticism(0.8, TargetLabel::FeltArousal) > 100.0);
}

TEST_CASE("synthetic generation is deterministic") {
    SynthConfig cfg;
    cfg.n_participants = 3;
    cfg.trials_per_participant = 6;
    cfg.seed = 5;
    const auto a = synth_generate(cfg);
    const auto b = synth_generate(cfg);
    REQUIRE(a.ratings.size() == 18);
    for (std::size_t i = 0; i < a.ratings.size(); ++i) CHECK(a.ratings[i].values == b.ratings[i].values);
    REQUIRE(a.sessions.size() == b.sessions.size());
    for (std::size_t s = 0; s < a.sessions.size(); ++s)
        for (std::size_t t = 0; t < a.sessions[s].trials.size(); ++t) {
            const auto& x = a.sessions[s].trials[t].samples;
            const auto& y = b.sessions[s].trials[t].samples;
            REQUIRE(x.size() == y.size());
            for (std::size_t i = 0; i < x.size(); ++i) {
                CHECK(x[i].x == y[i].x);
                CHECK(x[i].pupil == y[i].pupil);
            }
        }
    cfg.seed = 6;
    const auto c = synth_generate(cfg);
    bool differs = false;
    for (std::size_t i = 0; i < a.ratings.size(); ++i) differs |= a.ratings[i].values != c.ratings[i].values;
    CHECK(differs);
}
