#include "emorec/baseline.h"
#include "emorec/eval.h"

#include "support.h"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace emorec;
using namespace emorec::baseline;

namespace {

// Records whose stimulus emotion maps to a label through `table`, with the
// label replaced by a random one with probability `flip`.
std::vector<features::FeatureRecord> stimulus_records(std::size_t n, std::uint64_t seed,
                                                      const std::array<ClassBin, kEmotionCount>& table, double flip) {
    Rng rng(seed);
    std::vector<features::FeatureRecord> out;
    for (std::size_t i = 0; i < n; ++i) {
        auto r = testing::random_record(rng);
        const auto e = i % kEmotionCount;
        r.stimulus = features::one_hot_stimulus(kAllEmotions[e]);
        r.labels[0] = rng.bernoulli(flip) ? bin_from_index(rng.below(3)) : table[e];
        out.push_back(r);
    }
    return out;
}

constexpr std::array<ClassBin, kEmotionCount> kTable{ClassBin::Low, ClassBin::Low,    ClassBin::Medium,
                                                     ClassBin::High, ClassBin::Medium, ClassBin::Low};

double norm(const std::vector<double>& w) {
    double s = 0;
    for (double v : w) s += v * v;
    return std::sqrt(s);
}

}  // namespace

TEST_CASE("layouts") {
    CHECK(layout_dim(SvmLayout::Stimulus) == 6);
    CHECK(layout_dim(SvmLayout::StimulusPersonality) == 11);
    CHECK(parse_svm_layout("stimulus+personality") == SvmLayout::StimulusPersonality);
    CHECK_THROWS_AS(parse_svm_layout("sequence"), ValidationError);
    Rng rng(1);
    const auto r = testing::random_record(rng);
    const auto x = svm_features(r, SvmLayout::StimulusPersonality);
    REQUIRE(x.size() == 11);
    for (std::size_t k = 0; k < 6; ++k) CHECK(x[k] == r.stimulus[k]);
    for (std::size_t k = 0; k < 5; ++k) CHECK(x[6 + k] == r.personality.traits[k]);
}

TEST_CASE("labels determined by the stimulus are learned perfectly") {
    const auto data = stimulus_records(120, 2, kTable, 0.0);
    const auto model = svm_train(data, TargetLabel::PerceivedValence, SvmLayout::Stimulus, {});
    std::vector<ClassBin> truth, pred;
    for (const auto& r : data) {
        truth.push_back(r.labels[0]);
        pred.push_back(svm_predict(model, r));
    }
    CHECK(eval::macro_f1(eval::confusion(truth, pred)) == 1.0);
}

TEST_CASE("two points at plus and minus one are separated") {
    const std::vector<std::vector<double>> x{{-1.0}, {1.0}, {-1.0}, {1.0}, {0.0}};
    const std::vector<ClassBin> y{ClassBin::Low, ClassBin::High, ClassBin::Low, ClassBin::High, ClassBin::Medium};
    SvmConfig cfg;
    cfg.reg_strength = 0.01;
    cfg.epochs = 500;
    const auto m = svm_train(x, y, SvmLayout::Raw, cfg);
    CHECK(m.w[2][0] * 1.0 + m.b[2] > 0.0);
    CHECK(m.w[2][0] * -1.0 + m.b[2] < 0.0);
    CHECK(m.w[0][0] * -1.0 + m.b[0] > 0.0);
    CHECK(m.w[0][0] * 1.0 + m.b[0] < 0.0);
    CHECK(svm_predict(m, std::vector<double>{1.0}) == ClassBin::High);
    CHECK(svm_predict(m, std::vector<double>{-1.0}) == ClassBin::Low);
}

TEST_CASE("stronger regularization shrinks the weights") {
    const auto data = stimulus_records(90, 3, kTable, 0.2);
    double prev = INFINITY;
    for (double reg : {0.1, 10.0, 1000.0}) {
        SvmConfig cfg;
        cfg.reg_strength = reg;
        const auto m = svm_train(data, TargetLabel::PerceivedValence, SvmLayout::Stimulus, cfg);
        double total = 0;
        for (const auto& w : m.w) total += norm(w);
        CHECK(total < prev);
        prev = total;
    }
}

TEST_CASE("score argmax") {
    CHECK(argmax_score({-1.0, 2.0, 0.0}) == ClassBin::Medium);
    CHECK(argmax_score({0.0, 0.0, 0.0}) == ClassBin::Low);
    CHECK(argmax_score({0.0, 1.0, 1.0}) == ClassBin::Medium);
    LinearSvmModel zero;
    zero.dim = 6;
    for (auto& w : zero.w) w.assign(6, 0.0);
    CHECK(svm_predict(zero, std::vector<double>(6, 1.0)) == ClassBin::Low);
    CHECK_THROWS_AS(svm_predict(zero, std::vector<double>(5, 1.0)), DimensionMismatchError);

    Rng rng(4);
    for (int i = 0; i < 500; ++i) {
        const std::array<double, 3> s{rng.normal(), rng.normal(), rng.normal()};
        const double c = rng.normal(0, 10);
        CHECK(argmax_score(s) == argmax_score({s[0] + c, s[1] + c, s[2] + c}));
    }
}

TEST_CASE("hinge subgradient matches finite differences away from kinks") {
    Rng rng(5);
    int checked = 0;
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<std::vector<double>> x(20, std::vector<double>(4));
        std::vector<int> y(20);
        for (auto& row : x)
            for (auto& v : row) v = rng.normal();
        for (auto& v : y) v = rng.bernoulli(0.5) ? 1 : -1;
        std::vector<double> w(4);
        for (auto& v : w) v = rng.normal();
        double b = rng.normal();
        // Skip draws with a margin too close to the hinge.
        bool near_kink = false;
        for (std::size_t i = 0; i < x.size(); ++i) {
            double s = b;
            for (std::size_t k = 0; k < 4; ++k) s += w[k] * x[i][k];
            if (std::abs(1.0 - y[i] * s) < 1e-3) near_kink = true;
        }
        if (near_kink) continue;
        ++checked;
        const double reg = 0.7;
        const auto g = svm_subgradient(w, b, x, y, reg);
        REQUIRE(g.size() == 5);
        auto f = [&] { return svm_objective(w, b, x, y, reg); };
        // The objective is piecewise quadratic, so a wide step stays on one piece. Hinge sums
        // can cancel to an exact zero, hence the unit floor on the denominator.
        auto err = [](double a, double fd) { return std::abs(a - fd) / std::max({1.0, std::abs(a), std::abs(fd)}); };
        for (std::size_t k = 0; k < 4; ++k) CHECK(err(g[k], testing::central_diff(f, w[k], 1e-4)) < 1e-4);
        CHECK(err(g[4], testing::central_diff(f, b, 1e-4)) < 1e-4);
    }
    CHECK(checked > 10);
}

TEST_CASE("on stimulus-only labels the SVM matches the modal lookup table") {
    for (std::uint64_t seed = 10; seed < 15; ++seed) {
        const auto data = stimulus_records(180, seed, kTable, 0.3);
        std::array<std::array<std::size_t, 3>, kEmotionCount> counts{};
        for (const auto& r : data)
            ++counts[static_cast<std::size_t>(features::argmax_stimulus(r.stimulus))][index_of(r.labels[0])];
        std::array<ClassBin, kEmotionCount> modal{};
        for (std::size_t e = 0; e < kEmotionCount; ++e)
            modal[e] = bin_from_index(static_cast<std::size_t>(
                std::max_element(counts[e].begin(), counts[e].end()) - counts[e].begin()));
        SvmConfig cfg;
        cfg.reg_strength = 0.1;
        cfg.seed = seed;
        const auto m = svm_train(data, TargetLabel::PerceivedValence, SvmLayout::Stimulus, cfg);
        std::size_t svm_hits = 0, table_hits = 0;
        for (const auto& r : data) {
            const auto e = static_cast<std::size_t>(features::argmax_stimulus(r.stimulus));
            svm_hits += svm_predict(m, r) == r.labels[0];
            table_hits += modal[e] == r.labels[0];
        }
        CHECK(svm_hits == table_hits);
    }
}

TEST_CASE("svm training rejects missing classes and ragged rows") {
    const std::vector<std::vector<double>> x{{1.0}, {2.0}};
    const std::vector<ClassBin> y{ClassBin::Low, ClassBin::High};
    CHECK_THROWS_AS(svm_train(x, y, SvmLayout::Raw, {}), ValidationError);
    const std::vector<std::vector<double>> ragged{{1.0}, {2.0, 3.0}, {1.0}};
    const std::vector<ClassBin> y3{ClassBin::Low, ClassBin::Medium, ClassBin::High};
    CHECK_THROWS_AS(svm_train(ragged, y3, SvmLayout::Raw, {}), ValidationError);
    SvmConfig bad;
    bad.reg_strength = 0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
}
