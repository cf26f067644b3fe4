#include "emorec/baseline.h"

#include "emorec/rng.h"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace emorec::baseline {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

std::string_view to_string(SvmLayout layout) {
    switch (layout) {
        case SvmLayout::Stimulus: return "stimulus";
        case SvmLayout::StimulusPersonality: return "stimulus+personality";
        case SvmLayout::Raw: return "raw";
    }
    return "?";
}

SvmLayout parse_svm_layout(std::string_view name) {
    if (name == "stimulus") return SvmLayout::Stimulus;
    if (name == "stimulus+personality") return SvmLayout::StimulusPersonality;
    throw ValidationError("unknown SVM layout '" + std::string(name) +
                          "' (expected stimulus or stimulus+personality)");
}

std::size_t layout_dim(SvmLayout layout) {
    switch (layout) {
        case SvmLayout::Stimulus: return kEmotionCount;
        case SvmLayout::StimulusPersonality: return kEmotionCount + features::kTraitCount;
        case SvmLayout::Raw: return 0;
    }
    return 0;
}

std::vector<double> svm_features(const features::FeatureRecord& record, SvmLayout layout) {
    if (layout == SvmLayout::Raw) throw ValidationError("raw SVM layout has no record mapping");
    std::vector<double> x(record.stimulus.begin(), record.stimulus.end());
    if (layout == SvmLayout::StimulusPersonality)
        x.insert(x.end(), record.personality.traits.begin(), record.personality.traits.end());
    return x;
}

void SvmConfig::validate() const {
    if (!(reg_strength > 0.0) || !std::isfinite(reg_strength))
        throw ValidationError("SVM regularization strength must be positive");
    if (epochs < 1) throw ValidationError("SVM needs at least one epoch");
}

LinearSvmModel svm_train(std::span<const std::vector<double>> x, std::span<const ClassBin> labels, SvmLayout layout,
                         const SvmConfig& cfg) {
    cfg.validate();
    if (x.size() != labels.size())
        throw ValidationError("SVM got " + std::to_string(x.size()) + " rows and " + std::to_string(labels.size()) +
                              " labels");
    std::array<std::size_t, kClassCount> counts{};
    for (auto l : labels) ++counts[index_of(l)];
    for (std::size_t c = 0; c < kClassCount; ++c)
        if (counts[c] == 0)
            throw ValidationError("SVM training data has no examples of class " +
                                  std::string(to_string(bin_from_index(c))));
    const std::size_t dim = x.front().size();
    if (layout != SvmLayout::Raw && dim != layout_dim(layout))
        throw DimensionMismatchError("SVM rows have width " + std::to_string(dim) + ", layout expects " +
                                     std::to_string(layout_dim(layout)));
    for (const auto& row : x)
        if (row.size() != dim) throw DimensionMismatchError("SVM rows have inconsistent width");

    LinearSvmModel m;
    m.layout = layout;
    m.dim = dim;
    m.reg_strength = cfg.reg_strength;
    const auto n = static_cast<double>(x.size());
    const double lambda = cfg.reg_strength / n;
    const double eta0 = std::min(0.1, 0.5 / lambda);

    std::vector<std::size_t> order(x.size());
    for (std::size_t c = 0; c < kClassCount; ++c) {
        auto rng = Rng::substream(cfg.seed, "svm-head-" + std::to_string(c));
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::vector<double> w(dim, 0.0);
        double b = 0.0;
        std::size_t t = 0;
        for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
            rng.shuffle(order);
            for (std::size_t i : order) {
                const double eta = eta0 / (1.0 + lambda * eta0 * static_cast<double>(t++));
                const double y = index_of(labels[i]) == c ? 1.0 : -1.0;
                const bool active = y * (dot(w, x[i]) + b) < 1.0;
                for (std::size_t k = 0; k < dim; ++k) {
                    w[k] -= eta * lambda * w[k];
                    if (active) w[k] += eta * y * x[i][k];
                }
                if (active) b += eta * y;
            }
        }
        m.w[c] = std::move(w);
        m.b[c] = b;
    }
    return m;
}

LinearSvmModel svm_train(std::span<const features::FeatureRecord> records, TargetLabel target, SvmLayout layout,
                         const SvmConfig& cfg) {
    if (records.empty()) throw ValidationError("SVM training set is empty");
    std::vector<std::vector<double>> x;
    std::vector<ClassBin> y;
    for (const auto& r : records) {
        x.push_back(svm_features(r, layout));
        y.push_back(r.label(target));
    }
    return svm_train(x, y, layout, cfg);
}

std::array<double, kClassCount> svm_scores(const LinearSvmModel& model, std::span<const double> x) {
    if (x.size() != model.dim)
        throw DimensionMismatchError("SVM input has width " + std::to_string(x.size()) + ", model expects " +
                                     std::to_string(model.dim));
    std::array<double, kClassCount> s{};
    for (std::size_t c = 0; c < kClassCount; ++c) s[c] = dot(model.w[c], x) + model.b[c];
    return s;
}

ClassBin argmax_score(const std::array<double, kClassCount>& scores) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < kClassCount; ++c)
        if (scores[c] > scores[best]) best = c;
    return bin_from_index(best);
}

ClassBin svm_predict(const LinearSvmModel& model, std::span<const double> x) {
    return argmax_score(svm_scores(model, x));
}

ClassBin svm_predict(const LinearSvmModel& model, const features::FeatureRecord& record) {
    return svm_predict(model, svm_features(record, model.layout));
}

double svm_objective(std::span<const double> w, double b, std::span<const std::vector<double>> x,
                     std::span<const int> y, double reg) {
    double obj = 0.5 * reg * dot(w, w);
    for (std::size_t i = 0; i < x.size(); ++i) obj += std::max(0.0, 1.0 - y[i] * (dot(w, x[i]) + b));
    return obj;
}

std::vector<double> svm_subgradient(std::span<const double> w, double b, std::span<const std::vector<double>> x,
                                    std::span<const int> y, double reg) {
    std::vector<double> g(w.size() + 1, 0.0);
    for (std::size_t k = 0; k < w.size(); ++k) g[k] = reg * w[k];
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (y[i] * (dot(w, x[i]) + b) >= 1.0) continue;
        for (std::size_t k = 0; k < w.size(); ++k) g[k] -= y[i] * x[i][k];
        g[w.size()] -= y[i];
    }
    return g;
}

}  // namespace emorec::baseline
