#pragma once

// Shared fixtures and independent oracles for the test binaries.

#include "emorec/events.h"
#include "emorec/features.h"
#include "emorec/net.h"
#include "emorec/rng.h"
#include "emorec/signal.h"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

namespace testing {

using namespace emorec;

inline constexpr double kDt150 = 1000.0 / 150.0;

inline signal::TrialWindow trial_of(std::vector<signal::GazeSample> samples, double span_ms = -1.0) {
    signal::TrialWindow t;
    t.trial_id = "T000";
    t.clip_id = "C000";
    t.samples = std::move(samples);
    t.start_t = 0.0;
    t.end_t = span_ms > 0.0 ? span_ms : (t.samples.empty() ? 1.0 : t.samples.back().t + kDt150);
    return t;
}

/// n samples at 150 Hz, all at (x, y), starting at t0.
inline std::vector<signal::GazeSample> stationary(double x, double y, std::size_t n, double t0 = 0.0,
                                                  double pupil = 3.0) {
    std::vector<signal::GazeSample> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = {t0 + static_cast<double>(i) * kDt150, x, y, pupil, true, false};
    return out;
}

/// Relative error with the floor used across the gradient checks.
inline double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

/// Random record with every group populated; sequence values are O(1).
inline features::FeatureRecord random_record(Rng& rng) {
    features::FeatureRecord r;
    r.participant_id = "P001";
    r.trial_id = "T000";
    for (auto& v : r.sequence.values) v = rng.normal();
    for (auto& v : r.personality.traits) v = rng.uniform();
    r.stimulus = features::one_hot_stimulus(kAllEmotions[rng.below(kEmotionCount)]);
    for (auto& v : r.environment) v = rng.normal();
    for (auto& l : r.labels) l = bin_from_index(rng.below(kClassCount));
    return r;
}

/// Records whose target label is a clean function of the sequence: class c
/// shifts channel c's mean by a large margin. Unscaled magnitudes are mixed
/// on purpose so the scalers matter.
inline std::vector<features::FeatureRecord> separable_records(std::size_t n, std::uint64_t seed,
                                                              TargetLabel target = TargetLabel::PerceivedValence) {
    Rng rng(seed);
    std::vector<features::FeatureRecord> out;
    for (std::size_t i = 0; i < n; ++i) {
        auto r = random_record(rng);
        r.participant_id = "P" + std::to_string(i % 7);
        r.trial_id = "T" + std::to_string(i);
        const auto cls = i % kClassCount;
        for (std::size_t k = 0; k < features::kSteps; ++k) {
            for (std::size_t c = 0; c < features::kChannels; ++c) r.sequence.at(k, c) = 0.3 * rng.normal();
            r.sequence.at(k, 6 + cls) += 2.0;
        }
        r.labels[index_of(target)] = bin_from_index(cls);
        out.push_back(r);
    }
    return out;
}

/// Central finite difference of f with respect to x[i].
template <typename F>
double central_diff(F&& f, double& x, double eps) {
    const double keep = x;
    x = keep + eps;
    const double up = f();
    x = keep - eps;
    const double down = f();
    x = keep;
    return (up - down) / (2.0 * eps);
}

/// Max relative error between analytic gradients of the full model and
/// central differences, over every parameter. Models in eval mode.
inline double model_gradient_error(net::Model& model, const features::FeatureRecord& rec, ClassBin label,
                                   const dataset::ClassWeights& w, double eps = 1e-5) {
    auto grad = net::ModelParams::zeros(model.config);
    const auto pass = net::fused_forward(model, rec, {});
    net::backward(model, pass, label, w, grad);
    std::vector<const net::Tensor*> gs;
    grad.for_each([&](std::string_view, const net::Tensor& t) { gs.push_back(&t); });
    auto loss = [&] { return net::loss_weighted_ce(net::fused_forward(model, rec, {}).probs, label, w); };
    double worst = 0.0;
    std::size_t slot = 0;
    model.params.for_each([&](std::string_view, net::Tensor& t) {
        const auto& g = gs[slot++]->values;
        for (std::size_t i = 0; i < t.values.size(); ++i)
            worst = std::max(worst, rel_err(g[i], central_diff(loss, t.values[i], eps)));
    });
    return worst;
}

/// Minimal JSON Schema check: type, required, properties,
/// additionalProperties (boolean or schema), items, minItems, maxItems, minimum,
/// maximum, enum. Returns an empty string on success, else the first issue.
inline std::string schema_violation(const nlohmann::json& schema, const nlohmann::json& doc,
                                    const std::string& where = "$") {
    using nlohmann::json;
    if (schema.contains("type")) {
        const auto type = schema.at("type").get<std::string>();
        bool ok = false;
        if (type == "object") ok = doc.is_object();
        else if (type == "array") ok = doc.is_array();
        else if (type == "string") ok = doc.is_string();
        else if (type == "number") ok = doc.is_number();
        else if (type == "integer") ok = doc.is_number_integer();
        else if (type == "boolean") ok = doc.is_boolean();
        else if (type == "null") ok = doc.is_null();
        if (!ok) return where + ": expected " + type;
    }
    if (schema.contains("enum")) {
        const auto& allowed = schema.at("enum");
        if (std::find(allowed.begin(), allowed.end(), doc) == allowed.end()) return where + ": value not in enum";
    }
    if (doc.is_number()) {
        const double v = doc.get<double>();
        if (schema.contains("minimum") && v < schema.at("minimum").get<double>()) return where + ": below minimum";
        if (schema.contains("maximum") && v > schema.at("maximum").get<double>()) return where + ": above maximum";
    }
    if (doc.is_object()) {
        if (schema.contains("required"))
            for (const auto& key : schema.at("required"))
                if (!doc.contains(key.get<std::string>())) return where + ": missing " + key.get<std::string>();
        const json props = schema.value("properties", json::object());
        for (const auto& [key, value] : doc.items()) {
            if (props.contains(key)) {
                auto issue = schema_violation(props.at(key), value, where + "." + key);
                if (!issue.empty()) return issue;
            } else if (schema.contains("additionalProperties")) {
                const auto& extra = schema.at("additionalProperties");
                if (extra.is_boolean() && !extra.get<bool>()) return where + ": unexpected " + key;
                if (extra.is_object()) {
                    auto issue = schema_violation(extra, value, where + "." + key);
                    if (!issue.empty()) return issue;
                }
            }
        }
    }
    if (doc.is_array()) {
        if (schema.contains("minItems") && doc.size() < schema.at("minItems").get<std::size_t>())
            return where + ": too few items";
        if (schema.contains("maxItems") && doc.size() > schema.at("maxItems").get<std::size_t>())
            return where + ": too many items";
        if (schema.contains("items"))
            for (std::size_t i = 0; i < doc.size(); ++i) {
                auto issue = schema_violation(schema.at("items"), doc[i], where + "[" + std::to_string(i) + "]");
                if (!issue.empty()) return issue;
            }
    }
    return {};
}

/// Scratch directory under the system temp dir, emptied on creation.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("emorec_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace testing

namespace testing {

struct PlantedTrace {
    signal::TrialWindow trial;
    std::vector<Point2> centers;  // normalized
};

/// K stationary clusters of 40-80 samples each, joined by instantaneous
/// jumps longer than 2x the dispersion threshold in every case. No noise.
inline PlantedTrace planted_clusters(std::size_t k, Rng& rng, const signal::SignalConfig& geo,
                                     double threshold_deg = 1.0) {
    PlantedTrace out;
    std::vector<signal::GazeSample> samples;
    Point2 prev{-1, -1};
    for (std::size_t c = 0; c < k; ++c) {
        Point2 p;
        for (;;) {
            p = {rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8)};
            if (prev.x < 0) break;
            const auto a = events::to_visual_angle(p, geo);
            const auto b = events::to_visual_angle(prev, geo);
            if (std::abs(a.x - b.x) + std::abs(a.y - b.y) > 2.5 * threshold_deg) break;
        }
        const auto n = 40 + rng.below(41);
        for (std::size_t i = 0; i < n; ++i)
            samples.push_back({static_cast<double>(samples.size()) * kDt150, p.x, p.y, 3.0, true, false});
        out.centers.push_back(p);
        prev = p;
    }
    out.trial = trial_of(std::move(samples));
    return out;
}

}  // namespace testing
