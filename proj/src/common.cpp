#include "emorec/common.h"
#include "emorec/rng.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <string>

namespace emorec {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

}  // namespace

std::string_view to_string(Emotion e) {
    switch (e) {
        case Emotion::Anger: return "Anger";
        case Emotion::Disgust: return "Disgust";
        case Emotion::Fear: return "Fear";
        case Emotion::Happy: return "Happy";
        case Emotion::Neutral: return "Neutral";
        case Emotion::Sad: return "Sad";
    }
    return "?";
}

Emotion parse_emotion(std::string_view name) {
    const auto key = lower(name);
    for (auto e : kAllEmotions) {
        if (lower(to_string(e)) == key) return e;
    }
    throw ValidationError("unknown stimulus emotion label '" + std::string(name) + "'");
}

std::string_view to_string(ClassBin c) {
    switch (c) {
        case ClassBin::Low: return "Low";
        case ClassBin::Medium: return "Medium";
        case ClassBin::High: return "High";
    }
    return "?";
}

std::string_view to_string(TargetLabel t) {
    switch (t) {
        case TargetLabel::PerceivedValence: return "perceived_valence";
        case TargetLabel::PerceivedArousal: return "perceived_arousal";
        case TargetLabel::FeltValence: return "felt_valence";
        case TargetLabel::FeltArousal: return "felt_arousal";
    }
    return "?";
}

TargetLabel parse_target(std::string_view name) {
    auto key = lower(name);
    std::replace(key.begin(), key.end(), '-', '_');
    for (auto t : kAllTargets) {
        if (to_string(t) == key) return t;
    }
    throw ValidationError("unknown target label '" + std::string(name) +
                          "' (expected perceived_valence, perceived_arousal, felt_valence, felt_arousal)");
}

// --- Rng -------------------------------------------------------------------

std::uint64_t Rng::derive_seed(std::uint64_t seed, std::string_view name) {
    // FNV-1a over the name, mixed with the parent seed.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : name) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return splitmix64(seed ^ splitmix64(h));
}

Rng Rng::substream(std::uint64_t seed, std::string_view name) { return Rng(derive_seed(seed, name)); }

std::uint64_t Rng::below(std::uint64_t n) {
    // Rejection sampling removes modulo bias.
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t r = engine_();
    while (r >= limit) r = engine_();
    return r % n;
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

}  // namespace emorec
