#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace emorec {

// Error hierarchy. The CLI maps each family onto an exit code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad input: malformed files, out-of-range values, shape mismatches.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Non-finite values or a diverging optimizer.
class NumericError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class EmptyTrialError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class NoNeutralTrialsError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class DegenerateGeometryError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class SchemaError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class DimensionMismatchError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2&, const Point2&) = default;
};

// Stimulus emotion categories, in one-hot order.
enum class Emotion : std::uint8_t { Anger, Disgust, Fear, Happy, Neutral, Sad };

inline constexpr std::size_t kEmotionCount = 6;
inline constexpr std::array<Emotion, kEmotionCount> kAllEmotions = {
    Emotion::Anger, Emotion::Disgust, Emotion::Fear, Emotion::Happy, Emotion::Neutral, Emotion::Sad};

std::string_view to_string(Emotion e);
/// Accepts the canonical names, case-insensitive. Throws ValidationError otherwise.
Emotion parse_emotion(std::string_view name);

// Three-way rating bin. Order matters: Low < Medium < High, and argmax ties break toward Low.
enum class ClassBin : std::uint8_t { Low = 0, Medium = 1, High = 2 };

inline constexpr std::size_t kClassCount = 3;

inline constexpr std::size_t index_of(ClassBin c) { return static_cast<std::size_t>(c); }
inline constexpr ClassBin bin_from_index(std::size_t i) { return static_cast<ClassBin>(i); }
std::string_view to_string(ClassBin c);

// The four prediction targets. One model is trained per target.
enum class TargetLabel : std::uint8_t { PerceivedValence, PerceivedArousal, FeltValence, FeltArousal };

inline constexpr std::size_t kTargetCount = 4;
inline constexpr std::array<TargetLabel, kTargetCount> kAllTargets = {
    TargetLabel::PerceivedValence, TargetLabel::PerceivedArousal, TargetLabel::FeltValence,
    TargetLabel::FeltArousal};

inline constexpr std::size_t index_of(TargetLabel t) { return static_cast<std::size_t>(t); }
/// snake_case name, e.g. "felt_arousal".
std::string_view to_string(TargetLabel t);
TargetLabel parse_target(std::string_view name);

}  // namespace emorec
