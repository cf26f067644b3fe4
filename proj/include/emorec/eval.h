#pragma once

#include "emorec/common.h"

#include <array>
#include <span>

namespace emorec::eval {

/// Rows are true classes, columns predicted.
struct ConfusionMatrix {
    std::array<std::array<std::size_t, kClassCount>, kClassCount> counts{};

    std::size_t total() const;
    std::size_t row_sum(std::size_t c) const;
    std::size_t col_sum(std::size_t c) const;
};

/// Throws ValidationError on a length mismatch.
ConfusionMatrix confusion(std::span<const ClassBin> truth, std::span<const ClassBin> predicted);

struct F1Scores {
    std::array<double, kClassCount> f1{};
    // Set when precision or recall hit 0/0 and was taken as 0.
    std::array<bool, kClassCount> degenerate{};
};

F1Scores per_class_f1(const ConfusionMatrix& cm);
double macro_f1(const F1Scores& scores);
double macro_f1(const ConfusionMatrix& cm);

}  // namespace emorec::eval
