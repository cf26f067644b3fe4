#include "emorec/eval.h"

#include <string>

namespace emorec::eval {

std::size_t ConfusionMatrix::total() const {
    std::size_t n = 0;
    for (const auto& row : counts)
        for (auto v : row) n += v;
    return n;
}

std::size_t ConfusionMatrix::row_sum(std::size_t c) const {
    std::size_t n = 0;
    for (auto v : counts[c]) n += v;
    return n;
}

std::size_t ConfusionMatrix::col_sum(std::size_t c) const {
    std::size_t n = 0;
    for (const auto& row : counts) n += row[c];
    return n;
}

ConfusionMatrix confusion(std::span<const ClassBin> truth, std::span<const ClassBin> predicted) {
    if (truth.size() != predicted.size())
        throw ValidationError("confusion matrix needs equal-length label lists (" + std::to_string(truth.size()) +
                              " vs " + std::to_string(predicted.size()) + ")");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < truth.size(); ++i) ++cm.counts[index_of(truth[i])][index_of(predicted[i])];
    return cm;
}

F1Scores per_class_f1(const ConfusionMatrix& cm) {
    F1Scores out;
    for (std::size_t c = 0; c < kClassCount; ++c) {
        const auto tp = static_cast<double>(cm.counts[c][c]);
        const auto predicted = static_cast<double>(cm.col_sum(c));
        const auto actual = static_cast<double>(cm.row_sum(c));
        bool degenerate = false;
        double precision = 0.0, recall = 0.0;
        if (predicted > 0.0) precision = tp / predicted;
        else degenerate = true;
        if (actual > 0.0) recall = tp / actual;
        else degenerate = true;
        out.degenerate[c] = degenerate;
        out.f1[c] = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    }
    return out;
}

double macro_f1(const F1Scores& scores) { return (scores.f1[0] + scores.f1[1] + scores.f1[2]) / 3.0; }

double macro_f1(const ConfusionMatrix& cm) { return macro_f1(per_class_f1(cm)); }

}  // namespace emorec::eval
