#pragma once

#include "emorec/common.h"
#include "emorec/features.h"

#include <array>
#include <span>
#include <string>
#include <vector>

namespace emorec::baseline {

/// Static inputs for the linear baseline. No sequence features.
enum class SvmLayout { Stimulus, StimulusPersonality, Raw };

std::string_view to_string(SvmLayout layout);
SvmLayout parse_svm_layout(std::string_view name);
/// 6 for stimulus, 11 with personality. Raw layouts carry their own width.
std::size_t layout_dim(SvmLayout layout);

std::vector<double> svm_features(const features::FeatureRecord& record, SvmLayout layout);

struct SvmConfig {
    double reg_strength = 1.0;
    std::size_t epochs = 200;
    std::uint64_t seed = 0;

    void validate() const;
};

/// One-vs-rest: three heads, each w . x + b.
struct LinearSvmModel {
    SvmLayout layout = SvmLayout::Stimulus;
    std::size_t dim = 0;
    double reg_strength = 1.0;
    std::array<std::vector<double>, kClassCount> w;
    std::array<double, kClassCount> b{};
};

/// Per head, minimizes (reg/2)|w|^2 + sum_i max(0, 1 - y_i (w . x_i + b)) by
/// stochastic subgradient steps eta_t = eta0 / (1 + lambda eta0 t), with
/// lambda = reg / n. The bias is not regularized. Throws ValidationError when
/// a class has no examples or rows have inconsistent width.
LinearSvmModel svm_train(std::span<const std::vector<double>> x, std::span<const ClassBin> labels, SvmLayout layout,
                         const SvmConfig& cfg);

LinearSvmModel svm_train(std::span<const features::FeatureRecord> records, TargetLabel target, SvmLayout layout,
                         const SvmConfig& cfg);

/// Throws DimensionMismatchError when x does not match the model width.
std::array<double, kClassCount> svm_scores(const LinearSvmModel& model, std::span<const double> x);
ClassBin svm_predict(const LinearSvmModel& model, std::span<const double> x);
ClassBin svm_predict(const LinearSvmModel& model, const features::FeatureRecord& record);

/// Argmax with ties toward Low < Medium < High.
ClassBin argmax_score(const std::array<double, kClassCount>& scores);

/// Binary objective of one head, with y_i in {-1, +1}.
double svm_objective(std::span<const double> w, double b, std::span<const std::vector<double>> x,
                     std::span<const int> y, double reg);

/// A subgradient of svm_objective; at differentiable points, the gradient.
/// Returns d/dw followed by d/db.
std::vector<double> svm_subgradient(std::span<const double> w, double b, std::span<const std::vector<double>> x,
                                    std::span<const int> y, double reg);

}  // namespace emorec::baseline
