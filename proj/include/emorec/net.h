#pragma once

#include "emorec/common.h"
#include "emorec/dataset.h"
#include "emorec/features.h"
#include "emorec/rng.h"

#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace emorec::net {

/// Dense row-major array of doubles.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> values;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> dims);

    std::size_t size() const { return values.size(); }
    std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
    std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }
    double& operator()(std::size_t r, std::size_t c) { return values[r * shape[1] + c]; }
    double operator()(std::size_t r, std::size_t c) const { return values[r * shape[1] + c]; }
    bool all_finite() const;
    void fill(double v);
};

enum class Activation { Identity, Relu };

/// y = act(W x + b), W is out x in.
struct DenseParams {
    Tensor weight;
    Tensor bias;

    static DenseParams zeros(std::size_t in, std::size_t out);
    std::size_t in() const { return weight.cols(); }
    std::size_t out() const { return weight.rows(); }
    std::size_t count() const { return weight.size() + bias.size(); }
};

/// Gate blocks are stacked in the order input, forget, candidate, output.
struct LstmParams {
    Tensor w_input;   // 4H x I
    Tensor w_hidden;  // 4H x H
    Tensor bias;      // 4H

    static LstmParams zeros(std::size_t input, std::size_t hidden);
    std::size_t input() const { return w_input.cols(); }
    std::size_t hidden() const { return w_hidden.cols(); }
};

struct ModelConfig {
    std::size_t lstm_hidden = 32;
    std::size_t personality_width = 8;
    std::size_t stimulus_width = 8;
    std::size_t environment_width = 4;
    std::size_t fusion_width = 32;
    double dropout_rate = 0.3;
    bool include_personality = true;
    bool include_stimulus = true;
    bool include_environment = true;

    void validate() const;
    /// Width of the concatenated branch outputs feeding the fusion layer.
    std::size_t fused_width() const;
};

struct ModelParams {
    LstmParams lstm;
    std::optional<DenseParams> personality;
    std::optional<DenseParams> stimulus;
    std::optional<DenseParams> environment;
    DenseParams fusion;
    DenseParams output;

    /// Zero tensors shaped for the config.
    static ModelParams zeros(const ModelConfig& cfg);

    /// Visits every tensor in a fixed order as fn(name, tensor).
    template <typename Fn>
    void for_each(Fn&& fn) {
        visit_impl(*this, fn);
    }
    template <typename Fn>
    void for_each(Fn&& fn) const {
        visit_impl(*this, fn);
    }

    std::size_t count() const;

private:
    template <typename Self, typename Fn>
    static void visit_impl(Self& self, Fn& fn) {
        fn(std::string_view("lstm.w_input"), self.lstm.w_input);
        fn(std::string_view("lstm.w_hidden"), self.lstm.w_hidden);
        fn(std::string_view("lstm.bias"), self.lstm.bias);
        if (self.personality) {
            fn(std::string_view("personality.weight"), self.personality->weight);
            fn(std::string_view("personality.bias"), self.personality->bias);
        }
        if (self.stimulus) {
            fn(std::string_view("stimulus.weight"), self.stimulus->weight);
            fn(std::string_view("stimulus.bias"), self.stimulus->bias);
        }
        if (self.environment) {
            fn(std::string_view("environment.weight"), self.environment->weight);
            fn(std::string_view("environment.bias"), self.environment->bias);
        }
        fn(std::string_view("fusion.weight"), self.fusion.weight);
        fn(std::string_view("fusion.bias"), self.fusion.bias);
        fn(std::string_view("output.weight"), self.output.weight);
        fn(std::string_view("output.bias"), self.output.bias);
    }
};

struct Model {
    ModelConfig config;
    ModelParams params;
};

/// Glorot-uniform weights, zero biases, forget-gate bias 1.
Model init_model(const ModelConfig& cfg, std::uint64_t seed);

/// Parameters owned by one optional branch: its dense layer plus the fusion
/// weights that read its output.
std::size_t branch_parameter_count(const ModelConfig& cfg, std::size_t branch_width, std::size_t input_width);

// --- layers ----------------------------------------------------------------

struct LstmCache {
    std::size_t steps = 0;
    std::size_t input = 0;
    std::size_t hidden = 0;
    std::vector<double> x;       // steps x I
    std::vector<double> gates;   // steps x 4H, post-activation
    std::vector<double> c;       // (steps + 1) x H, row 0 is the zero state
    std::vector<double> h;       // (steps + 1) x H
    std::vector<double> tanh_c;  // steps x H

    std::span<const double> final_hidden() const { return {h.data() + steps * hidden, hidden}; }
};

/// Runs the recurrence over `steps` rows of `seq`.
LstmCache lstm_forward(const LstmParams& p, std::span<const double> seq, std::size_t steps);

/// Backpropagation through time from a gradient on the final hidden state.
/// Accumulates into `grad`; writes the input gradient when d_input is non-empty.
void lstm_backward(const LstmParams& p, const LstmCache& cache, std::span<const double> d_final,
                   LstmParams& grad, std::span<double> d_input = {});

std::vector<double> dense_forward(const DenseParams& p, std::span<const double> x, Activation act);

/// `y` is the forward output. Accumulates into `grad`; writes dx when non-empty.
void dense_backward(const DenseParams& p, std::span<const double> x, std::span<const double> y,
                    std::span<const double> dy, Activation act, DenseParams& grad, std::span<double> dx = {});

std::array<double, kClassCount> softmax(std::span<const double> logits);

// --- fused model -----------------------------------------------------------

enum class Mode { Train, Eval };

struct ForwardOptions {
    Mode mode = Mode::Eval;
    double noise_sigma = 0.0;  // train mode: Gaussian noise on personality and environment inputs
    Rng* rng = nullptr;        // required in train mode when dropout or noise is active
};

struct ForwardPass {
    LstmCache lstm;
    std::vector<double> personality_in, stimulus_in, environment_in;
    std::vector<double> personality_out, stimulus_out, environment_out;
    std::vector<double> fused;         // concatenated branch outputs
    std::vector<double> fusion_out;    // after the rectifier
    std::vector<double> dropout_mask;  // per-unit scale; empty when inactive
    std::vector<double> dropped;       // fusion_out after dropout
    std::vector<double> logits;
    std::array<double, kClassCount> probs{};
    bool valid = false;
};

/// Branches -> concat -> dense + rectifier -> dropout (train only, inverted
/// scaling) -> dense -> softmax. The record must already be scaled.
ForwardPass fused_forward(const Model& model, const features::FeatureRecord& record, const ForwardOptions& opts);

/// -w_label * log(max(p_label, 1e-12)).
double loss_weighted_ce(std::span<const double> probs, ClassBin label, const dataset::ClassWeights& weights);

/// Exact gradient of loss_weighted_ce o fused_forward, accumulated into `grad`.
/// Throws ValidationError if `pass` holds no forward cache.
void backward(const Model& model, const ForwardPass& pass, ClassBin label, const dataset::ClassWeights& weights,
              ModelParams& grad);

/// Ties resolve toward Low < Medium < High.
ClassBin argmax_class(std::span<const double> probs);

}  // namespace emorec::net
