#pragma once

#include "emorec/dataset.h"
#include "emorec/eval.h"
#include "emorec/features.h"
#include "emorec/net.h"

#include <filesystem>
#include <functional>
#include <json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace emorec::net {

struct TrainConfig {
    double learning_rate = 1e-3;
    double weight_decay = 1e-4;
    std::size_t max_epochs = 200;
    std::size_t patience = 10;
    std::size_t batch_size = 32;
    double noise_sigma = 0.02;
    std::uint64_t seed = 0;
    TargetLabel target = TargetLabel::PerceivedValence;

    void validate() const;
};

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_macro_f1 = 0.0;
};

struct Checkpoint {
    ModelConfig model_config;
    TrainConfig train_config;
    features::ScalerParams scalers;
    ModelParams params;
    std::vector<EpochRecord> history;
    std::size_t best_epoch = 0;

    Model model() const { return {model_config, params}; }
};

/// Called after every epoch with the record and the current parameters.
/// Used by tests to observe training; normally left empty.
using EpochHook = std::function<void(const EpochRecord&, const ModelParams&)>;

/// Overrides the validation metric, for tests that need a controlled signal.
using ValMetric = std::function<double(std::size_t epoch, const Model&)>;

struct TrainHooks {
    EpochHook on_epoch;
    ValMetric val_metric;
};

/// Fits scalers on `train_set`, then runs mini-batch AdamW with early
/// stopping on validation macro F1. Records are unscaled. The checkpoint
/// holds the parameters of the best epoch.
Checkpoint train(std::span<const features::FeatureRecord> train_set, std::span<const features::FeatureRecord> val_set,
                 const ModelConfig& model_cfg, const TrainConfig& train_cfg, const TrainHooks& hooks = {});

/// One optimizer step; moments persist across calls.
class AdamW {
public:
    explicit AdamW(const ModelParams& shape_like, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
    void step(ModelParams& params, const ModelParams& grads, double lr, double weight_decay);

private:
    std::vector<double> m_, v_;
    double beta1_, beta2_, eps_;
    std::size_t t_ = 0;
};

/// Sum of the weighted loss over `records` (already scaled), eval mode.
double dataset_loss(const Model& model, std::span<const features::FeatureRecord> records, TargetLabel target,
                    const dataset::ClassWeights& weights);

struct Prediction {
    ClassBin label = ClassBin::Low;
    std::array<double, kClassCount> probs{};
};

/// Applies the checkpoint's scalers, then an eval-mode forward pass.
Prediction predict(const Checkpoint& ckpt, const features::FeatureRecord& record);
std::vector<ClassBin> predict_all(const Checkpoint& ckpt, std::span<const features::FeatureRecord> records);

/// Predicts the checkpoint's target on `records` and scores against their labels.
eval::ConfusionMatrix evaluate(const Checkpoint& ckpt, std::span<const features::FeatureRecord> records);

// --- feature sets ----------------------------------------------------------

enum class FeatureSet { Eye, EyePersonality, EyeStimulus, EyePersonalityStimulus, EyeNoEnv };

std::string_view to_string(FeatureSet fs);
/// Throws ValidationError listing the accepted names.
FeatureSet parse_feature_set(std::string_view name);
/// Sets the three branch switches. Every set keeps the eye-tracking branch;
/// all but eye-no-env keep the environment branch.
ModelConfig apply_feature_set(ModelConfig cfg, FeatureSet fs);

// --- grid search -----------------------------------------------------------

struct GridSpec {
    std::vector<double> learning_rates;
    std::vector<double> dropout_rates;
    std::vector<double> weight_decays;

    std::size_t size() const { return learning_rates.size() * dropout_rates.size() * weight_decays.size(); }
};

/// Learning rates {1e-3, 1e-4, 1e-5} joined with {2e-4, 3e-4, 3.5e-4, 4e-4, 7e-4};
/// dropout {0.2, 0.3, 0.5}; weight decay {1e-4}.
GridSpec default_grid();

struct GridCell {
    double learning_rate = 0.0;
    double dropout = 0.0;
    double weight_decay = 0.0;
    bool ok = false;
    std::string error;
    eval::F1Scores f1;
    double macro_f1 = 0.0;
    std::size_t best_epoch = 0;
};

struct GridResult {
    std::vector<GridCell> cells;  // grid order: learning rate, dropout, weight decay
    std::optional<std::size_t> best;
    ModelConfig best_model;
    TrainConfig best_train;
    std::optional<Checkpoint> best_checkpoint;

    std::size_t failures() const;
};

/// Trains one model per grid cell and scores it on `val`. Failed cells are
/// recorded and skipped. Ties on macro F1 go to the lower learning rate, then
/// the lower dropout. `threads` > 1 evaluates cells concurrently.
GridResult grid_search(std::span<const features::FeatureRecord> train_set,
                       std::span<const features::FeatureRecord> val_set, const GridSpec& grid,
                       const ModelConfig& base_model, const TrainConfig& base_train, std::size_t threads = 1);

// --- checkpoint files ------------------------------------------------------

nlohmann::json checkpoint_to_json(const Checkpoint& ckpt);
/// Validates parameter shapes against the stored config.
Checkpoint checkpoint_from_json(const nlohmann::json& j);
std::string format_checkpoint(const Checkpoint& ckpt);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

nlohmann::json model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);
nlohmann::json train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

}  // namespace emorec::net
