#include "emorec/train.h"

#include "emorec/io.h"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <map>
#include <mutex>
#include <thread>

namespace emorec::net {

using nlohmann::json;

namespace {

std::vector<features::FeatureRecord> scale_all(std::span<const features::FeatureRecord> records,
                                               const features::ScalerParams& scalers) {
    std::vector<features::FeatureRecord> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(features::apply_scalers(r, scalers));
    return out;
}

std::vector<ClassBin> labels_of(std::span<const features::FeatureRecord> records, TargetLabel t) {
    std::vector<ClassBin> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.label(t));
    return out;
}

std::vector<ClassBin> predict_scaled(const Model& model, std::span<const features::FeatureRecord> scaled) {
    std::vector<ClassBin> out;
    out.reserve(scaled.size());
    for (const auto& r : scaled) out.push_back(argmax_class(fused_forward(model, r, {}).probs));
    return out;
}

std::string describe(const ModelConfig& m, const TrainConfig& t) {
    return "learning_rate=" + io::shortest(t.learning_rate) + " dropout=" + io::shortest(m.dropout_rate) +
           " weight_decay=" + io::shortest(t.weight_decay) + " seed=" + std::to_string(t.seed);
}

template <typename T>
T field(const json& j, const char* key, const std::string& ctx) {
    if (!j.is_object() || !j.contains(key)) throw SchemaError(ctx + ": missing field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw SchemaError(ctx + ": field '" + key + "' has the wrong type (" + e.what() + ")");
    }
}

std::string encode_doubles(const std::vector<double>& v) {
    std::vector<unsigned char> bytes(v.size() * 8);
    for (std::size_t i = 0; i < v.size(); ++i) {
        const auto u = std::bit_cast<std::uint64_t>(v[i]);
        for (int b = 0; b < 8; ++b) bytes[i * 8 + b] = static_cast<unsigned char>(u >> (8 * b));
    }
    return io::base64_encode(bytes);
}

std::vector<double> decode_doubles(const std::string& text, std::size_t expected, const std::string& name) {
    const auto bytes = io::base64_decode(text);
    if (bytes.size() != expected * 8)
        throw DimensionMismatchError("parameter '" + name + "' holds " + std::to_string(bytes.size() / 8) +
                                     " values, expected " + std::to_string(expected));
    std::vector<double> v(expected);
    for (std::size_t i = 0; i < expected; ++i) {
        std::uint64_t u = 0;
        for (int b = 0; b < 8; ++b) u |= static_cast<std::uint64_t>(bytes[i * 8 + b]) << (8 * b);
        v[i] = std::bit_cast<double>(u);
    }
    return v;
}

std::string shape_text(const std::vector<std::size_t>& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
    return out + "]";
}

}  // namespace

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
        throw ValidationError("learning_rate must be positive");
    if (!(weight_decay >= 0.0)) throw ValidationError("weight_decay must be non-negative");
    if (patience < 1) throw ValidationError("patience must be at least 1");
    if (max_epochs < 1) throw ValidationError("max_epochs must be at least 1");
    if (batch_size < 1) throw ValidationError("batch_size must be at least 1");
    if (!(noise_sigma >= 0.0)) throw ValidationError("noise_sigma must be non-negative");
}

// --- optimizer -------------------------------------------------------------

AdamW::AdamW(const ModelParams& shape_like, double beta1, double beta2, double eps)
    : m_(shape_like.count(), 0.0), v_(shape_like.count(), 0.0), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void AdamW::step(ModelParams& params, const ModelParams& grads, double lr, double weight_decay) {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    std::vector<const Tensor*> gs;
    grads.for_each([&](std::string_view, const Tensor& g) { gs.push_back(&g); });
    std::size_t slot = 0, k = 0;
    params.for_each([&](std::string_view, Tensor& p) {
        const auto& g = gs.at(slot++)->values;
        for (std::size_t i = 0; i < p.values.size(); ++i, ++k) {
            m_[k] = beta1_ * m_[k] + (1.0 - beta1_) * g[i];
            v_[k] = beta2_ * v_[k] + (1.0 - beta2_) * g[i] * g[i];
            const double mh = m_[k] / c1, vh = v_[k] / c2;
            p.values[i] -= lr * (mh / (std::sqrt(vh) + eps_) + weight_decay * p.values[i]);
        }
    });
}

double dataset_loss(const Model& model, std::span<const features::FeatureRecord> records, TargetLabel target,
                    const dataset::ClassWeights& weights) {
    double total = 0.0;
    for (const auto& r : records) total += loss_weighted_ce(fused_forward(model, r, {}).probs, r.label(target), weights);
    return total;
}

// --- training --------------------------------------------------------------

Checkpoint train(std::span<const features::FeatureRecord> train_set, std::span<const features::FeatureRecord> val_set,
                 const ModelConfig& model_cfg, const TrainConfig& train_cfg, const TrainHooks& hooks) {
    model_cfg.validate();
    train_cfg.validate();
    if (train_set.empty()) throw ValidationError("training set is empty");
    if (val_set.empty()) throw ValidationError("validation set is empty");

    Checkpoint ckpt;
    ckpt.model_config = model_cfg;
    ckpt.train_config = train_cfg;
    ckpt.scalers = features::fit_scalers(train_set);
    const auto train_scaled = scale_all(train_set, ckpt.scalers);
    const auto val_scaled = scale_all(val_set, ckpt.scalers);
    const auto target = train_cfg.target;
    const auto weights = dataset::class_weights(labels_of(train_set, target));
    const auto val_truth = labels_of(val_set, target);

    Model model = init_model(model_cfg, train_cfg.seed);
    AdamW opt(model.params);
    auto shuffle_rng = Rng::substream(train_cfg.seed, "shuffle");
    auto noise_rng = Rng::substream(train_cfg.seed, "noise");
    const ForwardOptions train_opts{Mode::Train, train_cfg.noise_sigma, &noise_rng};

    std::vector<std::size_t> order(train_scaled.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    double best_f1 = -std::numeric_limits<double>::infinity();
    std::size_t since_best = 0;
    ckpt.params = model.params;

    for (std::size_t epoch = 1; epoch <= train_cfg.max_epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double total = 0.0;
        for (std::size_t start = 0; start < order.size(); start += train_cfg.batch_size) {
            const std::size_t stop = std::min(order.size(), start + train_cfg.batch_size);
            auto grad = ModelParams::zeros(model_cfg);
            for (std::size_t k = start; k < stop; ++k) {
                const auto& rec = train_scaled[order[k]];
                const auto pass = fused_forward(model, rec, train_opts);
                total += loss_weighted_ce(pass.probs, rec.label(target), weights);
                backward(model, pass, rec.label(target), weights, grad);
            }
            const double inv = 1.0 / static_cast<double>(stop - start);
            grad.for_each([&](std::string_view, Tensor& g) {
                for (auto& v : g.values) v *= inv;
            });
            opt.step(model.params, grad, train_cfg.learning_rate, train_cfg.weight_decay);
        }
        EpochRecord rec{epoch, total / static_cast<double>(order.size()), 0.0};
        bool finite = std::isfinite(rec.train_loss);
        model.params.for_each([&](std::string_view, const Tensor& t) { finite = finite && t.all_finite(); });
        if (!finite)
            throw NumericError("training diverged at epoch " + std::to_string(epoch) + " (" +
                               describe(model_cfg, train_cfg) + ")");

        rec.val_macro_f1 = hooks.val_metric
                               ? hooks.val_metric(epoch, model)
                               : eval::macro_f1(eval::confusion(val_truth, predict_scaled(model, val_scaled)));
        ckpt.history.push_back(rec);
        if (hooks.on_epoch) hooks.on_epoch(rec, model.params);

        if (rec.val_macro_f1 > best_f1) {
            best_f1 = rec.val_macro_f1;
            ckpt.best_epoch = epoch;
            ckpt.params = model.params;
            since_best = 0;
        } else if (++since_best >= train_cfg.patience) {
            break;
        }
    }
    return ckpt;
}

Prediction predict(const Checkpoint& ckpt, const features::FeatureRecord& record) {
    const auto scaled = features::apply_scalers(record, ckpt.scalers);
    const auto pass = fused_forward(ckpt.model(), scaled, {});
    return {argmax_class(pass.probs), pass.probs};
}

std::vector<ClassBin> predict_all(const Checkpoint& ckpt, std::span<const features::FeatureRecord> records) {
    const auto model = ckpt.model();
    std::vector<ClassBin> out;
    out.reserve(records.size());
    for (const auto& r : records)
        out.push_back(argmax_class(fused_forward(model, features::apply_scalers(r, ckpt.scalers), {}).probs));
    return out;
}

eval::ConfusionMatrix evaluate(const Checkpoint& ckpt, std::span<const features::FeatureRecord> records) {
    return eval::confusion(labels_of(records, ckpt.train_config.target), predict_all(ckpt, records));
}

// --- feature sets ----------------------------------------------------------

namespace {
constexpr std::array<std::pair<FeatureSet, std::string_view>, 5> kFeatureSets = {{
    {FeatureSet::Eye, "eye"},
    {FeatureSet::EyePersonality, "eye+personality"},
    {FeatureSet::EyeStimulus, "eye+stimulus"},
    {FeatureSet::EyePersonalityStimulus, "eye+personality+stimulus"},
    {FeatureSet::EyeNoEnv, "eye-no-env"},
}};
}  // namespace

std::string_view to_string(FeatureSet fs) {
    for (const auto& [k, name] : kFeatureSets)
        if (k == fs) return name;
    return "?";
}

FeatureSet parse_feature_set(std::string_view name) {
    for (const auto& [k, n] : kFeatureSets)
        if (n == name) return k;
    std::string known;
    for (const auto& [k, n] : kFeatureSets) known += (known.empty() ? "" : ", ") + std::string(n);
    throw ValidationError("unknown feature set '" + std::string(name) + "' (expected one of: " + known + ")");
}

ModelConfig apply_feature_set(ModelConfig cfg, FeatureSet fs) {
    cfg.include_personality = fs == FeatureSet::EyePersonality || fs == FeatureSet::EyePersonalityStimulus;
    cfg.include_stimulus = fs == FeatureSet::EyeStimulus || fs == FeatureSet::EyePersonalityStimulus;
    cfg.include_environment = fs != FeatureSet::EyeNoEnv;
    return cfg;
}

// --- grid search -----------------------------------------------------------

GridSpec default_grid() {
    return {{1e-3, 1e-4, 1e-5, 2e-4, 3e-4, 3.5e-4, 4e-4, 7e-4}, {0.2, 0.3, 0.5}, {1e-4}};
}

std::size_t GridResult::failures() const {
    return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [](const GridCell& c) { return !c.ok; }));
}

GridResult grid_search(std::span<const features::FeatureRecord> train_set,
                       std::span<const features::FeatureRecord> val_set, const GridSpec& grid,
                       const ModelConfig& base_model, const TrainConfig& base_train, std::size_t threads) {
    if (grid.size() == 0) throw ValidationError("hyperparameter grid is empty");

    GridResult result;
    for (double lr : grid.learning_rates)
        for (double dr : grid.dropout_rates)
            for (double wd : grid.weight_decays) {
                GridCell cell;
                cell.learning_rate = lr;
                cell.dropout = dr;
                cell.weight_decay = wd;
                result.cells.push_back(cell);
            }
    std::vector<std::optional<Checkpoint>> ckpts(result.cells.size());

    auto run_cell = [&](std::size_t i) {
        auto& cell = result.cells[i];
        auto mc = base_model;
        mc.dropout_rate = cell.dropout;
        auto tc = base_train;
        tc.learning_rate = cell.learning_rate;
        tc.weight_decay = cell.weight_decay;
        try {
            auto ckpt = train(train_set, val_set, mc, tc);
            cell.f1 = eval::per_class_f1(evaluate(ckpt, val_set));
            cell.macro_f1 = eval::macro_f1(cell.f1);
            cell.best_epoch = ckpt.best_epoch;
            cell.ok = true;
            ckpts[i] = std::move(ckpt);
        } catch (const Error& e) {
            cell.ok = false;
            cell.error = e.what();
        }
    };

    const std::size_t n = result.cells.size();
    const std::size_t workers = std::clamp<std::size_t>(threads, 1, n);
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) run_cell(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t i; (i = next.fetch_add(1)) < n;) run_cell(i);
            });
        for (auto& t : pool) t.join();
    }

    for (std::size_t i = 0; i < n; ++i) {
        const auto& c = result.cells[i];
        if (!c.ok) continue;
        if (!result.best) {
            result.best = i;
            continue;
        }
        const auto& b = result.cells[*result.best];
        const bool better =
            c.macro_f1 > b.macro_f1 ||
            (c.macro_f1 == b.macro_f1 &&
             (c.learning_rate < b.learning_rate ||
              (c.learning_rate == b.learning_rate &&
               (c.dropout < b.dropout || (c.dropout == b.dropout && c.weight_decay < b.weight_decay)))));
        if (better) result.best = i;
    }
    if (result.best) {
        result.best_checkpoint = std::move(ckpts[*result.best]);
        result.best_model = result.best_checkpoint->model_config;
        result.best_train = result.best_checkpoint->train_config;
    }
    return result;
}

// --- checkpoint files ------------------------------------------------------

json model_config_to_json(const ModelConfig& c) {
    return json{{"lstm_hidden", c.lstm_hidden},
                {"personality_width", c.personality_width},
                {"stimulus_width", c.stimulus_width},
                {"environment_width", c.environment_width},
                {"fusion_width", c.fusion_width},
                {"dropout_rate", c.dropout_rate},
                {"include_personality", c.include_personality},
                {"include_stimulus", c.include_stimulus},
                {"include_environment", c.include_environment}};
}

ModelConfig model_config_from_json(const json& j) {
    const std::string ctx = "model config";
    ModelConfig c;
    c.lstm_hidden = field<std::size_t>(j, "lstm_hidden", ctx);
    c.personality_width = field<std::size_t>(j, "personality_width", ctx);
    c.stimulus_width = field<std::size_t>(j, "stimulus_width", ctx);
    c.environment_width = field<std::size_t>(j, "environment_width", ctx);
    c.fusion_width = field<std::size_t>(j, "fusion_width", ctx);
    c.dropout_rate = field<double>(j, "dropout_rate", ctx);
    c.include_personality = field<bool>(j, "include_personality", ctx);
    c.include_stimulus = field<bool>(j, "include_stimulus", ctx);
    c.include_environment = field<bool>(j, "include_environment", ctx);
    c.validate();
    return c;
}

json train_config_to_json(const TrainConfig& c) {
    return json{{"learning_rate", c.learning_rate}, {"weight_decay", c.weight_decay},
                {"max_epochs", c.max_epochs},       {"patience", c.patience},
                {"batch_size", c.batch_size},       {"noise_sigma", c.noise_sigma},
                {"seed", c.seed},                   {"target", std::string(to_string(c.target))}};
}

TrainConfig train_config_from_json(const json& j) {
    const std::string ctx = "train config";
    TrainConfig c;
    c.learning_rate = field<double>(j, "learning_rate", ctx);
    c.weight_decay = field<double>(j, "weight_decay", ctx);
    c.max_epochs = field<std::size_t>(j, "max_epochs", ctx);
    c.patience = field<std::size_t>(j, "patience", ctx);
    c.batch_size = field<std::size_t>(j, "batch_size", ctx);
    c.noise_sigma = field<double>(j, "noise_sigma", ctx);
    c.seed = field<std::uint64_t>(j, "seed", ctx);
    c.target = parse_target(field<std::string>(j, "target", ctx));
    c.validate();
    return c;
}

json checkpoint_to_json(const Checkpoint& ckpt) {
    json scalers = json::array();
    for (const auto& s : ckpt.scalers.channels)
        scalers.push_back({{"name", s.name},
                           {"method", std::string(features::to_string(s.method))},
                           {"a", s.a},
                           {"b", s.b},
                           {"constant", s.constant}});
    json history = json::array();
    for (const auto& h : ckpt.history)
        history.push_back({{"epoch", h.epoch}, {"train_loss", h.train_loss}, {"val_macro_f1", h.val_macro_f1}});
    json params = json::array();
    ckpt.params.for_each([&](std::string_view name, const Tensor& t) {
        params.push_back({{"name", std::string(name)}, {"shape", t.shape}, {"data", encode_doubles(t.values)}});
    });
    return json{{"format", "emorec-checkpoint"},
                {"version", 1},
                {"config", {{"model", model_config_to_json(ckpt.model_config)},
                            {"train", train_config_to_json(ckpt.train_config)}}},
                {"scalers", scalers},
                {"history", history},
                {"best_epoch", ckpt.best_epoch},
                {"params", params}};
}

Checkpoint checkpoint_from_json(const json& j) {
    const std::string ctx = "checkpoint";
    if (field<std::string>(j, "format", ctx) != "emorec-checkpoint") throw SchemaError("not a checkpoint file");
    Checkpoint c;
    const auto cfg = field<json>(j, "config", ctx);
    c.model_config = model_config_from_json(field<json>(cfg, "model", ctx + " config"));
    c.train_config = train_config_from_json(field<json>(cfg, "train", ctx + " config"));

    for (const auto& s : field<json>(j, "scalers", ctx)) {
        features::ChannelScaler sc;
        sc.name = field<std::string>(s, "name", ctx + " scaler");
        sc.method = features::parse_scale_method(field<std::string>(s, "method", ctx + " scaler"));
        sc.a = field<double>(s, "a", ctx + " scaler");
        sc.b = field<double>(s, "b", ctx + " scaler");
        sc.constant = field<bool>(s, "constant", ctx + " scaler");
        c.scalers.channels.push_back(sc);
    }
    if (c.scalers.channels.size() != features::kScalerSlots)
        throw DimensionMismatchError("checkpoint has " + std::to_string(c.scalers.channels.size()) +
                                     " scaler slots, expected " + std::to_string(features::kScalerSlots));
    for (std::size_t s = 0; s < features::kScalerSlots; ++s)
        if (c.scalers.channels[s].name != features::slot_name(s))
            throw DimensionMismatchError("checkpoint scaler slot " + std::to_string(s) + " is '" +
                                         c.scalers.channels[s].name + "', expected '" + features::slot_name(s) + "'");

    for (const auto& h : field<json>(j, "history", ctx))
        c.history.push_back({field<std::size_t>(h, "epoch", ctx + " history"),
                             field<double>(h, "train_loss", ctx + " history"),
                             field<double>(h, "val_macro_f1", ctx + " history")});
    c.best_epoch = field<std::size_t>(j, "best_epoch", ctx);

    std::map<std::string, json> stored;
    for (const auto& p : field<json>(j, "params", ctx)) stored[field<std::string>(p, "name", ctx + " params")] = p;
    c.params = ModelParams::zeros(c.model_config);
    std::size_t used = 0;
    c.params.for_each([&](std::string_view name, Tensor& t) {
        const auto it = stored.find(std::string(name));
        if (it == stored.end()) throw DimensionMismatchError("checkpoint is missing parameter '" + std::string(name) + "'");
        const auto shape = field<std::vector<std::size_t>>(it->second, "shape", ctx + " " + std::string(name));
        if (shape != t.shape)
            throw DimensionMismatchError("parameter '" + std::string(name) + "' has shape " + shape_text(shape) +
                                         ", expected " + shape_text(t.shape));
        t.values = decode_doubles(field<std::string>(it->second, "data", ctx + " " + std::string(name)), t.size(),
                                  std::string(name));
        ++used;
    });
    if (used != stored.size())
        throw DimensionMismatchError("checkpoint holds " + std::to_string(stored.size()) + " parameter tensors, config expects " +
                                     std::to_string(used));
    return c;
}

std::string format_checkpoint(const Checkpoint& ckpt) { return checkpoint_to_json(ckpt).dump(2) + "\n"; }

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    io::write_text(path, format_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    const auto text = io::read_text(path);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SchemaError(path.string() + ": invalid JSON: " + e.what());
    }
    return checkpoint_from_json(j);
}

}  // namespace emorec::net
