#include "emorec/train.h"

#include "support.h"

#include <doctest.h>

#include <cmath>

using namespace emorec;
using namespace emorec::net;

namespace {

std::vector<double> flat(const ModelParams& p) {
    std::vector<double> out;
    p.for_each([&](std::string_view, const Tensor& t) { out.insert(out.end(), t.values.begin(), t.values.end()); });
    return out;
}

// Mean gradient of the weighted loss over a batch, eval mode.
ModelParams batch_gradient(const Model& model, std::span<const features::FeatureRecord> batch, TargetLabel target,
                           const dataset::ClassWeights& w) {
    auto grad = ModelParams::zeros(model.config);
    for (const auto& r : batch) backward(model, fused_forward(model, r, {}), r.label(target), w, grad);
    grad.for_each([&](std::string_view, Tensor& t) {
        for (auto& v : t.values) v /= static_cast<double>(batch.size());
    });
    return grad;
}

ModelConfig small_model() {
    ModelConfig cfg;
    cfg.lstm_hidden = 12;
    cfg.fusion_width = 16;
    cfg.dropout_rate = 0.2;
    return cfg;
}

TrainConfig quick_train(std::size_t epochs, double lr = 5e-3) {
    TrainConfig cfg;
    cfg.max_epochs = epochs;
    cfg.patience = epochs;
    cfg.learning_rate = lr;
    cfg.seed = 7;
    return cfg;
}

}  // namespace

TEST_CASE("the model overfits 200 separable trials") {
    const auto data = testing::separable_records(200, 1);
    auto cfg = quick_train(200);
    cfg.patience = 200;
    std::size_t epochs = 0;
    TrainHooks hooks;
    hooks.on_epoch = [&](const EpochRecord& r, const ModelParams&) { epochs = r.epoch; };
    const auto ckpt = train(data, data, ModelConfig{}, cfg, hooks);
    CHECK(epochs <= 200);
    const double f1 = eval::macro_f1(evaluate(ckpt, data));
    CHECK(f1 >= 0.95);

    const auto pred = predict_all(ckpt, data);
    std::size_t hit = 0;
    for (std::size_t i = 0; i < data.size(); ++i) hit += pred[i] == data[i].label(cfg.target);
    CHECK(static_cast<double>(hit) / static_cast<double>(data.size()) >= 0.95);
}

TEST_CASE("a frozen validation metric stops training at epoch patience + 1") {
    const auto data = testing::separable_records(60, 2);
    auto cfg = quick_train(200);
    cfg.patience = 10;
    std::vector<std::vector<double>> snapshots;
    TrainHooks hooks;
    hooks.val_metric = [](std::size_t, const Model&) { return 0.5; };
    hooks.on_epoch = [&](const EpochRecord&, const ModelParams& p) { snapshots.push_back(flat(p)); };
    const auto ckpt = train(data, data, small_model(), cfg, hooks);
    CHECK(ckpt.history.size() == 11);
    CHECK(ckpt.history.back().epoch == 11);
    CHECK(ckpt.best_epoch == 1);
    CHECK(flat(ckpt.params) == snapshots.front());
    CHECK(flat(ckpt.params) != snapshots.back());
}

TEST_CASE("early stopping returns the best epoch, not the last") {
    const auto data = testing::separable_records(60, 3);
    auto cfg = quick_train(200);
    cfg.patience = 4;
    const std::vector<double> metric{0.1, 0.3, 0.2, 0.6, 0.6, 0.5, 0.59, 0.1, 0.9};
    std::vector<std::vector<double>> snapshots;
    TrainHooks hooks;
    hooks.val_metric = [&](std::size_t epoch, const Model&) { return metric.at(epoch - 1); };
    hooks.on_epoch = [&](const EpochRecord&, const ModelParams& p) { snapshots.push_back(flat(p)); };
    const auto ckpt = train(data, data, small_model(), cfg, hooks);
    // Epoch 4 is best; a tie at 5 is not an improvement; 4 more epochs without one end the run.
    CHECK(ckpt.best_epoch == 4);
    CHECK(ckpt.history.size() == 8);
    CHECK(flat(ckpt.params) == snapshots[3]);
    for (const auto& h : ckpt.history) CHECK(h.val_macro_f1 <= ckpt.history[ckpt.best_epoch - 1].val_macro_f1);
}

TEST_CASE("training is bitwise reproducible for a fixed seed") {
    const auto data = testing::separable_records(80, 4);
    const auto cfg = quick_train(5);
    const auto a = train(data, data, small_model(), cfg);
    const auto b = train(data, data, small_model(), cfg);
    CHECK(flat(a.params) == flat(b.params));
    CHECK(format_checkpoint(a) == format_checkpoint(b));
    auto other = cfg;
    other.seed = 8;
    CHECK(flat(train(data, data, small_model(), other).params) != flat(a.params));
}

TEST_CASE("loss on a fixed batch does not increase at small learning rates") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto raw = testing::separable_records(64, 40 + seed);
        const auto scalers = features::fit_scalers(raw);
        std::vector<features::FeatureRecord> batch;
        for (std::size_t i = 0; i < 32; ++i) batch.push_back(features::apply_scalers(raw[i], scalers));
        std::vector<ClassBin> y;
        for (const auto& r : batch) y.push_back(r.label(TargetLabel::PerceivedValence));
        const auto w = dataset::class_weights(y);

        auto cfg = small_model();
        cfg.dropout_rate = 0.0;
        auto model = init_model(cfg, seed);
        AdamW opt(model.params);
        double prev = dataset_loss(model, batch, TargetLabel::PerceivedValence, w);
        // Twenty full-batch updates, well past one epoch's worth on this set.
        for (int step = 0; step < 20; ++step) {
            opt.step(model.params, batch_gradient(model, batch, TargetLabel::PerceivedValence, w), 1e-4, 1e-4);
            const double now = dataset_loss(model, batch, TargetLabel::PerceivedValence, w);
            CHECK(now <= prev);
            prev = now;
        }
    }
}

TEST_CASE("gradient vanishes at the optimum of a one-example dataset") {
    Rng rng(12);
    auto rec = testing::random_record(rng);
    rec.labels[0] = ClassBin::High;
    auto cfg = small_model();
    cfg.dropout_rate = 0.0;
    auto model = init_model(cfg, 12);
    AdamW opt(model.params);
    const std::vector<features::FeatureRecord> one{rec};
    dataset::ClassWeights w;
    double norm = 1.0;
    for (int step = 0; step < 20000 && norm >= 1e-6; ++step) {
        const auto g = batch_gradient(model, one, TargetLabel::PerceivedValence, w);
        norm = 0.0;
        for (double v : flat(g)) norm += v * v;
        norm = std::sqrt(norm);
        opt.step(model.params, g, 1e-2, 0.0);
    }
    CHECK(norm < 1e-6);
}

TEST_CASE("checkpoints round-trip exactly and reject mismatched shapes") {
    const auto data = testing::separable_records(40, 5);
    const auto ckpt = train(data, data, small_model(), quick_train(3));
    const auto text = format_checkpoint(ckpt);
    const auto back = checkpoint_from_json(nlohmann::json::parse(text));
    CHECK(flat(back.params) == flat(ckpt.params));
    CHECK(back.best_epoch == ckpt.best_epoch);
    CHECK(back.history.size() == ckpt.history.size());
    CHECK(back.scalers.channels.size() == ckpt.scalers.channels.size());
    CHECK(back.model_config.lstm_hidden == 12);
    CHECK(format_checkpoint(back) == text);

    const auto dir = testing::scratch_dir("ckpt");
    save_checkpoint(ckpt, dir / "c.json");
    CHECK(flat(load_checkpoint(dir / "c.json").params) == flat(ckpt.params));

    auto j = nlohmann::json::parse(text);
    j["config"]["model"]["lstm_hidden"] = 13;
    CHECK_THROWS_AS(checkpoint_from_json(j), DimensionMismatchError);
    auto k = nlohmann::json::parse(text);
    k["config"]["model"]["include_personality"] = false;
    CHECK_THROWS_AS(checkpoint_from_json(k), DimensionMismatchError);
    CHECK_THROWS_AS(load_checkpoint(dir / "missing.json"), IoError);
}

TEST_CASE("predictions follow the argmax with ties toward Low") {
    CHECK(argmax_class(std::vector<double>{0.2, 0.5, 0.3}) == ClassBin::Medium);
    CHECK(argmax_class(std::vector<double>{1.0 / 3, 1.0 / 3, 1.0 / 3}) == ClassBin::Low);
    const auto data = testing::separable_records(40, 6);
    const auto ckpt = train(data, data, small_model(), quick_train(2));
    const auto p = predict(ckpt, data[0]);
    CHECK(p.probs[0] + p.probs[1] + p.probs[2] == doctest::Approx(1.0));
    CHECK(p.label == argmax_class(p.probs));
}

TEST_CASE("feature sets switch the branches") {
    for (auto fs : {FeatureSet::Eye, FeatureSet::EyePersonality, FeatureSet::EyeStimulus,
                    FeatureSet::EyePersonalityStimulus, FeatureSet::EyeNoEnv})
        CHECK(parse_feature_set(to_string(fs)) == fs);
    const auto eye = apply_feature_set({}, FeatureSet::Eye);
    CHECK_FALSE(eye.include_personality);
    CHECK_FALSE(eye.include_stimulus);
    CHECK(eye.include_environment);
    const auto all = apply_feature_set({}, FeatureSet::EyePersonalityStimulus);
    CHECK(all.include_personality);
    CHECK(all.include_stimulus);
    const auto no_env = apply_feature_set({}, FeatureSet::EyeNoEnv);
    CHECK_FALSE(no_env.include_environment);
    CHECK_FALSE(no_env.include_personality);
    CHECK_THROWS_AS(parse_feature_set("eye+gaze"), ValidationError);
}

TEST_CASE("grid search") {
    const auto train_set = testing::separable_records(90, 7);
    const auto val_set = testing::separable_records(45, 8);
    auto base = quick_train(25);
    base.patience = 25;

    SUBCASE("the default grid holds the union of learning rates") {
        const auto g = default_grid();
        CHECK(g.learning_rates.size() == 8);
        CHECK(g.dropout_rates == std::vector<double>{0.2, 0.3, 0.5});
        CHECK(g.size() == 24);
    }
    SUBCASE("a singleton grid returns its only configuration") {
        const GridSpec g{{3e-3}, {0.3}, {1e-4}};
        const auto r = grid_search(train_set, val_set, g, small_model(), base);
        REQUIRE(r.best.has_value());
        CHECK(r.best_train.learning_rate == 3e-3);
        CHECK(r.best_model.dropout_rate == 0.3);
        CHECK(r.cells.size() == 1);
        REQUIRE(r.best_checkpoint.has_value());
    }
    SUBCASE("the only workable learning rate wins") {
        const GridSpec g{{1e-9, 5e-3, 1e-8}, {0.2}, {1e-4}};
        const auto r = grid_search(train_set, val_set, g, small_model(), base);
        REQUIRE(r.best.has_value());
        CHECK(r.best_train.learning_rate == 5e-3);
        CHECK(r.cells[*r.best].macro_f1 > 0.9);
    }
    SUBCASE("failed cells are dropped from the count") {
        const GridSpec g{{5e-3, 1e300}, {0.2, 0.3}, {1e-4}};
        const auto r = grid_search(train_set, val_set, g, small_model(), base);
        CHECK(r.failures() == 2);
        std::size_t ok = 0;
        for (const auto& c : r.cells) ok += c.ok;
        CHECK(ok == g.size() - r.failures());
        for (const auto& c : r.cells)
            if (!c.ok) CHECK_FALSE(c.error.empty());
    }
    SUBCASE("ties go to the lower learning rate, then the lower dropout") {
        const GridSpec g{{1e-2, 5e-3}, {0.3, 0.2}, {1e-4}};
        const auto r = grid_search(train_set, val_set, g, small_model(), base);
        REQUIRE(r.best.has_value());
        double top = 0;
        for (const auto& c : r.cells) top = std::max(top, c.macro_f1);
        const auto& best = r.cells[*r.best];
        CHECK(best.macro_f1 == top);
        for (const auto& c : r.cells) {
            if (c.macro_f1 != top) continue;
            CHECK(best.learning_rate <= c.learning_rate);
            if (c.learning_rate == best.learning_rate) CHECK(best.dropout <= c.dropout);
        }
    }
    SUBCASE("threads do not change the result") {
        const GridSpec g{{5e-3, 1e-3}, {0.2, 0.5}, {1e-4}};
        const auto a = grid_search(train_set, val_set, g, small_model(), base, 1);
        const auto b = grid_search(train_set, val_set, g, small_model(), base, 3);
        REQUIRE(a.cells.size() == b.cells.size());
        for (std::size_t i = 0; i < a.cells.size(); ++i) CHECK(a.cells[i].macro_f1 == b.cells[i].macro_f1);
        CHECK(a.best == b.best);
    }
}

TEST_CASE("train config validation") {
    TrainConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.learning_rate = 0;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg = {};
    cfg.batch_size = 0;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
}
