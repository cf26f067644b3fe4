#include "emorec/pipeline.h"

#include "emorec/io.h"

#include <algorithm>
#include <set>
#include <sstream>

namespace emorec::pipeline {

using nlohmann::json;

namespace {

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, const std::string& ctx) {
    if (!j.is_object()) throw SchemaError(ctx + " must be a JSON object");
    for (const auto& [key, _] : j.items())
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw SchemaError(ctx + ": unknown field '" + key + "'");
}

template <typename T>
bool read_opt(const json& j, const char* key, T& out, const std::string& ctx) {
    if (!j.contains(key)) return false;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw SchemaError(ctx + ": field '" + key + "' has the wrong type (" + e.what() + ")");
    }
    return true;
}

bool read_path(const json& j, const char* key, fs::path& out, const std::string& ctx) {
    std::string s;
    if (!read_opt(j, key, s, ctx)) return false;
    out = s;
    return true;
}

void read_signal(const json& j, signal::SignalConfig& c) {
    const std::string ctx = "manifest signal";
    check_keys(j, {"blink_pad_ms", "max_loss_fraction", "screen_width_px", "screen_height_px", "screen_width_cm",
                   "viewing_distance_cm"},
               ctx);
    read_opt(j, "blink_pad_ms", c.blink_pad_ms, ctx);
    read_opt(j, "max_loss_fraction", c.max_loss_fraction, ctx);
    read_opt(j, "screen_width_px", c.screen_width_px, ctx);
    read_opt(j, "screen_height_px", c.screen_height_px, ctx);
    read_opt(j, "screen_width_cm", c.screen_width_cm, ctx);
    read_opt(j, "viewing_distance_cm", c.viewing_distance_cm, ctx);
}

void read_events(const json& j, events::EventConfig& c) {
    const std::string ctx = "manifest events";
    check_keys(j, {"dispersion_threshold_deg", "min_fixation_ms", "velocity_threshold_deg_s"}, ctx);
    read_opt(j, "dispersion_threshold_deg", c.dispersion_threshold_deg, ctx);
    read_opt(j, "min_fixation_ms", c.min_fixation_ms, ctx);
    read_opt(j, "velocity_threshold_deg_s", c.velocity_threshold_deg_s, ctx);
}

void read_point(const json& j, const char* key, Point2& p, const std::string& ctx) {
    std::vector<double> v;
    if (!read_opt(j, key, v, ctx)) return;
    if (v.size() != 2) throw SchemaError(ctx + ": field '" + key + "' must hold two numbers");
    p = {v[0], v[1]};
}

void read_roi(const json& j, roi::RoiConfig& c) {
    const std::string ctx = "manifest roi";
    check_keys(j, {"margin_fraction", "offset", "scale", "per_fixation"}, ctx);
    read_opt(j, "margin_fraction", c.margin_fraction, ctx);
    read_point(j, "offset", c.offset, ctx);
    read_point(j, "scale", c.scale, ctx);
    read_opt(j, "per_fixation", c.per_fixation, ctx);
}

void read_synth(const json& j, dataset::SynthConfig& c, bool& pinned) {
    const std::string ctx = "manifest synth";
    check_keys(j, {"n_participants", "trials_per_participant", "seed", "personality_coupling", "stimulus_coupling",
                   "gaze_noise", "rating_noise", "blink_rate_hz", "heavy_loss_probability", "sample_rate",
                   "landmark_fps"},
               ctx);
    read_opt(j, "n_participants", c.n_participants, ctx);
    read_opt(j, "trials_per_participant", c.trials_per_participant, ctx);
    pinned = read_opt(j, "seed", c.seed, ctx);
    read_opt(j, "personality_coupling", c.personality_coupling, ctx);
    read_opt(j, "stimulus_coupling", c.stimulus_coupling, ctx);
    read_opt(j, "gaze_noise", c.gaze_noise, ctx);
    read_opt(j, "rating_noise", c.rating_noise, ctx);
    read_opt(j, "blink_rate_hz", c.blink_rate_hz, ctx);
    read_opt(j, "heavy_loss_probability", c.heavy_loss_probability, ctx);
    read_opt(j, "sample_rate", c.sample_rate, ctx);
    read_opt(j, "landmark_fps", c.landmark_fps, ctx);
}

void read_model(const json& j, net::ModelConfig& c) {
    const std::string ctx = "manifest model";
    check_keys(j, {"lstm_hidden", "personality_width", "stimulus_width", "environment_width", "fusion_width",
                   "dropout_rate"},
               ctx);
    read_opt(j, "lstm_hidden", c.lstm_hidden, ctx);
    read_opt(j, "personality_width", c.personality_width, ctx);
    read_opt(j, "stimulus_width", c.stimulus_width, ctx);
    read_opt(j, "environment_width", c.environment_width, ctx);
    read_opt(j, "fusion_width", c.fusion_width, ctx);
    read_opt(j, "dropout_rate", c.dropout_rate, ctx);
}

void read_train(const json& j, net::TrainConfig& c, bool& pinned) {
    const std::string ctx = "manifest train";
    check_keys(j, {"learning_rate", "weight_decay", "max_epochs", "patience", "batch_size", "noise_sigma", "seed"},
               ctx);
    read_opt(j, "learning_rate", c.learning_rate, ctx);
    read_opt(j, "weight_decay", c.weight_decay, ctx);
    read_opt(j, "max_epochs", c.max_epochs, ctx);
    read_opt(j, "patience", c.patience, ctx);
    read_opt(j, "batch_size", c.batch_size, ctx);
    read_opt(j, "noise_sigma", c.noise_sigma, ctx);
    pinned = read_opt(j, "seed", c.seed, ctx);
}

void read_split(const json& j, dataset::SplitSpec& c, bool& pinned) {
    const std::string ctx = "manifest split";
    check_keys(j, {"train_fraction", "val_fraction", "test_fraction", "seed", "subject_independent"}, ctx);
    read_opt(j, "train_fraction", c.train_fraction, ctx);
    read_opt(j, "val_fraction", c.val_fraction, ctx);
    read_opt(j, "test_fraction", c.test_fraction, ctx);
    pinned = read_opt(j, "seed", c.seed, ctx);
    read_opt(j, "subject_independent", c.subject_independent, ctx);
}

void read_grid(const json& j, net::GridSpec& g) {
    const std::string ctx = "manifest grid";
    check_keys(j, {"learning_rates", "dropout_rates", "weight_decays"}, ctx);
    read_opt(j, "learning_rates", g.learning_rates, ctx);
    read_opt(j, "dropout_rates", g.dropout_rates, ctx);
    read_opt(j, "weight_decays", g.weight_decays, ctx);
}

void read_svm(const json& j, baseline::SvmConfig& c, std::string& layout, bool& pinned) {
    const std::string ctx = "manifest svm";
    check_keys(j, {"reg_strength", "epochs", "seed", "layout"}, ctx);
    read_opt(j, "reg_strength", c.reg_strength, ctx);
    read_opt(j, "epochs", c.epochs, ctx);
    pinned = read_opt(j, "seed", c.seed, ctx);
    read_opt(j, "layout", layout, ctx);
}

std::string results_stem(TargetLabel target, std::string_view variant) {
    return std::string(to_string(target)) + "_" + std::string(variant);
}

ResultRow make_row(std::string label, const eval::ConfusionMatrix& cm, std::optional<double> lr,
                   std::optional<double> dropout) {
    ResultRow row;
    row.label = std::move(label);
    row.f1 = eval::per_class_f1(cm);
    row.macro_f1 = eval::macro_f1(row.f1);
    row.learning_rate = lr;
    row.dropout = dropout;
    return row;
}

std::vector<features::FeatureRecord> load_features(const Manifest& m) {
    const auto path = m.features();
    if (!fs::exists(path)) throw IoError("feature file not found: " + path.string());
    return io::read_feature_csv(path);
}

std::vector<signal::SessionRecording> load_sidecars(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IoError("sessions directory not found: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::vector<signal::SessionRecording> out;
    for (const auto& f : files) out.push_back(io::read_session_json(f).session);
    return out;
}

}  // namespace

// --- manifest --------------------------------------------------------------

fs::path Manifest::resolve(const fs::path& p) const { return p.is_absolute() ? p : base_dir / p; }

void Manifest::set_seed(std::uint64_t s) {
    seed = s;
    if (!synth_seed_pinned) synth.seed = Rng::derive_seed(s, "synth");
    if (!split_seed_pinned) split.seed = Rng::derive_seed(s, "split");
    if (!train_seed_pinned) train.seed = Rng::derive_seed(s, "train");
    if (!svm_seed_pinned) svm.seed = Rng::derive_seed(s, "svm");
}

Manifest manifest_from_json(const json& j, const fs::path& base_dir) {
    const std::string ctx = "manifest";
    check_keys(j, {"seed", "paths", "signal", "events", "roi", "synth", "model", "train", "split", "grid", "svm",
                   "feature_set", "target", "threads"},
               ctx);
    Manifest m;
    m.base_dir = base_dir.empty() ? fs::path(".") : base_dir;
    if (j.contains("paths")) {
        const auto& p = j.at("paths");
        check_keys(p, {"sessions", "landmarks", "ratings", "out", "features"}, "manifest paths");
        read_path(p, "sessions", m.sessions_dir, "manifest paths");
        read_path(p, "landmarks", m.landmarks_dir, "manifest paths");
        read_path(p, "ratings", m.ratings_file, "manifest paths");
        read_path(p, "out", m.out_dir, "manifest paths");
        fs::path features;
        if (read_path(p, "features", features, "manifest paths")) m.features_file = features;
    }
    if (j.contains("signal")) read_signal(j.at("signal"), m.signal);
    if (j.contains("events")) read_events(j.at("events"), m.events);
    if (j.contains("roi")) read_roi(j.at("roi"), m.roi);
    if (j.contains("synth")) read_synth(j.at("synth"), m.synth, m.synth_seed_pinned);
    if (j.contains("model")) read_model(j.at("model"), m.model);
    if (j.contains("train")) read_train(j.at("train"), m.train, m.train_seed_pinned);
    if (j.contains("split")) read_split(j.at("split"), m.split, m.split_seed_pinned);
    if (j.contains("grid")) read_grid(j.at("grid"), m.grid);
    if (j.contains("svm")) read_svm(j.at("svm"), m.svm, m.svm_layout, m.svm_seed_pinned);
    read_opt(j, "feature_set", m.feature_set, ctx);
    std::string target;
    if (read_opt(j, "target", target, ctx)) m.target = parse_target(target);
    read_opt(j, "threads", m.threads, ctx);
    std::uint64_t seed = 0;
    read_opt(j, "seed", seed, ctx);
    m.set_seed(seed);

    m.synth.geometry = m.signal;
    m.signal.validate();
    m.events.validate();
    m.synth.validate();
    m.model.validate();
    m.split.validate();
    m.svm.validate();
    net::parse_feature_set(m.feature_set);
    baseline::parse_svm_layout(m.svm_layout);
    return m;
}

Manifest load_manifest(const fs::path& path) {
    const auto text = io::read_text(path);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SchemaError(path.string() + ": invalid JSON: " + e.what());
    }
    return manifest_from_json(j, path.parent_path());
}

// --- feature extraction ----------------------------------------------------

features::TrialSequence trial_sequence(const signal::TrialWindow& trial, double pupil_baseline,
                                       std::span<const roi::LandmarkFrame> frames, const Manifest& m) {
    std::vector<roi::RegionSet> regions;
    regions.reserve(frames.size());
    for (const auto& f : frames) regions.push_back(roi::build_regions(f, m.roi));
    const auto corrected = signal::correct_pupil(trial, pupil_baseline);
    const auto ev = events::detect_events(corrected, m.events, m.signal);
    const auto labels = roi::label_samples(corrected, frames, regions, m.roi);
    return features::build_sequence(corrected, ev, labels);
}

FeatureRun extract_features(const std::vector<signal::SessionRecording>& sessions,
                            const std::map<std::string, std::vector<roi::LandmarkFrame>>& landmarks,
                            const std::vector<dataset::EmotionRating>& ratings, const Manifest& m) {
    m.signal.validate();
    m.events.validate();

    std::map<std::pair<std::string, std::string>, const dataset::EmotionRating*> rating_index;
    for (const auto& r : ratings) rating_index[{r.participant_id, r.trial_id}] = &r;

    // Regions depend only on the clip, so they are shared across participants.
    std::map<std::string, std::vector<roi::RegionSet>> regions_by_clip;
    auto regions_for = [&](const std::string& clip) -> const std::vector<roi::RegionSet>& {
        auto it = regions_by_clip.find(clip);
        if (it != regions_by_clip.end()) return it->second;
        std::vector<roi::RegionSet> sets;
        for (const auto& f : landmarks.at(clip)) sets.push_back(roi::build_regions(f, m.roi));
        return regions_by_clip.emplace(clip, std::move(sets)).first->second;
    };

    FeatureRun run;
    for (const auto& session : sessions) {
        auto drop = [&](const signal::TrialWindow& t, std::string reason) {
            run.dropped.push_back({session.participant_id, t.trial_id, std::move(reason)});
        };

        signal::SessionRecording cleaned = session;
        cleaned.trials.clear();
        for (const auto& trial : session.trials) {
            if (!landmarks.contains(trial.clip_id)) {
                drop(trial, "no landmarks for clip " + trial.clip_id);
                continue;
            }
            if (!rating_index.contains({session.participant_id, trial.trial_id})) {
                drop(trial, "no rating");
                continue;
            }
            try {
                auto filtered = signal::filter_quality(trial, m.signal);
                if (filtered.loss_fraction > m.signal.max_loss_fraction) {
                    drop(trial, "loss fraction " + io::fixed(filtered.loss_fraction, 3) + " exceeds " +
                                    io::shortest(m.signal.max_loss_fraction));
                    continue;
                }
                cleaned.trials.push_back(signal::normalize_gaze(filtered.trial, m.signal));
            } catch (const EmptyTrialError& e) {
                drop(trial, e.what());
            }
        }
        if (cleaned.trials.empty()) continue;

        const auto baseline = signal::pupil_baseline_or_fallback(cleaned);
        if (baseline.fallback) ++run.baseline_fallbacks;

        features::FeatureRecord base;
        base.participant_id = session.participant_id;
        base.personality = features::scale_personality(session.personality.raw);
        base.environment = {session.environment.lux, session.environment.temp};

        for (const auto& trial : cleaned.trials) {
            try {
                const auto corrected = signal::correct_pupil(trial, baseline.value);
                const auto ev = events::detect_events(corrected, m.events, m.signal);
                const auto& frames = landmarks.at(trial.clip_id);
                const auto labels = roi::label_samples(corrected, frames, regions_for(trial.clip_id), m.roi);
                auto rec = base;
                rec.trial_id = trial.trial_id;
                rec.sequence = features::build_sequence(corrected, ev, labels);
                rec.stimulus = features::one_hot_stimulus(trial.stimulus_emotion);
                const auto* rating = rating_index.at({session.participant_id, trial.trial_id});
                for (auto t : kAllTargets) rec.labels[index_of(t)] = dataset::bin_rating(rating->value(t));
                run.records.push_back(std::move(rec));
            } catch (const EmptyTrialError& e) {
                drop(trial, e.what());
            }
        }
    }
    return run;
}

// --- results table ---------------------------------------------------------

std::string format_results_csv(const std::vector<ResultRow>& rows) {
    std::string out = "label,F1_low,F1_medium,F1_high,macro_F1,learning_rate,dropout\n";
    for (const auto& r : rows) {
        out += r.label;
        for (double f : r.f1.f1) out += "," + io::fixed(f, 4);
        out += "," + io::fixed(r.macro_f1, 4);
        out += "," + (r.learning_rate ? io::shortest(*r.learning_rate) : std::string("N/A"));
        out += "," + (r.dropout ? io::shortest(*r.dropout) : std::string("N/A"));
        out += "\n";
    }
    return out;
}

// --- splits ----------------------------------------------------------------

dataset::SplitIndices split_for(const Manifest& m, const std::vector<features::FeatureRecord>& records,
                                TargetLabel target) {
    auto spec = m.split;
    spec.stratify_on = target;
    return dataset::split_records(records, spec);
}

std::vector<features::FeatureRecord> select_split(const std::vector<features::FeatureRecord>& records,
                                                  const dataset::SplitIndices& idx, SplitName split) {
    if (split == SplitName::All) return records;
    const auto& which = split == SplitName::Train ? idx.train : split == SplitName::Val ? idx.val : idx.test;
    std::vector<features::FeatureRecord> out;
    out.reserve(which.size());
    for (auto i : which) out.push_back(records[i]);
    return out;
}

SplitName parse_split_name(std::string_view s) {
    if (s == "train") return SplitName::Train;
    if (s == "val") return SplitName::Val;
    if (s == "test") return SplitName::Test;
    if (s == "all") return SplitName::All;
    throw ValidationError("unknown split '" + std::string(s) + "' (expected train, val, test or all)");
}

std::string_view to_string(SplitName s) {
    switch (s) {
        case SplitName::Train: return "train";
        case SplitName::Val: return "val";
        case SplitName::Test: return "test";
        case SplitName::All: return "all";
    }
    return "?";
}

// --- commands --------------------------------------------------------------

SynthOutcome cmd_synth(const Manifest& m) {
    const auto data = dataset::synth_generate(m.synth);
    SynthOutcome out;
    out.files = io::write_synth_dataset(data, m.sessions(), m.landmarks(), m.ratings());
    for (const auto& s : data.sessions) out.trials += s.trials.size();
    return out;
}

FeaturesOutcome cmd_features(const Manifest& m, std::ostream& log) {
    const auto sessions = io::load_sessions(m.sessions());
    const auto landmarks = io::load_landmarks(m.landmarks());
    const auto ratings = io::read_ratings_csv(m.ratings());
    const auto run = extract_features(sessions, landmarks, ratings, m);

    FeaturesOutcome out;
    out.features_file = m.features();
    out.drop_log = m.out() / "drop_log.csv";
    out.rows = run.records.size();
    out.dropped = run.dropped.size();
    io::write_text(out.features_file, io::format_feature_csv(run.records));

    std::string drops = "participant_id,trial_id,reason\n";
    for (const auto& d : run.dropped) {
        log << "dropped " << d.participant_id << "/" << d.trial_id << ": " << d.reason << "\n";
        std::string reason = d.reason;
        std::replace(reason.begin(), reason.end(), ',', ';');
        drops += d.participant_id + "," + d.trial_id + "," + reason + "\n";
    }
    io::write_text(out.drop_log, drops);
    return out;
}

TrainOutcome cmd_train(const Manifest& m, TargetLabel target, net::FeatureSet feature_set) {
    const auto records = load_features(m);
    const auto idx = split_for(m, records, target);
    const auto train_set = select_split(records, idx, SplitName::Train);
    const auto val_set = select_split(records, idx, SplitName::Val);
    const auto test_set = select_split(records, idx, SplitName::Test);

    auto tc = m.train;
    tc.target = target;
    const auto mc = net::apply_feature_set(m.model, feature_set);

    TrainOutcome out;
    out.checkpoint = net::train(train_set, val_set, mc, tc);
    const auto stem = results_stem(target, net::to_string(feature_set));
    out.row = make_row(stem, net::evaluate(out.checkpoint, test_set), tc.learning_rate, mc.dropout_rate);
    out.checkpoint_file = m.out() / "checkpoints" / (stem + ".json");
    out.results_file = m.out() / "results" / (stem + ".csv");
    net::save_checkpoint(out.checkpoint, out.checkpoint_file);
    io::write_text(out.results_file, format_results_csv({out.row}));
    return out;
}

GridOutcome cmd_gridsearch(const Manifest& m, TargetLabel target, net::FeatureSet feature_set, std::ostream& log) {
    if (m.grid.size() == 0) throw ValidationError("hyperparameter grid is empty");
    const auto records = load_features(m);
    const auto idx = split_for(m, records, target);
    const auto train_set = select_split(records, idx, SplitName::Train);
    const auto val_set = select_split(records, idx, SplitName::Val);

    auto tc = m.train;
    tc.target = target;
    const auto mc = net::apply_feature_set(m.model, feature_set);

    GridOutcome out;
    out.result = net::grid_search(train_set, val_set, m.grid, mc, tc, m.threads);
    const auto stem = results_stem(target, net::to_string(feature_set));

    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < out.result.cells.size(); ++i) {
        const auto& c = out.result.cells[i];
        if (c.ok) order.push_back(i);
        else
            log << "grid cell failed (learning_rate=" << io::shortest(c.learning_rate)
                << " dropout=" << io::shortest(c.dropout) << " weight_decay=" << io::shortest(c.weight_decay)
                << "): " << c.error << "\n";
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& x = out.result.cells[a];
        const auto& y = out.result.cells[b];
        if (x.macro_f1 != y.macro_f1) return x.macro_f1 > y.macro_f1;
        if (x.learning_rate != y.learning_rate) return x.learning_rate < y.learning_rate;
        if (x.dropout != y.dropout) return x.dropout < y.dropout;
        return x.weight_decay < y.weight_decay;
    });
    for (auto i : order) {
        const auto& c = out.result.cells[i];
        out.rows.push_back({stem, c.f1, c.macro_f1, c.learning_rate, c.dropout});
    }
    out.results_file = m.out() / "grid" / (stem + ".csv");
    io::write_text(out.results_file, format_results_csv(out.rows));
    if (out.result.best_checkpoint) {
        out.checkpoint_file = m.out() / "grid" / (stem + "_best.json");
        net::save_checkpoint(*out.result.best_checkpoint, out.checkpoint_file);
    }
    return out;
}

SvmOutcome cmd_svm(const Manifest& m, TargetLabel target, baseline::SvmLayout layout) {
    const auto records = load_features(m);
    const auto idx = split_for(m, records, target);
    auto train_set = select_split(records, idx, SplitName::Train);
    // The linear baseline has no early stopping, so validation data joins training.
    const auto val_set = select_split(records, idx, SplitName::Val);
    train_set.insert(train_set.end(), val_set.begin(), val_set.end());
    const auto test_set = select_split(records, idx, SplitName::Test);

    SvmOutcome out;
    out.model = baseline::svm_train(train_set, target, layout, m.svm);
    std::vector<ClassBin> truth, pred;
    for (const auto& r : test_set) {
        truth.push_back(r.label(target));
        pred.push_back(baseline::svm_predict(out.model, r));
    }
    const auto stem = results_stem(target, "svm-" + std::string(baseline::to_string(layout)));
    out.row = make_row(stem, eval::confusion(truth, pred), std::nullopt, std::nullopt);
    out.results_file = m.out() / "results" / (stem + ".csv");
    io::write_text(out.results_file, format_results_csv({out.row}));
    return out;
}

std::map<TargetLabel, double> rating_agreement(const std::vector<signal::SessionRecording>& sessions,
                                               const std::vector<dataset::EmotionRating>& ratings) {
    std::map<std::pair<std::string, std::string>, std::string> clip_of;
    for (const auto& s : sessions)
        for (const auto& t : s.trials) clip_of[{s.participant_id, t.trial_id}] = t.clip_id;
    std::map<TargetLabel, double> out;
    for (auto target : kAllTargets) {
        std::map<std::string, std::vector<ClassBin>> by_clip;
        for (const auto& r : ratings) {
            const auto it = clip_of.find({r.participant_id, r.trial_id});
            if (it == clip_of.end()) continue;
            by_clip[it->second].push_back(dataset::bin_rating(r.value(target)));
        }
        if (!by_clip.empty()) out[target] = dataset::agreement(by_clip);
    }
    return out;
}

EvalOutcome cmd_eval(const Manifest& m, const fs::path& checkpoint_file, SplitName split) {
    const auto ckpt_text = io::read_text(checkpoint_file);
    json ckpt_json;
    try {
        ckpt_json = json::parse(ckpt_text);
    } catch (const json::parse_error& e) {
        throw SchemaError(checkpoint_file.string() + ": invalid JSON: " + e.what());
    }
    const auto ckpt = net::checkpoint_from_json(ckpt_json);
    const auto target = ckpt.train_config.target;

    const auto records = load_features(m);
    const auto idx = split_for(m, records, target);
    const auto subset = select_split(records, idx, split);
    const auto cm = net::evaluate(ckpt, subset);
    const auto f1 = eval::per_class_f1(cm);

    json confusion = json::array();
    for (const auto& row : cm.counts) confusion.push_back(row);
    json agreement = json::object();
    for (const auto& [t, v] : rating_agreement(load_sidecars(m.sessions()), io::read_ratings_csv(m.ratings())))
        agreement[std::string(to_string(t))] = v;

    EvalOutcome out;
    out.report = json{
        {"target", std::string(to_string(target))},
        {"split", std::string(to_string(split))},
        {"n_examples", cm.total()},
        {"confusion_matrix", confusion},
        {"per_class_f1", {{"low", f1.f1[0]}, {"medium", f1.f1[1]}, {"high", f1.f1[2]}}},
        {"degenerate", {{"low", f1.degenerate[0]}, {"medium", f1.degenerate[1]}, {"high", f1.degenerate[2]}}},
        {"macro_f1", eval::macro_f1(f1)},
        {"agreement", agreement},
        {"model",
         {{"checkpoint", checkpoint_file.filename().string()},
          {"checkpoint_hash", io::fnv1a_hex(ckpt_text)},
          {"best_epoch", ckpt.best_epoch},
          {"config",
           {{"model", net::model_config_to_json(ckpt.model_config)},
            {"train", net::train_config_to_json(ckpt.train_config)}}}}},
    };
    out.report_file = m.out() / "reports" / (checkpoint_file.stem().string() + "_" + std::string(to_string(split)) + ".json");
    io::write_text(out.report_file, out.report.dump(2) + "\n");
    return out;
}

}  // namespace emorec::pipeline
