// emorec: command-line front end for the emotion-recognition pipeline.
//
//   emorec synth      --manifest m.json
//   emorec features   --manifest m.json
//   emorec train      --manifest m.json --target perceived_valence --feature-set eye+stimulus
//   emorec gridsearch --manifest m.json --target felt_arousal
//   emorec svm        --manifest m.json --target perceived_valence --layout stimulus
//   emorec eval       --manifest m.json --checkpoint out/checkpoints/x.json --split test
//
// Exit codes: 0 success, 2 validation or usage error, 3 numeric failure, 4 I/O failure.

#include "emorec/io.h"
#include "emorec/pipeline.h"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace {

using namespace emorec;

constexpr int kExitValidation = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

struct Options {
    std::string manifest;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::string> feature_set;
    std::optional<std::string> target;
    std::optional<std::string> layout;
    std::optional<std::size_t> threads;
    std::string checkpoint;
    std::string split = "test";
};

pipeline::Manifest resolve_manifest(const Options& o) {
    auto m = pipeline::load_manifest(o.manifest);
    if (o.seed) m.set_seed(*o.seed);
    if (o.out) m.out_dir = std::filesystem::absolute(*o.out);
    if (o.feature_set) m.feature_set = *o.feature_set;
    if (o.target) m.target = parse_target(*o.target);
    if (o.layout) m.svm_layout = *o.layout;
    if (o.threads) m.threads = *o.threads;
    return m;
}

void print_row(const pipeline::ResultRow& r) {
    std::cout << pipeline::format_results_csv({r});
}

int run(CLI::App& app, const Options& o) {
    const auto m = resolve_manifest(o);
    const auto fs = net::parse_feature_set(m.feature_set);

    if (app.got_subcommand("synth")) {
        const auto out = pipeline::cmd_synth(m);
        std::cout << "wrote " << out.files.size() << " files, " << out.trials << " trials\n";
    } else if (app.got_subcommand("features")) {
        const auto out = pipeline::cmd_features(m, std::cerr);
        std::cout << "wrote " << out.rows << " feature rows to " << out.features_file.string() << " ("
                  << out.dropped << " trials dropped)\n";
    } else if (app.got_subcommand("train")) {
        const auto out = pipeline::cmd_train(m, m.target, fs);
        std::cout << "checkpoint " << out.checkpoint_file.string() << " (best epoch " << out.checkpoint.best_epoch
                  << ")\n";
        print_row(out.row);
    } else if (app.got_subcommand("gridsearch")) {
        const auto out = pipeline::cmd_gridsearch(m, m.target, fs, std::cerr);
        std::cout << "results " << out.results_file.string() << " (" << out.rows.size() << " rows, "
                  << out.result.failures() << " failed)\n";
        std::cout << pipeline::format_results_csv(out.rows);
    } else if (app.got_subcommand("svm")) {
        const auto out = pipeline::cmd_svm(m, m.target, baseline::parse_svm_layout(m.svm_layout));
        print_row(out.row);
    } else if (app.got_subcommand("eval")) {
        const auto out = pipeline::cmd_eval(m, o.checkpoint, pipeline::parse_split_name(o.split));
        std::cout << "report " << out.report_file.string() << " macro_F1="
                  << io::fixed(out.report.at("macro_f1").get<double>(), 4) << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Personality-aware multimodal emotion recognition pipeline"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("-m,--manifest", o.manifest, "Pipeline manifest (JSON)")->required();
        sub->add_option("--seed", o.seed, "Global seed; overrides the manifest");
        sub->add_option("--out", o.out, "Output directory; overrides the manifest");
        sub->add_option("--threads", o.threads, "Worker threads for grid search");
    };
    auto add_model = [&](CLI::App* sub) {
        sub->add_option("--target", o.target,
                        "perceived_valence, perceived_arousal, felt_valence or felt_arousal");
        sub->add_option("--feature-set", o.feature_set,
                        "eye, eye+personality, eye+stimulus, eye+personality+stimulus or eye-no-env");
    };

    add_common(app.add_subcommand("synth", "Generate a synthetic dataset"));
    add_common(app.add_subcommand("features", "Extract the feature CSV from sessions, landmarks and ratings"));
    auto* train = app.add_subcommand("train", "Train one model and score it on the test split");
    add_common(train);
    add_model(train);
    auto* grid = app.add_subcommand("gridsearch", "Search learning rate, dropout and weight decay");
    add_common(grid);
    add_model(grid);
    auto* svm = app.add_subcommand("svm", "Train the linear SVM baseline on static features");
    add_common(svm);
    svm->add_option("--target", o.target, "Rating to predict");
    svm->add_option("--layout", o.layout, "stimulus or stimulus+personality");
    auto* ev = app.add_subcommand("eval", "Write an evaluation report for a checkpoint");
    add_common(ev);
    ev->add_option("--checkpoint", o.checkpoint, "Checkpoint JSON")->required();
    ev->add_option("--split", o.split, "train, val, test or all");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }

    try {
        return run(app, o);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
}
