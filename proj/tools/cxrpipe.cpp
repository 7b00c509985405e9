// cxrpipe: command-line front end over the pipeline stages.
//
// Exit codes: 0 success, 1 usage or config error, 2 data/contract error.

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cxr/config.hpp"
#include "cxr/errors.hpp"
#include "cxr/pipeline.hpp"
#include "cxr/resampling.hpp"
#include "cxr/rng.hpp"
#include "cxr/synthetic.hpp"

namespace fs = std::filesystem;
using namespace cxr;

namespace {

std::string one_line(std::string s) {
    std::replace(s.begin(), s.end(), '\n', ' ');
    while (!s.empty() && s.back() == ' ') s.pop_back();
    return s;
}

void require(const std::string& value, const char* flag) {
    if (value.empty()) throw UsageError(std::string("missing required option ") + flag);
}

Split parse_split_flag(const std::string& text) {
    const auto s = parse_split(text);
    if (!s || *s == Split::Unassigned) throw UsageError("--split must be train, val or test, got '" + text + "'");
    return *s;
}

SplitRatios parse_ratios(const std::string& text) {
    std::vector<double> v;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            v.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::logic_error&) {
            throw UsageError("--ratios: '" + item + "' is not a number");
        }
    }
    if (v.size() != 3) throw UsageError("--ratios expects train,val,test");
    return {v[0], v[1], v[2]};
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << text;
}

struct Options {
    // shared
    std::string manifest, out, out_dir, features, model_path, config;
    std::optional<std::uint64_t> seed;

    // ingest / split / preprocess
    std::string root, ratios = "0.8,0.1,0.1";
    std::size_t side = 256;
    double gamma = 0.8;
    bool debug_trace = false;

    // features
    std::string split = "train", kind = "hog";
    std::string eval_split = "test";
    std::size_t feat_side = 128, cell = 8, block = 2, stride = 1, orientations = 9;
    bool signed_gradients = false;

    // resample
    std::string strategy;
    bool absolute = false;
    std::size_t k = 5;

    // train
    std::string model = "svm", kernel = "rbf";
    double C = 1.0, svm_gamma = 0.0, lr = 0.01;
    std::size_t trees = 100, max_depth = 0, epochs = 20, batch = 32, threads = 1;

    // evaluate
    std::string val, test, table;

    // explain
    std::size_t count = 2, grid = 8, samples = 1000, top_k = 10;
    double kernel_width = 0.25, ridge = 1.0;

    // pipeline / compare / synth
    bool force = false;
    std::vector<std::string> reports;
    std::string counts = "100,100,100,100";
    std::size_t synth_side = 64;
    double noise = 15.0;
};

int cmd_ingest(const Options& o) {
    require(o.root, "--root");
    require(o.out, "--out");
    const Manifest m = ingest(o.root);
    m.save(o.out);
    std::cout << "ingested " << m.size() << " images into " << o.out << '\n';
    return 0;
}

int cmd_split(const Options& o) {
    require(o.manifest, "--manifest");
    require(o.out, "--out");
    const std::uint64_t seed = derive_seed(o.seed.value_or(0), "split");
    const Manifest m = split(Manifest::load(o.manifest), parse_ratios(o.ratios), seed);
    m.save(o.out);
    std::cout << "split " << m.size() << " records (train " << filter_split(m, Split::Train).size() << ", val "
              << filter_split(m, Split::Val).size() << ", test " << filter_split(m, Split::Test).size() << ")\n";
    return 0;
}

int cmd_preprocess(const Options& o) {
    require(o.manifest, "--manifest");
    require(o.out_dir, "--out-dir");
    fs::create_directories(o.out_dir);
    const Manifest m = pipeline::preprocess(Manifest::load(o.manifest), o.out_dir, {o.side, o.gamma, o.debug_trace});
    m.save(fs::path(o.out_dir) / "preprocessed.csv");
    std::cout << "enhanced " << m.size() << " images; manifest " << (fs::path(o.out_dir) / "preprocessed.csv").string()
              << '\n';
    return 0;
}

int cmd_features(const Options& o) {
    require(o.manifest, "--manifest");
    require(o.out, "--out");
    features::Extractor ext;
    if (o.kind == "hog") {
        ext.kind = features::Extractor::Kind::Hog;
        ext.hog = {o.cell, o.block, o.stride, o.orientations, o.signed_gradients, 0.2};
    } else if (o.kind == "pixels") {
        ext.kind = features::Extractor::Kind::Pixels;
    } else {
        throw UsageError("--kind must be hog or pixels, got '" + o.kind + "'");
    }
    ext.side = o.feat_side;
    const auto [X, y] = pipeline::extract(Manifest::load(o.manifest), parse_split_flag(o.split), ext);
    features::write_feat(X, o.out);
    features::write_labels(y, features::labels_path(o.out));
    std::cout << "wrote " << X.rows << " x " << X.dim << " features (" << X.descriptor_id << ") to " << o.out << '\n';
    return 0;
}

int cmd_resample(const Options& o) {
    require(o.features, "--features");
    require(o.out, "--out");
    require(o.strategy, "--strategy");
    const auto X = features::read_feat(o.features);
    const auto y = features::read_labels(features::labels_path(o.features));
    resampling::SamplingStrategy strategy;
    if (o.strategy == "smote1" || o.strategy == "smote2") {
        strategy = resampling::preset(o.strategy, y, o.absolute);
    } else {
        try {
            strategy = resampling::SamplingStrategy::parse(o.strategy);
        } catch (const ArgumentError& e) {
            throw UsageError(std::string("--strategy: ") + e.what());
        }
    }
    const auto res = resampling::fit_resample(X, y, strategy, {o.k, derive_seed(o.seed.value_or(0), "resample")});
    for (const auto& w : res.warnings) std::cerr << "warning: " << w << '\n';
    features::write_feat(res.X, o.out);
    features::write_labels(res.y, features::labels_path(o.out));
    std::cout << "resampled " << X.rows << " -> " << res.X.rows << " rows (" << strategy.to_string() << ")\n";
    return 0;
}

int cmd_train(const Options& o, const CLI::App& sub) {
    // Validate the model name first so unsupported models fail as usage errors
    // regardless of the other options.
    std::optional<ModelKind> kind;
    if (sub.count("--model")) kind = parse_model_kind(o.model);
    require(o.features, "--features");
    require(o.out, "--out");

    pipeline::ModelSpec spec;
    if (!o.config.empty()) {
        RunConfig cfg = RunConfig::load(o.config);
        if (o.seed) cfg.override_seed(*o.seed);
        spec = pipeline::model_spec(cfg);
    } else {
        const std::uint64_t seed = derive_seed(o.seed.value_or(0), "model");
        spec.svm.seed = spec.forest.seed = spec.cnn.seed = seed;
    }
    if (kind) spec.kind = *kind;
    if (sub.count("--C")) spec.svm.C = o.C;
    if (sub.count("--kernel")) {
        if (o.kernel == "linear") spec.svm.kernel.type = svm::KernelSpec::Type::Linear;
        else if (o.kernel == "rbf") spec.svm.kernel.type = svm::KernelSpec::Type::Rbf;
        else throw UsageError("--kernel must be linear or rbf");
    }
    if (sub.count("--svm-gamma")) spec.svm.kernel.gamma = o.svm_gamma;
    if (sub.count("--trees")) spec.forest.n_trees = o.trees;
    if (sub.count("--max-depth")) spec.forest.max_depth = o.max_depth;
    if (sub.count("--threads")) spec.forest.threads = o.threads;
    if (sub.count("--epochs")) spec.cnn.epochs = o.epochs;
    if (sub.count("--lr")) spec.cnn.learning_rate = o.lr;
    if (sub.count("--batch-size")) spec.cnn.batch_size = o.batch;

    const auto X = features::read_feat(o.features);
    const auto y = features::read_labels(features::labels_path(o.features));
    save_model(pipeline::train(X, y, spec), o.out);
    std::cout << "trained " << model_kind_name(spec.kind) << " on " << X.rows << " rows; model " << o.out << '\n';
    return 0;
}

int cmd_evaluate(const Options& o) {
    require(o.model_path, "--model");
    require(o.out, "--out");
    if (o.val.empty() && o.test.empty()) throw UsageError("evaluate needs --val and/or --test feature files");
    const Model model = load_model(o.model_path);
    std::vector<pipeline::NamedReport> reports;
    for (const auto& [name, path] : {std::pair<std::string, std::string>{"val", o.val}, {"test", o.test}}) {
        if (path.empty()) continue;
        const auto X = features::read_feat(path);
        const auto y = features::read_labels(features::labels_path(path));
        const auto cm = metrics::confusion(y, pipeline::predict_labels(model, X), kNumClasses);
        reports.push_back({name, metrics::report(cm), cm});
        for (std::size_t c = 0; c < cm.classes; ++c)
            if (reports.back().report.zero_denominator[c])
                std::cerr << "warning: " << name << ": class " << class_name(class_from_index(static_cast<int>(c)))
                          << " has a zero denominator; its precision/recall are scored 0\n";
    }
    write_file(o.out, pipeline::metrics_json(model, reports));
    const std::string table = pipeline::metrics_table(std::string(model_type_name(model_type(model))), reports);
    if (!o.table.empty()) write_file(o.table, table);
    std::cout << table;
    return 0;
}

int cmd_explain(const Options& o) {
    require(o.model_path, "--model");
    require(o.manifest, "--manifest");
    require(o.out_dir, "--out-dir");
    pipeline::ExplainParams p;
    p.count = o.count;
    p.top_k = o.top_k;
    p.lime.grid = o.grid;
    p.lime.num_samples = o.samples;
    p.lime.kernel_width = o.kernel_width;
    p.lime.ridge = o.ridge;
    p.lime.seed = derive_seed(o.seed.value_or(0), "explain");
    const auto written = pipeline::explain_records(load_model(o.model_path), Manifest::load(o.manifest),
                                                   parse_split_flag(o.eval_split), p, o.out_dir);
    std::cout << "wrote " << written.size() << " explanation files to " << o.out_dir << '\n';
    return 0;
}

int cmd_pipeline(const Options& o) {
    require(o.config, "--config");
    RunConfig cfg = RunConfig::load(o.config);
    if (o.seed) cfg.override_seed(*o.seed);
    if (!o.out_dir.empty()) cfg.output_dir = o.out_dir;
    const auto result = pipeline::run_pipeline(cfg, o.force);
    for (const auto& s : result.stages)
        std::cout << (s.cached ? "cached  " : "ran     ") << s.name << '\n';
    std::ifstream table(result.run_dir / "metrics.txt");
    std::cout << table.rdbuf();
    std::cout << "run directory: " << result.run_dir.string() << '\n';
    return 0;
}

int cmd_compare(const Options& o) {
    std::vector<fs::path> paths(o.reports.begin(), o.reports.end());
    const auto table = pipeline::format_comparison(pipeline::compare_runs(paths, o.eval_split));
    if (!o.out.empty()) write_file(o.out, table);
    std::cout << table;
    return 0;
}

int cmd_synth(const Options& o) {
    require(o.out_dir, "--out");
    std::array<std::size_t, kNumClasses> counts{};
    std::stringstream ss(o.counts);
    std::string item;
    std::size_t i = 0;
    while (std::getline(ss, item, ',')) {
        if (i >= counts.size()) throw UsageError("--counts expects four comma-separated values");
        try {
            counts[i++] = std::stoul(item);
        } catch (const std::logic_error&) {
            throw UsageError("--counts: '" + item + "' is not a count");
        }
    }
    if (i != counts.size()) throw UsageError("--counts expects four comma-separated values");
    synthetic::write_corpus(o.out_dir, counts, o.synth_side, o.seed.value_or(0), o.noise);
    std::cout << "wrote synthetic corpus to " << o.out_dir << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Chest X-ray classification pipeline"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");
    Options o;

    auto* ingest_cmd = app.add_subcommand("ingest", "Scan a class-per-directory image tree into a manifest");
    ingest_cmd->add_option("--root", o.root, "dataset root");
    ingest_cmd->add_option("--out", o.out, "manifest CSV to write");

    auto* split_cmd = app.add_subcommand("split", "Stratified train/val/test assignment");
    split_cmd->add_option("--manifest", o.manifest, "input manifest");
    split_cmd->add_option("--out", o.out, "output manifest");
    split_cmd->add_option("--ratios", o.ratios, "train,val,test ratios")->capture_default_str();
    split_cmd->add_option("--seed", o.seed, "master seed");

    auto* pre_cmd = app.add_subcommand("preprocess", "Resize, grayscale and enhance every image");
    pre_cmd->add_option("--manifest", o.manifest, "split manifest");
    pre_cmd->add_option("--out-dir", o.out_dir, "output directory");
    pre_cmd->add_option("--side", o.side, "output side length")->capture_default_str();
    pre_cmd->add_option("--gamma", o.gamma, "power-law exponent")->capture_default_str();
    pre_cmd->add_flag("--debug-trace", o.debug_trace, "also write the intermediate rasters");

    auto* feat_cmd = app.add_subcommand("features", "Extract a feature matrix for one split");
    feat_cmd->add_option("--manifest", o.manifest, "preprocessed manifest");
    feat_cmd->add_option("--split", o.split, "train, val or test")->capture_default_str();
    feat_cmd->add_option("--out", o.out, "FEAT1 file to write");
    feat_cmd->add_option("--kind", o.kind, "hog or pixels")->capture_default_str();
    feat_cmd->add_option("--side", o.feat_side, "resize side before extraction")->capture_default_str();
    feat_cmd->add_option("--cell", o.cell, "HOG cell size")->capture_default_str();
    feat_cmd->add_option("--block", o.block, "HOG block size in cells")->capture_default_str();
    feat_cmd->add_option("--stride", o.stride, "HOG block stride in cells")->capture_default_str();
    feat_cmd->add_option("--orientations", o.orientations, "HOG orientation bins")->capture_default_str();
    feat_cmd->add_flag("--signed", o.signed_gradients, "signed gradients (0-360 degrees)");

    auto* res_cmd = app.add_subcommand("resample", "SMOTE oversampling of a feature matrix");
    res_cmd->add_option("--features", o.features, "input FEAT1 file");
    res_cmd->add_option("--out", o.out, "output FEAT1 file");
    res_cmd->add_option("--strategy", o.strategy, "smote1, smote2, all=N or class=N,...");
    res_cmd->add_flag("--absolute", o.absolute, "use the raw 1200/1500 preset targets");
    res_cmd->add_option("--k", o.k, "neighbours")->capture_default_str();
    res_cmd->add_option("--seed", o.seed, "master seed");

    auto* train_cmd = app.add_subcommand("train", "Train a classifier");
    train_cmd->add_option("--features", o.features, "training FEAT1 file");
    train_cmd->add_option("--model", o.model, "svm, forest or cnn (default svm, or the config's model)");
    train_cmd->add_option("--out", o.out, "model file to write");
    train_cmd->add_option("--config", o.config, "take hyperparameters from a run config");
    train_cmd->add_option("--seed", o.seed, "master seed");
    train_cmd->add_option("--C", o.C, "SVM box constraint");
    train_cmd->add_option("--kernel", o.kernel, "SVM kernel: linear or rbf");
    train_cmd->add_option("--svm-gamma", o.svm_gamma, "RBF gamma (0: 1/dimension)");
    train_cmd->add_option("--trees", o.trees, "forest size");
    train_cmd->add_option("--max-depth", o.max_depth, "tree depth limit (0: none)");
    train_cmd->add_option("--threads", o.threads, "forest training threads");
    train_cmd->add_option("--epochs", o.epochs, "CNN epochs");
    train_cmd->add_option("--lr", o.lr, "CNN learning rate");
    train_cmd->add_option("--batch-size", o.batch, "CNN batch size");

    auto* eval_cmd = app.add_subcommand("evaluate", "Score a model on validation/test features");
    eval_cmd->add_option("--model", o.model_path, "model file");
    eval_cmd->add_option("--val", o.val, "validation FEAT1 file");
    eval_cmd->add_option("--test", o.test, "test FEAT1 file");
    eval_cmd->add_option("--out", o.out, "metrics.json to write");
    eval_cmd->add_option("--table", o.table, "also write the text table here");

    auto* exp_cmd = app.add_subcommand("explain", "LIME overlays for the first images of a split");
    exp_cmd->add_option("--model", o.model_path, "model file");
    exp_cmd->add_option("--manifest", o.manifest, "preprocessed manifest");
    exp_cmd->add_option("--split", o.eval_split, "split to draw images from")->capture_default_str();
    exp_cmd->add_option("--out-dir", o.out_dir, "output directory");
    exp_cmd->add_option("--count", o.count, "images to explain")->capture_default_str();
    exp_cmd->add_option("--grid", o.grid, "superpixel grid")->capture_default_str();
    exp_cmd->add_option("--samples", o.samples, "perturbations")->capture_default_str();
    exp_cmd->add_option("--kernel-width", o.kernel_width, "locality kernel width")->capture_default_str();
    exp_cmd->add_option("--ridge", o.ridge, "ridge penalty")->capture_default_str();
    exp_cmd->add_option("--top-k", o.top_k, "segments to tint")->capture_default_str();
    exp_cmd->add_option("--seed", o.seed, "master seed");

    auto* pipe_cmd = app.add_subcommand("pipeline", "Run every stage from a config file");
    pipe_cmd->add_option("--config", o.config, "run config (INI)");
    pipe_cmd->add_option("--seed", o.seed, "override the master seed and every stage seed");
    pipe_cmd->add_option("--output", o.out_dir, "override the run directory");
    pipe_cmd->add_flag("--force", o.force, "ignore cached stages");

    auto* cmp_cmd = app.add_subcommand("compare", "Tabulate several run.json reports");
    cmp_cmd->add_option("reports", o.reports, "run.json files");
    cmp_cmd->add_option("--split", o.eval_split, "val or test")->capture_default_str();
    cmp_cmd->add_option("--out", o.out, "also write the table here");

    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic striped 4-class corpus");
    synth_cmd->add_option("--out", o.out_dir, "output root");
    synth_cmd->add_option("--counts", o.counts, "images per class")->capture_default_str();
    synth_cmd->add_option("--side", o.synth_side, "image side")->capture_default_str();
    synth_cmd->add_option("--noise", o.noise, "noise sigma")->capture_default_str();
    synth_cmd->add_option("--seed", o.seed, "seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "cxrpipe: error: " << one_line(e.what()) << '\n';
        return 1;
    }

    try {
        if (*ingest_cmd) return cmd_ingest(o);
        if (*split_cmd) return cmd_split(o);
        if (*pre_cmd) return cmd_preprocess(o);
        if (*feat_cmd) return cmd_features(o);
        if (*res_cmd) return cmd_resample(o);
        if (*train_cmd) return cmd_train(o, *train_cmd);
        if (*eval_cmd) return cmd_evaluate(o);
        if (*exp_cmd) return cmd_explain(o);
        if (*pipe_cmd) return cmd_pipeline(o);
        if (*cmp_cmd) return cmd_compare(o);
        if (*synth_cmd) return cmd_synth(o);
    } catch (const UsageError& e) {
        std::cerr << "cxrpipe: error: " << one_line(e.what()) << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "cxrpipe: error: " << one_line(e.what()) << '\n';
        return 2;
    }
    return 1;
}
