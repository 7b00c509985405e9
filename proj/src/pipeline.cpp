#include "cxr/pipeline.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

#include "cxr/digest.hpp"
#include "cxr/errors.hpp"
#include "cxr/image_io.hpp"
#include "cxr/imaging.hpp"
#include "cxr/resampling.hpp"
#include "cxr/rng.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace cxr::pipeline {

namespace {

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << text;
    if (!out) throw DataError("write failure: " + path.string());
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string num(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string fmt2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

}  // namespace

// ---- preprocess

Manifest preprocess(const Manifest& manifest, const fs::path& out_dir, const PreprocessParams& params) {
    if (params.side < 8) throw ArgumentError("preprocess: image side must be >= 8");
    std::vector<SampleRecord> out;
    std::set<std::string> used;
    for (const auto& r : manifest.records()) {
        if (sha256_file(r.path) != r.sha256)
            throw DataError("image changed since ingest (sha256 mismatch): " + r.path.string());
        const fs::path rel =
            fs::path("images") / split_name(r.split) / class_key(r.label) / (r.path.stem().string() + ".png");
        if (!used.insert(rel.string()).second)
            throw DataError("two inputs map to the same enhanced image " + rel.string() + " (duplicate file stem)");
        fs::create_directories(out_dir / rel.parent_path());

        const GrayImage gray = imaging::resize(io::read_gray(r.path), params.side, params.side);
        const imaging::Enhanced e = imaging::enhance(gray, params.gamma);
        io::write_gray_png(e.image, out_dir / rel);
        if (params.debug_trace) {
            const std::pair<const char*, const GrayImage*> trace[] = {
                {"L", &e.trace.laplacian}, {"S", &e.trace.sharpened}, {"B", &e.trace.difference},
                {"G", &e.trace.sobel},     {"M", &e.trace.mask},      {"F", &e.trace.fused}};
            for (const auto& [tag, raster] : trace)
                io::write_gray_png(io::normalize_for_display(*raster),
                                   out_dir / rel.parent_path() / (r.path.stem().string() + "." + tag + ".png"));
        }
        out.push_back({rel, r.label, r.split, sha256_file(out_dir / rel)});
    }
    return Manifest(std::move(out), manifest.seed(), manifest.ratios());
}

// ---- features

std::pair<features::FeatureMatrix, std::vector<int>> extract(const Manifest& manifest, Split which,
                                                             const features::Extractor& extractor) {
    features::FeatureMatrix X;
    X.descriptor_id = extractor.id();
    X.dim = extractor.dimension();
    std::vector<int> y;
    for (const auto& r : filter_split(manifest, which)) {
        X.append(extractor.extract(io::read_gray(r.path)));
        y.push_back(to_index(r.label));
    }
    return {std::move(X), std::move(y)};
}

// ---- training and evaluation

ModelSpec model_spec(const RunConfig& config) {
    ModelSpec s;
    s.kind = config.model;
    s.svm = config.svm;
    s.svm.seed = config.seeds.model;
    s.forest = config.forest;
    s.forest.seed = config.seeds.model;
    s.cnn = config.cnn;
    s.cnn.input_side = config.cnn_side;
    s.cnn.seed = config.seeds.model;
    return s;
}

Model train(const features::FeatureMatrix& X, const std::vector<int>& y, const ModelSpec& spec) {
    if (X.rows == 0) throw DataError("train: empty feature matrix");
    if (y.size() != X.rows)
        throw DimensionError("train: " + std::to_string(X.rows) + " feature rows but " + std::to_string(y.size()) +
                             " labels");
    switch (spec.kind) {
        case ModelKind::Svm: return svm::train_svm(X, y, spec.svm, kNumClasses);
        case ModelKind::Forest: return forest::train_forest(X, y, spec.forest, kNumClasses);
        case ModelKind::Cnn: {
            const auto ext = features::Extractor::parse(X.descriptor_id);
            if (ext.kind != features::Extractor::Kind::Pixels)
                throw DataError("train: the cnn needs pixel features (pixels<N>), got '" + X.descriptor_id + "'");
            cnn::CnnConfig cfg = spec.cnn;
            cfg.input_side = ext.side;
            cfg.n_classes = kNumClasses;
            return cnn::cnn_train(X, y, cfg);
        }
    }
    throw ArgumentError("train: unknown model kind");
}

std::vector<int> predict_labels(const Model& model, const features::FeatureMatrix& X) {
    if (X.descriptor_id != descriptor_id(model))
        throw DataError("features were extracted with '" + X.descriptor_id + "' but the model expects '" +
                        descriptor_id(model) + "'");
    std::vector<int> out(X.rows);
    for (std::size_t i = 0; i < X.rows; ++i) out[i] = predict(model, X.row(i)).label;
    return out;
}

metrics::MetricsReport evaluate(const Model& model, const features::FeatureMatrix& X, const std::vector<int>& y) {
    return metrics::report(metrics::confusion(y, predict_labels(model, X), kNumClasses));
}

namespace {

json report_json(const NamedReport& nr) {
    const auto& r = nr.report;
    json j;
    j["accuracy"] = r.accuracy;
    j["macro_precision"] = r.macro_precision;
    j["macro_recall"] = r.macro_recall;
    j["macro_f1"] = r.macro_f1;
    json per = json::array();
    json warnings = json::array();
    for (std::size_t c = 0; c < r.precision.size(); ++c) {
        const auto name = std::string(class_name(class_from_index(static_cast<int>(c))));
        per.push_back({{"class", name},
                       {"precision", r.precision[c]},
                       {"recall", r.recall[c]},
                       {"f1", r.f1[c]},
                       {"support", r.support[c]},
                       {"zero_denominator", static_cast<bool>(r.zero_denominator[c])}});
        if (r.zero_denominator[c]) warnings.push_back(name + ": zero denominator, precision/recall scored 0");
    }
    j["per_class"] = per;
    json cm = json::array();
    for (std::size_t t = 0; t < nr.confusion.classes; ++t) {
        json row = json::array();
        for (std::size_t p = 0; p < nr.confusion.classes; ++p) row.push_back(nr.confusion.at(t, p));
        cm.push_back(row);
    }
    j["confusion"] = cm;
    j["warnings"] = warnings;
    return j;
}

std::optional<metrics::MetricsReport> report_from_json(const json& j) {
    if (!j.is_object() || !j.contains("accuracy")) return std::nullopt;
    metrics::MetricsReport r;
    r.accuracy = j.at("accuracy").get<double>();
    r.macro_precision = j.at("macro_precision").get<double>();
    r.macro_recall = j.at("macro_recall").get<double>();
    r.macro_f1 = j.at("macro_f1").get<double>();
    for (const auto& c : j.value("per_class", json::array())) {
        r.precision.push_back(c.at("precision").get<double>());
        r.recall.push_back(c.at("recall").get<double>());
        r.f1.push_back(c.at("f1").get<double>());
        r.support.push_back(c.at("support").get<std::uint64_t>());
        r.zero_denominator.push_back(c.at("zero_denominator").get<bool>());
    }
    return r;
}

}  // namespace

std::string metrics_json(const Model& model, const std::vector<NamedReport>& reports) {
    json j;
    j["model"] = std::string(model_type_name(model_type(model)));
    j["descriptor"] = descriptor_id(model);
    for (const auto& nr : reports) j[nr.split] = report_json(nr);
    return j.dump(2) + "\n";
}

std::string metrics_table(const std::string& model_label, const std::vector<NamedReport>& reports) {
    char line[160];
    std::string out;
    std::snprintf(line, sizeof line, "%-20s %9s %10s %7s %5s\n", "Model", "Accuracy", "Precision", "Recall", "F1");
    out += line;
    for (const auto& nr : reports) {
        const auto& r = nr.report;
        const std::string label = model_label + " (" + nr.split + ")";
        std::snprintf(line, sizeof line, "%-20s %9s %10s %7s %5s\n", label.c_str(), fmt2(r.accuracy).c_str(),
                      fmt2(r.macro_precision).c_str(), fmt2(r.macro_recall).c_str(), fmt2(r.macro_f1).c_str());
        out += line;
    }
    return out;
}

// ---- explain

std::vector<fs::path> explain_records(const Model& model, const Manifest& manifest, Split which,
                                      const ExplainParams& params, const fs::path& out_dir) {
    const auto ext = features::Extractor::parse(descriptor_id(model));
    const explain::ImageClassifier classify = [&](const GrayImage& img) {
        return predict(model, ext.extract(img)).scores;
    };
    std::vector<int> targets;
    for (ClassLabel c : kAllClasses) targets.push_back(to_index(c));

    std::vector<fs::path> written;
    const auto records = filter_split(manifest, which);
    const std::size_t n = std::min(params.count, records.size());
    for (std::size_t i = 0; i < n; ++i) {
        const auto& r = records[i];
        const GrayImage img = io::read_gray(r.path);
        explain::LimeParams lime = params.lime;
        lime.seed = derive_seed(params.lime.seed, static_cast<std::uint64_t>(i));
        const auto exps = explain::explain_classes(img, classify, targets, lime);
        const auto seg = explain::segment(img, lime.grid);
        const auto pred = classify(img);

        const fs::path dir = out_dir / class_key(r.label);
        fs::create_directories(dir);
        const std::string stem = r.path.stem().string();

        json j;
        j["image"] = (fs::path(split_name(r.split)) / class_key(r.label) / r.path.filename()).generic_string();
        j["true_class"] = std::string(class_name(r.label));
        j["predicted_class"] = std::string(class_name(class_from_index(argmax(pred))));
        j["scores"] = pred;
        j["seed"] = lime.seed;
        j["params"] = {{"grid", lime.grid},
                       {"num_samples", lime.num_samples},
                       {"kernel_width", lime.kernel_width},
                       {"ridge", lime.ridge},
                       {"top_k", params.top_k},
                       {"fill", lime.fill.kind == explain::FillRule::Kind::Mean ? json("mean") : json(lime.fill.value)}};
        json list = json::array();
        for (const auto& e : exps) {
            const ClassLabel c = class_from_index(e.class_id);
            const fs::path png = dir / (stem + ".explain." + std::string(class_key(c)) + ".png");
            io::write_rgb_png(explain::render_overlay(img, seg, e, params.top_k), png);
            written.push_back(png);
            list.push_back({{"class", std::string(class_name(c))},
                            {"intercept", e.intercept},
                            {"fidelity_r2", e.fidelity_r2},
                            {"top_segments", explain::top_segments(e, params.top_k)},
                            {"segment_weights", e.segment_weights}});
        }
        j["explanations"] = list;
        const fs::path jp = dir / (stem + ".explain.json");
        write_text(jp, j.dump(2) + "\n");
        written.push_back(jp);
    }
    return written;
}

// ---- run directory

RunLock::RunLock(const fs::path& run_dir) : path_(run_dir / ".lock") {
    const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) {
        if (errno == EEXIST)
            throw DataError("run directory is locked by another process: " + path_.string() +
                            " exists (delete it if no run is active)");
        throw DataError("cannot create lock file " + path_.string() + ": " + std::strerror(errno));
    }
    const std::string pid = std::to_string(::getpid()) + "\n";
    [[maybe_unused]] const auto n = ::write(fd, pid.data(), pid.size());
    ::close(fd);
}

RunLock::~RunLock() {
    std::error_code ec;
    fs::remove(path_, ec);
}

namespace {

struct StageRecord {
    std::string input_digest;
    std::vector<std::pair<std::string, std::string>> artifacts;  // relative path, sha256
};

class DigestBuilder {
public:
    DigestBuilder& add(const std::string& key, const std::string& value) {
        text_ += key + "=" + value + "\n";
        return *this;
    }
    DigestBuilder& file(const std::string& key, const fs::path& path) { return add(key, sha256_file(path)); }
    std::string str() const { return sha256_hex(text_); }

private:
    std::string text_;
};

std::string dataset_listing_digest(const fs::path& root) {
    if (!fs::is_directory(root)) throw DataError("dataset root is not a directory: " + root.string());
    std::vector<std::string> lines;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (!e.is_regular_file()) continue;
        const auto mtime = e.last_write_time().time_since_epoch().count();
        lines.push_back(fs::relative(e.path(), root).generic_string() + "|" + std::to_string(e.file_size()) + "|" +
                        std::to_string(mtime));
    }
    std::sort(lines.begin(), lines.end());
    std::string joined = root.string() + "\n";
    for (const auto& l : lines) joined += l + "\n";
    return sha256_hex(joined);
}

std::string spec_string(const ModelSpec& s) {
    std::ostringstream o;
    o.precision(17);
    o << model_kind_name(s.kind) << ';';
    switch (s.kind) {
        case ModelKind::Svm:
            o << "C=" << s.svm.C << ";kernel=" << static_cast<int>(s.svm.kernel.type) << ";gamma=" << s.svm.kernel.gamma
              << ";tol=" << s.svm.tol << ";max_passes=" << s.svm.max_passes << ";max_total=" << s.svm.max_total_passes
              << ";seed=" << s.svm.seed;
            break;
        case ModelKind::Forest:
            o << "trees=" << s.forest.n_trees << ";depth=" << s.forest.max_depth << ";leaf=" << s.forest.min_leaf
              << ";mtry=" << s.forest.features_per_split << ";bootstrap=" << s.forest.bootstrap
              << ";seed=" << s.forest.seed;
            break;
        case ModelKind::Cnn:
            o << "side=" << s.cnn.input_side << ";channels=" << s.cnn.channels[0] << ',' << s.cnn.channels[1] << ','
              << s.cnn.channels[2] << ";hidden=" << s.cnn.hidden << ";padding=" << static_cast<int>(s.cnn.padding)
              << ";lr=" << s.cnn.learning_rate << ";epochs=" << s.cnn.epochs << ";batch=" << s.cnn.batch_size
              << ";seed=" << s.cnn.seed;
            break;
    }
    return o.str();
}

class StageRunner {
public:
    StageRunner(fs::path run_dir, const json& previous, bool force)
        : run_dir_(std::move(run_dir)), previous_(previous), force_(force) {}

    // `body` returns the produced artifact paths relative to the run directory.
    void run(const std::string& name, const std::string& input_digest,
             const std::function<std::vector<fs::path>()>& body) {
        const auto start = std::chrono::steady_clock::now();
        StageRecord rec;
        bool cached = false;
        if (!force_ && reusable(name, input_digest)) {
            cached = true;
            rec.input_digest = input_digest;
            for (const auto& a : previous_["stages"][name]["artifacts"])
                rec.artifacts.emplace_back(a.at("path").get<std::string>(), a.at("sha256").get<std::string>());
        } else {
            rec.input_digest = input_digest;
            for (const auto& rel : body())
                rec.artifacts.emplace_back(rel.generic_string(), sha256_file(run_dir_ / rel));
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        records_.emplace_back(name, std::move(rec));
        outcomes_.push_back({name, cached, secs});
    }

    const std::vector<std::pair<std::string, StageRecord>>& records() const { return records_; }
    const std::vector<StageOutcome>& outcomes() const { return outcomes_; }

private:
    bool reusable(const std::string& name, const std::string& digest) const {
        if (!previous_.is_object() || !previous_.contains("stages")) return false;
        const auto& stages = previous_["stages"];
        if (!stages.contains(name)) return false;
        const auto& st = stages[name];
        if (st.value("input_digest", std::string()) != digest) return false;
        try {
            for (const auto& a : st.at("artifacts")) {
                const fs::path p = run_dir_ / a.at("path").get<std::string>();
                if (!fs::is_regular_file(p) || sha256_file(p) != a.at("sha256").get<std::string>()) return false;
            }
        } catch (const std::exception&) {
            return false;
        }
        return true;
    }

    fs::path run_dir_;
    const json& previous_;
    bool force_;
    std::vector<std::pair<std::string, StageRecord>> records_;
    std::vector<StageOutcome> outcomes_;
};

std::vector<fs::path> save_features(const fs::path& run_dir, const fs::path& rel, const features::FeatureMatrix& X,
                                    const std::vector<int>& y) {
    features::write_feat(X, run_dir / rel);
    features::write_labels(y, features::labels_path(run_dir / rel));
    return {rel, features::labels_path(rel)};
}

}  // namespace

PipelineResult run_pipeline(const RunConfig& config, bool force) {
    const fs::path run = config.output_dir;
    fs::create_directories(run);
    RunLock lock(run);

    json previous;
    if (fs::exists(run / "run.json")) {
        try {
            previous = json::parse(read_text(run / "run.json"));
            if (previous.value("schema", 0) != kRunSchema) previous = json();
        } catch (const std::exception&) {
            previous = json();  // unreadable report: rebuild everything
        }
    }
    write_text(run / "config.ini", config.to_ini());

    StageRunner stages(run, previous, force);

    stages.run("ingest", DigestBuilder().add("stage", "ingest").add("listing", dataset_listing_digest(config.dataset_root)).str(),
               [&] {
                   ingest(config.dataset_root).save(run / "manifest.csv");
                   return std::vector<fs::path>{"manifest.csv"};
               });

    stages.run("split",
               DigestBuilder()
                   .add("stage", "split")
                   .file("manifest", run / "manifest.csv")
                   .add("ratios", num(config.ratios.train) + "," + num(config.ratios.val) + "," + num(config.ratios.test))
                   .add("seed", std::to_string(config.seeds.split))
                   .str(),
               [&] {
                   split(Manifest::load(run / "manifest.csv"), config.ratios, config.seeds.split).save(run / "split.csv");
                   return std::vector<fs::path>{"split.csv"};
               });

    const PreprocessParams pp{config.image_side, config.gamma, config.debug_trace};
    stages.run("preprocess",
               DigestBuilder()
                   .add("stage", "preprocess")
                   .file("split", run / "split.csv")
                   .add("side", std::to_string(pp.side))
                   .add("gamma", num(pp.gamma))
                   .add("debug_trace", pp.debug_trace ? "1" : "0")
                   .str(),
               [&] {
                   fs::remove_all(run / "images");
                   const Manifest m = preprocess(Manifest::load(run / "split.csv"), run, pp);
                   m.save(run / "preprocessed.csv");
                   std::vector<fs::path> arts{"preprocessed.csv"};
                   for (const auto& e : fs::recursive_directory_iterator(run / "images"))
                       if (e.is_regular_file()) arts.push_back(fs::relative(e.path(), run));
                   std::sort(arts.begin() + 1, arts.end());
                   return arts;
               });

    const features::Extractor extractor = config.extractor();
    stages.run("features",
               DigestBuilder()
                   .add("stage", "features")
                   .file("preprocessed", run / "preprocessed.csv")
                   .add("extractor", extractor.id())
                   .str(),
               [&] {
                   fs::create_directories(run / "features");
                   const Manifest m = Manifest::load(run / "preprocessed.csv");
                   std::vector<fs::path> arts;
                   for (Split s : {Split::Train, Split::Val, Split::Test}) {
                       auto [X, y] = extract(m, s, extractor);
                       for (auto& p : save_features(run, fs::path("features") / (std::string(split_name(s)) + ".feat"), X, y))
                           arts.push_back(p);
                   }
                   return arts;
               });

    fs::path train_feat = "features/train.feat";
    if (config.resample_strategy != "off") {
        const fs::path out = "features/train.resampled.feat";
        stages.run("resample",
                   DigestBuilder()
                       .add("stage", "resample")
                       .file("features", run / train_feat)
                       .file("labels", features::labels_path(run / train_feat))
                       .add("strategy", config.resample_strategy)
                       .add("absolute", config.resample_absolute ? "1" : "0")
                       .add("k", std::to_string(config.k_neighbors))
                       .add("seed", std::to_string(config.seeds.resample))
                       .str(),
                   [&] {
                       const auto X = features::read_feat(run / train_feat);
                       const auto y = features::read_labels(features::labels_path(run / train_feat));
                       const auto& s = config.resample_strategy;
                       const auto strategy = (s == "smote1" || s == "smote2")
                                                 ? resampling::preset(s, y, config.resample_absolute)
                                                 : resampling::SamplingStrategy::parse(s);
                       const auto res =
                           resampling::fit_resample(X, y, strategy, {config.k_neighbors, config.seeds.resample});
                       for (const auto& w : res.warnings) std::cerr << "warning: " << w << '\n';
                       return save_features(run, out, res.X, res.y);
                   });
        train_feat = out;
    }

    const ModelSpec spec = model_spec(config);
    stages.run("train",
               DigestBuilder()
                   .add("stage", "train")
                   .file("features", run / train_feat)
                   .file("labels", features::labels_path(run / train_feat))
                   .add("spec", spec_string(spec))
                   .str(),
               [&] {
                   const auto X = features::read_feat(run / train_feat);
                   const auto y = features::read_labels(features::labels_path(run / train_feat));
                   save_model(train(X, y, spec), run / "model.modl");
                   return std::vector<fs::path>{"model.modl"};
               });

    DigestBuilder eval_digest;
    eval_digest.add("stage", "evaluate").file("model", run / "model.modl");
    for (const char* s : {"val", "test"}) {
        const fs::path f = run / "features" / (std::string(s) + ".feat");
        eval_digest.file(std::string(s) + ".feat", f).file(std::string(s) + ".labels", features::labels_path(f));
    }
    stages.run("evaluate", eval_digest.str(), [&] {
        const Model model = load_model(run / "model.modl");
        std::vector<NamedReport> reports;
        for (const char* s : {"val", "test"}) {
            const fs::path f = run / "features" / (std::string(s) + ".feat");
            const auto X = features::read_feat(f);
            const auto y = features::read_labels(features::labels_path(f));
            if (X.rows == 0) continue;
            const auto cm = metrics::confusion(y, predict_labels(model, X), kNumClasses);
            reports.push_back({s, metrics::report(cm), cm});
        }
        write_text(run / "metrics.json", metrics_json(model, reports));
        write_text(run / "metrics.txt", metrics_table(std::string(model_kind_name(config.model)), reports));
        return std::vector<fs::path>{"metrics.json", "metrics.txt"};
    });

    if (config.explain_enabled && config.explain_count > 0) {
        ExplainParams ep{config.explain_count, config.top_k, config.lime};
        ep.lime.seed = config.seeds.explain;
        std::ostringstream lime;
        lime.precision(17);
        lime << ep.lime.grid << ';' << ep.lime.num_samples << ';' << ep.lime.kernel_width << ';' << ep.lime.ridge << ';'
             << static_cast<int>(ep.lime.fill.kind) << ';' << ep.lime.fill.value;
        stages.run("explain",
                   DigestBuilder()
                       .add("stage", "explain")
                       .file("model", run / "model.modl")
                       .file("preprocessed", run / "preprocessed.csv")
                       .add("lime", lime.str())
                       .add("count", std::to_string(ep.count))
                       .add("top_k", std::to_string(ep.top_k))
                       .add("seed", std::to_string(ep.lime.seed))
                       .str(),
                   [&] {
                       fs::remove_all(run / "explain");
                       const Model model = load_model(run / "model.modl");
                       const Manifest m = Manifest::load(run / "preprocessed.csv");
                       std::vector<fs::path> arts;
                       for (const auto& p : explain_records(model, m, Split::Test, ep, run / "explain"))
                           arts.push_back(fs::relative(p, run));
                       return arts;
                   });
    }

    const json metrics = json::parse(read_text(run / "metrics.json"));
    json report;
    report["schema"] = kRunSchema;
    report["config_digest"] = config.digest();
    report["model"] = std::string(model_kind_name(config.model));
    report["condition"] = config.condition();
    json st = json::object();
    for (const auto& [name, rec] : stages.records()) {
        json arts = json::array();
        for (const auto& [p, d] : rec.artifacts) arts.push_back({{"path", p}, {"sha256", d}});
        st[name] = {{"input_digest", rec.input_digest}, {"artifacts", arts}};
    }
    report["stages"] = st;
    report["metrics"] = metrics;
    json timings = json::object();
    for (const auto& o : stages.outcomes()) timings[o.name] = {{"seconds", o.seconds}, {"cached", o.cached}};
    report["timings"] = timings;
    write_text(run / "run.json", report.dump(2) + "\n");

    PipelineResult result;
    result.run_dir = run;
    result.stages = stages.outcomes();
    if (metrics.contains("val")) result.val = report_from_json(metrics["val"]);
    if (metrics.contains("test")) result.test = report_from_json(metrics["test"]);
    return result;
}

// ---- comparison

std::vector<ComparisonRow> compare_runs(const std::vector<fs::path>& reports, const std::string& split) {
    if (reports.size() < 2) throw UsageError("compare needs at least two run reports, got " + std::to_string(reports.size()));
    std::vector<ComparisonRow> rows;
    for (const auto& path : reports) {
        json j;
        try {
            j = json::parse(read_text(path));
        } catch (const json::exception& e) {
            throw FormatError("run report " + path.string() + " is not valid JSON: " + e.what());
        }
        if (j.value("schema", 0) != kRunSchema)
            throw FormatError("run report " + path.string() + " has an unsupported schema (expected " +
                              std::to_string(kRunSchema) + ")");
        const json m = j.value("metrics", json::object());
        if (!m.is_object() || !m.contains(split) || !m[split].contains("accuracy"))
            throw DataError("run report " + path.string() + " has no " + split + " metrics");
        const json& s = m[split];
        try {
            rows.push_back({j.value("condition", std::string("?")), j.value("model", std::string("?")), path.string(),
                            s.at("accuracy").get<double>(), s.at("macro_precision").get<double>(),
                            s.at("macro_recall").get<double>(), s.at("macro_f1").get<double>()});
        } catch (const json::exception&) {
            throw DataError("run report " + path.string() + " has incomplete " + split + " metrics");
        }
    }
    const auto rank = [](const std::string& v, std::initializer_list<const char*> order) {
        std::size_t i = 0;
        for (const char* o : order) {
            if (v == o) return i;
            ++i;
        }
        return i;
    };
    std::stable_sort(rows.begin(), rows.end(), [&](const ComparisonRow& a, const ComparisonRow& b) {
        const auto ca = rank(a.condition, {"off", "smote1", "smote2", "custom"});
        const auto cb = rank(b.condition, {"off", "smote1", "smote2", "custom"});
        if (ca != cb) return ca < cb;
        return rank(a.model, {"svm", "forest", "cnn"}) < rank(b.model, {"svm", "forest", "cnn"});
    });
    return rows;
}

std::string format_comparison(const std::vector<ComparisonRow>& rows) {
    char line[160];
    std::string out;
    std::snprintf(line, sizeof line, "%-10s %-8s %9s %10s %7s %9s\n", "Dataset", "Model", "Accuracy", "Precision",
                  "Recall", "F1 Score");
    out += line;
    for (const auto& r : rows) {
        std::snprintf(line, sizeof line, "%-10s %-8s %9s %10s %7s %9s\n", r.condition.c_str(), r.model.c_str(),
                      fmt2(r.accuracy).c_str(), fmt2(r.precision).c_str(), fmt2(r.recall).c_str(),
                      fmt2(r.f1).c_str());
        out += line;
    }
    return out;
}

}  // namespace cxr::pipeline
