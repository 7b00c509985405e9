#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cxr/config.hpp"
#include "cxr/dataset.hpp"
#include "cxr/explain.hpp"
#include "cxr/features.hpp"
#include "cxr/metrics.hpp"
#include "cxr/model_io.hpp"

namespace cxr::pipeline {

// ---- stage building blocks, shared by the CLI subcommands and run_pipeline

struct PreprocessParams {
    std::size_t side = 256;
    double gamma = 0.8;
    bool debug_trace = false;
};

/// Resizes, converts and enhances every record, writing
/// `<out_dir>/images/<split>/<class key>/<stem>.png` (plus the
/// `<stem>.{L,S,B,G,M,F}.png` trace rasters when requested). Source files
/// are re-hashed and must match the manifest. The returned manifest points at
/// the enhanced images with paths relative to out_dir.
Manifest preprocess(const Manifest& manifest, const std::filesystem::path& out_dir, const PreprocessParams& params);

/// One feature row per record of the given split, in manifest order.
std::pair<features::FeatureMatrix, std::vector<int>> extract(const Manifest& manifest, Split which,
                                                             const features::Extractor& extractor);

struct ModelSpec {
    ModelKind kind = ModelKind::Svm;
    svm::SvmParams svm;
    forest::ForestParams forest;
    cnn::CnnConfig cnn;  // input_side is taken from the feature descriptor
};

ModelSpec model_spec(const RunConfig& config);

/// Trains the selected model on a feature matrix. The CNN requires a
/// "pixels<N>" descriptor.
Model train(const features::FeatureMatrix& X, const std::vector<int>& y, const ModelSpec& spec);

/// Predicted labels; DataError when the features were produced by a
/// different extractor than the model was trained on.
std::vector<int> predict_labels(const Model& model, const features::FeatureMatrix& X);

metrics::MetricsReport evaluate(const Model& model, const features::FeatureMatrix& X, const std::vector<int>& y);

struct NamedReport {
    std::string split;
    metrics::MetricsReport report;
    metrics::ConfusionMatrix confusion;
};

/// metrics.json text: {"model": ..., "descriptor": ..., "<split>": {...}, ...} at full precision.
std::string metrics_json(const Model& model, const std::vector<NamedReport>& reports);

/// Fixed-width table, two decimals: Model, Accuracy, Precision, Recall, F1.
std::string metrics_table(const std::string& model_label, const std::vector<NamedReport>& reports);

struct ExplainParams {
    std::size_t count = 2;
    std::size_t top_k = 10;
    explain::LimeParams lime;  // lime.seed is the stage seed; image i uses derive_seed(seed, i)
};

/// Explains the first `count` records of a split for every class, writing
/// `<out_dir>/<class key>/<stem>.explain.<class key>.png` overlays and a
/// `<stem>.explain.json`. Returns written paths.
std::vector<std::filesystem::path> explain_records(const Model& model, const Manifest& manifest, Split which,
                                                   const ExplainParams& params, const std::filesystem::path& out_dir);

// ---- full runs

/// Exclusive ownership of a run directory through an O_EXCL lock file.
class RunLock {
public:
    explicit RunLock(const std::filesystem::path& run_dir);
    ~RunLock();
    RunLock(const RunLock&) = delete;
    RunLock& operator=(const RunLock&) = delete;

private:
    std::filesystem::path path_;
};

struct StageOutcome {
    std::string name;
    bool cached = false;
    double seconds = 0.0;
};

struct PipelineResult {
    std::filesystem::path run_dir;
    std::vector<StageOutcome> stages;
    std::optional<metrics::MetricsReport> val, test;
};

/// Runs ingest, split, preprocess, features, resample, train, evaluate and
/// explain into config.output_dir, writing run.json. A stage is skipped when
/// the previous run.json records the same input digest for it and all of its
/// recorded artifacts still exist with matching SHA-256. `force` disables
/// the cache.
PipelineResult run_pipeline(const RunConfig& config, bool force = false);

inline constexpr int kRunSchema = 1;

struct ComparisonRow {
    std::string condition;
    std::string model;
    std::string source;
    double accuracy = 0, precision = 0, recall = 0, f1 = 0;
};

/// One row per run.json (condition x model) read from the given split's
/// metrics. Needs at least two reports.
std::vector<ComparisonRow> compare_runs(const std::vector<std::filesystem::path>& reports,
                                        const std::string& split = "test");
std::string format_comparison(const std::vector<ComparisonRow>& rows);

}  // namespace cxr::pipeline
