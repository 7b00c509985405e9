#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "cxr/cnn.hpp"
#include "cxr/dataset.hpp"
#include "cxr/explain.hpp"
#include "cxr/features.hpp"
#include "cxr/forest.hpp"
#include "cxr/svm.hpp"

namespace cxr {

enum class ModelKind { Svm, Forest, Cnn };

std::string_view model_kind_name(ModelKind k);
/// Throws UsageError "unsupported model" for anything but svm, forest, cnn.
ModelKind parse_model_kind(std::string_view text);

struct StageSeeds {
    std::uint64_t split = 0;
    std::uint64_t resample = 0;
    std::uint64_t model = 0;
    std::uint64_t explain = 0;

    /// derive_seed(seed, "<stage>") for every stage.
    static StageSeeds derive(std::uint64_t seed);
    bool operator==(const StageSeeds&) const = default;
};

/// Everything one experiment needs. Parsed from an INI file; every value,
/// seeds included, is explicit after loading.
struct RunConfig {
    std::uint64_t seed = 0;
    std::filesystem::path output_dir = "run";
    std::filesystem::path dataset_root;
    SplitRatios ratios;

    std::size_t image_side = 256;
    double gamma = 0.8;
    bool debug_trace = false;

    std::size_t hog_side = 128;
    features::HogParams hog;
    std::size_t cnn_side = 64;

    /// off | smote1 | smote2 | class map such as "normal=300,covid=300" or "all=400"
    std::string resample_strategy = "off";
    bool resample_absolute = false;
    std::size_t k_neighbors = 5;

    ModelKind model = ModelKind::Svm;
    svm::SvmParams svm;
    forest::ForestParams forest;
    cnn::CnnConfig cnn;

    bool explain_enabled = true;
    std::size_t explain_count = 2;
    std::size_t top_k = 10;
    explain::LimeParams lime;

    StageSeeds seeds;

    /// Reads an INI file. Relative paths resolve against the file's directory.
    static RunConfig load(const std::filesystem::path& file);
    /// Parses INI text; base_dir anchors relative paths.
    static RunConfig parse(const std::string& text, const std::filesystem::path& base_dir = {});

    /// Replaces the master seed and re-derives every stage seed from it.
    void override_seed(std::uint64_t new_seed);

    /// Materialised INI with every key. `include_output` drops run.output_dir
    /// when false (the config digest is independent of where a run is written).
    std::string to_ini(bool include_output = true) const;
    std::string digest() const;

    /// Dataset condition label used in comparisons: off, smote1, smote2 or custom.
    std::string condition() const;
    /// Feature extractor implied by the model: HOG for svm/forest, pixels for cnn.
    features::Extractor extractor() const;
};

}  // namespace cxr
