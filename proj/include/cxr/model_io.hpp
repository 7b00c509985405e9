#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cxr/cnn.hpp"
#include "cxr/forest.hpp"
#include "cxr/prediction.hpp"
#include "cxr/svm.hpp"

namespace cxr {

using Model = std::variant<svm::SvmModel, forest::ForestModel, cnn::CnnModel>;

inline constexpr std::uint32_t kModelFormatVersion = 1;

enum class ModelType : std::uint32_t { Svm = 1, Forest = 2, Cnn = 3 };

std::string_view model_type_name(ModelType t);
ModelType model_type(const Model& m);

/// Scores one feature row (pixel row for the CNN).
Prediction predict(const Model& model, std::span<const double> features);
/// Descriptor id of the features the model was trained on.
const std::string& descriptor_id(const Model& model);

/// MODL1 layout, little-endian:
///   "MODL1" | u32 format version | u32 type tag | params block | weights block (f64) | sha256 of all preceding bytes
std::vector<std::uint8_t> serialize_model(const Model& model);
Model deserialize_model(std::span<const std::uint8_t> bytes, const std::string& source = "buffer");

void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

/// Typed loaders; a file holding another model type raises TypeError.
svm::SvmModel load_svm(const std::filesystem::path& path);
forest::ForestModel load_forest(const std::filesystem::path& path);
cnn::CnnModel load_cnn(const std::filesystem::path& path);

}  // namespace cxr
