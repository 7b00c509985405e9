#pragma once

#include <array>
#include <cstdint>
#include <filesystem>

#include "cxr/dataset.hpp"
#include "cxr/image.hpp"
#include "cxr/rng.hpp"

namespace cxr::synthetic {

/// Oriented sinusoidal stripes plus Gaussian noise; each class has its own
/// orientation and frequency, jittered per image.
GrayImage stripe_image(ClassLabel label, std::size_t side, Rng& rng, double noise_sigma = 15.0);

/// Writes a class-per-directory corpus of PNG files under root
/// (Normal/, Lung_Opacity/, COVID/, Viral_Pneumonia/).
void write_corpus(const std::filesystem::path& root, const std::array<std::size_t, kNumClasses>& counts,
                  std::size_t side, std::uint64_t seed, double noise_sigma = 15.0);

}  // namespace cxr::synthetic
