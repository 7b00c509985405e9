#pragma once

// Shared fixtures for the unit and acceptance binaries: hand-rolled random
// generators on the library's seeded stream and a scratch-directory helper.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cxr/features.hpp"
#include "cxr/image.hpp"
#include "cxr/rng.hpp"

namespace cxr::testing {

class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform01(); }

GrayImage random_image(Rng& rng, std::size_t width, std::size_t height, double lo = 0.0, double hi = 255.0);

/// Integer-valued image, as produced by 8-bit decoders.
GrayImage random_u8_image(Rng& rng, std::size_t width, std::size_t height);

Kernel3x3 random_kernel(Rng& rng, double lo = -3.0, double hi = 3.0);

/// Gaussian blobs: class c is offset by `separation` on the dimensions d with
/// d % classes == c, plus isotropic noise of the given spread.
features::FeatureMatrix gaussian_blobs(Rng& rng, const std::vector<std::size_t>& counts, std::size_t dim,
                                       double separation, double spread, std::vector<int>& labels);

/// Path of the built cxrpipe binary, injected by CMake.
std::filesystem::path cli_path();

/// Runs a shell command, capturing stdout+stderr; returns the exit status.
int run_command(const std::string& command, std::string* output = nullptr);

}  // namespace cxr::testing
