#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace cxr {

/// Seeded random stream used by every stochastic stage.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. The distribution helpers below are written out explicitly
/// (std::uniform_*_distribution is implementation-defined) so that a given
/// seed yields the same draws with any standard library.
class Rng {
public:
    static constexpr std::string_view kAlgorithm = "mt19937_64";

    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n). Rejection sampling removes modulo bias.
    std::uint64_t uniform_index(std::uint64_t n);

    bool bernoulli_half() { return (engine_() >> 63) != 0; }

    /// Standard normal draw (Box-Muller, one value per call).
    double normal();

private:
    std::mt19937_64 engine_;
};

/// SplitMix64 finalizer; used to derive independent sub-seeds.
std::uint64_t mix64(std::uint64_t x);

/// Derives a stage seed from a run seed and a stage name.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stage);

/// Derives a sub-seed from a seed and an index (per-tree streams etc).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace cxr
