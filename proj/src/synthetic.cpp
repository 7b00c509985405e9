#include "cxr/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "cxr/errors.hpp"
#include "cxr/image_io.hpp"

namespace cxr::synthetic {

namespace {

struct StripeSpec {
    double angle_deg;
    double cycles;  // across the image side
    const char* directory;
};

constexpr std::array<StripeSpec, kNumClasses> kSpecs = {{
    {0.0, 4.0, "Normal"},
    {90.0, 6.0, "Lung_Opacity"},
    {45.0, 8.0, "COVID"},
    {135.0, 5.0, "Viral_Pneumonia"},
}};

}  // namespace

GrayImage stripe_image(ClassLabel label, std::size_t side, Rng& rng, double noise_sigma) {
    const StripeSpec& spec = kSpecs[static_cast<std::size_t>(to_index(label))];
    const double angle = (spec.angle_deg + (rng.uniform01() - 0.5) * 16.0) * std::numbers::pi / 180.0;
    const double cycles = spec.cycles + (rng.uniform01() - 0.5);
    const double phase = rng.uniform01() * 2.0 * std::numbers::pi;
    const double amplitude = 50.0 + 20.0 * rng.uniform01();
    const double ca = std::cos(angle), sa = std::sin(angle);

    GrayImage img(side, side);
    const double s = static_cast<double>(side);
    for (std::size_t y = 0; y < side; ++y)
        for (std::size_t x = 0; x < side; ++x) {
            const double u = (static_cast<double>(x) * ca + static_cast<double>(y) * sa) / s;
            const double v = 128.0 + amplitude * std::sin(2.0 * std::numbers::pi * cycles * u + phase) +
                             noise_sigma * rng.normal();
            img.at(x, y) = std::clamp(std::round(v), 0.0, 255.0);
        }
    return img;
}

void write_corpus(const std::filesystem::path& root, const std::array<std::size_t, kNumClasses>& counts,
                  std::size_t side, std::uint64_t seed, double noise_sigma) {
    if (side < 8) throw ArgumentError("synthetic corpus: side must be >= 8");
    for (ClassLabel c : kAllClasses) {
        const auto ci = static_cast<std::size_t>(to_index(c));
        const auto dir = root / kSpecs[ci].directory;
        std::filesystem::create_directories(dir);
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(ci)));
        for (std::size_t i = 0; i < counts[ci]; ++i) {
            char name[32];
            std::snprintf(name, sizeof name, "img_%05zu.png", i);
            io::write_gray_png(stripe_image(c, side, rng, noise_sigma), dir / name);
        }
    }
}

}  // namespace cxr::synthetic
