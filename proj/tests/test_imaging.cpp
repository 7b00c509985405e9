#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "cxr/errors.hpp"
#include "cxr/image_io.hpp"
#include "cxr/imaging.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace cxr;
using cxr::testing::random_image;

namespace {

GrayImage ramp_x(std::size_t w, std::size_t h) {
    GrayImage img(w, h);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) img.at(x, y) = static_cast<double>(x);
    return img;
}

GrayImage spike(std::size_t side, double value) {
    GrayImage img(side, side, 0.0);
    img.at(side / 2, side / 2) = value;
    return img;
}

void expect_finite(const GrayImage& img) {
    for (double p : img.pixels()) ASSERT_TRUE(std::isfinite(p));
}

}  // namespace

TEST(Grayscale, EqualChannelsPassThrough) {
    const GrayImage v(3, 2, 87.0);
    const GrayImage g = imaging::to_grayscale(v, v, v);
    for (double p : g.pixels()) EXPECT_NEAR(p, 87.0, 1e-12);
}

TEST(Grayscale, PrimaryWeights) {
    const GrayImage full(1, 1, 255.0), zero(1, 1, 0.0);
    EXPECT_NEAR(imaging::to_grayscale(full, zero, zero).at(0, 0), 76.245, 1e-9);
    EXPECT_NEAR(imaging::to_grayscale(zero, full, zero).at(0, 0), 149.685, 1e-9);
    EXPECT_NEAR(imaging::to_grayscale(zero, zero, full).at(0, 0), 29.07, 1e-9);
}

TEST(Grayscale, RgbOverloadMatchesPlanes) {
    RgbImage rgb(2, 1, {255, 0, 0, 10, 20, 30});
    const GrayImage g = imaging::to_grayscale(rgb);
    EXPECT_NEAR(g.at(0, 0), 76.245, 1e-9);
    EXPECT_NEAR(g.at(1, 0), 0.299 * 10 + 0.587 * 20 + 0.114 * 30, 1e-9);
}

TEST(Grayscale, MismatchedPlanesRejected) {
    EXPECT_THROW(imaging::to_grayscale(GrayImage(2, 2), GrayImage(2, 3), GrayImage(2, 2)), DimensionError);
}

TEST(Resize, ConstantStaysConstant) {
    const GrayImage r = imaging::resize(GrayImage(256, 256, 100.0), 128, 128);
    ASSERT_EQ(r.width(), 128u);
    ASSERT_EQ(r.height(), 128u);
    for (double p : r.pixels()) EXPECT_NEAR(p, 100.0, 1e-12);
}

TEST(Resize, IdentityIsBitIdentical) {
    Rng rng(3);
    const GrayImage img = random_image(rng, 13, 7);
    EXPECT_EQ(imaging::resize(img, 13, 7), img);
}

TEST(Resize, CornerAlignedTwoToThree) {
    const GrayImage img(2, 1, std::vector<double>{0.0, 255.0});
    const GrayImage r = imaging::resize(img, 3, 1);
    EXPECT_DOUBLE_EQ(r.at(0, 0), 0.0);
    EXPECT_DOUBLE_EQ(r.at(1, 0), 127.5);
    EXPECT_DOUBLE_EQ(r.at(2, 0), 255.0);
}

TEST(Resize, CornersPreservedAndRangeBounded) {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const GrayImage img = random_image(rng, 5 + rng.uniform_index(20), 5 + rng.uniform_index(20));
        const std::size_t ow = 2 + rng.uniform_index(40), oh = 2 + rng.uniform_index(40);
        const GrayImage r = imaging::resize(img, ow, oh);
        EXPECT_NEAR(r.at(0, 0), img.at(0, 0), 1e-9);
        EXPECT_NEAR(r.at(ow - 1, oh - 1), img.at(img.width() - 1, img.height() - 1), 1e-9);
        EXPECT_GE(r.min(), img.min() - 1e-9);
        EXPECT_LE(r.max(), img.max() + 1e-9);
    }
}

TEST(Resize, ZeroTargetRejected) {
    EXPECT_THROW(imaging::resize(GrayImage(4, 4), 0, 4), ArgumentError);
}

TEST(Convolve, IdentityKernel) {
    Rng rng(5);
    const GrayImage img = random_image(rng, 9, 6);
    EXPECT_EQ(imaging::convolve3x3(img, Kernel3x3::identity()), img);
}

TEST(Convolve, ZeroSumKernelOnConstant) {
    Rng rng(6);
    Kernel3x3 k = cxr::testing::random_kernel(rng);
    k.coefficients[4] -= k.sum();
    const GrayImage out = imaging::convolve3x3(GrayImage(7, 7, 42.0), k);
    for (double p : out.pixels()) EXPECT_NEAR(p, 0.0, 1e-9);
}

TEST(Convolve, RampLaplacianCentre) {
    const GrayImage out = imaging::convolve3x3(ramp_x(3, 3), imaging::kLaplacianKernel);
    EXPECT_DOUBLE_EQ(out.at(1, 1), 0.0);
}

TEST(Convolve, MatchesBruteForceOracle) {
    Rng rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        const GrayImage img = random_image(rng, 8, 8);
        const Kernel3x3 k = cxr::testing::random_kernel(rng);
        const auto expected = oracle::convolve(img, k);
        const GrayImage out = imaging::convolve3x3(img, k);
        const auto got = out.pixels();
        for (std::size_t i = 0; i < expected.size(); ++i) ASSERT_NEAR(got[i], expected[i], 1e-9);
    }
}

TEST(Convolve, NonSquareAndDegenerateShapes) {
    Rng rng(8);
    for (auto [w, h] : {std::pair<std::size_t, std::size_t>{1, 1}, {1, 5}, {5, 1}, {2, 9}}) {
        const GrayImage img = random_image(rng, w, h);
        const Kernel3x3 k = cxr::testing::random_kernel(rng);
        const auto expected = oracle::convolve(img, k);
        const auto got = imaging::convolve3x3(img, k);
        ASSERT_EQ(got.width(), w);
        ASSERT_EQ(got.height(), h);
        for (std::size_t i = 0; i < expected.size(); ++i) ASSERT_NEAR(got.pixels()[i], expected[i], 1e-9);
    }
}

TEST(Laplacian, ConstantIsExactlyZero) {
    const GrayImage out = imaging::laplacian(GrayImage(6, 5, 133.7));
    for (double p : out.pixels()) EXPECT_EQ(p, 0.0);
}

TEST(Laplacian, RampInteriorZero) {
    const GrayImage out = imaging::laplacian(ramp_x(6, 6));
    for (std::size_t y = 1; y < 5; ++y)
        for (std::size_t x = 1; x < 5; ++x) EXPECT_DOUBLE_EQ(out.at(x, y), 0.0);
}

TEST(Laplacian, SpikeResponse) {
    const GrayImage out = imaging::laplacian(spike(5, 255.0));
    EXPECT_DOUBLE_EQ(out.at(2, 2), -1020.0);
    EXPECT_DOUBLE_EQ(out.at(1, 2), 255.0);
    EXPECT_DOUBLE_EQ(out.at(3, 2), 255.0);
    EXPECT_DOUBLE_EQ(out.at(2, 1), 255.0);
    EXPECT_DOUBLE_EQ(out.at(2, 3), 255.0);
    EXPECT_DOUBLE_EQ(out.at(1, 1), 0.0);
}

TEST(Sharpen, ConstantPreserved) {
    const GrayImage out = imaging::sharpen(GrayImage(4, 4, 91.0));
    for (double p : out.pixels()) EXPECT_DOUBLE_EQ(p, 91.0);
}

TEST(Sharpen, RampInteriorPreserved) {
    const GrayImage img = ramp_x(7, 7);
    const GrayImage out = imaging::sharpen(img);
    for (std::size_t y = 1; y < 6; ++y)
        for (std::size_t x = 1; x < 6; ++x) EXPECT_DOUBLE_EQ(out.at(x, y), img.at(x, y));
}

TEST(Sharpen, SpikeUnclamped) {
    EXPECT_DOUBLE_EQ(imaging::sharpen(spike(5, 255.0)).at(2, 2), 1275.0);
}

TEST(Sharpen, EqualsImageMinusLaplacian) {
    Rng rng(9);
    const GrayImage img = random_image(rng, 10, 10);
    const GrayImage s = imaging::sharpen(img), l = imaging::laplacian(img);
    for (std::size_t i = 0; i < img.size(); ++i) {
        EXPECT_NEAR(s.pixels()[i], img.pixels()[i] - l.pixels()[i], 1e-9);
        EXPECT_NEAR(s.pixels()[i] - l.pixels()[i], img.pixels()[i] - 2 * l.pixels()[i], 1e-9);
    }
}

TEST(Sobel, ConstantIsExactlyZero) {
    const GrayImage out = imaging::sobel_magnitude(GrayImage(5, 5, 17.0));
    for (double p : out.pixels()) EXPECT_EQ(p, 0.0);
}

TEST(Sobel, UnitRampGivesEight) {
    const GrayImage img = ramp_x(6, 6);
    const GrayImage gx = imaging::convolve3x3(img, imaging::kSobelX);
    const GrayImage gy = imaging::convolve3x3(img, imaging::kSobelY);
    const GrayImage g = imaging::sobel_magnitude(img);
    for (std::size_t y = 1; y < 5; ++y)
        for (std::size_t x = 1; x < 5; ++x) {
            EXPECT_DOUBLE_EQ(gx.at(x, y), 8.0);
            EXPECT_DOUBLE_EQ(gy.at(x, y), 0.0);
            EXPECT_DOUBLE_EQ(g.at(x, y), 8.0);
        }
}

TEST(Sobel, TransposeSymmetry) {
    Rng rng(10);
    const GrayImage img = random_image(rng, 9, 6);
    const GrayImage a = imaging::sobel_magnitude(img.transposed());
    const GrayImage b = imaging::sobel_magnitude(img).transposed();
    ASSERT_EQ(a.width(), b.width());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a.pixels()[i], b.pixels()[i], 1e-9);
}

TEST(PowerLaw, GammaOneIsIdentity) {
    Rng rng(12);
    const GrayImage img = random_image(rng, 8, 8);
    const GrayImage out = imaging::power_law(img, 1.0);
    for (std::size_t i = 0; i < img.size(); ++i) EXPECT_NEAR(out.pixels()[i], img.pixels()[i], 1e-9);
}

TEST(PowerLaw, FixedPointsAndWorkedValue) {
    for (double g : {0.3, 0.8, 1.0, 2.5}) {
        const GrayImage out = imaging::power_law(GrayImage(2, 1, std::vector<double>{0.0, 255.0}), g);
        EXPECT_DOUBLE_EQ(out.at(0, 0), 0.0);
        EXPECT_DOUBLE_EQ(out.at(1, 0), 255.0);
    }
    EXPECT_NEAR(imaging::power_law(GrayImage(1, 1, 64.0), 0.5).at(0, 0), 127.75, 0.01);
}

TEST(PowerLaw, Monotonicity) {
    Rng rng(13);
    for (int trial = 0; trial < 200; ++trial) {
        const double a = cxr::testing::uniform(rng, 0.5, 254.5), b = cxr::testing::uniform(rng, 0.5, 254.5);
        const double g1 = cxr::testing::uniform(rng, 0.1, 3.0), g2 = cxr::testing::uniform(rng, 0.1, 3.0);
        const double lo = std::min(a, b), hi = std::max(a, b);
        const auto f = [](double v, double g) { return imaging::power_law(GrayImage(1, 1, v), g).at(0, 0); };
        EXPECT_LE(f(lo, g1), f(hi, g1));
        // larger gamma darkens mid-tones
        EXPECT_GE(f(a, std::min(g1, g2)), f(a, std::max(g1, g2)));
    }
}

TEST(PowerLaw, InvalidArgumentsRejected) {
    EXPECT_THROW(imaging::power_law(GrayImage(1, 1, 10.0), 0.0), ArgumentError);
    EXPECT_THROW(imaging::power_law(GrayImage(1, 1, 10.0), -1.0), ArgumentError);
    EXPECT_THROW(imaging::power_law(GrayImage(1, 1, 256.0), 1.0), ArgumentError);
    EXPECT_THROW(imaging::power_law(GrayImage(1, 1, -1.0), 1.0), ArgumentError);
}

TEST(Enhance, ConstantImageGoesBlack) {
    const auto e = imaging::enhance(GrayImage(8, 8, 120.0));
    for (double p : e.image.pixels()) EXPECT_EQ(p, 0.0);
}

TEST(Enhance, OutputRangeAndShape) {
    Rng rng(14);
    for (int trial = 0; trial < 20; ++trial) {
        const GrayImage img = random_image(rng, 5 + rng.uniform_index(30), 5 + rng.uniform_index(30));
        const auto e = imaging::enhance(img, cxr::testing::uniform(rng, 0.2, 2.0));
        ASSERT_EQ(e.image.width(), img.width());
        ASSERT_EQ(e.image.height(), img.height());
        expect_finite(e.image);
        EXPECT_GE(e.image.min(), 0.0);
        EXPECT_LE(e.image.max(), 255.0);
    }
}

TEST(Enhance, TraceIdentities) {
    Rng rng(15);
    const GrayImage img = random_image(rng, 16, 12);
    const auto e = imaging::enhance(img, 0.8);
    const auto& t = e.trace;
    for (std::size_t i = 0; i < img.size(); ++i) {
        EXPECT_NEAR(t.difference.pixels()[i], t.sharpened.pixels()[i] - t.laplacian.pixels()[i], 1e-9);
        EXPECT_NEAR(t.mask.pixels()[i], t.sobel.pixels()[i] / t.mask_scale * t.difference.pixels()[i], 1e-9);
        EXPECT_NEAR(t.fused.pixels()[i], t.laplacian.pixels()[i] + t.mask.pixels()[i], 1e-9);
    }
    EXPECT_DOUBLE_EQ(t.mask_scale, t.sobel.max());
    EXPECT_DOUBLE_EQ(t.gamma, 0.8);
}

TEST(Enhance, MatchesStraightLineOracle) {
    Rng rng(16);
    for (int trial = 0; trial < 20; ++trial) {
        const GrayImage img = random_image(rng, 32, 32);
        const double gamma = cxr::testing::uniform(rng, 0.3, 1.5);
        const auto expected = oracle::enhance(img, gamma);
        const GrayImage out = imaging::enhance(img, gamma).image;
        const auto got = out.pixels();
        for (std::size_t i = 0; i < expected.size(); ++i) ASSERT_NEAR(got[i], expected[i], 1e-6);
    }
}

TEST(Enhance, Deterministic) {
    Rng rng(17);
    const GrayImage img = random_image(rng, 20, 20);
    EXPECT_EQ(imaging::enhance(img).image, imaging::enhance(img).image);
}

TEST(ImageIo, PngAndPgmRoundTrip) {
    cxr::testing::TempDir dir;
    Rng rng(18);
    const GrayImage img = cxr::testing::random_u8_image(rng, 17, 9);
    io::write_gray_png(img, dir / "a.png");
    io::write_pgm(img, dir / "a.pgm");
    EXPECT_EQ(io::read_gray(dir / "a.png"), img);
    EXPECT_EQ(io::read_gray(dir / "a.pgm"), img);

    RgbImage rgb(3, 2);
    for (std::size_t y = 0; y < 2; ++y)
        for (std::size_t x = 0; x < 3; ++x) {
            auto p = rgb.at(x, y);
            p[0] = static_cast<double>(rng.uniform_index(256));
            p[1] = static_cast<double>(rng.uniform_index(256));
            p[2] = static_cast<double>(rng.uniform_index(256));
        }
    io::write_rgb_png(rgb, dir / "c.png");
    EXPECT_EQ(io::read_rgb(dir / "c.png"), rgb);
    const GrayImage luma = io::read_gray(dir / "c.png");
    EXPECT_NEAR(luma.at(1, 1), 0.299 * rgb.at(1, 1)[0] + 0.587 * rgb.at(1, 1)[1] + 0.114 * rgb.at(1, 1)[2], 1e-9);
}

TEST(ImageIo, WriteQuantisesAndClamps) {
    cxr::testing::TempDir dir;
    io::write_gray_png(GrayImage(3, 1, std::vector<double>{-5.0, 127.6, 300.0}), dir / "q.png");
    const GrayImage back = io::read_gray(dir / "q.png");
    EXPECT_EQ(back.at(0, 0), 0.0);
    EXPECT_EQ(back.at(1, 0), 128.0);
    EXPECT_EQ(back.at(2, 0), 255.0);
}

TEST(ImageIo, GarbageIsFormatError) {
    cxr::testing::TempDir dir;
    {
        std::ofstream f(dir / "bad.png", std::ios::binary);
        f << "\x89PNG\r\n\x1a\n garbage";
    }
    {
        std::ofstream f(dir / "bad.txt", std::ios::binary);
        f << "hello";
    }
    EXPECT_THROW(io::read_gray(dir / "bad.png"), FormatError);
    EXPECT_THROW(io::read_gray(dir / "bad.txt"), FormatError);
    EXPECT_THROW(io::read_gray(dir / "missing.png"), Error);
}

TEST(ImageIo, NormalizeForDisplay) {
    const GrayImage img(3, 1, std::vector<double>{-1020.0, 0.0, 1020.0});
    const GrayImage d = io::normalize_for_display(img);
    EXPECT_DOUBLE_EQ(d.at(0, 0), 0.0);
    EXPECT_DOUBLE_EQ(d.at(1, 0), 127.5);
    EXPECT_DOUBLE_EQ(d.at(2, 0), 255.0);
}

TEST(GrayImage, RejectsNonFiniteAndBadSize) {
    EXPECT_THROW(GrayImage(2, 2, std::vector<double>{1, 2, 3}), DimensionError);
    EXPECT_THROW(GrayImage(1, 1, std::vector<double>{NAN}), ArgumentError);
}
