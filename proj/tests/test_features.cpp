#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "cxr/errors.hpp"
#include "cxr/features.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace cxr;
using features::HogParams;

namespace {

GrayImage constant(std::size_t w, std::size_t h, double v) { return GrayImage(w, h, std::vector<double>(w * h, v)); }

}  // namespace

TEST(Hog, DefaultLengthOn64) {
    Rng rng(1);
    const GrayImage img = cxr::testing::random_image(rng, 64, 64);
    const auto fv = features::hog(img);
    EXPECT_EQ(fv.values.size(), 7u * 7u * 4u * 9u);
    EXPECT_EQ(fv.values.size(), 1764u);
    EXPECT_EQ(HogParams{}.descriptor_length(64, 64), 1764u);
    EXPECT_EQ(HogParams{}.descriptor_length(128, 128), 15u * 15u * 36u);
}

TEST(Hog, ConstantImageGivesZeros) {
    const auto fv = features::hog(constant(32, 32, 117.0));
    for (double v : fv.values) EXPECT_EQ(v, 0.0);
}

TEST(Hog, HorizontalIntensityRampVotesOnlyBinZero) {
    // Intensity rises along x, so every gradient points at 0 degrees.
    std::vector<double> px(32 * 32);
    for (std::size_t y = 0; y < 32; ++y)
        for (std::size_t x = 0; x < 32; ++x) px[y * 32 + x] = 3.0 * static_cast<double>(x);
    const GrayImage ramp(32, 32, px);
    HogParams p;
    p.block_size = 1;  // one cell per block exposes the raw cell histograms up to scale
    const auto fv = features::hog(ramp, p);
    ASSERT_EQ(fv.values.size(), 16u * 9u);
    for (std::size_t cell = 0; cell < 16; ++cell) {
        EXPECT_GT(fv.values[cell * 9], 0.0);
        for (std::size_t b = 1; b < 9; ++b) EXPECT_EQ(fv.values[cell * 9 + b], 0.0) << "cell " << cell << " bin " << b;
    }
}

TEST(Hog, InvariantToIntensityOffset) {
    Rng rng(2);
    for (int t = 0; t < 10; ++t) {
        const GrayImage img = cxr::testing::random_image(rng, 32, 32, 0.0, 200.0);
        const double offset = cxr::testing::uniform(rng, 1.0, 55.0);
        std::vector<double> shifted(img.pixels().begin(), img.pixels().end());
        for (double& v : shifted) v += offset;
        const auto a = features::hog(img);
        const auto b = features::hog(GrayImage(32, 32, shifted));
        ASSERT_EQ(a.values.size(), b.values.size());
        for (std::size_t i = 0; i < a.values.size(); ++i) EXPECT_NEAR(a.values[i], b.values[i], 1e-9);
    }
}

TEST(Hog, BlockNormAndComponentBounds) {
    Rng rng(3);
    HogParams p;
    const std::size_t block_len = p.block_size * p.block_size * p.orientations;
    const double bound = std::sqrt(static_cast<double>(block_len)) * p.clip;
    for (int t = 0; t < 10; ++t) {
        const GrayImage img = cxr::testing::random_image(rng, 48, 48);
        const auto fv = features::hog(img, p);
        ASSERT_EQ(fv.values.size() % block_len, 0u);
        for (std::size_t b = 0; b < fv.values.size() / block_len; ++b) {
            double ss = 0.0;
            for (std::size_t i = 0; i < block_len; ++i) {
                const double v = fv.values[b * block_len + i];
                EXPECT_GE(v, 0.0);
                EXPECT_LE(v, 1.0 + 1e-9);
                ss += v * v;
            }
            EXPECT_LE(std::sqrt(ss), bound + 1e-9);
        }
    }
}

TEST(Hog, MatchesBruteForceOracle) {
    Rng rng(4);
    std::vector<HogParams> configs(3);
    configs[1].signed_gradients = true;
    configs[2].cell_size = 4;
    configs[2].orientations = 6;
    configs[2].block_stride = 2;
    for (const auto& p : configs)
        for (int t = 0; t < 20; ++t) {
            const GrayImage img = cxr::testing::random_image(rng, 16, 16);
            const auto got = features::hog(img, p);
            const auto want = oracle::hog(img, p);
            ASSERT_EQ(got.values.size(), want.size());
            for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(got.values[i], want[i], 1e-6);
        }
}

TEST(Hog, IndivisibleSizeNamesMultiple) {
    try {
        features::hog(constant(30, 32, 0.0));
        FAIL() << "expected ArgumentError";
    } catch (const ArgumentError& e) {
        EXPECT_NE(std::string(e.what()).find("multiples of 8"), std::string::npos) << e.what();
    }
    EXPECT_THROW(features::hog(constant(8, 8, 0.0)), ArgumentError);  // smaller than a block
}

TEST(Hog, DescriptorIdRecordsParameters) {
    HogParams p;
    EXPECT_EQ(p.id(), "hog:c8:b2:s1:o9:unsigned:l2hys0.2");
    p.signed_gradients = true;
    EXPECT_NE(p.id().find("signed"), std::string::npos);
}

TEST(PixelTensor, ScalingExamples) {
    const auto white = features::to_pixel_tensor(constant(16, 16, 255.0), 16);
    for (double v : white.values) EXPECT_EQ(v, 1.0);
    const auto black = features::to_pixel_tensor(constant(16, 16, 0.0), 16);
    for (double v : black.values) EXPECT_EQ(v, 0.0);
    const auto mid = features::to_pixel_tensor(constant(16, 16, 128.0), 16);
    EXPECT_NEAR(mid.values[0], 0.50196078431, 1e-10);
    EXPECT_EQ(mid.side, 16u);
    EXPECT_THROW(features::to_pixel_tensor(constant(16, 16, 0.0), 7), ArgumentError);
}

TEST(PixelTensor, ValuesStayInUnitInterval) {
    Rng rng(5);
    for (int t = 0; t < 20; ++t) {
        const GrayImage img = cxr::testing::random_image(rng, 20 + rng.uniform_index(30), 20 + rng.uniform_index(30), -50.0, 300.0);
        const auto pt = features::to_pixel_tensor(img, 8 + rng.uniform_index(24));
        EXPECT_EQ(pt.values.size(), pt.side * pt.side);
        for (double v : pt.values) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
        }
    }
}

TEST(Extractor, IdRoundTripAndDimension) {
    features::Extractor hog;
    hog.side = 64;
    EXPECT_EQ(hog.dimension(), 1764u);
    const auto back = features::Extractor::parse(hog.id());
    EXPECT_EQ(back.kind, features::Extractor::Kind::Hog);
    EXPECT_EQ(back.side, 64u);
    EXPECT_EQ(back.hog, hog.hog);

    features::Extractor px;
    px.kind = features::Extractor::Kind::Pixels;
    px.side = 32;
    EXPECT_EQ(px.id(), "pixels32");
    EXPECT_EQ(px.dimension(), 1024u);
    EXPECT_EQ(features::Extractor::parse("pixels32").side, 32u);
    EXPECT_THROW(features::Extractor::parse("sift64"), FormatError);

    Rng rng(6);
    const GrayImage img = cxr::testing::random_image(rng, 100, 90);
    EXPECT_EQ(hog.extract(img).size(), 1764u);
    EXPECT_EQ(px.extract(img).size(), 1024u);
}

TEST(FeatFile, RoundTripsAsFloat32) {
    cxr::testing::TempDir dir;
    Rng rng(7);
    features::FeatureMatrix m;
    m.dim = 5;
    m.descriptor_id = "hog64:c8:b2:s1:o9:unsigned:l2hys0.2";
    for (int r = 0; r < 7; ++r) {
        std::vector<double> row(5);
        for (double& v : row) v = cxr::testing::uniform(rng, -3, 3);
        m.append(row);
    }
    features::write_feat(m, dir / "x.feat");

    std::ifstream raw(dir / "x.feat", std::ios::binary);
    char magic[5];
    raw.read(magic, 5);
    EXPECT_EQ(std::string(magic, 5), "FEAT1");

    const auto back = features::read_feat(dir / "x.feat");
    EXPECT_EQ(back.rows, 7u);
    EXPECT_EQ(back.dim, 5u);
    EXPECT_EQ(back.descriptor_id, m.descriptor_id);
    for (std::size_t i = 0; i < m.values.size(); ++i)
        EXPECT_EQ(back.values[i], static_cast<double>(static_cast<float>(m.values[i])));
    const auto expected_size = 5 + 8 + 8 + 4 + m.descriptor_id.size() + 7 * 5 * 4;
    EXPECT_EQ(std::filesystem::file_size(dir / "x.feat"), expected_size);
}

TEST(FeatFile, TruncationAndBadMagic) {
    cxr::testing::TempDir dir;
    features::FeatureMatrix m;
    m.dim = 3;
    m.descriptor_id = "pixels8";
    m.append(std::vector<double>{1, 2, 3});
    m.append(std::vector<double>{4, 5, 6});
    features::write_feat(m, dir / "x.feat");
    const auto size = std::filesystem::file_size(dir / "x.feat");
    std::filesystem::resize_file(dir / "x.feat", size - 2);
    EXPECT_THROW(features::read_feat(dir / "x.feat"), FormatError);
    {
        std::ofstream f(dir / "y.feat", std::ios::binary);
        f << "MODL1 and then some bytes";
    }
    EXPECT_THROW(features::read_feat(dir / "y.feat"), FormatError);
    EXPECT_THROW(features::read_feat(dir / "absent.feat"), DataError);
}

TEST(FeatFile, AppendRejectsWrongWidth) {
    features::FeatureMatrix m;
    m.append(std::vector<double>{1, 2, 3});  // first row fixes the width
    EXPECT_EQ(m.dim, 3u);
    EXPECT_THROW(m.append(std::vector<double>{1, 2}), DimensionError);
    EXPECT_EQ(m.rows, 1u);
}

TEST(Labels, SidecarRoundTrip) {
    cxr::testing::TempDir dir;
    const std::vector<int> labels{0, 3, 2, 1, 1, 0};
    const auto path = features::labels_path(dir / "train.feat");
    EXPECT_EQ(path.filename(), "train.feat.labels.csv");
    features::write_labels(labels, path);
    EXPECT_EQ(features::read_labels(path), labels);
    {
        std::ofstream f(dir / "bad.csv");
        f << "label\nNormal\nMartian\n";
    }
    EXPECT_THROW(features::read_labels(dir / "bad.csv"), FormatError);
}
