#include <gtest/gtest.h>

#include <fstream>

#include "cxr/digest.hpp"
#include "cxr/errors.hpp"
#include "cxr/model_io.hpp"
#include "support.hpp"

using namespace cxr;
using features::FeatureMatrix;

namespace {

struct Fixture {
    FeatureMatrix X;
    std::vector<int> y;
};

Fixture blobs(std::uint64_t seed, std::size_t dim) {
    Rng rng(seed);
    Fixture f;
    f.X = cxr::testing::gaussian_blobs(rng, {12, 12, 12, 12}, dim, 2.0, 1.0, f.y);
    f.X.descriptor_id = "test" + std::to_string(dim);
    return f;
}

std::vector<Model> sample_models() {
    std::vector<Model> out;
    const auto f = blobs(71, 6);
    svm::SvmParams sp;
    sp.kernel.type = svm::KernelSpec::Type::Linear;
    out.emplace_back(svm::train_svm(f.X, f.y, sp, 4));
    sp.kernel = {svm::KernelSpec::Type::Rbf, 0.3};
    out.emplace_back(svm::train_svm(f.X, f.y, sp, 4));
    forest::ForestParams fp;
    fp.n_trees = 5;
    fp.seed = 2;
    out.emplace_back(forest::train_forest(f.X, f.y, fp, 4));

    const auto px = blobs(72, 16 * 16);
    cnn::CnnConfig cc;
    cc.input_side = 16;
    cc.padding = cnn::Padding::Same;
    cc.channels = {2, 2, 2};
    cc.hidden = 4;
    cc.epochs = 1;
    cc.batch_size = 8;
    auto cnn_model = cnn::cnn_train(px.X, px.y, cc);
    cnn_model.descriptor_id = "pixels16";
    out.emplace_back(std::move(cnn_model));
    return out;
}

std::size_t input_dim(const Model& m) {
    if (const auto* c = std::get_if<cnn::CnnModel>(&m)) return c->config.input_side * c->config.input_side;
    return 6;
}

}  // namespace

TEST(ModelIo, RoundTripPredictsBitIdentically) {
    cxr::testing::TempDir dir;
    Rng rng(73);
    for (const auto& model : sample_models()) {
        const auto path = dir / (std::string(model_type_name(model_type(model))) + ".modl");
        save_model(model, path);
        const Model back = load_model(path);
        EXPECT_EQ(model_type(back), model_type(model));
        EXPECT_EQ(descriptor_id(back), descriptor_id(model));
        for (int probe = 0; probe < 20; ++probe) {
            std::vector<double> x(input_dim(model));
            for (double& v : x) v = cxr::testing::uniform(rng, -1, 2);
            const auto a = predict(model, x), b = predict(back, x);
            EXPECT_EQ(a.scores, b.scores);
            EXPECT_EQ(a.label, b.label);
        }
        // saving the loaded model reproduces the file byte for byte
        EXPECT_EQ(serialize_model(back), serialize_model(model));
    }
}

TEST(ModelIo, HeaderLayout) {
    const auto bytes = serialize_model(sample_models().front());
    ASSERT_GT(bytes.size(), 45u);
    EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 5), "MODL1");
    EXPECT_EQ(bytes[5], kModelFormatVersion);
    EXPECT_EQ(bytes[9], static_cast<std::uint8_t>(ModelType::Svm));
    // trailing digest covers everything before it
    std::array<std::uint8_t, 32> digest{};
    sha256_raw(std::span<const std::uint8_t>(bytes.data(), bytes.size() - 32), digest);
    EXPECT_TRUE(std::equal(digest.begin(), digest.end(), bytes.end() - 32));
}

TEST(ModelIo, TruncationIsFormatError) {
    const auto bytes = serialize_model(sample_models()[2]);
    for (std::size_t cut : {std::size_t{3}, std::size_t{20}, bytes.size() / 2, bytes.size() - 1}) {
        const std::vector<std::uint8_t> part(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(cut));
        EXPECT_THROW(deserialize_model(part), FormatError) << "cut at " << cut;
    }
    auto flipped = bytes;
    flipped[bytes.size() / 2] ^= 0x40;
    EXPECT_THROW(deserialize_model(flipped), FormatError);
}

TEST(ModelIo, VersionMismatchNamesExpectedVersion) {
    auto bytes = serialize_model(sample_models().front());
    bytes[5] = 7;
    try {
        deserialize_model(bytes);
        FAIL() << "expected FormatError";
    } catch (const FormatError& e) {
        EXPECT_NE(std::string(e.what()).find("version 7"), std::string::npos) << e.what();
        EXPECT_NE(std::string(e.what()).find("1"), std::string::npos);
    }
    bytes[0] = 'X';
    EXPECT_THROW(deserialize_model(bytes), FormatError);
}

TEST(ModelIo, TypedLoaderRejectsOtherType) {
    cxr::testing::TempDir dir;
    const auto models = sample_models();
    save_model(models[0], dir / "svm.modl");
    save_model(models[2], dir / "forest.modl");
    EXPECT_THROW(load_forest(dir / "svm.modl"), TypeError);
    EXPECT_THROW(load_cnn(dir / "forest.modl"), TypeError);
    EXPECT_NO_THROW(load_svm(dir / "svm.modl"));
    EXPECT_THROW(load_model(dir / "missing.modl"), DataError);
}

TEST(ModelIo, TrainingIsReproducibleByDigest) {
    const auto a = sample_models();
    const auto b = sample_models();
    for (std::size_t i = 0; i < a.size(); ++i)
        EXPECT_EQ(sha256_hex(serialize_model(a[i])), sha256_hex(serialize_model(b[i])));
}
