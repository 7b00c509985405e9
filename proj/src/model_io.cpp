#include "cxr/model_io.hpp"

#include <array>
#include <cstring>

#include "cxr/binary_io.hpp"
#include "cxr/digest.hpp"
#include "cxr/errors.hpp"

namespace cxr {

namespace {

constexpr std::string_view kMagic = "MODL1";
constexpr std::size_t kDigestBytes = 32;

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};

void write_svm(ByteWriter& w, const svm::SvmModel& m) {
    w.str(m.descriptor_id);
    w.u64(m.dim);
    w.u64(m.n_classes);
    w.u32(m.kernel.type == svm::KernelSpec::Type::Linear ? 0 : 1);
    w.f64(m.kernel.gamma);
    w.f64(m.C);
    w.u64(m.machines.size());
    for (const auto& mach : m.machines) {
        w.i32(mach.positive_class);
        w.u64(mach.support_count());
        w.f64(mach.bias);
        w.f64s(mach.coefficients);
        w.f64s(mach.support);
    }
}

svm::SvmModel read_svm(ByteReader& r) {
    svm::SvmModel m;
    m.descriptor_id = r.str();
    m.dim = r.u64();
    m.n_classes = r.u64();
    const auto ktype = r.u32();
    if (ktype > 1) throw FormatError(r.source() + ": unknown SVM kernel tag " + std::to_string(ktype));
    m.kernel.type = ktype == 0 ? svm::KernelSpec::Type::Linear : svm::KernelSpec::Type::Rbf;
    m.kernel.gamma = r.f64();
    m.C = r.f64();
    const auto machines = r.u64();
    if (machines > r.remaining()) throw FormatError(r.source() + ": truncated SVM machine table");
    for (std::uint64_t i = 0; i < machines; ++i) {
        svm::BinaryMachine mach;
        mach.positive_class = r.i32();
        const auto n_sv = r.u64();
        mach.bias = r.f64();
        mach.coefficients = r.f64s(n_sv);
        if (m.dim != 0 && n_sv > r.remaining() / (8 * m.dim)) throw FormatError(r.source() + ": truncated support vectors");
        mach.support = r.f64s(n_sv * m.dim);
        m.machines.push_back(std::move(mach));
    }
    return m;
}

void write_forest(ByteWriter& w, const forest::ForestModel& m) {
    w.str(m.descriptor_id);
    w.u64(m.dim);
    w.u64(m.n_classes);
    const auto& p = m.params;
    w.u64(p.n_trees);
    w.u64(p.max_depth);
    w.u64(p.min_leaf);
    w.u64(p.features_per_split);
    w.u8(p.bootstrap ? 1 : 0);
    w.u64(p.seed);
    w.u64(m.trees.size());
    for (const auto& t : m.trees) {
        w.u64(t.nodes.size());
        for (const auto& n : t.nodes) {
            w.i32(n.feature);
            w.i32(n.left);
            w.i32(n.right);
            w.f64(n.threshold);
            w.f64s(n.counts);
        }
    }
}

forest::ForestModel read_forest(ByteReader& r) {
    forest::ForestModel m;
    m.descriptor_id = r.str();
    m.dim = r.u64();
    m.n_classes = r.u64();
    auto& p = m.params;
    p.n_trees = r.u64();
    p.max_depth = r.u64();
    p.min_leaf = r.u64();
    p.features_per_split = r.u64();
    p.bootstrap = r.u8() != 0;
    p.seed = r.u64();
    const auto trees = r.u64();
    if (trees > r.remaining()) throw FormatError(r.source() + ": truncated tree table");
    m.trees.resize(trees);
    for (auto& t : m.trees) {
        const auto nodes = r.u64();
        if (nodes > r.remaining()) throw FormatError(r.source() + ": truncated node table");
        t.nodes.resize(nodes);
        for (auto& n : t.nodes) {
            n.feature = r.i32();
            n.left = r.i32();
            n.right = r.i32();
            n.threshold = r.f64();
            n.counts = r.f64s(m.n_classes);
            if (n.feature >= 0 &&
                (n.left < 0 || n.right < 0 || static_cast<std::uint64_t>(n.left) >= nodes ||
                 static_cast<std::uint64_t>(n.right) >= nodes || static_cast<std::uint64_t>(n.feature) >= m.dim))
                throw FormatError(r.source() + ": corrupt tree node");
        }
    }
    return m;
}

void write_cnn(ByteWriter& w, const cnn::CnnModel& m) {
    const auto& c = m.config;
    w.str(m.descriptor_id);
    w.u64(c.input_side);
    w.u64(c.n_classes);
    for (auto ch : c.channels) w.u64(ch);
    w.u64(c.hidden);
    w.u32(c.padding == cnn::Padding::Same ? 1 : 0);
    w.f64(c.learning_rate);
    w.u64(c.epochs);
    w.u64(c.batch_size);
    w.u64(c.seed);
    w.u64(m.loss_history.size());
    w.f64s(m.loss_history);
    for (auto t : m.weights.tensors()) w.f64s(t);
}

cnn::CnnModel read_cnn(ByteReader& r) {
    cnn::CnnModel m;
    auto& c = m.config;
    m.descriptor_id = r.str();
    c.input_side = r.u64();
    c.n_classes = r.u64();
    for (auto& ch : c.channels) ch = r.u64();
    c.hidden = r.u64();
    c.padding = r.u32() == 1 ? cnn::Padding::Same : cnn::Padding::Valid;
    c.learning_rate = r.f64();
    c.epochs = r.u64();
    c.batch_size = r.u64();
    c.seed = r.u64();
    m.loss_history = r.f64s(r.u64());
    try {
        m.weights = cnn::CnnWeights::zeros(c);
    } catch (const ArgumentError& e) {
        throw FormatError(r.source() + ": invalid CNN configuration: " + e.what());
    }
    for (auto t : m.weights.tensors()) {
        const auto v = r.f64s(t.size());
        std::copy(v.begin(), v.end(), t.begin());
    }
    return m;
}

}  // namespace

std::string_view model_type_name(ModelType t) {
    switch (t) {
        case ModelType::Svm: return "svm";
        case ModelType::Forest: return "forest";
        case ModelType::Cnn: return "cnn";
    }
    return "?";
}

ModelType model_type(const Model& m) {
    return std::visit(Overloaded{[](const svm::SvmModel&) { return ModelType::Svm; },
                                 [](const forest::ForestModel&) { return ModelType::Forest; },
                                 [](const cnn::CnnModel&) { return ModelType::Cnn; }},
                      m);
}

Prediction predict(const Model& model, std::span<const double> x) {
    return std::visit(Overloaded{[&](const svm::SvmModel& m) { return svm::predict_svm(m, x); },
                                 [&](const forest::ForestModel& m) { return forest::predict_forest(m, x); },
                                 [&](const cnn::CnnModel& m) { return cnn::cnn_forward(m, x); }},
                      model);
}

const std::string& descriptor_id(const Model& model) {
    return std::visit([](const auto& m) -> const std::string& { return m.descriptor_id; }, model);
}

std::vector<std::uint8_t> serialize_model(const Model& model) {
    ByteWriter w;
    w.bytes(kMagic);
    w.u32(kModelFormatVersion);
    w.u32(static_cast<std::uint32_t>(model_type(model)));
    std::visit(Overloaded{[&](const svm::SvmModel& m) { write_svm(w, m); },
                          [&](const forest::ForestModel& m) { write_forest(w, m); },
                          [&](const cnn::CnnModel& m) { write_cnn(w, m); }},
               model);
    std::array<std::uint8_t, kDigestBytes> digest{};
    sha256_raw(w.buffer(), digest);
    w.raw(digest);
    return w.buffer();
}

Model deserialize_model(std::span<const std::uint8_t> bytes, const std::string& source) {
    ByteReader r(std::vector<std::uint8_t>(bytes.begin(), bytes.end()), source);
    r.expect_magic(kMagic, "model (MODL1)");
    const auto version = r.u32();
    if (version != kModelFormatVersion)
        throw FormatError(source + ": unsupported model format version " + std::to_string(version) +
                          " (expected MODL1 version " + std::to_string(kModelFormatVersion) + ")");
    if (bytes.size() < kMagic.size() + 8 + kDigestBytes) throw FormatError(source + ": truncated model file");

    std::array<std::uint8_t, kDigestBytes> digest{};
    sha256_raw(bytes.first(bytes.size() - kDigestBytes), digest);
    if (std::memcmp(digest.data(), bytes.data() + bytes.size() - kDigestBytes, kDigestBytes) != 0)
        throw FormatError(source + ": model content digest mismatch (file truncated or corrupted)");

    // Parse only the payload so that overruns are detected before the digest.
    ByteReader body(std::vector<std::uint8_t>(bytes.begin(), bytes.end() - static_cast<std::ptrdiff_t>(kDigestBytes)),
                    source);
    body.expect_magic(kMagic, "model (MODL1)");
    body.u32();
    const auto tag = body.u32();
    Model out;
    switch (tag) {
        case static_cast<std::uint32_t>(ModelType::Svm): out = read_svm(body); break;
        case static_cast<std::uint32_t>(ModelType::Forest): out = read_forest(body); break;
        case static_cast<std::uint32_t>(ModelType::Cnn): out = read_cnn(body); break;
        default: throw FormatError(source + ": unknown model type tag " + std::to_string(tag));
    }
    if (body.remaining() != 0) throw FormatError(source + ": trailing bytes after model payload");
    return out;
}

void save_model(const Model& model, const std::filesystem::path& path) {
    ByteWriter w;
    w.raw(serialize_model(model));
    w.save(path);
}

Model load_model(const std::filesystem::path& path) {
    const ByteReader r = ByteReader::from_file(path);
    return deserialize_model(r.data(), path.string());
}

namespace {

template <class T>
T load_typed(const std::filesystem::path& path, ModelType want) {
    Model m = load_model(path);
    if (model_type(m) != want)
        throw TypeError(path.string() + ": file holds a " + std::string(model_type_name(model_type(m))) +
                        " model, expected " + std::string(model_type_name(want)));
    return std::get<T>(std::move(m));
}

}  // namespace

svm::SvmModel load_svm(const std::filesystem::path& path) { return load_typed<svm::SvmModel>(path, ModelType::Svm); }

forest::ForestModel load_forest(const std::filesystem::path& path) {
    return load_typed<forest::ForestModel>(path, ModelType::Forest);
}

cnn::CnnModel load_cnn(const std::filesystem::path& path) { return load_typed<cnn::CnnModel>(path, ModelType::Cnn); }

}  // namespace cxr
