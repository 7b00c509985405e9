#include "cxr/features.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>

#include "cxr/binary_io.hpp"
#include "cxr/dataset.hpp"
#include "cxr/errors.hpp"
#include "cxr/imaging.hpp"

namespace cxr::features {

namespace {

constexpr double kNormEps = 1e-10;

void l2_normalize(std::span<double> v) {
    double ss = 0.0;
    for (double x : v) ss += x * x;
    const double norm = std::sqrt(ss + kNormEps * kNormEps);
    for (double& x : v) x /= norm;
}

}  // namespace

void HogParams::validate() const {
    if (cell_size < 2) throw ArgumentError("hog: cell_size must be >= 2");
    if (orientations < 2) throw ArgumentError("hog: orientations must be >= 2");
    if (block_size < 1) throw ArgumentError("hog: block_size must be >= 1");
    if (block_stride < 1) throw ArgumentError("hog: block_stride must be >= 1");
    if (!(clip > 0.0)) throw ArgumentError("hog: clip must be positive");
}

std::size_t HogParams::descriptor_length(std::size_t width, std::size_t height) const {
    const std::size_t cx = width / cell_size, cy = height / cell_size;
    if (cx < block_size || cy < block_size) return 0;
    const std::size_t bx = (cx - block_size) / block_stride + 1;
    const std::size_t by = (cy - block_size) / block_stride + 1;
    return bx * by * block_size * block_size * orientations;
}

std::string HogParams::id() const {
    std::ostringstream os;
    os << "hog:c" << cell_size << ":b" << block_size << ":s" << block_stride << ":o" << orientations << ':'
       << (signed_gradients ? "signed" : "unsigned") << ":l2hys" << clip;
    return os.str();
}

FeatureVector hog(const GrayImage& img, const HogParams& params) {
    params.validate();
    const std::size_t w = img.width(), h = img.height();
    if (w == 0 || h == 0 || w % params.cell_size != 0 || h % params.cell_size != 0)
        throw ArgumentError("hog: image dimensions must be multiples of " + std::to_string(params.cell_size) +
                            " (got " + std::to_string(w) + "x" + std::to_string(h) + ")");
    const std::size_t cells_x = w / params.cell_size, cells_y = h / params.cell_size;
    if (cells_x < params.block_size || cells_y < params.block_size)
        throw ArgumentError("hog: image smaller than one block");

    const std::size_t nbins = params.orientations;
    const double range = params.signed_gradients ? 360.0 : 180.0;
    const double bin_width = range / static_cast<double>(nbins);

    std::vector<double> cells(cells_x * cells_y * nbins, 0.0);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            const auto xi = static_cast<std::ptrdiff_t>(x), yi = static_cast<std::ptrdiff_t>(y);
            const double gx = img.clamped(xi + 1, yi) - img.clamped(xi - 1, yi);
            const double gy = img.clamped(xi, yi + 1) - img.clamped(xi, yi - 1);
            const double mag = std::hypot(gx, gy);
            if (mag == 0.0) continue;
            double angle = std::atan2(gy, gx) * 180.0 / std::numbers::pi;  // (-180, 180]
            if (angle < 0.0) angle += 360.0;
            angle = std::fmod(angle, range);

            const double pos = angle / bin_width;
            const double lo = std::floor(pos);
            const double frac = pos - lo;
            const std::size_t b0 = static_cast<std::size_t>(lo) % nbins;
            const std::size_t b1 = (b0 + 1) % nbins;
            double* hist = &cells[((y / params.cell_size) * cells_x + x / params.cell_size) * nbins];
            hist[b0] += mag * (1.0 - frac);
            hist[b1] += mag * frac;
        }
    }

    const std::size_t bs = params.block_size;
    const std::size_t blocks_x = (cells_x - bs) / params.block_stride + 1;
    const std::size_t blocks_y = (cells_y - bs) / params.block_stride + 1;
    const std::size_t block_len = bs * bs * nbins;

    FeatureVector out;
    out.descriptor_id = params.id();
    out.values.resize(blocks_x * blocks_y * block_len);
    for (std::size_t by = 0; by < blocks_y; ++by) {
        for (std::size_t bx = 0; bx < blocks_x; ++bx) {
            std::span<double> block(out.values.data() + (by * blocks_x + bx) * block_len, block_len);
            std::size_t k = 0;
            for (std::size_t cy = 0; cy < bs; ++cy)
                for (std::size_t cx = 0; cx < bs; ++cx) {
                    const std::size_t cell =
                        (by * params.block_stride + cy) * cells_x + (bx * params.block_stride + cx);
                    for (std::size_t b = 0; b < nbins; ++b) block[k++] = cells[cell * nbins + b];
                }
            // L2-Hys: normalise, clip, renormalise.
            l2_normalize(block);
            for (double& v : block) v = std::min(v, params.clip);
            l2_normalize(block);
        }
    }
    return out;
}

PixelTensor to_pixel_tensor(const GrayImage& img, std::size_t side) {
    if (side < 8) throw ArgumentError("to_pixel_tensor: side must be >= 8");
    const GrayImage resized = imaging::resize(img, side, side);
    PixelTensor t;
    t.side = side;
    t.values.resize(side * side);
    const auto src = resized.pixels();
    for (std::size_t i = 0; i < src.size(); ++i) t.values[i] = std::clamp(src[i] / 255.0, 0.0, 1.0);
    return t;
}

std::string Extractor::id() const {
    if (kind == Kind::Pixels) return "pixels" + std::to_string(side);
    return "hog" + std::to_string(side) + hog.id().substr(3);
}

Extractor Extractor::parse(const std::string& id) {
    Extractor e;
    try {
        if (id.rfind("pixels", 0) == 0) {
            e.kind = Kind::Pixels;
            e.side = std::stoul(id.substr(6));
            return e;
        }
        if (id.rfind("hog", 0) == 0) {
            e.kind = Kind::Hog;
            std::istringstream is(id.substr(3));
            std::string tok;
            std::getline(is, tok, ':');
            e.side = std::stoul(tok);
            while (std::getline(is, tok, ':')) {
                if (tok.empty()) continue;
                if (tok == "signed") e.hog.signed_gradients = true;
                else if (tok == "unsigned") e.hog.signed_gradients = false;
                else if (tok.rfind("l2hys", 0) == 0) e.hog.clip = std::stod(tok.substr(5));
                else if (tok[0] == 'c') e.hog.cell_size = std::stoul(tok.substr(1));
                else if (tok[0] == 'b') e.hog.block_size = std::stoul(tok.substr(1));
                else if (tok[0] == 's') e.hog.block_stride = std::stoul(tok.substr(1));
                else if (tok[0] == 'o') e.hog.orientations = std::stoul(tok.substr(1));
                else throw FormatError("unknown descriptor field '" + tok + "'");
            }
            e.hog.validate();
            return e;
        }
    } catch (const std::logic_error&) {
    }
    throw FormatError("unrecognised descriptor id: " + id);
}

std::vector<double> Extractor::extract(const GrayImage& img) const {
    if (kind == Kind::Pixels) return to_pixel_tensor(img, side).values;
    return features::hog(imaging::resize(img, side, side), hog).values;
}

std::size_t Extractor::dimension() const {
    return kind == Kind::Pixels ? side * side : hog.descriptor_length(side, side);
}

void FeatureMatrix::append(std::span<const double> r) {
    if (rows == 0 && values.empty()) dim = r.size();
    if (r.size() != dim)
        throw DimensionError("feature row has " + std::to_string(r.size()) + " values, expected " +
                             std::to_string(dim));
    values.insert(values.end(), r.begin(), r.end());
    ++rows;
}

void write_feat(const FeatureMatrix& m, const std::filesystem::path& path) {
    if (m.values.size() != m.rows * m.dim) throw DimensionError("write_feat: matrix shape mismatch");
    ByteWriter w;
    w.bytes("FEAT1");
    w.u64(m.rows);
    w.u64(m.dim);
    w.str(m.descriptor_id);
    for (double v : m.values) w.f32(static_cast<float>(v));
    w.save(path);
}

FeatureMatrix read_feat(const std::filesystem::path& path) {
    ByteReader r = ByteReader::from_file(path);
    r.expect_magic("FEAT1", "feature file (FEAT1)");
    FeatureMatrix m;
    m.rows = r.u64();
    m.dim = r.u64();
    m.descriptor_id = r.str();
    if (m.dim != 0 && m.rows > r.remaining() / (4 * m.dim))
        throw FormatError("FEAT1: truncated data in " + path.string());
    m.values.resize(m.rows * m.dim);
    for (double& v : m.values) v = r.f32();
    if (r.remaining() != 0) throw FormatError("FEAT1: trailing bytes in " + path.string());
    return m;
}

std::filesystem::path labels_path(const std::filesystem::path& feat_path) {
    return feat_path.string() + ".labels.csv";
}

void write_labels(const std::vector<int>& labels, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write labels: " + path.string());
    out << "label\n";
    for (int l : labels) out << class_name(class_from_index(l)) << '\n';
    if (!out) throw DataError("write failure: " + path.string());
}

std::vector<int> read_labels(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read labels: " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "label") throw FormatError("labels: missing 'label' header in " + path.string());
    std::vector<int> labels;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto c = parse_class(line);
        if (!c) throw FormatError("labels: unknown class '" + line + "' in " + path.string());
        labels.push_back(to_index(*c));
    }
    return labels;
}

}  // namespace cxr::features
