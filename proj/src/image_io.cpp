#include "cxr/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "cxr/errors.hpp"
#include "cxr/imaging.hpp"

namespace cxr::io {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

struct Raster8 {
    std::size_t width = 0;
    std::size_t height = 0;
    int channels = 0;  // 1 or 3
    std::vector<std::uint8_t> data;
};

[[noreturn]] void png_fail(png_structp, png_const_charp msg) { throw FormatError(std::string("png: ") + msg); }
void png_warn(png_structp, png_const_charp) {}

Raster8 read_png(const std::filesystem::path& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw DataError("cannot open image: " + path.string());

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
    if (!png) throw Error("png: out of memory");
    png_infop info = png_create_info_struct(png);
    struct Guard {
        png_structp& p;
        png_infop& i;
        ~Guard() { png_destroy_read_struct(&p, &i, nullptr); }
    } guard{png, info};

    png_init_io(png, fp.get());
    png_read_info(png, info);

    const auto color = png_get_color_type(png, info);
    const auto depth = png_get_bit_depth(png, info);
    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    Raster8 r;
    r.width = png_get_image_width(png, info);
    r.height = png_get_image_height(png, info);
    r.channels = png_get_channels(png, info);
    if (r.channels != 1 && r.channels != 3)
        throw FormatError("png: unsupported channel layout in " + path.string());
    const std::size_t stride = png_get_rowbytes(png, info);
    r.data.resize(stride * r.height);
    std::vector<png_bytep> rows(r.height);
    for (std::size_t y = 0; y < r.height; ++y) rows[y] = r.data.data() + y * stride;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    return r;
}

// Reads one whitespace/comment separated header token of a PNM file.
std::string pnm_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    return tok;
}

Raster8 read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open image: " + path.string());
    if (pnm_token(in) != "P5") throw FormatError("pgm: expected P5 magic in " + path.string());
    Raster8 r;
    try {
        r.width = std::stoul(pnm_token(in));
        r.height = std::stoul(pnm_token(in));
        const unsigned long maxval = std::stoul(pnm_token(in));
        if (maxval != 255) throw FormatError("pgm: only maxval 255 is supported: " + path.string());
    } catch (const std::logic_error&) {
        throw FormatError("pgm: malformed header in " + path.string());
    }
    r.channels = 1;
    r.data.resize(r.width * r.height);
    in.read(reinterpret_cast<char*>(r.data.data()), static_cast<std::streamsize>(r.data.size()));
    if (static_cast<std::size_t>(in.gcount()) != r.data.size())
        throw FormatError("pgm: truncated pixel data in " + path.string());
    return r;
}

Raster8 read_any(const std::filesystem::path& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw DataError("cannot open image: " + path.string());
    char magic[8] = {};
    probe.read(magic, 8);
    if (probe.gcount() >= 8 && png_sig_cmp(reinterpret_cast<png_const_bytep>(magic), 0, 8) == 0)
        return read_png(path);
    if (probe.gcount() >= 2 && magic[0] == 'P' && magic[1] == '5') return read_pgm(path);
    throw FormatError("unrecognised image format (expected PNG or binary PGM): " + path.string());
}

std::uint8_t quantize(double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
}

void write_png(const std::filesystem::path& path, std::size_t width, std::size_t height, int channels,
               const std::vector<std::uint8_t>& data) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw DataError("cannot write image: " + path.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
    if (!png) throw Error("png: out of memory");
    png_infop info = png_create_info_struct(png);
    struct Guard {
        png_structp& p;
        png_infop& i;
        ~Guard() { png_destroy_write_struct(&p, &i); }
    } guard{png, info};

    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
                 channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    const std::size_t stride = width * static_cast<std::size_t>(channels);
    for (std::size_t y = 0; y < height; ++y)
        png_write_row(png, const_cast<png_bytep>(data.data() + y * stride));
    png_write_end(png, nullptr);
}

}  // namespace

GrayImage read_gray(const std::filesystem::path& path) {
    const Raster8 r = read_any(path);
    if (r.channels == 1) {
        std::vector<double> px(r.data.begin(), r.data.end());
        return GrayImage(r.width, r.height, std::move(px));
    }
    std::vector<double> rgb(r.data.begin(), r.data.end());
    return imaging::to_grayscale(RgbImage(r.width, r.height, std::move(rgb)));
}

RgbImage read_rgb(const std::filesystem::path& path) {
    const Raster8 r = read_any(path);
    if (r.channels == 3) return RgbImage(r.width, r.height, std::vector<double>(r.data.begin(), r.data.end()));
    std::vector<double> px(r.data.begin(), r.data.end());
    return RgbImage::from_gray(GrayImage(r.width, r.height, std::move(px)));
}

void write_gray_png(const GrayImage& img, const std::filesystem::path& path) {
    std::vector<std::uint8_t> data(img.size());
    std::transform(img.pixels().begin(), img.pixels().end(), data.begin(), quantize);
    write_png(path, img.width(), img.height(), 1, data);
}

void write_rgb_png(const RgbImage& img, const std::filesystem::path& path) {
    std::vector<std::uint8_t> data(img.data().size());
    std::transform(img.data().begin(), img.data().end(), data.begin(), quantize);
    write_png(path, img.width(), img.height(), 3, data);
}

void write_pgm(const GrayImage& img, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write image: " + path.string());
    out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
    std::vector<std::uint8_t> data(img.size());
    std::transform(img.pixels().begin(), img.pixels().end(), data.begin(), quantize);
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) throw DataError("write failure: " + path.string());
}

GrayImage normalize_for_display(const GrayImage& img) {
    const double lo = img.min(), hi = img.max();
    GrayImage out = img;
    const double span = hi - lo;
    for (double& v : out.pixels()) v = span > 0.0 ? 255.0 * (v - lo) / span : 0.0;
    return out;
}

}  // namespace cxr::io
