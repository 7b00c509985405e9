#include "cxr/binary_io.hpp"

#include <bit>
#include <fstream>
#include <iterator>

#include "cxr/errors.hpp"

namespace cxr {

void ByteWriter::u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

void ByteWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s);
}

void ByteWriter::f64s(std::span<const double> v) {
    for (double x : v) f64(x);
}

void ByteWriter::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write file: " + path.string());
    out.write(reinterpret_cast<const char*>(buf_.data()), static_cast<std::streamsize>(buf_.size()));
    if (!out) throw DataError("write failure: " + path.string());
}

ByteReader ByteReader::from_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read file: " + path.string());
    std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return ByteReader(std::move(data), path.string());
}

void ByteReader::need(std::size_t n) const {
    if (remaining() < n)
        throw FormatError("truncated file: " + source_ + " (needed " + std::to_string(n) + " more bytes at offset " +
                          std::to_string(pos_) + ")");
}

void ByteReader::expect_magic(std::string_view magic, std::string_view format_name) {
    if (remaining() < magic.size() ||
        std::string_view(reinterpret_cast<const char*>(data_.data() + pos_), magic.size()) != magic)
        throw FormatError(source_ + ": not a " + std::string(format_name) + " file (expected magic '" +
                          std::string(magic) + "')");
    pos_ += magic.size();
}

std::uint8_t ByteReader::u8() {
    need(1);
    return data_[pos_++];
}

std::uint32_t ByteReader::u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_++]) << (8 * i);
    return v;
}

std::uint64_t ByteReader::u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data_[pos_++]) << (8 * i);
    return v;
}

float ByteReader::f32() { return std::bit_cast<float>(u32()); }

double ByteReader::f64() { return std::bit_cast<double>(u64()); }

std::string ByteReader::str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
    pos_ += n;
    return s;
}

std::vector<double> ByteReader::f64s(std::size_t n) {
    if (n > remaining() / 8)
        throw FormatError("truncated file: " + source_ + " (array of " + std::to_string(n) +
                          " reals overruns the data at offset " + std::to_string(pos_) + ")");
    std::vector<double> v(n);
    for (double& x : v) x = f64();
    return v;
}

std::span<const std::uint8_t> ByteReader::raw(std::size_t n) {
    need(n);
    std::span<const std::uint8_t> s(data_.data() + pos_, n);
    pos_ += n;
    return s;
}

}  // namespace cxr
