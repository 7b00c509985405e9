#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cxr {

/// Little-endian byte sink for the FEAT1 and MODL1 formats.
class ByteWriter {
public:
    void bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
    void raw(std::span<const std::uint8_t> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }
    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
    void f32(float v);
    void f64(double v);
    /// u32 length prefix, then the bytes.
    void str(std::string_view s);
    void f64s(std::span<const double> v);

    const std::vector<std::uint8_t>& buffer() const { return buf_; }
    void save(const std::filesystem::path& path) const;

private:
    std::vector<std::uint8_t> buf_;
};

/// Bounds-checked reader; any overrun raises FormatError("... truncated ...").
class ByteReader {
public:
    explicit ByteReader(std::vector<std::uint8_t> data, std::string source = "buffer")
        : data_(std::move(data)), source_(std::move(source)) {}

    static ByteReader from_file(const std::filesystem::path& path);

    void expect_magic(std::string_view magic, std::string_view format_name);
    std::uint8_t u8();
    std::uint32_t u32();
    std::uint64_t u64();
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    float f32();
    double f64();
    std::string str();
    std::vector<double> f64s(std::size_t n);
    std::span<const std::uint8_t> raw(std::size_t n);

    std::size_t position() const { return pos_; }
    std::size_t remaining() const { return data_.size() - pos_; }
    std::span<const std::uint8_t> data() const { return data_; }
    const std::string& source() const { return source_; }

private:
    void need(std::size_t n) const;

    std::vector<std::uint8_t> data_;
    std::string source_;
    std::size_t pos_ = 0;
};

}  // namespace cxr
