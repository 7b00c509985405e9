#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace cxr {

/// Lower-case hex SHA-256 of a byte range.
std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(std::string_view text);

/// Lower-case hex SHA-256 of a file's content. Throws DataError if unreadable.
std::string sha256_file(const std::filesystem::path& path);

/// Raw 32-byte SHA-256 digest.
void sha256_raw(std::span<const std::uint8_t> bytes, std::span<std::uint8_t, 32> out);

}  // namespace cxr
