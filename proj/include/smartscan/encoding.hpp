#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace smartscan::encoding {

std::string base64_encode(std::span<const std::uint8_t> bytes);
/// Standard alphabet with padding; whitespace is ignored. Throws CodecError.
std::vector<std::uint8_t> base64_decode(std::string_view text);

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(std::string_view text);

}  // namespace smartscan::encoding
