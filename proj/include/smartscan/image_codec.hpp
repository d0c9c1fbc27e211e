#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "smartscan/raster.hpp"

namespace smartscan::codec {

/// Decoded raster with its native channel count (1 = gray, 3 = RGB).
struct DecodedImage {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<std::uint8_t> pixels;
};

std::vector<std::uint8_t> encode_png(const RgbImage& img);
/// Single-channel PNG with values {0, 255}.
std::vector<std::uint8_t> encode_mask_png(const BinaryMask& mask);
/// Single-channel 8-bit PNG from raw gray bytes.
std::vector<std::uint8_t> encode_gray_png(int width, int height, std::span<const std::uint8_t> gray);

/// PNG or JPEG, detected by signature. Alpha is dropped; palette and 16-bit
/// inputs are normalized to 8-bit gray or RGB. Throws CodecError.
DecodedImage decode(std::span<const std::uint8_t> bytes);

RgbImage decode_rgb(std::span<const std::uint8_t> bytes);
/// Gray (or RGB, using the first channel) image thresholded at 128.
BinaryMask decode_mask(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
/// Writes via a temporary file and rename so readers never see partial files.
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace smartscan::codec
