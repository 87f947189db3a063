#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stegmod/pixel_grid.hpp"

namespace stegmod {

enum class ImageFormat { pgm, ppm, png, bmp };

// Decodes PGM (P5), PPM (P6), PNG (8-bit gray/RGB, non-interlaced) and BMP
// (8-bit gray-palette or 24-bit, uncompressed). Without a hint the format is
// sniffed from the leading magic bytes. 16-bit depths and non-gray palettes
// are rejected.
PixelGrid load_image(std::span<const std::uint8_t> bytes,
                     std::optional<ImageFormat> hint = std::nullopt);

// PGM accepts 1 channel, PPM 3; PNG and BMP accept both.
std::vector<std::uint8_t> write_image(const PixelGrid& grid, ImageFormat fmt);

PixelGrid load_image_file(const std::string& path);
// Format chosen by extension (.pgm/.ppm/.png/.bmp, case-insensitive).
void write_image_file(const PixelGrid& grid, const std::string& path);

std::optional<ImageFormat> format_from_path(const std::string& path);

}  // namespace stegmod
