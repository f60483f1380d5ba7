#pragma once

#include <filesystem>
#include <vector>

#include "collage/grid.hpp"

namespace collage::png {

/// Decode any 8/16-bit PNG to RGB8 (palette expanded, alpha dropped, 16-bit
/// narrowed).
ImageRgb8 read_rgb8(const std::filesystem::path& path);

/// Decode an 8-bit single-channel PNG. Grayscale pixels are returned as-is;
/// paletted files yield the raw palette indices. RGB input is rejected.
Grid<std::uint8_t> read_gray8(const std::filesystem::path& path);

/// Decode a 16-bit grayscale PNG (8-bit grayscale is widened).
Grid<std::uint16_t> read_gray16(const std::filesystem::path& path);

void write_rgb8(const std::filesystem::path& path, const ImageRgb8& image);
void write_gray8(const std::filesystem::path& path, const Grid<std::uint8_t>& grid);
void write_gray16(const std::filesystem::path& path, const Grid<std::uint16_t>& grid);

/// Paletted PNG; every grid value must index into `palette` (size <= 256).
void write_indexed8(const std::filesystem::path& path, const Grid<std::uint8_t>& grid,
                    const std::vector<Rgb8>& palette);

/// CRC-32 of a file's raw bytes, as used by bank manifests.
std::uint32_t file_crc32(const std::filesystem::path& path);

}  // namespace collage::png
