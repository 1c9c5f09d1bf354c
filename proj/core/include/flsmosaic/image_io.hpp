#pragma once

#include "flsmosaic/grid.hpp"

#include <cstdint>
#include <filesystem>

namespace flsm {

/// Raw single-channel raster as stored on disk, before normalization.
struct RawImage {
    Grid<uint16_t> pixels;
    int bit_depth = 8; // 8 or 16
};

/// Reads an 8- or 16-bit single-channel PGM (P5) or PNG, chosen by file
/// extension. Throws std::runtime_error with the offending path on failure.
RawImage read_image(const std::filesystem::path& path);

void write_pgm(const std::filesystem::path& path, const Grid<uint8_t>& img);
void write_pgm16(const std::filesystem::path& path, const Grid<uint16_t>& img);
void write_png(const std::filesystem::path& path, const Grid<uint8_t>& img);
void write_png16(const std::filesystem::path& path, const Grid<uint16_t>& img);

/// Quantize a [0,1] image; values are clamped first.
Grid<uint8_t> to_u8(const Image& img);
Grid<uint16_t> to_u16(const Image& img);

} // namespace flsm
