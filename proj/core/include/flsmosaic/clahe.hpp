#pragma once

#include "flsmosaic/frame.hpp"
#include "flsmosaic/grid.hpp"

namespace flsm {

/// Contrast-limited adaptive histogram equalization on a [0,1] image.
///
/// The image is split into tiles.rows x tiles.cols regions of near-equal
/// size. Each tile gets a 256-bin histogram, clipped at
/// clip_limit * tile_pixels / 256 with the excess redistributed uniformly,
/// and the mapping value = cdf(bin)/tile_pixels. Pixels are remapped by
/// bilinear interpolation between the four surrounding tile-center
/// mappings (clamped at the borders), so output stays in [0,1].
///
/// Throws std::invalid_argument when clip_limit < 1 or a tile would be
/// smaller than one pixel.
struct TileLayout {
    int rows = 8;
    int cols = 8;
};

Image clahe(const Image& img, double clip_limit, TileLayout tiles);

SonarFrame clahe(const SonarFrame& frame, double clip_limit, TileLayout tiles);

} // namespace flsm
