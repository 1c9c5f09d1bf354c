#pragma once

#include "flsmosaic/frame.hpp"
#include "flsmosaic/grid.hpp"

namespace flsm {

/// Cartesian rendering of a polar frame. Row 0 is the far edge, the fan
/// apex (u=0, v=0) sits at (apex_row, apex_col); pixel centers are exact
/// multiples of meters_per_pixel from the apex:
///   u = (apex_row - row) * mpp  (forward), v = (col - apex_col) * mpp.
struct FanImage {
    Image image;
    Mask mask; // 1 inside the fan and backed by valid polar data
    int apex_row = 0;
    int apex_col = 0;
    double meters_per_pixel = 0.0;

    Point2D point_of_pixel(int row, int col) const {
        return {(apex_row - row) * meters_per_pixel, (col - apex_col) * meters_per_pixel};
    }
};

/// Pixel dimensions fan_rasterize will produce; depends only on geometry
/// and resolution.
void fan_image_shape(const BeamGeometry& g, double meters_per_pixel, int& rows, int& cols);

/// Inverse-mapping rasterization: every Cartesian pixel whose center lies
/// inside the fan sector samples the polar grid bilinearly (weights
/// renormalized over valid polar pixels). Pixels outside the sector, or
/// with no valid support, are masked out and set to 0.
FanImage fan_rasterize(const SonarFrame& frame, double meters_per_pixel);

/// Samples a fan image back onto the polar grid (bilinear); bins that fall
/// on masked-out fan pixels become 0. Test/diagnostic aid for round trips.
Image fan_to_polar(const FanImage& fan, const BeamGeometry& g);

} // namespace flsm
