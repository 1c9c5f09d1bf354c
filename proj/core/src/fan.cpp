#include "flsmosaic/fan.hpp"

#include <cmath>
#include <stdexcept>

namespace flsm {

void fan_image_shape(const BeamGeometry& g, double meters_per_pixel, int& rows, int& cols) {
    if (meters_per_pixel <= 0.0)
        throw std::invalid_argument("fan_rasterize: meters_per_pixel must be > 0");
    const double vmax = g.max_range * std::sin(g.horizontal_fov / 2.0);
    const int half_w = static_cast<int>(std::ceil(vmax / meters_per_pixel));
    rows = static_cast<int>(std::ceil(g.max_range / meters_per_pixel)) + 1;
    cols = 2 * half_w + 1;
}

FanImage fan_rasterize(const SonarFrame& frame, double meters_per_pixel) {
    const BeamGeometry& g = frame.geometry;
    g.validate();
    int rows = 0, cols = 0;
    fan_image_shape(g, meters_per_pixel, rows, cols);

    FanImage fan;
    fan.meters_per_pixel = meters_per_pixel;
    fan.apex_row = rows - 1;
    fan.apex_col = (cols - 1) / 2;
    fan.image = Image(rows, cols, 0.0);
    fan.mask = Mask(rows, cols, uint8_t{0});

    const int S = g.samples_per_beam;
    const int B = g.num_beams;
    const double half_fov = g.horizontal_fov / 2.0;

    for (int i = 0; i < rows; ++i) {
        const double u = (fan.apex_row - i) * meters_per_pixel;
        for (int j = 0; j < cols; ++j) {
            const double v = (j - fan.apex_col) * meters_per_pixel;
            const double r = std::hypot(u, v);
            if (r < g.min_range || r > g.max_range)
                continue;
            if (r == 0.0) {
                // Apex: bearing undefined; belongs to the fan only when
                // min_range is zero.
                if (g.min_range > 0.0)
                    continue;
            } else {
                const double theta = std::atan2(v, u);
                if (std::abs(theta) > half_fov)
                    continue;
            }
            const double theta = r == 0.0 ? 0.0 : std::atan2(v, u);
            const double sf = (r - g.min_range) / (g.max_range - g.min_range) * (S - 1);
            const double bf = (theta + half_fov) / g.horizontal_fov * (B - 1);

            const int s0 = std::min(static_cast<int>(sf), S - 2);
            const int b0 = std::min(static_cast<int>(bf), B - 2);
            const double ws = sf - s0;
            const double wb = bf - b0;

            double value = 0.0;
            double weight = 0.0;
            const double w[4] = {(1 - ws) * (1 - wb), (1 - ws) * wb, ws * (1 - wb), ws * wb};
            const int ss[4] = {s0, s0, s0 + 1, s0 + 1};
            const int bb[4] = {b0, b0 + 1, b0, b0 + 1};
            for (int k = 0; k < 4; ++k) {
                if (w[k] == 0.0 || !frame.is_valid_at(ss[k], bb[k]))
                    continue;
                value += w[k] * frame.intensities(ss[k], bb[k]);
                weight += w[k];
            }
            if (weight > 0.0) {
                fan.image(i, j) = value / weight;
                fan.mask(i, j) = 1;
            }
        }
    }
    return fan;
}

Image fan_to_polar(const FanImage& fan, const BeamGeometry& g) {
    Image out(g.samples_per_beam, g.num_beams, 0.0);
    const double mpp = fan.meters_per_pixel;
    for (int s = 0; s < g.samples_per_beam; ++s) {
        const double r = g.range_of_sample(s);
        for (int b = 0; b < g.num_beams; ++b) {
            const double theta = g.bearing_of_beam(b);
            const double u = r * std::cos(theta);
            const double v = r * std::sin(theta);
            const double fi = fan.apex_row - u / mpp;
            const double fj = fan.apex_col + v / mpp;
            const int i0 = static_cast<int>(std::floor(fi));
            const int j0 = static_cast<int>(std::floor(fj));
            const double wi = fi - i0;
            const double wj = fj - j0;
            double value = 0.0;
            double weight = 0.0;
            for (int di = 0; di <= 1; ++di) {
                for (int dj = 0; dj <= 1; ++dj) {
                    const int i = i0 + di;
                    const int j = j0 + dj;
                    if (!fan.image.in_bounds(i, j) || !fan.mask(i, j))
                        continue;
                    const double w = (di ? wi : 1 - wi) * (dj ? wj : 1 - wj);
                    value += w * fan.image(i, j);
                    weight += w;
                }
            }
            if (weight > 0.0)
                out(s, b) = value / weight;
        }
    }
    return out;
}

} // namespace flsm
