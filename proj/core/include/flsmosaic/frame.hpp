#pragma once

#include "flsmosaic/geometry.hpp"
#include "flsmosaic/grid.hpp"

#include <memory>

namespace flsm {

/// One polar-format ping: intensities[sample][beam] in [0,1], row 0 at the
/// nearest range. `valid`, when set, marks pixels that carry echo data
/// (blind range bands are masked out at load time); a null mask means all
/// pixels are valid. The mask is shared across a sequence.
struct SonarFrame {
    Image intensities;
    int timestamp_index = 0; // 1-based
    BeamGeometry geometry;
    std::shared_ptr<const Mask> valid;

    bool is_valid_at(int r, int c) const {
        return !valid || (*valid)(r, c) != 0;
    }
    size_t pixel_count() const { return intensities.size(); }
};

enum class PoseSource { odometry, registration, file };

struct PoseRecord {
    int timestamp_index = 0;
    Pose2D pose;
    PoseSource source = PoseSource::odometry;
};

} // namespace flsm
