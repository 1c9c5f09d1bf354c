#pragma once

#include "flsmosaic/frame.hpp"
#include "flsmosaic/grid.hpp"
#include "flsmosaic/statistics.hpp"

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace flsm {

enum class BlendMode { plain_average, gvm_topk };

struct BlendConfig {
    int l_thres = 15; // contributions kept per cell; kUnbounded keeps all
    BlendMode mode = BlendMode::gvm_topk;

    static constexpr int kUnbounded = -1;
};

/// One retained cell entry. Intensity is stored quantized to 16 bits so
/// that both blend modes reduce to integer sums, which are exactly
/// order-independent; scores only rank entries and never enter the
/// average.
struct Contribution {
    float score = 0.0f;
    uint32_t timestamp = 0;
    uint32_t pixel_index = 0;
    uint16_t quant = 0; // round(intensity * 65535)
};

/// Ranking: higher score first, then earlier timestamp, then lower pixel
/// index. (timestamp, pixel_index) is unique, so this is a total order and
/// the retained set is independent of insertion order.
bool contribution_precedes(const Contribution& a, const Contribution& b);

class CellAccumulator {
public:
    /// Records the offer in the running totals and keeps it only if it
    /// ranks in the current top-capacity set.
    void offer(const Contribution& c, int capacity);

    uint64_t total_count() const { return total_count_; }
    uint64_t quant_sum() const { return quant_sum_; }
    const std::vector<Contribution>& retained() const { return retained_; }
    bool empty() const { return total_count_ == 0; }

    std::optional<double> blend(const BlendConfig& cfg) const;

    /// Highest retained score, 0 for an empty cell.
    double max_score() const;

private:
    std::vector<Contribution> retained_; // sorted best-first
    uint64_t total_count_ = 0;
    uint64_t quant_sum_ = 0;
};

std::optional<double> blend_cell(const CellAccumulator& cell, const BlendConfig& cfg);

class MosaicGrid {
public:
    MosaicGrid(int rows, int cols, Point2D origin, double meters_per_pixel, BlendConfig cfg);

    /// Axis-aligned bounding grid of every fan footprint under `poses`,
    /// padded by `pad_cells` on each side.
    static MosaicGrid fit(const BeamGeometry& g, const std::vector<Pose2D>& poses,
                          double meters_per_pixel, BlendConfig cfg, int pad_cells = 1);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    Point2D origin() const { return origin_; }
    double meters_per_pixel() const { return mpp_; }
    const BlendConfig& blend_config() const { return cfg_; }

    const CellAccumulator& cell(int r, int c) const { return cells_.at(r, c); }

    /// Nearest cell of a world point; throws std::out_of_range outside the
    /// grid (the grid is pre-sized from the pose envelope, so this is a
    /// caller bug).
    void cell_index(const Point2D& world, int& r, int& c) const;

    /// Scatters every valid polar pixel of the frame into the grid.
    /// `scores` may be null (entries rank with score 0); when present it
    /// must be aligned with the frame.
    void scatter(const SonarFrame& frame, const ScoreFrame* scores, const Pose2D& pose);

    uint64_t total_offered() const;
    size_t max_retained() const;
    /// Pairs of (occupancy upper bound, number of nonempty cells with
    /// total_count <= bound), at power-of-two bounds.
    std::vector<std::pair<uint64_t, uint64_t>> occupancy_histogram() const;

private:
    int rows_;
    int cols_;
    Point2D origin_; // world position of cell (0,0)
    double mpp_;
    BlendConfig cfg_;
    Grid<CellAccumulator> cells_;
};

/// Blended mosaic plus georeferencing; `blended` is 0 where `valid` is 0.
struct MosaicResult {
    Image blended;
    Mask valid;
    Grid<uint32_t> coverage; // total_count per cell, saturated at 2^32-1
    Point2D origin;
    double meters_per_pixel = 0.0;
};

MosaicResult finalize(const MosaicGrid& grid, const BlendConfig& cfg);

/// Per-cell maximum retained score mapped linearly onto 16 bits by the
/// global maximum (all-zero if the grid saw no scores).
Grid<uint16_t> export_gvm(const MosaicGrid& grid);

} // namespace flsm
