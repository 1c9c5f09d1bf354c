#include "flsmosaic/mosaic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace flsm {

bool contribution_precedes(const Contribution& a, const Contribution& b) {
    if (a.score != b.score)
        return a.score > b.score;
    if (a.timestamp != b.timestamp)
        return a.timestamp < b.timestamp;
    return a.pixel_index < b.pixel_index;
}

void CellAccumulator::offer(const Contribution& c, int capacity) {
    ++total_count_;
    quant_sum_ += c.quant;
    if (capacity == 0)
        return;
    const bool bounded = capacity != BlendConfig::kUnbounded;
    if (bounded && retained_.size() >= static_cast<size_t>(capacity)) {
        if (!contribution_precedes(c, retained_.back()))
            return;
        retained_.pop_back();
    }
    retained_.insert(
        std::upper_bound(retained_.begin(), retained_.end(), c, contribution_precedes), c);
}

std::optional<double> CellAccumulator::blend(const BlendConfig& cfg) const {
    if (total_count_ == 0)
        return std::nullopt;
    uint64_t sum;
    uint64_t count;
    if (cfg.mode == BlendMode::plain_average) {
        sum = quant_sum_;
        count = total_count_;
    } else {
        sum = 0;
        for (const Contribution& c : retained_)
            sum += c.quant;
        count = retained_.size();
    }
    return static_cast<double>(sum) / static_cast<double>(count) / 65535.0;
}

double CellAccumulator::max_score() const {
    return retained_.empty() ? 0.0 : retained_.front().score;
}

std::optional<double> blend_cell(const CellAccumulator& cell, const BlendConfig& cfg) {
    return cell.blend(cfg);
}

MosaicGrid::MosaicGrid(int rows, int cols, Point2D origin, double meters_per_pixel,
                       BlendConfig cfg)
    : rows_(rows), cols_(cols), origin_(origin), mpp_(meters_per_pixel), cfg_(cfg),
      cells_(rows, cols) {
    if (rows < 1 || cols < 1)
        throw std::invalid_argument("MosaicGrid: need at least one cell");
    if (meters_per_pixel <= 0.0)
        throw std::invalid_argument("MosaicGrid: meters_per_pixel must be > 0");
    if (cfg.l_thres < 1 && cfg.l_thres != BlendConfig::kUnbounded)
        throw std::invalid_argument("MosaicGrid: l_thres must be >= 1 (or kUnbounded)");
}

MosaicGrid MosaicGrid::fit(const BeamGeometry& g, const std::vector<Pose2D>& poses,
                           double meters_per_pixel, BlendConfig cfg, int pad_cells) {
    if (poses.empty())
        throw std::invalid_argument("MosaicGrid::fit: no poses");
    g.validate();

    double min_x = std::numeric_limits<double>::max();
    double min_y = std::numeric_limits<double>::max();
    double max_x = std::numeric_limits<double>::lowest();
    double max_y = std::numeric_limits<double>::lowest();
    auto take = [&](const Point2D& p) {
        min_x = std::min(min_x, p.u);
        max_x = std::max(max_x, p.u);
        min_y = std::min(min_y, p.v);
        max_y = std::max(max_y, p.v);
    };

    // Fan hull: apex plus the outer arc sampled finely enough that the
    // chord error is far below one cell.
    const int arc_steps = 256;
    for (const Pose2D& pose : poses) {
        const Transform2D T = pose.as_transform();
        take(T.apply({0.0, 0.0}));
        for (int i = 0; i <= arc_steps; ++i) {
            const double theta =
                -g.horizontal_fov / 2.0 + i * g.horizontal_fov / arc_steps;
            take(T.apply({g.max_range * std::cos(theta), g.max_range * std::sin(theta)}));
        }
    }

    const double pad = pad_cells * meters_per_pixel;
    const Point2D origin{min_x - pad, min_y - pad};
    const int cols =
        static_cast<int>(std::ceil((max_x - origin.u) / meters_per_pixel)) + 1 + pad_cells;
    const int rows =
        static_cast<int>(std::ceil((max_y - origin.v) / meters_per_pixel)) + 1 + pad_cells;
    return MosaicGrid(rows, cols, origin, meters_per_pixel, cfg);
}

void MosaicGrid::cell_index(const Point2D& world, int& r, int& c) const {
    r = static_cast<int>(std::llround((world.v - origin_.v) / mpp_));
    c = static_cast<int>(std::llround((world.u - origin_.u) / mpp_));
    if (r < 0 || r >= rows_ || c < 0 || c >= cols_)
        throw std::out_of_range("MosaicGrid: scatter outside grid bounds");
}

void MosaicGrid::scatter(const SonarFrame& frame, const ScoreFrame* scores, const Pose2D& pose) {
    const BeamGeometry& g = frame.geometry;
    if (scores && !scores->values.same_shape(frame.intensities))
        throw std::invalid_argument("scatter: score frame shape mismatch");
    if (scores && scores->timestamp_index != frame.timestamp_index)
        throw std::invalid_argument("scatter: score frame timestamp mismatch");
    if (!std::isfinite(pose.x) || !std::isfinite(pose.y) || !std::isfinite(pose.theta))
        throw std::invalid_argument("scatter: non-finite pose");

    std::vector<double> cos_b(g.num_beams), sin_b(g.num_beams);
    for (int b = 0; b < g.num_beams; ++b) {
        const double theta = g.bearing_of_beam(b);
        cos_b[b] = std::cos(theta);
        sin_b[b] = std::sin(theta);
    }
    const double cp = std::cos(pose.theta);
    const double sp = std::sin(pose.theta);

    Contribution contrib;
    contrib.timestamp = static_cast<uint32_t>(frame.timestamp_index);
    for (int s = 0; s < g.samples_per_beam; ++s) {
        const double r = g.range_of_sample(s);
        for (int b = 0; b < g.num_beams; ++b) {
            if (!frame.is_valid_at(s, b))
                continue;
            const double u = r * cos_b[b];
            const double v = r * sin_b[b];
            const Point2D world{cp * u - sp * v + pose.x, sp * u + cp * v + pose.y};
            int cr, cc;
            cell_index(world, cr, cc);

            const double intensity = std::clamp(frame.intensities(s, b), 0.0, 1.0);
            contrib.quant = static_cast<uint16_t>(std::lround(intensity * 65535.0));
            contrib.score = scores ? static_cast<float>(scores->values(s, b)) : 0.0f;
            contrib.pixel_index = static_cast<uint32_t>(s) * g.num_beams + b;
            cells_(cr, cc).offer(contrib, cfg_.l_thres);
        }
    }
}

uint64_t MosaicGrid::total_offered() const {
    uint64_t total = 0;
    for (const CellAccumulator& cell : cells_)
        total += cell.total_count();
    return total;
}

size_t MosaicGrid::max_retained() const {
    size_t m = 0;
    for (const CellAccumulator& cell : cells_)
        m = std::max(m, cell.retained().size());
    return m;
}

std::vector<std::pair<uint64_t, uint64_t>> MosaicGrid::occupancy_histogram() const {
    std::vector<std::pair<uint64_t, uint64_t>> hist;
    for (const CellAccumulator& cell : cells_) {
        const uint64_t n = cell.total_count();
        if (n == 0)
            continue;
        size_t bucket = 0;
        uint64_t bound = 1;
        while (bound < n) {
            bound *= 2;
            ++bucket;
        }
        if (hist.size() <= bucket)
            hist.resize(bucket + 1, {0, 0});
        hist[bucket].second += 1;
    }
    uint64_t bound = 1;
    for (auto& [b, count] : hist) {
        b = bound;
        bound *= 2;
    }
    return hist;
}

MosaicResult finalize(const MosaicGrid& grid, const BlendConfig& cfg) {
    MosaicResult out;
    out.blended = Image(grid.rows(), grid.cols(), 0.0);
    out.valid = Mask(grid.rows(), grid.cols(), uint8_t{0});
    out.coverage = Grid<uint32_t>(grid.rows(), grid.cols(), 0);
    out.origin = grid.origin();
    out.meters_per_pixel = grid.meters_per_pixel();
    for (int r = 0; r < grid.rows(); ++r) {
        for (int c = 0; c < grid.cols(); ++c) {
            const CellAccumulator& cell = grid.cell(r, c);
            out.coverage(r, c) = static_cast<uint32_t>(
                std::min<uint64_t>(cell.total_count(), std::numeric_limits<uint32_t>::max()));
            if (auto v = cell.blend(cfg)) {
                out.blended(r, c) = *v;
                out.valid(r, c) = 1;
            }
        }
    }
    return out;
}

Grid<uint16_t> export_gvm(const MosaicGrid& grid) {
    double max_score = 0.0;
    for (int r = 0; r < grid.rows(); ++r)
        for (int c = 0; c < grid.cols(); ++c)
            max_score = std::max(max_score, grid.cell(r, c).max_score());

    Grid<uint16_t> out(grid.rows(), grid.cols(), 0);
    if (max_score <= 0.0)
        return out;
    for (int r = 0; r < grid.rows(); ++r)
        for (int c = 0; c < grid.cols(); ++c) {
            const double s = grid.cell(r, c).max_score();
            out(r, c) = static_cast<uint16_t>(std::lround(s / max_score * 65535.0));
        }
    return out;
}

} // namespace flsm
