#include "flsmosaic/pipeline.hpp"

#include "flsmosaic/fan.hpp"
#include "flsmosaic/image_io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <fstream>
#include <future>
#include <map>
#include <stdexcept>

namespace flsm {

namespace fs = std::filesystem;

namespace {

class StageClock {
public:
    explicit StageClock(std::vector<StageTime>& sink) : sink_(sink) {}
    void start(std::string name) {
        finish();
        current_ = std::move(name);
        t0_ = std::chrono::steady_clock::now();
    }
    void finish() {
        if (current_.empty())
            return;
        const auto dt = std::chrono::steady_clock::now() - t0_;
        sink_.push_back({current_, std::chrono::duration<double>(dt).count()});
        current_.clear();
    }

private:
    std::vector<StageTime>& sink_;
    std::string current_;
    std::chrono::steady_clock::time_point t0_;
};

struct SelectedFrame {
    fs::path path;
    int original_index = 0; // 1-based position in the directory listing
    int t = 0;              // 1-based position within the run
};

std::vector<SelectedFrame> select_frames(const RunConfig& cfg) {
    const auto files = list_frame_files(cfg.input_dir);
    if (files.empty())
        throw std::runtime_error(cfg.input_dir.string() + ": no frame files (.pgm/.png) found");
    if (cfg.stride < 1)
        throw std::invalid_argument("run: stride must be >= 1");
    std::vector<SelectedFrame> out;
    for (size_t i = 0; i < files.size(); i += cfg.stride)
        out.push_back({files[i], static_cast<int>(i) + 1, static_cast<int>(out.size()) + 1});
    if (out.size() < 2)
        throw std::runtime_error("run: need at least 2 frames after stride selection");
    return out;
}

// Shared blind-band scan without keeping frames resident.
std::shared_ptr<const Mask> scan_blind_mask(const std::vector<SelectedFrame>& frames,
                                            const BeamGeometry& g) {
    std::vector<uint64_t> zero_count(g.samples_per_beam, 0);
    for (const SelectedFrame& sel : frames) {
        const SonarFrame f = load_frame(sel.path, g, sel.t);
        for (int r = 0; r < g.samples_per_beam; ++r) {
            uint64_t zeros = 0;
            for (int c = 0; c < g.num_beams; ++c)
                if (f.intensities(r, c) == 0.0)
                    ++zeros;
            zero_count[r] += zeros;
        }
    }
    const double denom = static_cast<double>(frames.size()) * g.num_beams;
    auto blind = [&](int r) { return zero_count[r] / denom >= 0.99; };
    int lo = 0;
    while (lo < g.samples_per_beam && blind(lo))
        ++lo;
    int hi = g.samples_per_beam - 1;
    while (hi >= lo && blind(hi))
        --hi;
    if (lo == 0 && hi == g.samples_per_beam - 1)
        return nullptr;
    auto mask = std::make_shared<Mask>(g.samples_per_beam, g.num_beams, uint8_t{0});
    for (int r = lo; r <= hi; ++r)
        for (int c = 0; c < g.num_beams; ++c)
            (*mask)(r, c) = 1;
    return mask;
}

SonarFrame load_prepared(const fs::path& path, const BeamGeometry& g, int t,
                         const std::shared_ptr<const Mask>& mask, const RunConfig& cfg) {
    SonarFrame frame = load_frame(path, g, t);
    frame.valid = mask;
    if (cfg.clahe_enabled)
        frame = clahe(frame, cfg.clahe_clip, cfg.clahe_tiles);
    return frame;
}

// Ordered prefetch: keeps at most `threads` loads in flight, results
// consumed strictly in submission order so outputs cannot depend on the
// thread count.
class FramePipeline {
public:
    FramePipeline(const std::vector<SelectedFrame>& frames, const BeamGeometry& g,
                  std::shared_ptr<const Mask> mask, const RunConfig& cfg)
        : frames_(frames), geometry_(g), mask_(std::move(mask)), cfg_(cfg) {}

    bool done() const { return next_out_ >= frames_.size(); }

    SonarFrame next() {
        if (cfg_.threads <= 1) {
            const SelectedFrame& sel = frames_[next_out_++];
            return load_prepared(sel.path, geometry_, sel.t, mask_, cfg_);
        }
        while (next_submit_ < frames_.size() &&
               next_submit_ < next_out_ + static_cast<size_t>(cfg_.threads)) {
            const SelectedFrame& sel = frames_[next_submit_++];
            inflight_.push_back(std::async(std::launch::async, [this, sel] {
                return load_prepared(sel.path, geometry_, sel.t, mask_, cfg_);
            }));
        }
        SonarFrame frame = inflight_.front().get();
        inflight_.pop_front();
        ++next_out_;
        return frame;
    }

private:
    const std::vector<SelectedFrame>& frames_;
    BeamGeometry geometry_;
    std::shared_ptr<const Mask> mask_;
    const RunConfig& cfg_;
    size_t next_submit_ = 0;
    size_t next_out_ = 0;
    std::deque<std::future<SonarFrame>> inflight_;
};

std::vector<Pose2D> poses_from_records(const std::vector<PoseRecord>& records,
                                       const std::vector<SelectedFrame>& frames,
                                       const fs::path& source) {
    std::map<int, Pose2D> by_t;
    for (const PoseRecord& rec : records)
        by_t[rec.timestamp_index] = rec.pose;
    std::vector<Pose2D> out;
    out.reserve(frames.size());
    for (const SelectedFrame& sel : frames) {
        auto it = by_t.find(sel.original_index);
        if (it == by_t.end())
            throw std::runtime_error(source.string() + ": no pose for frame index " +
                                     std::to_string(sel.original_index));
        out.push_back(it->second);
    }
    return out;
}

uint64_t count_valid(const SonarFrame& frame) {
    if (!frame.valid)
        return frame.intensities.size();
    uint64_t n = 0;
    for (uint8_t v : *frame.valid)
        n += v != 0;
    return n;
}

void dump_score_frames(const fs::path& dir, const std::vector<ScoreFrame>& scores) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    double global_max = 0.0;
    for (const ScoreFrame& s : scores)
        for (double v : s.values)
            global_max = std::max(global_max, v);
    for (const ScoreFrame& s : scores) {
        Grid<uint16_t> img(s.values.rows(), s.values.cols(), 0);
        if (global_max > 0.0)
            for (size_t i = 0; i < s.values.size(); ++i)
                img.data()[i] = static_cast<uint16_t>(
                    std::lround(s.values.data()[i] / global_max * 65535.0));
        char name[32];
        std::snprintf(name, sizeof(name), "score_%05d.png", s.timestamp_index);
        write_png16(dir / name, img);
    }
}

std::string pose_source_name(PoseSource s) {
    switch (s) {
    case PoseSource::odometry:
        return "odometry";
    case PoseSource::registration:
        return "registration";
    case PoseSource::file:
        return "file";
    }
    return "?";
}

void write_manifest(const fs::path& path, const RunConfig& cfg, const BeamGeometry& g,
                    const RunReport& report) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error(path.string() + ": cannot write manifest");
    out.precision(17);
    out << "pose_source = " << pose_source_name(cfg.pose_source) << "\n";
    out << "mode = "
        << (cfg.mode == RunMode::both ? "both" : cfg.mode == RunMode::plain ? "plain" : "gvm")
        << "\n";
    out << "clahe = " << (cfg.clahe_enabled ? 1 : 0) << "\n";
    out << "clahe_clip = " << cfg.clahe_clip << "\n";
    out << "clahe_tiles = " << cfg.clahe_tiles.rows << "x" << cfg.clahe_tiles.cols << "\n";
    out << "spatial_window = " << cfg.stats.spatial_window << "\n";
    out << "ls = " << cfg.stats.short_window << "\n";
    out << "ll = " << cfg.stats.long_window << "\n";
    out << "beta = " << cfg.stats.background_gain << "\n";
    out << "lthres = " << cfg.l_thres << "\n";
    out << "stride = " << cfg.stride << "\n";
    out << "num_beams = " << g.num_beams << "\n";
    out << "samples_per_beam = " << g.samples_per_beam << "\n";
    out << "max_range_m = " << g.max_range << "\n";
    out << "min_range_m = " << g.min_range << "\n";
    out << "fov_deg = " << g.horizontal_fov * 180.0 / 3.14159265358979323846 << "\n";
    out << "meters_per_pixel = " << report.meters_per_pixel << "\n";
    out << "grid_origin_x = " << report.grid_origin.u << "\n";
    out << "grid_origin_y = " << report.grid_origin.v << "\n";
    out << "grid_rows = " << report.grid_rows << "\n";
    out << "grid_cols = " << report.grid_cols << "\n";
}

} // namespace

void write_run_report(const fs::path& path, const RunReport& report) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error(path.string() + ": cannot write run report");
    out << "frames = " << report.frame_count << "\n";
    out << "pose_source = " << pose_source_name(report.pose_source) << "\n";
    out << "low_confidence_pairs = " << report.low_confidence_pairs << "\n";
    out << "peak_frame_buffer = " << report.peak_frame_buffer << "\n";
    out << "peak_variance_buffer = " << report.peak_variance_buffer << "\n";
    out << "max_retained_per_cell = " << report.max_retained_per_cell << "\n";
    out << "total_contributions = " << report.total_contributions << "\n";
    out << "valid_pixels_scattered = " << report.valid_pixels_scattered << "\n";
    out << "occupancy_histogram =";
    for (const auto& [bound, cells] : report.occupancy_histogram)
        out << " <=" << bound << ":" << cells;
    out << "\n";
}

RunReport run(const RunConfig& cfg) {
    RunReport report;
    StageClock clock(report.timings);

    const BeamGeometry geometry =
        cfg.geometry_file.empty() ? BeamGeometry{} : read_geometry_sidecar(cfg.geometry_file);
    geometry.validate();
    cfg.stats.validate();
    if (cfg.threads < 1)
        throw std::invalid_argument("run: threads must be >= 1");
    const double mpp =
        cfg.meters_per_pixel > 0.0 ? cfg.meters_per_pixel : geometry.range_resolution();

    const auto frames = select_frames(cfg);
    report.frame_count = static_cast<int>(frames.size());
    report.pose_source = cfg.pose_source;
    report.meters_per_pixel = mpp;

    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    if (!fs::is_directory(cfg.output_dir))
        throw std::runtime_error(cfg.output_dir.string() + ": cannot create output directory");

    // --- scan: sequence-wide blind-band mask ---
    clock.start("scan");
    const std::shared_ptr<const Mask> mask = scan_blind_mask(frames, geometry);

    // --- poses ---
    clock.start("poses");
    std::vector<Pose2D> poses;
    std::vector<Pose2D> odom_poses; // registration fallback, when available
    const fs::path odom_path = cfg.input_dir / "poses_odom.csv";
    if (cfg.pose_source == PoseSource::odometry) {
        poses = poses_from_records(read_pose_csv(odom_path, PoseSource::odometry), frames,
                                   odom_path);
    } else if (cfg.pose_source == PoseSource::file) {
        if (cfg.pose_file.empty())
            throw std::invalid_argument("run: pose_source=file requires a pose file path");
        poses = poses_from_records(read_pose_csv(cfg.pose_file, PoseSource::file), frames,
                                   cfg.pose_file);
    } else {
        if (fs::exists(odom_path)) {
            odom_poses = poses_from_records(read_pose_csv(odom_path, PoseSource::odometry),
                                            frames, odom_path);
        }
        std::vector<Transform2D> transforms;
        transforms.reserve(frames.size() - 1);
        FramePipeline loader(frames, geometry, mask, cfg);
        SonarFrame prev = loader.next();
        int t = 1;
        while (!loader.done()) {
            SonarFrame cur = loader.next();
            ++t;
            PairRegistration reg = register_pair(prev, cur, cfg.registration, mpp);
            if (reg.low_confidence) {
                ++report.low_confidence_pairs;
                if (!odom_poses.empty()) {
                    // Relative odometry motion for this pair.
                    const Transform2D ga = odom_poses[t - 2].as_transform();
                    const Transform2D gb = odom_poses[t - 1].as_transform();
                    reg.transform = compose(invert(gb), ga);
                } else {
                    reg.transform = Transform2D::identity();
                }
            }
            transforms.push_back(reg.transform);
            prev = std::move(cur);
        }
        const Pose2D initial = odom_poses.empty() ? Pose2D{} : odom_poses.front();
        poses = pose_chain(transforms, initial);
    }
    report.poses_used = poses;

    // --- scatter ---
    clock.start("scatter");
    const bool need_scores = cfg.mode != RunMode::plain;
    BlendConfig grid_cfg;
    grid_cfg.l_thres = cfg.l_thres;
    MosaicGrid grid = MosaicGrid::fit(geometry, poses, mpp, grid_cfg, 2);
    report.grid_rows = grid.rows();
    report.grid_cols = grid.cols();
    report.grid_origin = grid.origin();

    const bool dump_scores = !cfg.dump_scores_dir.empty() && need_scores;
    std::vector<ScoreFrame> dumped;

    FramePipeline loader(frames, geometry, mask, cfg);
    if (need_scores) {
        StreamingScoreBuffer buffer(cfg.stats);
        std::deque<SonarFrame> pending;
        auto drain = [&] {
            while (buffer.has_ready()) {
                ScoreFrame score = buffer.pop();
                if (pending.empty() ||
                    pending.front().timestamp_index != score.timestamp_index)
                    throw std::logic_error("run: score/frame stream desynchronized");
                report.valid_pixels_scattered += count_valid(pending.front());
                grid.scatter(pending.front(), &score, poses[score.timestamp_index - 1]);
                pending.pop_front();
                if (dump_scores)
                    dumped.push_back(std::move(score));
            }
        };
        while (!loader.done()) {
            SonarFrame frame = loader.next();
            buffer.push(frame);
            pending.push_back(std::move(frame));
            report.peak_frame_buffer = std::max(report.peak_frame_buffer, pending.size());
            report.peak_variance_buffer =
                std::max(report.peak_variance_buffer, buffer.resident_variance_frames());
            drain();
        }
        buffer.flush();
        drain();
        report.peak_variance_buffer =
            std::max(report.peak_variance_buffer, buffer.peak_resident_variance_frames());
    } else {
        int i = 0;
        while (!loader.done()) {
            SonarFrame frame = loader.next();
            report.valid_pixels_scattered += count_valid(frame);
            grid.scatter(frame, nullptr, poses[i++]);
            report.peak_frame_buffer = std::max<size_t>(report.peak_frame_buffer, 1);
        }
    }
    report.total_contributions = grid.total_offered();
    report.max_retained_per_cell = grid.max_retained();
    report.occupancy_histogram = grid.occupancy_histogram();

    // --- blend + outputs ---
    clock.start("blend");
    BlendConfig plain_cfg = grid_cfg;
    plain_cfg.mode = BlendMode::plain_average;
    BlendConfig gvm_cfg = grid_cfg;
    gvm_cfg.mode = BlendMode::gvm_topk;

    auto write_mosaic = [&](const MosaicResult& m, const fs::path& path) {
        write_png(path, to_u8(m.blended));
    };

    if (cfg.mode == RunMode::plain || cfg.mode == RunMode::both) {
        report.mosaic_plain = finalize(grid, plain_cfg);
        const fs::path path =
            cfg.output_dir / (cfg.mode == RunMode::both ? "mosaic_plain.png" : "mosaic.png");
        write_mosaic(*report.mosaic_plain, path);
    }
    if (cfg.mode == RunMode::gvm || cfg.mode == RunMode::both) {
        report.mosaic_gvm = finalize(grid, gvm_cfg);
        const fs::path path =
            cfg.output_dir / (cfg.mode == RunMode::both ? "mosaic_gvm.png" : "mosaic.png");
        write_mosaic(*report.mosaic_gvm, path);
    }

    const MosaicResult& any =
        report.mosaic_gvm ? *report.mosaic_gvm : *report.mosaic_plain;
    Grid<uint8_t> mask_img(any.valid.rows(), any.valid.cols());
    for (size_t i = 0; i < any.valid.size(); ++i)
        mask_img.data()[i] = any.valid.data()[i] ? 255 : 0;
    write_png(cfg.output_dir / "mosaic_mask.png", mask_img);

    Grid<uint16_t> coverage(any.coverage.rows(), any.coverage.cols());
    for (size_t i = 0; i < any.coverage.size(); ++i)
        coverage.data()[i] = static_cast<uint16_t>(std::min<uint32_t>(any.coverage.data()[i],
                                                                      65535u));
    write_png16(cfg.output_dir / "coverage.png", coverage);

    if (need_scores)
        write_png16(cfg.output_dir / "gvm.png", export_gvm(grid));

    if (dump_scores)
        dump_score_frames(cfg.dump_scores_dir, dumped);

    std::vector<PoseRecord> used;
    for (size_t i = 0; i < poses.size(); ++i)
        used.push_back({static_cast<int>(i) + 1, poses[i], cfg.pose_source});
    write_pose_csv(cfg.output_dir / "poses_used.csv", used);

    write_manifest(cfg.output_dir / "manifest.txt", cfg, geometry, report);
    write_run_report(cfg.output_dir / "run_report.txt", report);

    clock.finish();
    std::ofstream times(cfg.output_dir / "timings.txt");
    for (const StageTime& st : report.timings)
        times << st.name << " = " << st.seconds << " s\n";

    return report;
}

Mask project_object_cells(const MosaicResult& georef, const BeamGeometry& g,
                          const std::vector<Pose2D>& true_poses,
                          const std::vector<Mask>& object_masks) {
    if (true_poses.size() != object_masks.size())
        throw std::invalid_argument("project_object_cells: pose/mask count mismatch");
    Mask cells(georef.blended.rows(), georef.blended.cols(), uint8_t{0});
    for (size_t i = 0; i < true_poses.size(); ++i) {
        const Mask& m = object_masks[i];
        const double cp = std::cos(true_poses[i].theta);
        const double sp = std::sin(true_poses[i].theta);
        for (int s = 0; s < m.rows(); ++s) {
            const double r = g.range_of_sample(s);
            for (int b = 0; b < m.cols(); ++b) {
                if (!m(s, b))
                    continue;
                const double theta = g.bearing_of_beam(b);
                const double u = r * std::cos(theta);
                const double v = r * std::sin(theta);
                const double wx = cp * u - sp * v + true_poses[i].x;
                const double wy = sp * u + cp * v + true_poses[i].y;
                const int row =
                    static_cast<int>(std::llround((wy - georef.origin.v) / georef.meters_per_pixel));
                const int col =
                    static_cast<int>(std::llround((wx - georef.origin.u) / georef.meters_per_pixel));
                if (cells.in_bounds(row, col))
                    cells(row, col) = 1;
            }
        }
    }
    return cells;
}

CompareMetrics region_metrics(const MosaicResult& mosaic, const Mask& object_cells,
                              int annulus_radius) {
    if (!object_cells.same_shape(mosaic.valid))
        throw std::invalid_argument("region_metrics: mask/mosaic shape mismatch");

    // Chebyshev dilation of the object set, bounded by the radius.
    Mask near(object_cells.rows(), object_cells.cols(), uint8_t{0});
    for (int r = 0; r < object_cells.rows(); ++r) {
        for (int c = 0; c < object_cells.cols(); ++c) {
            if (!object_cells(r, c))
                continue;
            for (int dr = -annulus_radius; dr <= annulus_radius; ++dr) {
                for (int dc = -annulus_radius; dc <= annulus_radius; ++dc) {
                    if (near.in_bounds(r + dr, c + dc))
                        near(r + dr, c + dc) = 1;
                }
            }
        }
    }

    CompareMetrics m;
    double obj_sum = 0.0, bg_sum = 0.0;
    for (int r = 0; r < object_cells.rows(); ++r) {
        for (int c = 0; c < object_cells.cols(); ++c) {
            if (!mosaic.valid(r, c))
                continue;
            if (object_cells(r, c)) {
                obj_sum += mosaic.blended(r, c);
                m.object_peak = std::max(m.object_peak, mosaic.blended(r, c));
                ++m.object_cells;
            } else if (near(r, c)) {
                bg_sum += mosaic.blended(r, c);
                ++m.background_cells;
            }
        }
    }
    if (m.object_cells == 0)
        throw std::runtime_error("region_metrics: empty object region");
    if (m.background_cells == 0)
        throw std::runtime_error("region_metrics: empty background annulus");

    m.object_mean = obj_sum / m.object_cells;
    m.background_mean = bg_sum / m.background_cells;
    m.contrast_ratio = m.object_mean / m.background_mean;

    double sq = 0.0;
    for (int r = 0; r < object_cells.rows(); ++r)
        for (int c = 0; c < object_cells.cols(); ++c)
            if (mosaic.valid(r, c) && object_cells(r, c)) {
                const double d = mosaic.blended(r, c) - m.background_mean;
                sq += d * d;
            }
    m.rms_contrast = std::sqrt(sq / m.object_cells) / m.background_mean;
    return m;
}

std::pair<CompareMetrics, CompareMetrics> compare(const MosaicResult& a, const MosaicResult& b,
                                                  const BeamGeometry& g,
                                                  const std::vector<Pose2D>& true_poses,
                                                  const std::vector<Mask>& object_masks,
                                                  int annulus_radius) {
    if (!a.blended.same_shape(b.blended) || a.meters_per_pixel != b.meters_per_pixel ||
        a.origin.u != b.origin.u || a.origin.v != b.origin.v)
        throw std::invalid_argument("compare: mosaics do not share a grid");
    const Mask object_cells = project_object_cells(a, g, true_poses, object_masks);
    return {region_metrics(a, object_cells, annulus_radius),
            region_metrics(b, object_cells, annulus_radius)};
}

} // namespace flsm
