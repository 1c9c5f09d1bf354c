#pragma once

#include "flsmosaic/clahe.hpp"
#include "flsmosaic/frameio.hpp"
#include "flsmosaic/mosaic.hpp"
#include "flsmosaic/registration.hpp"
#include "flsmosaic/statistics.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace flsm {

enum class RunMode { plain, gvm, both };

struct RunConfig {
    std::filesystem::path input_dir;
    std::filesystem::path geometry_file; // empty -> Table-I style defaults
    PoseSource pose_source = PoseSource::odometry;
    std::filesystem::path pose_file;     // used when pose_source == file

    bool clahe_enabled = true;
    double clahe_clip = 2.0;
    TileLayout clahe_tiles{8, 8};

    StatConfig stats;
    int l_thres = 15;
    RunMode mode = RunMode::both;
    double meters_per_pixel = 0.0; // <= 0 -> geometry range resolution

    std::filesystem::path output_dir;
    std::filesystem::path dump_scores_dir; // empty -> no dump
    int threads = 1;
    int stride = 1;
    RegistrationConfig registration;
};

struct StageTime {
    std::string name;
    double seconds = 0.0;
};

struct RunReport {
    int frame_count = 0;
    PoseSource pose_source = PoseSource::odometry;
    int low_confidence_pairs = 0;

    size_t peak_frame_buffer = 0;    // SonarFrames pending scatter
    size_t peak_variance_buffer = 0; // variance ring inside the score buffer
    size_t max_retained_per_cell = 0;
    uint64_t total_contributions = 0;
    uint64_t valid_pixels_scattered = 0;
    std::vector<std::pair<uint64_t, uint64_t>> occupancy_histogram;

    int grid_rows = 0;
    int grid_cols = 0;
    Point2D grid_origin;
    double meters_per_pixel = 0.0;

    std::vector<Pose2D> poses_used;
    std::vector<StageTime> timings; // informational; kept out of the
                                    // deterministic report file

    std::optional<MosaicResult> mosaic_plain;
    std::optional<MosaicResult> mosaic_gvm;
};

/// Executes scan -> poses -> scatter -> blend and writes all artifacts
/// into cfg.output_dir (mosaic[_plain|_gvm].png, mosaic_mask.png,
/// coverage.png, gvm.png, poses_used.csv, manifest.txt, run_report.txt,
/// timings.txt). Outputs are bit-identical for a fixed config and input,
/// independent of cfg.threads.
RunReport run(const RunConfig& cfg);

struct CompareMetrics {
    double contrast_ratio = 0.0; // mean(object) / mean(background annulus)
    double rms_contrast = 0.0;   // rms(object - background mean) / background mean
    double object_mean = 0.0;
    double background_mean = 0.0;
    double object_peak = 0.0;
    size_t object_cells = 0;
    size_t background_cells = 0;
};

/// Projects the per-frame polar object masks through the true poses into
/// grid cells of `georef`.
Mask project_object_cells(const MosaicResult& georef, const BeamGeometry& g,
                          const std::vector<Pose2D>& true_poses,
                          const std::vector<Mask>& object_masks);

/// Object-vs-background statistics of one mosaic. The background region is
/// the annulus within `annulus_radius` cells (Chebyshev) of the object
/// set, minus the object set, intersected with covered cells. Throws when
/// the object region has no covered cells.
CompareMetrics region_metrics(const MosaicResult& mosaic, const Mask& object_cells,
                              int annulus_radius = 12);

/// Side-by-side metrics for two mosaics on one shared grid.
std::pair<CompareMetrics, CompareMetrics> compare(const MosaicResult& a, const MosaicResult& b,
                                                  const BeamGeometry& g,
                                                  const std::vector<Pose2D>& true_poses,
                                                  const std::vector<Mask>& object_masks,
                                                  int annulus_radius = 12);

void write_run_report(const std::filesystem::path& path, const RunReport& report);

} // namespace flsm
