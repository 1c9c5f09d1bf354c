#pragma once

#include "flsmosaic/frame.hpp"
#include "flsmosaic/grid.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace flsm {

struct SceneObject {
    enum class Shape { rect, disk };
    Shape shape = Shape::disk;
    double x = 0.0; // center, meters
    double y = 0.0;
    double size = 1.0;          // disk diameter / square side, meters
    double reflectivity = 0.9;  // in (0, 1]
};

struct BackgroundSpec {
    double mean = 0.25;
    double amplitude = 0.08; // peak deviation of the correlated texture
    double scale_m = 0.5;    // texture correlation length
    uint64_t seed = 1;
};

/// Ground-truth seabed: a procedural reflectivity field over
/// [0, extent_x] x [0, extent_y] plus hard objects. Reflectivity outside
/// the extent is zero.
class SceneModel {
public:
    SceneModel(double extent_x, double extent_y, BackgroundSpec background,
               std::vector<SceneObject> objects);

    static SceneModel from_json_file(const std::filesystem::path& path);

    double extent_x() const { return extent_x_; }
    double extent_y() const { return extent_y_; }
    const std::vector<SceneObject>& objects() const { return objects_; }
    const BackgroundSpec& background() const { return background_; }

    double reflectivity(double x, double y) const;
    bool inside_object(double x, double y) const;
    double background_max() const { return bg_max_; }

private:
    double extent_x_;
    double extent_y_;
    BackgroundSpec background_;
    std::vector<SceneObject> objects_;
    Image texture_; // realized background lattice
    double lattice_step_;
    double bg_max_ = 0.0;
};

struct DriftSpec {
    double bias_x = 0.0;     // meters per frame, world frame
    double bias_y = 0.0;
    double bias_theta = 0.0; // radians per frame
    double noise_xy = 0.0;   // std dev, meters per frame
    double noise_theta = 0.0;
};

struct TrajectorySpec {
    double start_x = 0.0;
    double start_y = 0.0;
    double leg_length = 10.0;  // meters
    double leg_spacing = 2.0;  // meters between parallel legs
    double speed = 0.05;       // meters advanced per frame
    int n_frames = 2;
    DriftSpec drift;
    uint64_t rng_seed = 0;
};

struct TrajectoryResult {
    std::vector<Pose2D> true_poses;
    std::vector<Pose2D> odom_poses;
};

/// Boustrophedon survey: legs along +x/-x joined by short +y connectors,
/// walked at `speed` meters per frame. Odometry poses are the true poses
/// plus cumulative world-frame drift (bias + seeded Gaussian noise).
TrajectoryResult generate_trajectory(const TrajectorySpec& spec);

struct GainProfile {
    /// Gain sampled uniformly over [0, max_range]; linear interpolation,
    /// single entry = flat.
    std::vector<double> samples{1.0};

    double at(double r, double max_range) const;

    /// Bright mid-range band with dark near/far edges.
    static GainProfile inhomogeneous();
    static GainProfile flat() { return {}; }
};

struct ImagingSpec {
    BeamGeometry geometry;
    double speckle = 0.35;          // multiplicative spread in [0, 1]
    GainProfile gain_profile;
    double saturation_level = 1.0;  // clip point, in (0, 1]

    void validate() const;
};

struct RenderedFrame {
    SonarFrame frame;
    Mask object_mask; // polar bins whose center hits an object
};

/// Renders one ping: intensity = clip(reflectivity * gain(r) * speckle,
/// 0, saturation) / saturation. The speckle draw is unit-mean
/// (1 - w + w * Exp(1)); the RNG substream depends only on (seed, t), so
/// frames may be rendered in any order.
RenderedFrame render_frame(const SceneModel& scene, const Pose2D& pose, const ImagingSpec& spec,
                           int t, uint64_t master_seed);

struct DatasetSpec {
    SceneModel scene;
    TrajectorySpec trajectory;
    ImagingSpec imaging;
    uint64_t master_seed = 0;
};

struct DatasetPaths {
    std::filesystem::path dir;
    std::vector<std::filesystem::path> frames;
    std::vector<std::filesystem::path> masks;
    std::filesystem::path poses_true;
    std::filesystem::path poses_odom;
    std::filesystem::path geometry;
    std::filesystem::path manifest;
};

/// Writes frames (8-bit PGM, zero-padded names), object masks, both pose
/// CSVs, the geometry sidecar and a JSON manifest into `out_dir`, in the
/// exact layout the loader consumes.
DatasetPaths generate_dataset(const DatasetSpec& spec, const std::filesystem::path& out_dir);

/// Seeded value-noise field in [-1, 1], smoothed; shared by the scene
/// texture and test utilities that need structured imagery.
Image smooth_noise(int rows, int cols, uint64_t seed, int smoothing_passes = 2);

/// Per-frame RNG substream seed.
uint64_t substream_seed(uint64_t master_seed, int t);

} // namespace flsm
