#include "flsmosaic/simgen.hpp"

#include "flsmosaic/frameio.hpp"
#include "flsmosaic/image_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

namespace flsm {

namespace {

uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

} // namespace

uint64_t substream_seed(uint64_t master_seed, int t) {
    return splitmix64(master_seed ^ splitmix64(static_cast<uint64_t>(t)));
}

Image smooth_noise(int rows, int cols, uint64_t seed, int smoothing_passes) {
    std::mt19937_64 rng(splitmix64(seed));
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    Image field(rows, cols);
    for (double& v : field)
        v = uni(rng);

    Image tmp(rows, cols);
    for (int pass = 0; pass < smoothing_passes; ++pass) {
        // 3x3 truncated box blur.
        for (int r = 0; r < rows; ++r) {
            for (int c = 0; c < cols; ++c) {
                double s = 0.0;
                int n = 0;
                for (int dr = -1; dr <= 1; ++dr) {
                    for (int dc = -1; dc <= 1; ++dc) {
                        if (!field.in_bounds(r + dr, c + dc))
                            continue;
                        s += field(r + dr, c + dc);
                        ++n;
                    }
                }
                tmp(r, c) = s / n;
            }
        }
        std::swap(field, tmp);
    }

    double peak = 0.0;
    for (double v : field)
        peak = std::max(peak, std::abs(v));
    if (peak > 0.0)
        for (double& v : field)
            v /= peak;
    return field;
}

SceneModel::SceneModel(double extent_x, double extent_y, BackgroundSpec background,
                       std::vector<SceneObject> objects)
    : extent_x_(extent_x), extent_y_(extent_y), background_(background),
      objects_(std::move(objects)) {
    if (extent_x <= 0.0 || extent_y <= 0.0)
        throw std::invalid_argument("SceneModel: extent must be positive");
    if (background_.scale_m <= 0.0)
        throw std::invalid_argument("SceneModel: background scale must be positive");
    for (const SceneObject& o : objects_) {
        if (!(o.reflectivity > 0.0 && o.reflectivity <= 1.0))
            throw std::invalid_argument("SceneModel: object reflectivity must be in (0,1]");
        if (o.x - o.size / 2 < 0 || o.x + o.size / 2 > extent_x_ || o.y - o.size / 2 < 0 ||
            o.y + o.size / 2 > extent_y_)
            throw std::invalid_argument("SceneModel: object outside extent");
    }

    lattice_step_ = background_.scale_m;
    const int lat_cols = static_cast<int>(std::ceil(extent_x_ / lattice_step_)) + 2;
    const int lat_rows = static_cast<int>(std::ceil(extent_y_ / lattice_step_)) + 2;
    texture_ = smooth_noise(lat_rows, lat_cols, background_.seed);

    bg_max_ = 0.0;
    for (double v : texture_)
        bg_max_ = std::max(bg_max_, std::clamp(background_.mean + background_.amplitude * v,
                                               0.0, 1.0));
}

bool SceneModel::inside_object(double x, double y) const {
    for (const SceneObject& o : objects_) {
        const double dx = x - o.x;
        const double dy = y - o.y;
        const double h = o.size / 2.0;
        if (o.shape == SceneObject::Shape::disk) {
            if (dx * dx + dy * dy <= h * h)
                return true;
        } else {
            if (std::abs(dx) <= h && std::abs(dy) <= h)
                return true;
        }
    }
    return false;
}

double SceneModel::reflectivity(double x, double y) const {
    if (x < 0.0 || x > extent_x_ || y < 0.0 || y > extent_y_)
        return 0.0;
    for (const SceneObject& o : objects_) {
        const double dx = x - o.x;
        const double dy = y - o.y;
        const double h = o.size / 2.0;
        if (o.shape == SceneObject::Shape::disk) {
            if (dx * dx + dy * dy <= h * h)
                return o.reflectivity;
        } else {
            if (std::abs(dx) <= h && std::abs(dy) <= h)
                return o.reflectivity;
        }
    }
    // Bilinear lookup of the realized texture.
    const double fx = x / lattice_step_;
    const double fy = y / lattice_step_;
    const int x0 = std::min(static_cast<int>(fx), texture_.cols() - 2);
    const int y0 = std::min(static_cast<int>(fy), texture_.rows() - 2);
    const double wx = fx - x0;
    const double wy = fy - y0;
    const double n = (1 - wy) * ((1 - wx) * texture_(y0, x0) + wx * texture_(y0, x0 + 1)) +
                     wy * ((1 - wx) * texture_(y0 + 1, x0) + wx * texture_(y0 + 1, x0 + 1));
    return std::clamp(background_.mean + background_.amplitude * n, 0.0, 1.0);
}

SceneModel SceneModel::from_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error(path.string() + ": cannot open scene file");
    nlohmann::json j;
    in >> j;

    const auto& extent = j.at("extent");
    BackgroundSpec bg;
    if (j.contains("background")) {
        const auto& b = j.at("background");
        bg.mean = b.value("mean", bg.mean);
        bg.amplitude = b.value("amplitude", bg.amplitude);
        bg.scale_m = b.value("scale_m", bg.scale_m);
        bg.seed = b.value("seed", bg.seed);
    }
    std::vector<SceneObject> objects;
    for (const auto& o : j.value("objects", nlohmann::json::array())) {
        SceneObject obj;
        const std::string shape = o.value("shape", "disk");
        if (shape == "disk")
            obj.shape = SceneObject::Shape::disk;
        else if (shape == "rect")
            obj.shape = SceneObject::Shape::rect;
        else
            throw std::runtime_error(path.string() + ": unknown object shape '" + shape + "'");
        obj.x = o.at("x").get<double>();
        obj.y = o.at("y").get<double>();
        obj.size = o.at("size").get<double>();
        obj.reflectivity = o.at("reflectivity").get<double>();
        objects.push_back(obj);
    }
    return SceneModel(extent.at(0).get<double>(), extent.at(1).get<double>(), bg,
                      std::move(objects));
}

TrajectoryResult generate_trajectory(const TrajectorySpec& spec) {
    if (spec.n_frames < 2)
        throw std::invalid_argument("generate_trajectory: n_frames must be >= 2");
    if (spec.leg_length <= 0.0 || spec.speed <= 0.0)
        throw std::invalid_argument("generate_trajectory: leg_length and speed must be > 0");

    TrajectoryResult out;
    out.true_poses.reserve(spec.n_frames);
    out.odom_poses.reserve(spec.n_frames);

    // Walk the boustrophedon polyline by arc length. Segment pattern:
    // leg (+x or -x), connector (+y), repeating.
    for (int t = 0; t < spec.n_frames; ++t) {
        double s = t * spec.speed;
        int leg = 0;
        while (s > spec.leg_length + spec.leg_spacing - 1e-12) {
            s -= spec.leg_length + spec.leg_spacing;
            ++leg;
        }
        const bool forward = (leg % 2 == 0);
        double x, y, heading;
        const double y_base = spec.start_y + leg * spec.leg_spacing;
        if (s <= spec.leg_length) {
            const double along = forward ? s : spec.leg_length - s;
            x = spec.start_x + along;
            y = y_base;
            heading = forward ? 0.0 : 3.14159265358979323846;
        } else {
            const double up = s - spec.leg_length;
            x = forward ? spec.start_x + spec.leg_length : spec.start_x;
            y = y_base + up;
            heading = 3.14159265358979323846 / 2.0;
        }
        out.true_poses.emplace_back(x, y, heading);
    }

    std::mt19937_64 rng(splitmix64(spec.rng_seed ^ 0x51E5D5B7ULL));
    std::normal_distribution<double> gauss(0.0, 1.0);
    double ex = 0.0, ey = 0.0, etheta = 0.0;
    for (int t = 0; t < spec.n_frames; ++t) {
        ex += spec.drift.bias_x + spec.drift.noise_xy * gauss(rng);
        ey += spec.drift.bias_y + spec.drift.noise_xy * gauss(rng);
        etheta += spec.drift.bias_theta + spec.drift.noise_theta * gauss(rng);
        const Pose2D& p = out.true_poses[t];
        out.odom_poses.emplace_back(p.x + ex, p.y + ey, p.theta + etheta);
    }
    return out;
}

double GainProfile::at(double r, double max_range) const {
    if (samples.empty())
        return 1.0;
    if (samples.size() == 1)
        return samples[0];
    const double f = std::clamp(r / max_range, 0.0, 1.0) * (samples.size() - 1);
    const int i = std::min(static_cast<int>(f), static_cast<int>(samples.size()) - 2);
    const double w = f - i;
    return (1.0 - w) * samples[i] + w * samples[i + 1];
}

GainProfile GainProfile::inhomogeneous() {
    GainProfile p;
    p.samples.clear();
    const int n = 32;
    for (int i = 0; i < n; ++i) {
        const double f = static_cast<double>(i) / (n - 1);
        // Bright band around 0.45 of the range, dim near and far.
        const double d = (f - 0.45) / 0.28;
        p.samples.push_back(0.35 + 0.65 * std::exp(-d * d));
    }
    return p;
}

void ImagingSpec::validate() const {
    geometry.validate();
    if (!(speckle >= 0.0 && speckle <= 1.0))
        throw std::invalid_argument("ImagingSpec: speckle must be in [0, 1]");
    if (!(saturation_level > 0.0 && saturation_level <= 1.0))
        throw std::invalid_argument("ImagingSpec: saturation_level must be in (0, 1]");
    for (double g : gain_profile.samples)
        if (g <= 0.0)
            throw std::invalid_argument("ImagingSpec: gain profile must be positive");
}

RenderedFrame render_frame(const SceneModel& scene, const Pose2D& pose, const ImagingSpec& spec,
                           int t, uint64_t master_seed) {
    spec.validate();
    const BeamGeometry& g = spec.geometry;

    RenderedFrame out;
    out.frame.geometry = g;
    out.frame.timestamp_index = t;
    out.frame.intensities = Image(g.samples_per_beam, g.num_beams, 0.0);
    out.object_mask = Mask(g.samples_per_beam, g.num_beams, uint8_t{0});

    std::mt19937_64 rng(substream_seed(master_seed, t));
    std::exponential_distribution<double> expo(1.0);

    const double cp = std::cos(pose.theta);
    const double sp = std::sin(pose.theta);
    std::vector<double> cos_b(g.num_beams), sin_b(g.num_beams);
    for (int b = 0; b < g.num_beams; ++b) {
        const double theta = g.bearing_of_beam(b);
        cos_b[b] = std::cos(theta);
        sin_b[b] = std::sin(theta);
    }

    const double w = spec.speckle;
    for (int s = 0; s < g.samples_per_beam; ++s) {
        const double r = g.range_of_sample(s);
        const double gain = spec.gain_profile.at(r, g.max_range);
        for (int b = 0; b < g.num_beams; ++b) {
            const double u = r * cos_b[b];
            const double v = r * sin_b[b];
            const double wx = cp * u - sp * v + pose.x;
            const double wy = sp * u + cp * v + pose.y;
            const double rho = scene.reflectivity(wx, wy);
            const double speckle_draw = 1.0 - w + w * expo(rng);
            const double signal = rho * gain * speckle_draw;
            out.frame.intensities(s, b) =
                std::clamp(signal, 0.0, spec.saturation_level) / spec.saturation_level;
            if (scene.inside_object(wx, wy))
                out.object_mask(s, b) = 1;
        }
    }
    return out;
}

DatasetPaths generate_dataset(const DatasetSpec& spec, const std::filesystem::path& out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (!fs::is_directory(out_dir))
        throw std::runtime_error(out_dir.string() + ": cannot create output directory");

    const TrajectoryResult traj = generate_trajectory(spec.trajectory);
    const int n = spec.trajectory.n_frames;

    DatasetPaths paths;
    paths.dir = out_dir;

    auto name = [](const char* prefix, int t) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%s_%05d.pgm", prefix, t);
        return std::string(buf);
    };

    for (int t = 1; t <= n; ++t) {
        const RenderedFrame rendered =
            render_frame(spec.scene, traj.true_poses[t - 1], spec.imaging, t, spec.master_seed);
        const fs::path frame_path = out_dir / name("frame", t);
        write_pgm(frame_path, to_u8(rendered.frame.intensities));
        paths.frames.push_back(frame_path);

        Grid<uint8_t> mask_img(rendered.object_mask.rows(), rendered.object_mask.cols());
        for (size_t i = 0; i < mask_img.size(); ++i)
            mask_img.data()[i] = rendered.object_mask.data()[i] ? 255 : 0;
        const fs::path mask_path = out_dir / "masks" / name("mask", t);
        fs::create_directories(out_dir / "masks", ec);
        write_pgm(mask_path, mask_img);
        paths.masks.push_back(mask_path);
    }

    auto to_records = [](const std::vector<Pose2D>& poses, PoseSource source) {
        std::vector<PoseRecord> recs;
        recs.reserve(poses.size());
        for (size_t i = 0; i < poses.size(); ++i)
            recs.push_back({static_cast<int>(i) + 1, poses[i], source});
        return recs;
    };
    paths.poses_true = out_dir / "poses_true.csv";
    paths.poses_odom = out_dir / "poses_odom.csv";
    write_pose_csv(paths.poses_true, to_records(traj.true_poses, PoseSource::odometry));
    write_pose_csv(paths.poses_odom, to_records(traj.odom_poses, PoseSource::odometry));

    paths.geometry = out_dir / "geometry.txt";
    write_geometry_sidecar(paths.geometry, spec.imaging.geometry);

    nlohmann::json manifest;
    manifest["master_seed"] = spec.master_seed;
    manifest["n_frames"] = n;
    manifest["trajectory"] = {{"start_x", spec.trajectory.start_x},
                              {"start_y", spec.trajectory.start_y},
                              {"leg_length", spec.trajectory.leg_length},
                              {"leg_spacing", spec.trajectory.leg_spacing},
                              {"speed", spec.trajectory.speed},
                              {"rng_seed", spec.trajectory.rng_seed}};
    manifest["drift"] = {{"bias_x", spec.trajectory.drift.bias_x},
                         {"bias_y", spec.trajectory.drift.bias_y},
                         {"bias_theta", spec.trajectory.drift.bias_theta},
                         {"noise_xy", spec.trajectory.drift.noise_xy},
                         {"noise_theta", spec.trajectory.drift.noise_theta}};
    manifest["imaging"] = {{"speckle", spec.imaging.speckle},
                           {"saturation_level", spec.imaging.saturation_level},
                           {"gain_samples", spec.imaging.gain_profile.samples}};
    manifest["scene"] = {{"extent", {spec.scene.extent_x(), spec.scene.extent_y()}},
                         {"background",
                          {{"mean", spec.scene.background().mean},
                           {"amplitude", spec.scene.background().amplitude},
                           {"scale_m", spec.scene.background().scale_m},
                           {"seed", spec.scene.background().seed}}}};
    nlohmann::json objs = nlohmann::json::array();
    for (const SceneObject& o : spec.scene.objects()) {
        objs.push_back({{"shape", o.shape == SceneObject::Shape::disk ? "disk" : "rect"},
                        {"x", o.x},
                        {"y", o.y},
                        {"size", o.size},
                        {"reflectivity", o.reflectivity}});
    }
    manifest["scene"]["objects"] = objs;

    paths.manifest = out_dir / "manifest.json";
    std::ofstream mf(paths.manifest);
    if (!mf)
        throw std::runtime_error(paths.manifest.string() + ": cannot write manifest");
    mf << manifest.dump(2) << "\n";

    return paths;
}

} // namespace flsm
