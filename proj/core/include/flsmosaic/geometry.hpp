#pragma once

#include <array>
#include <vector>

namespace flsm {

/// Discretization of the sonar fan: beams sweep the horizontal FOV,
/// samples sweep the range interval. Index mapping is linear with both
/// endpoints inclusive, so the last sample sits exactly at max_range and
/// beam 0 at -fov/2.
struct BeamGeometry {
    int num_beams = 256;
    int samples_per_beam = 373;
    double max_range = 15.0;   // meters
    double min_range = 0.0;    // meters
    double horizontal_fov = 130.0 * 3.14159265358979323846 / 180.0; // radians

    void validate() const;

    double range_of_sample(int sample) const;
    double bearing_of_beam(int beam) const;

    /// Range covered by one sample step; the natural mosaic resolution.
    double range_resolution() const {
        return (max_range - min_range) / (samples_per_beam - 1);
    }

    bool operator==(const BeamGeometry&) const = default;
};

struct SphericalPoint {
    double r = 0.0;     // meters
    double theta = 0.0; // bearing, radians
    double phi = 0.0;   // elevation, radians
};

struct Point2D {
    double u = 0.0; // meters, forward
    double v = 0.0; // meters, starboard
};

struct Point3D {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

/// Wrap an angle to (-pi, pi].
double normalize_angle(double a);

Point3D spherical_to_cartesian(const SphericalPoint& s);

/// Inverse of spherical_to_cartesian. Throws std::domain_error for the
/// origin (bearing undefined).
SphericalPoint cartesian_to_spherical(const Point3D& p);

/// Center of the (beam, sample) bin in sonar-local planar coordinates.
/// Throws std::out_of_range for indices outside the geometry.
Point2D bin_to_point(int beam, int sample, const BeamGeometry& g);

struct Transform2D;

/// Global sonar pose (x, y, heading); theta is kept in (-pi, pi].
struct Pose2D {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;

    Pose2D() = default;
    Pose2D(double x_, double y_, double theta_);

    /// Pose as the local->world transform.
    Transform2D as_transform() const;
};

/// Rigid planar motion: rotation followed by translation.
struct Transform2D {
    double rotation = 0.0; // radians
    double tx = 0.0;       // meters
    double ty = 0.0;       // meters

    static Transform2D identity() { return {}; }

    Point2D apply(const Point2D& p) const;
};

Transform2D compose(const Transform2D& a, const Transform2D& b);
Transform2D invert(const Transform2D& t);

/// Chain pairwise offsets T_t (mapping frame-t coordinates into frame t+1)
/// into global poses: given poses.size() == transforms.size() + 1,
/// P_{t+1} = P_t o T_t^{-1}.
std::vector<Pose2D> pose_chain(const std::vector<Transform2D>& transforms,
                               const Pose2D& initial);

} // namespace flsm
