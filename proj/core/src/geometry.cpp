#include "flsmosaic/geometry.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace flsm {

namespace {
constexpr double kPi = std::numbers::pi;
}

void BeamGeometry::validate() const {
    if (num_beams < 2)
        throw std::invalid_argument("BeamGeometry: num_beams must be >= 2");
    if (samples_per_beam < 2)
        throw std::invalid_argument("BeamGeometry: samples_per_beam must be >= 2");
    if (!(min_range >= 0.0 && min_range < max_range))
        throw std::invalid_argument("BeamGeometry: need 0 <= min_range < max_range");
    if (!(horizontal_fov > 0.0 && horizontal_fov < kPi))
        throw std::invalid_argument("BeamGeometry: horizontal_fov must be in (0, pi)");
}

double BeamGeometry::range_of_sample(int sample) const {
    return min_range + sample * (max_range - min_range) / (samples_per_beam - 1);
}

double BeamGeometry::bearing_of_beam(int beam) const {
    return -horizontal_fov / 2.0 + beam * horizontal_fov / (num_beams - 1);
}

double normalize_angle(double a) {
    a = std::fmod(a, 2.0 * kPi);
    if (a <= -kPi)
        a += 2.0 * kPi;
    else if (a > kPi)
        a -= 2.0 * kPi;
    return a;
}

Point3D spherical_to_cartesian(const SphericalPoint& s) {
    const double cp = std::cos(s.phi);
    return {s.r * std::cos(s.theta) * cp,
            s.r * std::sin(s.theta) * cp,
            s.r * std::sin(s.phi)};
}

SphericalPoint cartesian_to_spherical(const Point3D& p) {
    const double rho = std::hypot(p.x, p.y);
    const double r = std::hypot(rho, p.z);
    if (r == 0.0)
        throw std::domain_error("cartesian_to_spherical: undefined bearing at origin");
    return {r, std::atan2(p.y, p.x), std::atan2(p.z, rho)};
}

Point2D bin_to_point(int beam, int sample, const BeamGeometry& g) {
    if (beam < 0 || beam >= g.num_beams)
        throw std::out_of_range("bin_to_point: beam index out of range");
    if (sample < 0 || sample >= g.samples_per_beam)
        throw std::out_of_range("bin_to_point: sample index out of range");
    const double r = g.range_of_sample(sample);
    const double theta = g.bearing_of_beam(beam);
    return {r * std::cos(theta), r * std::sin(theta)};
}

Pose2D::Pose2D(double x_, double y_, double theta_)
    : x(x_), y(y_), theta(normalize_angle(theta_)) {}

Transform2D Pose2D::as_transform() const {
    return {theta, x, y};
}

Point2D Transform2D::apply(const Point2D& p) const {
    const double c = std::cos(rotation);
    const double s = std::sin(rotation);
    return {c * p.u - s * p.v + tx, s * p.u + c * p.v + ty};
}

Transform2D compose(const Transform2D& a, const Transform2D& b) {
    const double c = std::cos(a.rotation);
    const double s = std::sin(a.rotation);
    return {normalize_angle(a.rotation + b.rotation),
            c * b.tx - s * b.ty + a.tx,
            s * b.tx + c * b.ty + a.ty};
}

Transform2D invert(const Transform2D& t) {
    const double c = std::cos(t.rotation);
    const double s = std::sin(t.rotation);
    // R(-a) * -t
    return {normalize_angle(-t.rotation), -(c * t.tx + s * t.ty), -(-s * t.tx + c * t.ty)};
}

std::vector<Pose2D> pose_chain(const std::vector<Transform2D>& transforms,
                               const Pose2D& initial) {
    std::vector<Pose2D> poses;
    poses.reserve(transforms.size() + 1);
    poses.push_back(initial);
    Transform2D g = initial.as_transform();
    for (const Transform2D& t : transforms) {
        g = compose(g, invert(t));
        poses.emplace_back(g.tx, g.ty, g.rotation);
    }
    return poses;
}

} // namespace flsm
