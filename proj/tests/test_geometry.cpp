#include "flsmosaic/geometry.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

using namespace flsm;

namespace {
constexpr double kPi = std::numbers::pi;

BeamGeometry table1() {
    return BeamGeometry{}; // defaults are the 256/373/15m/130deg working mode
}
} // namespace

TEST_CASE("spherical_to_cartesian axis cases") {
    auto p = spherical_to_cartesian({1.0, 0.0, 0.0});
    CHECK(p.x == doctest::Approx(1.0));
    CHECK(p.y == doctest::Approx(0.0));
    CHECK(p.z == doctest::Approx(0.0));

    p = spherical_to_cartesian({2.0, kPi / 2, 0.0});
    CHECK(p.x == doctest::Approx(0.0));
    CHECK(p.y == doctest::Approx(2.0));
    CHECK(p.z == doctest::Approx(0.0));
}

TEST_CASE("spherical_to_cartesian general point (frozen scalar evaluation)") {
    // r=2, theta=pi/4, phi=pi/6: x = y = sqrt(6)/2, z = 1.
    const auto p = spherical_to_cartesian({2.0, kPi / 4, kPi / 6});
    CHECK(p.x == doctest::Approx(1.2247448713915890).epsilon(1e-12));
    CHECK(p.y == doctest::Approx(1.2247448713915890).epsilon(1e-12));
    CHECK(p.z == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("cartesian_to_spherical axis cases and origin error") {
    auto s = cartesian_to_spherical({1.0, 0.0, 0.0});
    CHECK(s.r == doctest::Approx(1.0));
    CHECK(s.theta == doctest::Approx(0.0));
    CHECK(s.phi == doctest::Approx(0.0));

    s = cartesian_to_spherical({0.0, 2.0, 0.0});
    CHECK(s.r == doctest::Approx(2.0));
    CHECK(s.theta == doctest::Approx(kPi / 2));
    CHECK(s.phi == doctest::Approx(0.0));

    CHECK_THROWS_AS(cartesian_to_spherical({0.0, 0.0, 0.0}), std::domain_error);
}

TEST_CASE("spherical round trip within 1e-9") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> ur(1e-3, 100.0);
    std::uniform_real_distribution<double> ut(-kPi, kPi);
    std::uniform_real_distribution<double> up(-kPi / 2 + 1e-6, kPi / 2 - 1e-6);
    for (int i = 0; i < 1000; ++i) {
        const SphericalPoint s{ur(rng), ut(rng), up(rng)};
        const auto rt = cartesian_to_spherical(spherical_to_cartesian(s));
        CHECK(std::abs(rt.r - s.r) < 1e-9);
        CHECK(std::abs(normalize_angle(rt.theta - s.theta)) < 1e-9);
        CHECK(std::abs(rt.phi - s.phi) < 1e-9);
    }
}

TEST_CASE("bin_to_point matches the 3D conversion restricted to phi=0") {
    const BeamGeometry g = table1();
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> ub(0, g.num_beams - 1);
    std::uniform_int_distribution<int> us(0, g.samples_per_beam - 1);
    for (int i = 0; i < 200; ++i) {
        const int b = ub(rng);
        const int s = us(rng);
        const Point2D p = bin_to_point(b, s, g);
        const auto full = spherical_to_cartesian(
            {g.range_of_sample(s), g.bearing_of_beam(b), 0.0});
        CHECK(p.u == full.x);
        CHECK(p.v == full.y);
    }
}

TEST_CASE("bin_to_point boundary cases") {
    const BeamGeometry g = table1();

    SUBCASE("first beam, last sample lands on the -65 degree ray at 15 m") {
        const Point2D p = bin_to_point(0, g.samples_per_beam - 1, g);
        CHECK(p.u == doctest::Approx(6.3392739261104916).epsilon(1e-12));
        CHECK(p.v == doctest::Approx(-13.594616805549749).epsilon(1e-12));
        CHECK(std::hypot(p.u, p.v) == doctest::Approx(15.0).epsilon(1e-12));
    }

    SUBCASE("center beam at zero bearing needs an odd beam count") {
        BeamGeometry odd = g;
        odd.num_beams = 257; // beam 128 sits exactly on the centerline
        const Point2D p = bin_to_point(128, odd.samples_per_beam - 1, odd);
        CHECK(p.u == doctest::Approx(15.0).epsilon(1e-12));
        CHECK(p.v == doctest::Approx(0.0).epsilon(1e-12));
    }

    SUBCASE("sample 0 with zero min_range collapses to the apex") {
        for (int b : {0, 100, 255}) {
            const Point2D p = bin_to_point(b, 0, g);
            CHECK(p.u == 0.0);
            CHECK(p.v == 0.0);
        }
    }

    SUBCASE("out-of-range indices throw") {
        CHECK_THROWS_AS(bin_to_point(-1, 0, g), std::out_of_range);
        CHECK_THROWS_AS(bin_to_point(g.num_beams, 0, g), std::out_of_range);
        CHECK_THROWS_AS(bin_to_point(0, g.samples_per_beam, g), std::out_of_range);
    }
}

TEST_CASE("bin_to_point is injective for sample > 0") {
    BeamGeometry g = table1();
    g.num_beams = 16;
    g.samples_per_beam = 12;
    std::vector<Point2D> seen;
    for (int b = 0; b < g.num_beams; ++b) {
        for (int s = 1; s < g.samples_per_beam; ++s) {
            const Point2D p = bin_to_point(b, s, g);
            for (const Point2D& q : seen)
                CHECK(std::hypot(p.u - q.u, p.v - q.v) > 1e-12);
            seen.push_back(p);
        }
    }
}

TEST_CASE("transform apply basics") {
    CHECK(Transform2D::identity().apply({3.0, 4.0}).u == doctest::Approx(3.0));
    CHECK(Transform2D::identity().apply({3.0, 4.0}).v == doctest::Approx(4.0));

    const Transform2D rot90{kPi / 2, 0.0, 0.0};
    const Point2D p = rot90.apply({1.0, 0.0});
    CHECK(p.u == doctest::Approx(0.0));
    CHECK(p.v == doctest::Approx(1.0));
}

TEST_CASE("SE(2) group laws and composition property") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> ua(-kPi, kPi);
    std::uniform_real_distribution<double> ut(-10.0, 10.0);
    auto random_transform = [&] { return Transform2D{ua(rng), ut(rng), ut(rng)}; };

    for (int i = 0; i < 100; ++i) {
        const Transform2D t1 = random_transform();
        const Transform2D t2 = random_transform();
        const Transform2D t3 = random_transform();
        const Point2D x{ut(rng), ut(rng)};

        // compose respects apply
        const Point2D lhs = compose(t1, t2).apply(x);
        const Point2D rhs = t1.apply(t2.apply(x));
        CHECK(std::abs(lhs.u - rhs.u) < 1e-9);
        CHECK(std::abs(lhs.v - rhs.v) < 1e-9);

        // associativity
        const Point2D a1 = compose(compose(t1, t2), t3).apply(x);
        const Point2D a2 = compose(t1, compose(t2, t3)).apply(x);
        CHECK(std::abs(a1.u - a2.u) < 1e-9);
        CHECK(std::abs(a1.v - a2.v) < 1e-9);

        // two-sided inverse
        for (const Transform2D& id : {compose(t1, invert(t1)), compose(invert(t1), t1)}) {
            CHECK(std::abs(normalize_angle(id.rotation)) < 1e-9);
            CHECK(std::abs(id.tx) < 1e-9);
            CHECK(std::abs(id.ty) < 1e-9);
        }
    }
}

TEST_CASE("pose normalization branch cut") {
    CHECK(Pose2D(0, 0, kPi).theta == doctest::Approx(kPi));
    CHECK(Pose2D(0, 0, -kPi).theta == doctest::Approx(kPi));
    CHECK(Pose2D(0, 0, 3 * kPi).theta == doctest::Approx(kPi));
    CHECK(Pose2D(0, 0, 2 * kPi).theta == doctest::Approx(0.0));
}

TEST_CASE("pose_chain inverts the frame-to-frame transforms") {
    // Two poses; the inter-frame transform carries frame-1 coordinates to
    // frame-2 coordinates, so chaining must reproduce the second pose.
    const Pose2D p1(1.0, 2.0, 0.3);
    const Pose2D p2(1.5, 2.2, 0.5);
    const Transform2D t = compose(invert(p2.as_transform()), p1.as_transform());

    const auto chain = pose_chain({t}, p1);
    REQUIRE(chain.size() == 2);
    CHECK(chain[1].x == doctest::Approx(p2.x).epsilon(1e-12));
    CHECK(chain[1].y == doctest::Approx(p2.y).epsilon(1e-12));
    CHECK(chain[1].theta == doctest::Approx(p2.theta).epsilon(1e-12));
}
