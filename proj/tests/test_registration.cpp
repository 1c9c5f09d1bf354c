#include "flsmosaic/registration.hpp"

#include "flsmosaic/fft.hpp"
#include "flsmosaic/simgen.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

using namespace flsm;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDeg = kPi / 180.0;

Image structured(int rows, int cols, uint64_t seed) {
    // Correlated noise gives the spectra something to lock onto.
    Image img = smooth_noise(rows, cols, seed, 3);
    for (double& v : img)
        v = 0.5 + 0.4 * v;
    return img;
}

Image circular_shift(const Image& src, int dr, int dc) {
    Image out(src.rows(), src.cols());
    for (int r = 0; r < src.rows(); ++r)
        for (int c = 0; c < src.cols(); ++c)
            out((r + dr + src.rows()) % src.rows(), (c + dc + src.cols()) % src.cols()) =
                src(r, c);
    return out;
}

// Exact sub-pixel circular shift through the Fourier phase ramp.
Image fourier_shift(const Image& src, double dr, double dc) {
    auto half = fft::forward_r2c(src);
    const int rows = src.rows();
    const int cols = src.cols();
    for (int r = 0; r < half.rows(); ++r) {
        const int kr = r <= rows / 2 ? r : r - rows;
        for (int c = 0; c < half.cols(); ++c) {
            const double phase = -2.0 * kPi * (kr * dr / rows + c * dc / cols);
            half(r, c) *= std::complex<double>(std::cos(phase), std::sin(phase));
        }
    }
    return fft::inverse_c2r(half, cols);
}

Image speckled(const Image& src, double w, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> expo(1.0);
    Image out = src;
    for (double& v : out)
        v *= 1.0 - w + w * expo(rng);
    return out;
}

SonarFrame render_at(const SceneModel& scene, const Pose2D& pose, double speckle,
                     uint64_t seed, int t) {
    ImagingSpec spec;
    spec.speckle = speckle;
    spec.gain_profile = GainProfile::flat();
    return render_frame(scene, pose, spec, t, seed).frame;
}

SceneModel test_scene() {
    BackgroundSpec bg;
    bg.mean = 0.45;
    bg.amplitude = 0.35;
    bg.scale_m = 0.5;
    bg.seed = 12;
    std::vector<SceneObject> objects;
    objects.push_back({SceneObject::Shape::disk, 12.0, 14.0, 1.2, 1.0});
    objects.push_back({SceneObject::Shape::rect, 6.0, 20.0, 1.5, 0.95});
    return SceneModel(30.0, 32.0, bg, objects);
}

} // namespace

TEST_CASE("self correlation peaks at zero with unit confidence") {
    const Image a = structured(96, 96, 1);
    RegistrationConfig cfg;
    const CorrelationResult res = phase_correlate(a, a, cfg);
    CHECK(std::abs(res.dx) < 1e-6);
    CHECK(std::abs(res.dy) < 1e-6);
    CHECK(res.peak_value > 0.95);
    CHECK(res.peak_sharpness > 2.0);
}

TEST_CASE("integer circular shift is recovered exactly") {
    const Image a = structured(64, 64, 2);
    const Image b = circular_shift(a, 3, 5);
    RegistrationConfig cfg;
    cfg.window = false;
    cfg.subpixel = false;
    const CorrelationResult res = phase_correlate(a, b, cfg);
    CHECK(res.dx == doctest::Approx(5.0));
    CHECK(res.dy == doctest::Approx(3.0));
}

TEST_CASE("sub-pixel shift recovered within 0.2 px") {
    const Image a = structured(96, 96, 3);
    const Image b = fourier_shift(a, 0.0, 2.5);
    RegistrationConfig cfg;
    const CorrelationResult res = phase_correlate(a, b, cfg);
    CHECK(std::abs(res.dx - 2.5) < 0.2);
    CHECK(std::abs(res.dy) < 0.2);
}

TEST_CASE("zero-energy images raise degenerate spectrum") {
    const Image flat(32, 32, 0.5);
    const Image a = structured(32, 32, 4);
    RegistrationConfig cfg;
    CHECK_THROWS_WITH_AS(phase_correlate(flat, a, cfg), "degenerate spectrum",
                         std::runtime_error);
    CHECK_THROWS_AS(phase_correlate(a, flat, cfg), std::runtime_error);
    CHECK_THROWS_AS(phase_correlate(a, structured(16, 16, 5), cfg), std::invalid_argument);
}

TEST_CASE("log-polar remap turns rotation into an angle-axis shift") {
    const int n = 128;
    const Image a = structured(n, n, 6);
    const double angle = 10.0 * kDeg;
    double mean = 0.0;
    for (double v : a)
        mean += v;
    mean /= static_cast<double>(a.size());
    const Image b = warp_rigid(a, angle, 0.0, 0.0, mean);

    const Image la = log_polar_remap(spectral_magnitude(a));
    const Image lb = log_polar_remap(spectral_magnitude(b));

    RegistrationConfig cfg;
    cfg.window = false;
    const CorrelationResult res = phase_correlate(la, lb, cfg);
    const double expected_rows = angle * la.rows() / kPi;
    CHECK(std::abs(std::abs(res.dy) - expected_rows) <= 1.0);
}

TEST_CASE("log-polar remap turns scale into a log-radius shift") {
    const int n = 128;
    const Image a = structured(n, n, 7);
    const double k = 1.18;
    // Scale about the center by k (content magnified).
    Image b(n, n, 0.5);
    const double c0 = (n - 1) / 2.0;
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            const double sr = (r - c0) / k + c0;
            const double sc = (c - c0) / k + c0;
            const int r0 = static_cast<int>(std::floor(sr));
            const int cc0 = static_cast<int>(std::floor(sc));
            if (r0 < 0 || cc0 < 0 || r0 + 1 >= n || cc0 + 1 >= n)
                continue;
            const double wr = sr - r0, wc = sc - cc0;
            b(r, c) = (1 - wr) * ((1 - wc) * a(r0, cc0) + wc * a(r0, cc0 + 1)) +
                      wr * ((1 - wc) * a(r0 + 1, cc0) + wc * a(r0 + 1, cc0 + 1));
        }

    const Image la = log_polar_remap(spectral_magnitude(a));
    const Image lb = log_polar_remap(spectral_magnitude(b));
    RegistrationConfig cfg;
    cfg.window = false;
    const CorrelationResult res = phase_correlate(la, lb, cfg);
    const double expected_cols = std::log(k) / std::log(log_polar_base(la.rows(), la.cols()));
    CHECK(std::abs(std::abs(res.dx) - expected_cols) <= 1.0);
}

TEST_CASE("isotropic spectrum is constant along the angle axis") {
    const int n = 128;
    Image blob(n, n);
    const double c0 = (n - 1) / 2.0;
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            const double d2 = (r - c0) * (r - c0) + (c - c0) * (c - c0);
            blob(r, c) = std::exp(-d2 / (2.0 * 12.0 * 12.0));
        }
    const Image lp = log_polar_remap(fft::magnitude_centered(blob));
    // Compare along-angle variation to the column mean where the Gaussian
    // spectrum still carries real energy (sigma_freq = 1/(2 pi 12) ~ 0.013
    // cycles/px; beyond ~2 sigma the tail is numeric noise).
    const double sigma_freq = 1.0 / (2.0 * kPi * 12.0);
    const double base = log_polar_base(n, n);
    const int j_max = static_cast<int>(
        std::log(2.0 * sigma_freq / log_polar_min_radius(n, n)) / std::log(base));
    REQUIRE(j_max > 6);
    for (int j = 2; j < j_max; j += 2) {
        double mean = 0.0, lo = 1e300, hi = -1e300;
        for (int i = 0; i < lp.rows(); ++i) {
            mean += lp(i, j);
            lo = std::min(lo, lp(i, j));
            hi = std::max(hi, lp(i, j));
        }
        mean /= lp.rows();
        REQUIRE(mean > 1e-12);
        CHECK((hi - lo) / mean < 0.2);
    }
}

TEST_CASE("estimate_rotation basics") {
    const Image a = structured(128, 128, 8);
    RegistrationConfig cfg;

    SUBCASE("self rotation is zero") {
        const RotationEstimate est = estimate_rotation(a, a, cfg);
        CHECK(std::abs(est.angle) < 0.1 * kDeg);
        CHECK_FALSE(est.low_confidence);
    }

    SUBCASE("pure rotation recovered within 0.5 degrees") {
        double mean = 0.0;
        for (double v : a)
            mean += v;
        mean /= static_cast<double>(a.size());
        const Image b = warp_rigid(a, 10.0 * kDeg, 0.0, 0.0, mean);
        const RotationEstimate est = estimate_rotation(a, b, cfg);
        CHECK(std::abs(est.angle - 10.0 * kDeg) < 0.5 * kDeg);
    }

    SUBCASE("rotation estimate is translation invariant") {
        double mean = 0.0;
        for (double v : a)
            mean += v;
        mean /= static_cast<double>(a.size());
        const Image b = warp_rigid(a, -7.0 * kDeg, 4.0, 6.0, mean);
        const RotationEstimate est = estimate_rotation(a, b, cfg);
        CHECK(std::abs(est.angle - (-7.0 * kDeg)) < 0.5 * kDeg);
    }
}

TEST_CASE("register_images recovers a rigid motion") {
    const Image a = structured(128, 128, 9);
    double mean = 0.0;
    for (double v : a)
        mean += v;
    mean /= static_cast<double>(a.size());

    const double rot = 5.0 * kDeg;
    const double dx = 6.5, dy = -3.2;
    const Image b = warp_rigid(a, rot, dx, dy, mean);

    RegistrationConfig cfg;
    const ImageRegistration reg = register_images(a, b, cfg);
    CHECK(std::abs(reg.rotation - rot) < 0.25 * kDeg);
    CHECK(std::abs(reg.dx - dx) < 0.5);
    CHECK(std::abs(reg.dy - dy) < 0.5);
    CHECK_FALSE(reg.low_confidence);
}

TEST_CASE("register_pair identity") {
    const SceneModel scene = test_scene();
    const Pose2D pose(2.0, 16.0, 0.0);
    const SonarFrame f = render_at(scene, pose, 0.0, 100, 1);

    RegistrationConfig cfg;
    const PairRegistration reg = register_pair(f, f, cfg, f.geometry.range_resolution());
    CHECK(std::abs(reg.transform.rotation) < 0.1 * kDeg);
    CHECK(std::abs(reg.transform.tx) < 0.25 * f.geometry.range_resolution());
    CHECK(std::abs(reg.transform.ty) < 0.25 * f.geometry.range_resolution());
    CHECK(reg.confidence > 0.9);
}

TEST_CASE("register_pair recovers a synthetic inter-frame motion") {
    const SceneModel scene = test_scene();
    const Pose2D pa(2.0, 16.0, 0.0);
    const Pose2D pb(2.3, 15.8, 5.0 * kDeg);
    const SonarFrame fa = render_at(scene, pa, 0.0, 100, 1);
    const SonarFrame fb = render_at(scene, pb, 0.0, 100, 2);
    const double mpp = fa.geometry.range_resolution();

    const Transform2D truth = compose(invert(pb.as_transform()), pa.as_transform());

    RegistrationConfig cfg;
    const PairRegistration reg = register_pair(fa, fb, cfg, mpp);
    CHECK(std::abs(normalize_angle(reg.transform.rotation - truth.rotation)) < 0.5 * kDeg);
    CHECK(std::abs(reg.transform.tx - truth.tx) < mpp);
    CHECK(std::abs(reg.transform.ty - truth.ty) < mpp);
    CHECK_FALSE(reg.low_confidence);

    SUBCASE("forward and backward registrations are mutually inverse") {
        const PairRegistration back = register_pair(fb, fa, cfg, mpp);
        const Transform2D inv = invert(back.transform);
        CHECK(std::abs(normalize_angle(reg.transform.rotation - inv.rotation)) < 0.5 * kDeg);
        CHECK(std::abs(reg.transform.tx - inv.tx) < 0.5 * mpp);
        CHECK(std::abs(reg.transform.ty - inv.ty) < 0.5 * mpp);
    }
}

TEST_CASE("uncorrelated speckle flags low confidence") {
    BackgroundSpec bg;
    bg.mean = 0.4;
    bg.amplitude = 0.0; // featureless floor, pure speckle
    const SceneModel scene(30.0, 32.0, bg, {});
    const Pose2D pose(2.0, 16.0, 0.0);
    const SonarFrame fa = render_at(scene, pose, 1.0, 1, 1);
    const SonarFrame fb = render_at(scene, pose, 1.0, 2, 2); // independent noise

    RegistrationConfig cfg;
    const PairRegistration reg = register_pair(fa, fb, cfg, 0.08);
    CHECK(reg.low_confidence);
    CHECK(reg.confidence < cfg.min_confidence);
}

TEST_CASE("confidence decreases with added noise variance") {
    const Image a = structured(128, 128, 10);
    const Image b0 = fourier_shift(a, 3.0, -2.0);
    RegistrationConfig cfg;

    auto with_noise = [](const Image& src, double sigma, uint64_t seed) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> gauss(0.0, 1.0);
        Image out = src;
        for (double& v : out)
            v += sigma * gauss(rng);
        return out;
    };

    double last = 2.0;
    for (double sigma : {0.0, 0.08, 0.25}) {
        const ImageRegistration reg =
            register_images(with_noise(a, sigma, 77), with_noise(b0, sigma, 78), cfg);
        CHECK(reg.confidence <= last + 1e-9);
        last = reg.confidence;
    }
}
