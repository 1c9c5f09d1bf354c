#include "flsmosaic/registration.hpp"

#include "flsmosaic/fan.hpp"
#include "flsmosaic/fft.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace flsm {

namespace {

constexpr double kPi = std::numbers::pi;

enum class WindowAxes { none, cols_only, both };

// Mean-removed, optionally Hann-tapered copy, zero-padded to (rows, cols).
// Returns false when the image has no energy after mean removal.
bool prepare(const Image& src, WindowAxes axes, int rows, int cols, Image& dst) {
    double mean = 0.0;
    for (double v : src)
        mean += v;
    mean /= static_cast<double>(src.size());

    dst = Image(rows, cols, 0.0);
    double energy = 0.0;
    const int sr = src.rows();
    const int sc = src.cols();
    for (int r = 0; r < sr; ++r) {
        const double wr = (axes == WindowAxes::both)
                              ? 0.5 - 0.5 * std::cos(2.0 * kPi * r / (sr - 1))
                              : 1.0;
        for (int c = 0; c < sc; ++c) {
            const double wc = (axes != WindowAxes::none)
                                  ? 0.5 - 0.5 * std::cos(2.0 * kPi * c / (sc - 1))
                                  : 1.0;
            const double v = (src(r, c) - mean) * wr * wc;
            dst(r, c) = v;
            energy += v * v;
        }
    }
    return energy > 0.0;
}

double wrapped_delta(int idx, int n) {
    return idx > n / 2 ? idx - n : idx;
}

// Vertex offset of the parabola through (-1, l), (0, c), (1, r); 0 when
// the fit degenerates.
double parabolic_offset(double l, double c, double r) {
    const double denom = l - 2.0 * c + r;
    if (denom == 0.0)
        return 0.0;
    const double off = 0.5 * (l - r) / denom;
    return std::clamp(off, -0.5, 0.5);
}

CorrelationResult correlate_prepared(const Image& a, const Image& b, bool subpixel,
                                     double max_shift_frac) {
    const int rows = a.rows();
    const int cols = a.cols();

    const auto fa = fft::forward_r2c(a);
    const auto fb = fft::forward_r2c(b);

    Grid<std::complex<double>> cross(fa.rows(), fa.cols());
    for (size_t i = 0; i < fa.size(); ++i) {
        const std::complex<double> p = fa.data()[i] * std::conj(fb.data()[i]);
        const double m = std::abs(p);
        cross.data()[i] = m > 0.0 ? p / m : std::complex<double>(0.0, 0.0);
    }

    const Image surface = fft::inverse_c2r(cross, cols);

    const int max_dr = std::max(1, static_cast<int>(max_shift_frac * rows));
    const int max_dc = std::max(1, static_cast<int>(max_shift_frac * cols));
    auto wrapped_abs = [](int i, int n) { return std::min(i, n - i); };

    int peak_r = -1, peak_c = -1;
    double peak = -std::numeric_limits<double>::infinity();
    for (int r = 0; r < rows; ++r) {
        if (wrapped_abs(r, rows) > max_dr)
            continue;
        for (int c = 0; c < cols; ++c) {
            if (wrapped_abs(c, cols) > max_dc)
                continue;
            if (surface(r, c) > peak) {
                peak = surface(r, c);
                peak_r = r;
                peak_c = c;
            }
        }
    }

    // Second-highest peak in the search region outside a 3x3 wrap-around
    // neighborhood of the main one.
    double second = 0.0;
    for (int r = 0; r < rows; ++r) {
        if (wrapped_abs(r, rows) > max_dr)
            continue;
        for (int c = 0; c < cols; ++c) {
            if (wrapped_abs(c, cols) > max_dc)
                continue;
            const int dr = std::min(std::abs(r - peak_r), rows - std::abs(r - peak_r));
            const int dc = std::min(std::abs(c - peak_c), cols - std::abs(c - peak_c));
            if (dr <= 1 && dc <= 1)
                continue;
            second = std::max(second, surface(r, c));
        }
    }

    double sub_r = 0.0, sub_c = 0.0;
    if (subpixel) {
        const auto wrap = [](int i, int n) { return (i + n) % n; };
        sub_r = parabolic_offset(surface(wrap(peak_r - 1, rows), peak_c), peak,
                                 surface(wrap(peak_r + 1, rows), peak_c));
        sub_c = parabolic_offset(surface(peak_r, wrap(peak_c - 1, cols)), peak,
                                 surface(peak_r, wrap(peak_c + 1, cols)));
    }

    // The correlation surface peaks at minus the a->b shift.
    CorrelationResult res;
    res.dx = -(wrapped_delta(peak_c, cols) + sub_c);
    res.dy = -(wrapped_delta(peak_r, rows) + sub_r);
    res.peak_value = std::clamp(peak, 0.0, 1.0);
    res.peak_sharpness = second > 0.0 ? peak / second : std::numeric_limits<double>::infinity();
    return res;
}

CorrelationResult phase_correlate_impl(const Image& a, const Image& b, WindowAxes axes,
                                        bool subpixel, double max_shift_frac = 0.5) {
    if (!a.same_shape(b))
        throw std::invalid_argument("phase_correlate: images must share dimensions");
    if (a.empty())
        throw std::invalid_argument("phase_correlate: empty image");

    const int rows = fft::next_fast_size(a.rows());
    const int cols = fft::next_fast_size(a.cols());
    Image pa, pb;
    const bool ea = prepare(a, axes, rows, cols, pa);
    const bool eb = prepare(b, axes, rows, cols, pb);
    if (!ea || !eb)
        throw std::runtime_error("degenerate spectrum");
    return correlate_prepared(pa, pb, subpixel, max_shift_frac);
}

// Frequency-plane high-pass emphasis; zero at DC.
void highpass_emphasis(Image& mag) {
    const int rows = mag.rows();
    const int cols = mag.cols();
    const int cy = rows / 2;
    const int cx = cols / 2;
    for (int r = 0; r < rows; ++r) {
        const double fy = std::cos(kPi * (r - cy) / rows);
        for (int c = 0; c < cols; ++c) {
            const double fx = std::cos(kPi * (c - cx) / cols);
            const double t = fy * fx;
            mag(r, c) *= (1.0 - t) * (2.0 - t);
        }
    }
}

struct RotationSearch {
    double angle = 0.0;
    CorrelationResult translation; // of the winning de-rotation
};

// Log-polar angle correlation plus pi-ambiguity resolution. Requires
// equally sized images.
RotationSearch search_rotation(const Image& a, const Image& b, const RegistrationConfig& cfg) {
    const WindowAxes axes = cfg.window ? WindowAxes::both : WindowAxes::none;

    const Image la = log_polar_remap(spectral_magnitude(a, cfg.window));
    const Image lb = log_polar_remap(spectral_magnitude(b, cfg.window));

    // The angle axis is exactly periodic; taper only the log-radius axis.
    const CorrelationResult angle_corr =
        phase_correlate_impl(la, lb, WindowAxes::cols_only, cfg.subpixel);

    // A rotation of the image by alpha shifts the log-polar spectrum by
    // alpha * rows / pi along the angle axis; determined modulo pi.
    double alpha = angle_corr.dy * kPi / la.rows();
    alpha = std::remainder(alpha, kPi);

    double mean_b = 0.0;
    for (double v : b)
        mean_b += v;
    mean_b /= static_cast<double>(b.size());

    RotationSearch best;
    bool first = true;
    for (const double cand : {alpha, normalize_angle(alpha + kPi)}) {
        const Image derot = warp_rigid(b, -cand, 0.0, 0.0, mean_b);
        const CorrelationResult trans =
            phase_correlate_impl(a, derot, axes, cfg.subpixel, cfg.max_translation_frac);
        if (first || trans.peak_value > best.translation.peak_value) {
            best.angle = cand;
            best.translation = trans;
            first = false;
        }
    }
    return best;
}

} // namespace

CorrelationResult phase_correlate(const Image& a, const Image& b, const RegistrationConfig& cfg) {
    return phase_correlate_impl(a, b, cfg.window ? WindowAxes::both : WindowAxes::none,
                                cfg.subpixel);
}

Image spectral_magnitude(const Image& img, bool window) {
    const int rows = fft::next_fast_size(img.rows());
    const int cols = fft::next_fast_size(img.cols());
    Image prepared;
    if (!prepare(img, window ? WindowAxes::both : WindowAxes::none, rows, cols, prepared))
        throw std::runtime_error("degenerate spectrum");
    Image mag = fft::magnitude_centered(prepared);
    highpass_emphasis(mag);
    return mag;
}

double log_polar_min_radius(int rows, int cols) {
    return 2.0 / std::min(rows, cols);
}

double log_polar_base(int rows, int cols) {
    const double r_min = log_polar_min_radius(rows, cols);
    return std::pow(0.5 / r_min, 1.0 / (cols - 1));
}

Image log_polar_remap(const Image& mag, int angle_bins) {
    const int rows = mag.rows();
    const int cols = mag.cols();
    const int cy = rows / 2;
    const int cx = cols / 2;
    const double r_min = log_polar_min_radius(rows, cols);
    const double base = log_polar_base(rows, cols);
    const int out_rows = angle_bins > 0 ? angle_bins : rows;

    Image out(out_rows, cols, 0.0);
    for (int i = 0; i < out_rows; ++i) {
        const double angle = kPi * i / out_rows;
        const double ca = std::cos(angle);
        const double sa = std::sin(angle);
        double radius = r_min;
        for (int j = 0; j < cols; ++j, radius *= base) {
            // Frequency coordinates in cycles/pixel -> spectrum indices.
            const double fx = radius * ca;
            const double fy = radius * sa;
            const double xi = cx + fx * cols;
            const double yi = cy + fy * rows;
            const int x0 = static_cast<int>(std::floor(xi));
            const int y0 = static_cast<int>(std::floor(yi));
            const double wx = xi - x0;
            const double wy = yi - y0;
            double acc = 0.0;
            for (int dy = 0; dy <= 1; ++dy) {
                for (int dx = 0; dx <= 1; ++dx) {
                    const int y = y0 + dy;
                    const int x = x0 + dx;
                    if (!mag.in_bounds(y, x))
                        continue;
                    acc += (dy ? wy : 1 - wy) * (dx ? wx : 1 - wx) * mag(y, x);
                }
            }
            out(i, j) = acc;
        }
    }
    return out;
}

RotationEstimate estimate_rotation(const Image& a, const Image& b,
                                   const RegistrationConfig& cfg) {
    if (!a.same_shape(b))
        throw std::invalid_argument("estimate_rotation: images must share dimensions");
    // The full rigid estimate refines the raw angle channel; report its
    // rotation component.
    const ImageRegistration reg = register_images(a, b, cfg);
    RotationEstimate est;
    est.angle = reg.rotation;
    est.confidence = reg.confidence;
    est.low_confidence = reg.low_confidence;
    return est;
}

Image warp_rigid(const Image& src, double rotation, double dx, double dy, double fill) {
    const int rows = src.rows();
    const int cols = src.cols();
    const double ccol = (cols - 1) / 2.0;
    const double crow = (rows - 1) / 2.0;
    const double c = std::cos(rotation);
    const double s = std::sin(rotation);

    Image dst(rows, cols, fill);
    for (int r = 0; r < rows; ++r) {
        for (int q = 0; q < cols; ++q) {
            // W^{-1}(q) = R(-rot) * (q - center - d) + center
            const double px = q - ccol - dx;
            const double py = r - crow - dy;
            const double sx = c * px + s * py + ccol;
            const double sy = -s * px + c * py + crow;
            const int x0 = static_cast<int>(std::floor(sx));
            const int y0 = static_cast<int>(std::floor(sy));
            if (x0 < 0 || y0 < 0 || x0 + 1 >= cols || y0 + 1 >= rows)
                continue;
            const double wx = sx - x0;
            const double wy = sy - y0;
            dst(r, q) = (1 - wy) * ((1 - wx) * src(y0, x0) + wx * src(y0, x0 + 1)) +
                        wy * ((1 - wx) * src(y0 + 1, x0) + wx * src(y0 + 1, x0 + 1));
        }
    }
    return dst;
}

namespace {

// One linearized rigid step between a and an already-aligned b: solves
// b(q) ~ a(q - dtheta*J(q-c) - dd) in least squares over interior pixels.
// Returns false when the normal equations are unusable or the step falls
// outside the small-residual trust region.
bool lk_rigid_step(const Image& a, const Image& b_aligned, double& dtheta, double& ddx,
                   double& ddy) {
    const int rows = a.rows();
    const int cols = a.cols();
    const double ccol = (cols - 1) / 2.0;
    const double crow = (rows - 1) / 2.0;

    double h[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
    double rhs[3] = {0, 0, 0};
    for (int r = 1; r + 1 < rows; ++r) {
        for (int c = 1; c + 1 < cols; ++c) {
            const double gx = 0.5 * (a(r, c + 1) - a(r, c - 1));
            const double gy = 0.5 * (a(r + 1, c) - a(r - 1, c));
            // J(q - center) = (-(row - crow), col - ccol)
            const double gt = -gx * (r - crow) + gy * (c - ccol);
            const double g[3] = {gt, gx, gy};
            const double res = b_aligned(r, c) - a(r, c);
            for (int i = 0; i < 3; ++i) {
                rhs[i] -= res * g[i];
                for (int j = i; j < 3; ++j)
                    h[i][j] += g[i] * g[j];
            }
        }
    }
    h[1][0] = h[0][1];
    h[2][0] = h[0][2];
    h[2][1] = h[1][2];

    // Cramer's rule on the 3x3 normal equations.
    const double det = h[0][0] * (h[1][1] * h[2][2] - h[1][2] * h[2][1]) -
                       h[0][1] * (h[1][0] * h[2][2] - h[1][2] * h[2][0]) +
                       h[0][2] * (h[1][0] * h[2][1] - h[1][1] * h[2][0]);
    if (!(std::abs(det) > 1e-12))
        return false;
    auto solve = [&](int k) {
        double m[3][3];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                m[i][j] = j == k ? rhs[i] : h[i][j];
        return (m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])) /
               det;
    };
    dtheta = solve(0);
    ddx = solve(1);
    ddy = solve(2);
    return std::abs(dtheta) < 0.02 && std::abs(ddx) < 2.0 && std::abs(ddy) < 2.0;
}

// d = R(angle) * s, where s is the shift of the de-rotated image.
ImageRegistration assemble(const RotationSearch& found, const RegistrationConfig& cfg) {
    const double sx = found.translation.dx;
    const double sy = found.translation.dy;
    const double c = std::cos(found.angle);
    const double sn = std::sin(found.angle);
    ImageRegistration reg;
    reg.rotation = found.angle;
    reg.dx = c * sx - sn * sy;
    reg.dy = sn * sx + c * sy;
    reg.confidence = found.translation.peak_value;
    reg.low_confidence = reg.confidence < cfg.min_confidence;
    return reg;
}

} // namespace

ImageRegistration register_images(const Image& a, const Image& b,
                                  const RegistrationConfig& cfg) {
    if (!a.same_shape(b))
        throw std::invalid_argument("register_images: images must share dimensions");

    ImageRegistration reg = assemble(search_rotation(a, b, cfg), cfg);

    double mean_b = 0.0;
    for (double v : b)
        mean_b += v;
    mean_b /= static_cast<double>(b.size());

    // Spatial polish: the spectral channel leaves small residuals (window
    // bias under translation, rotations below the angle resolution, and
    // grid-locked interpolation ripple that anchors tiny rotations to
    // zero); a linearized rigid fit on the aligned pair resolves exactly
    // that regime. Each step re-warps b by the current W^{-1}.
    for (int iter = 0; iter < 3; ++iter) {
        const double cr = std::cos(reg.rotation);
        const double sr = std::sin(reg.rotation);
        const Image aligned = warp_rigid(b, -reg.rotation, -(cr * reg.dx + sr * reg.dy),
                                         -(-sr * reg.dx + cr * reg.dy), mean_b);
        double dtheta, ddx, ddy;
        if (!lk_rigid_step(a, aligned, dtheta, ddx, ddy))
            break;
        reg.rotation = normalize_angle(reg.rotation + dtheta);
        reg.dx += cr * ddx - sr * ddy;
        reg.dy += sr * ddx + cr * ddy;
    }
    return reg;
}

PairRegistration register_pair(const SonarFrame& a, const SonarFrame& b,
                               const RegistrationConfig& cfg, double meters_per_pixel) {
    if (!(a.geometry == b.geometry))
        throw std::invalid_argument("register_pair: frames must share geometry");

    const FanImage fa = fan_rasterize(a, meters_per_pixel);
    const FanImage fb = fan_rasterize(b, meters_per_pixel);

    auto filled = [](const FanImage& fan) {
        double mean = 0.0;
        size_t n = 0;
        for (size_t i = 0; i < fan.image.size(); ++i) {
            if (fan.mask.data()[i]) {
                mean += fan.image.data()[i];
                ++n;
            }
        }
        mean = n ? mean / n : 0.0;
        Image out = fan.image;
        for (size_t i = 0; i < out.size(); ++i)
            if (!fan.mask.data()[i])
                out.data()[i] = mean;
        return out;
    };

    const ImageRegistration reg = register_images(filled(fa), filled(fb), cfg);

    // Pixel coordinates relate to sonar meters by q = D x + o with
    // col = apex_col + v/mpp, row = apex_row - u/mpp. D is an
    // orientation-preserving similarity, so the rotation angle carries
    // over unchanged; the translation is conjugated through D.
    const double mpp = meters_per_pixel;
    const double ccol = (fa.image.cols() - 1) / 2.0;
    const double crow = (fa.image.rows() - 1) / 2.0;
    const double ox = fa.apex_col - ccol; // o - c, pixels
    const double oy = fa.apex_row - crow;

    const double c = std::cos(reg.rotation);
    const double s = std::sin(reg.rotation);
    // t_img = (R - I)(o - c) + d
    const double tix = (c - 1.0) * ox - s * oy + reg.dx;
    const double tiy = s * ox + (c - 1.0) * oy + reg.dy;

    PairRegistration out;
    out.transform.rotation = reg.rotation;
    out.transform.tx = -mpp * tiy; // du = -mpp * drow
    out.transform.ty = mpp * tix;  // dv = +mpp * dcol
    out.confidence = reg.confidence;
    out.low_confidence = reg.low_confidence;
    return out;
}

} // namespace flsm
