#pragma once

#include "flsmosaic/frame.hpp"
#include "flsmosaic/grid.hpp"

namespace flsm {

struct CorrelationResult {
    double dx = 0.0; // column shift, sub-pixel when enabled
    double dy = 0.0; // row shift
    double peak_value = 0.0;     // in [0,1]; ~1 for a perfect match
    double peak_sharpness = 0.0; // main peak / second-highest peak
};

struct RegistrationConfig {
    bool window = true;    // raised-cosine taper before the FFT
    bool subpixel = true;  // 3x3 parabolic peak refinement
    double min_confidence = 0.05;
    /// Translation peaks are searched within this fraction of each image
    /// dimension. Consecutive sonar frames overlap heavily; without the
    /// bound, the pi-flipped rotation candidate can win by aligning the
    /// fan wedge's mirrored boundary at an absurd offset.
    double max_translation_frac = 0.25;
};

/// Translation between two equally-sized real images by the normalized
/// cross-power spectrum. The returned shift maps `a` onto `b`: if b is a
/// copy of a moved by (dx, dy) pixels, that (dx, dy) comes back. Throws
/// std::runtime_error("degenerate spectrum") when either image carries no
/// energy after mean removal.
CorrelationResult phase_correlate(const Image& a, const Image& b, const RegistrationConfig& cfg);

/// Log-polar resampling of a centered magnitude spectrum. Rows sweep angle
/// over [0, pi) (the magnitude is pi-periodic) with `angle_bins` rows
/// (0 keeps the input row count); columns sweep log-radius between
/// log_polar_min_radius() and the Nyquist ring. Frequencies are in
/// cycles/pixel, so non-square inputs are handled correctly.
Image log_polar_remap(const Image& magnitude_centered, int angle_bins = 0);

/// Centered magnitude spectrum the Fourier-Mellin rotation channel
/// actually consumes: mean removal, optional raised-cosine taper, padding
/// to an FFT-friendly size, and a high-pass emphasis that zeroes the DC
/// anchor.
Image spectral_magnitude(const Image& img, bool window = true);

/// Radius (cycles/pixel) of the first log-polar column for a spectrum of
/// this shape, and the per-column log base; exposed for tests.
double log_polar_min_radius(int rows, int cols);
double log_polar_base(int rows, int cols);

struct RotationEstimate {
    double angle = 0.0; // radians
    double confidence = 0.0;
    bool low_confidence = false;
};

/// Rotation of `b` relative to `a` from the Fourier-Mellin angle channel:
/// both magnitude spectra are log-polar remapped and phase-correlated
/// along the angle axis. The pi ambiguity is resolved by de-rotating with
/// both candidates and keeping the one whose translation correlation
/// peaks higher.
RotationEstimate estimate_rotation(const Image& a, const Image& b, const RegistrationConfig& cfg);

/// Full rigid registration in image space. The recovered motion maps
/// a-pixel-coordinates p to b-pixel-coordinates:
///   W(p) = R(rotation) * (p - center) + center + (dx, dy),
/// with center = ((cols-1)/2, (rows-1)/2) and p = (col, row).
struct ImageRegistration {
    double rotation = 0.0; // radians, positive from +col toward +row axis
    double dx = 0.0;       // pixels
    double dy = 0.0;
    double confidence = 0.0;
    bool low_confidence = false;
};

ImageRegistration register_images(const Image& a, const Image& b, const RegistrationConfig& cfg);

/// Rigid warp used for de-rotation and for building synthetic test pairs:
/// dst(q) = src(W^{-1}(q)) with W as in ImageRegistration, sampled
/// bilinearly; samples outside src read `fill`.
Image warp_rigid(const Image& src, double rotation, double dx, double dy, double fill);

struct PairRegistration {
    Transform2D transform; // x_b = T x_a in sonar meters
    double confidence = 0.0;
    bool low_confidence = false;
};

/// Registers two polar frames by fan-rasterizing both at meters_per_pixel
/// and running register_images; masked-out fan pixels are filled with the
/// valid-area mean before the FFT. The result is expressed in sonar-local
/// meters.
PairRegistration register_pair(const SonarFrame& a, const SonarFrame& b,
                               const RegistrationConfig& cfg, double meters_per_pixel);

} // namespace flsm
