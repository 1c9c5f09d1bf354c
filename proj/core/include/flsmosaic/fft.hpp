#pragma once

#include "flsmosaic/grid.hpp"

#include <complex>

namespace flsm::fft {

/// Smallest n' >= n whose prime factors are all in {2, 3, 5, 7}.
int next_fast_size(int n);

/// Half-plane spectrum of a real image: rows x (cols/2 + 1) complex bins.
Grid<std::complex<double>> forward_r2c(const Image& in);

/// Inverse of forward_r2c, normalized so the round trip is the identity.
/// `cols` is the real-image width the half-plane came from.
Image inverse_c2r(const Grid<std::complex<double>>& half, int cols);

/// Full magnitude spectrum with the zero frequency moved to
/// (rows/2, cols/2).
Image magnitude_centered(const Image& in);

} // namespace flsm::fft
