#include "flsmosaic/clahe.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace flsm {

namespace {

constexpr int kBins = 256;

inline int bin_of(double v) {
    const int b = static_cast<int>(v * kBins);
    return std::clamp(b, 0, kBins - 1);
}

// Clip + redistribute, then cdf mapping into [0,1].
void build_mapping(std::vector<int>& hist, int tile_pixels, double clip_limit, double* map) {
    // No bin can exceed tile_pixels, so cap there before narrowing.
    const double raw_limit = std::min(clip_limit * tile_pixels / kBins,
                                      static_cast<double>(tile_pixels));
    const int limit = std::max(1, static_cast<int>(raw_limit));
    int excess = 0;
    for (int i = 0; i < kBins; ++i) {
        if (hist[i] > limit) {
            excess += hist[i] - limit;
            hist[i] = limit;
        }
    }
    const int batch = excess / kBins;
    int residual = excess - batch * kBins;
    for (int i = 0; i < kBins; ++i)
        hist[i] += batch;
    if (residual > 0) {
        const int step = std::max(kBins / residual, 1);
        for (int i = 0; i < kBins && residual > 0; i += step, --residual)
            ++hist[i];
    }

    long long cum = 0;
    for (int i = 0; i < kBins; ++i) {
        cum += hist[i];
        map[i] = static_cast<double>(cum) / tile_pixels;
    }
}

} // namespace

Image clahe(const Image& img, double clip_limit, TileLayout tiles) {
    if (clip_limit < 1.0)
        throw std::invalid_argument("clahe: clip_limit must be >= 1");
    if (tiles.rows < 1 || tiles.cols < 1 || tiles.rows > img.rows() || tiles.cols > img.cols())
        throw std::invalid_argument("clahe: tile grid does not fit the image");

    const int rows = img.rows();
    const int cols = img.cols();
    const int tr = tiles.rows;
    const int tc = tiles.cols;

    // Tile i spans [row_edge[i], row_edge[i+1]).
    std::vector<int> row_edge(tr + 1), col_edge(tc + 1);
    for (int i = 0; i <= tr; ++i)
        row_edge[i] = static_cast<int>(static_cast<long long>(i) * rows / tr);
    for (int j = 0; j <= tc; ++j)
        col_edge[j] = static_cast<int>(static_cast<long long>(j) * cols / tc);

    std::vector<double> maps(static_cast<size_t>(tr) * tc * kBins);
    std::vector<double> row_center(tr), col_center(tc);
    for (int i = 0; i < tr; ++i) {
        row_center[i] = (row_edge[i] + row_edge[i + 1] - 1) / 2.0;
        for (int j = 0; j < tc; ++j) {
            if (i == 0)
                col_center[j] = (col_edge[j] + col_edge[j + 1] - 1) / 2.0;
            std::vector<int> hist(kBins, 0);
            for (int r = row_edge[i]; r < row_edge[i + 1]; ++r)
                for (int c = col_edge[j]; c < col_edge[j + 1]; ++c)
                    ++hist[bin_of(img(r, c))];
            const int tile_pixels =
                (row_edge[i + 1] - row_edge[i]) * (col_edge[j + 1] - col_edge[j]);
            build_mapping(hist, tile_pixels, clip_limit,
                          &maps[(static_cast<size_t>(i) * tc + j) * kBins]);
        }
    }

    auto map_at = [&](int i, int j) { return &maps[(static_cast<size_t>(i) * tc + j) * kBins]; };

    Image out(rows, cols);
    for (int r = 0; r < rows; ++r) {
        // Bracketing tile rows and vertical weight for this pixel row.
        int i0 = 0;
        while (i0 + 1 < tr && row_center[i0 + 1] <= r)
            ++i0;
        int i1 = i0;
        double wy = 0.0;
        if (r > row_center[i0] && i0 + 1 < tr) {
            i1 = i0 + 1;
            wy = (r - row_center[i0]) / (row_center[i1] - row_center[i0]);
        }
        for (int c = 0; c < cols; ++c) {
            int j0 = 0;
            while (j0 + 1 < tc && col_center[j0 + 1] <= c)
                ++j0;
            int j1 = j0;
            double wx = 0.0;
            if (c > col_center[j0] && j0 + 1 < tc) {
                j1 = j0 + 1;
                wx = (c - col_center[j0]) / (col_center[j1] - col_center[j0]);
            }
            const int b = bin_of(img(r, c));
            const double top = (1.0 - wx) * map_at(i0, j0)[b] + wx * map_at(i0, j1)[b];
            const double bot = (1.0 - wx) * map_at(i1, j0)[b] + wx * map_at(i1, j1)[b];
            out(r, c) = (1.0 - wy) * top + wy * bot;
        }
    }
    return out;
}

SonarFrame clahe(const SonarFrame& frame, double clip_limit, TileLayout tiles) {
    SonarFrame out = frame;
    out.intensities = clahe(frame.intensities, clip_limit, tiles);
    return out;
}

} // namespace flsm
