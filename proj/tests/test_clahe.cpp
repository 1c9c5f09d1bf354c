#include "flsmosaic/clahe.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

using namespace flsm;

namespace {

Image random_image(int rows, int cols, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    Image img(rows, cols);
    for (double& v : img)
        v = uni(rng);
    return img;
}

// Straight textbook global histogram equalization: out = cdf(bin)/N over
// 256 bins. Independent of the library path.
Image global_he_oracle(const Image& img) {
    std::vector<long long> hist(256, 0);
    for (double v : img)
        ++hist[std::min(255, static_cast<int>(v * 256.0))];
    std::vector<double> map(256);
    long long cum = 0;
    for (int i = 0; i < 256; ++i) {
        cum += hist[i];
        map[i] = static_cast<double>(cum) / static_cast<double>(img.size());
    }
    Image out(img.rows(), img.cols());
    for (size_t i = 0; i < img.size(); ++i)
        out.data()[i] = map[std::min(255, static_cast<int>(img.data()[i] * 256.0))];
    return out;
}

// Naive reference CLAHE run per-pixel by the documented contract: ragged
// tile edges, clip + uniform redistribution, cdf/N mapping, bilinear
// interpolation between tile-center mappings with border clamping.
Image clahe_oracle(const Image& img, double clip_limit, int tr, int tc) {
    const int rows = img.rows();
    const int cols = img.cols();
    auto edge = [](int i, int n, int total) { return static_cast<int>(static_cast<long long>(i) * total / n); };
    auto bin_of = [](double v) { return std::clamp(static_cast<int>(v * 256.0), 0, 255); };

    std::vector<std::vector<double>> maps(static_cast<size_t>(tr) * tc,
                                          std::vector<double>(256, 0.0));
    std::vector<double> rc(tr), cc(tc);
    for (int i = 0; i < tr; ++i) {
        rc[i] = (edge(i, tr, rows) + edge(i + 1, tr, rows) - 1) / 2.0;
        for (int j = 0; j < tc; ++j) {
            cc[j] = (edge(j, tc, cols) + edge(j + 1, tc, cols) - 1) / 2.0;
            std::vector<int> hist(256, 0);
            int npix = 0;
            for (int r = edge(i, tr, rows); r < edge(i + 1, tr, rows); ++r)
                for (int c = edge(j, tc, cols); c < edge(j + 1, tc, cols); ++c) {
                    ++hist[bin_of(img(r, c))];
                    ++npix;
                }
            const int limit = std::max(
                1, static_cast<int>(std::min(clip_limit * npix / 256.0,
                                             static_cast<double>(npix))));
            int excess = 0;
            for (int b = 0; b < 256; ++b)
                if (hist[b] > limit) {
                    excess += hist[b] - limit;
                    hist[b] = limit;
                }
            const int batch = excess / 256;
            int residual = excess - batch * 256;
            for (int b = 0; b < 256; ++b)
                hist[b] += batch;
            const int step = residual > 0 ? std::max(256 / residual, 1) : 1;
            for (int b = 0; b < 256 && residual > 0; b += step, --residual)
                ++hist[b];
            long long cum = 0;
            for (int b = 0; b < 256; ++b) {
                cum += hist[b];
                maps[static_cast<size_t>(i) * tc + j][b] =
                    static_cast<double>(cum) / npix;
            }
        }
    }

    Image out(rows, cols);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            int i0 = 0;
            while (i0 + 1 < tr && rc[i0 + 1] <= r)
                ++i0;
            int i1 = i0;
            double wy = 0.0;
            if (r > rc[i0] && i0 + 1 < tr) {
                i1 = i0 + 1;
                wy = (r - rc[i0]) / (rc[i1] - rc[i0]);
            }
            int j0 = 0;
            while (j0 + 1 < tc && cc[j0 + 1] <= c)
                ++j0;
            int j1 = j0;
            double wx = 0.0;
            if (c > cc[j0] && j0 + 1 < tc) {
                j1 = j0 + 1;
                wx = (c - cc[j0]) / (cc[j1] - cc[j0]);
            }
            const int b = bin_of(img(r, c));
            auto m = [&](int i, int j) { return maps[static_cast<size_t>(i) * tc + j][b]; };
            out(r, c) = (1 - wy) * ((1 - wx) * m(i0, j0) + wx * m(i0, j1)) +
                        wy * ((1 - wx) * m(i1, j0) + wx * m(i1, j1));
        }
    }
    return out;
}

} // namespace

TEST_CASE("constant image stays constant") {
    const Image img(16, 16, 0.42);
    const Image out = clahe(img, 2.0, {4, 4});
    double lo = 1.0, hi = 0.0;
    for (double v : out) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    CHECK(hi - lo <= 1.0 / 256.0);
}

TEST_CASE("output stays inside [0,1]") {
    const Image img = random_image(40, 56, 11);
    const Image out = clahe(img, 3.0, {8, 8});
    for (double v : out) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("single tile without clipping equals global histogram equalization") {
    const Image img = random_image(32, 48, 5);
    // clip limit above tile_pixels/256 can never clip
    const Image out = clahe(img, 1e9, {1, 1});
    const Image expected = global_he_oracle(img);
    for (size_t i = 0; i < img.size(); ++i)
        CHECK(out.data()[i] == doctest::Approx(expected.data()[i]).epsilon(1e-12));
}

TEST_CASE("two-level image spreads toward the extremes (frozen oracle values)") {
    // 8x8 image, one tile: 16 low pixels (0.2) and 48 high pixels (0.8).
    Image img(8, 8, 0.8);
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c)
            img(r, c) = 0.2;
    const Image out = clahe(img, 1e9, {1, 1});
    // Global HE sends the low level to 16/64 and the high level to 1.
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c) {
            if (img(r, c) == 0.2)
                CHECK(out(r, c) == doctest::Approx(0.25).epsilon(1e-12));
            else
                CHECK(out(r, c) == doctest::Approx(1.0).epsilon(1e-12));
        }
    // The level gap widens from 0.6 to 0.75.
    CHECK(out(7, 7) - out(0, 0) > (0.8 - 0.2));
}

TEST_CASE("matches the naive reference on ragged multi-tile layouts") {
    for (auto [rows, cols, tr, tc, clip] :
         {std::tuple{8, 8, 2, 2, 2.0}, std::tuple{23, 17, 3, 2, 2.5},
          std::tuple{40, 40, 8, 8, 1.5}}) {
        const Image img = random_image(rows, cols, static_cast<uint64_t>(rows * 100 + tc));
        const Image mine = clahe(img, clip, {tr, tc});
        const Image ref = clahe_oracle(img, clip, tr, tc);
        for (size_t i = 0; i < img.size(); ++i)
            CHECK(mine.data()[i] == doctest::Approx(ref.data()[i]).epsilon(1e-12));
    }
}

TEST_CASE("single-tile mapping is monotone") {
    const Image img = random_image(24, 24, 77);
    const Image out = clahe(img, 4.0, {1, 1});
    for (size_t i = 0; i < img.size(); ++i)
        for (size_t j = 0; j < img.size(); ++j)
            if (img.data()[i] <= img.data()[j])
                CHECK(out.data()[i] <= out.data()[j] + 1e-15);
}

TEST_CASE("parameter validation") {
    const Image img(8, 8, 0.5);
    CHECK_THROWS_AS(clahe(img, 0.5, {2, 2}), std::invalid_argument);
    CHECK_THROWS_AS(clahe(img, 2.0, {9, 1}), std::invalid_argument);
    CHECK_THROWS_AS(clahe(img, 2.0, {1, 9}), std::invalid_argument);
    CHECK_NOTHROW(clahe(img, 2.0, {8, 8}));
}

TEST_CASE("frame wrapper preserves metadata") {
    SonarFrame frame;
    frame.geometry.num_beams = 8;
    frame.geometry.samples_per_beam = 8;
    frame.geometry.max_range = 6.0;
    frame.timestamp_index = 3;
    frame.intensities = random_image(8, 8, 1);
    const SonarFrame out = clahe(frame, 2.0, {2, 2});
    CHECK(out.timestamp_index == 3);
    CHECK(out.geometry == frame.geometry);
    CHECK(out.intensities.rows() == 8);
}
