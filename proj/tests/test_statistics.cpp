#include "flsmosaic/statistics.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

using namespace flsm;

namespace {

SonarFrame make_frame(int rows, int cols, int t, double fill = 0.0) {
    SonarFrame f;
    f.geometry.num_beams = cols;
    f.geometry.samples_per_beam = rows;
    f.geometry.max_range = 10.0;
    f.timestamp_index = t;
    f.intensities = Image(rows, cols, fill);
    return f;
}

SonarFrame random_frame(int rows, int cols, int t, uint64_t seed) {
    SonarFrame f = make_frame(rows, cols, t);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (double& v : f.intensities)
        v = uni(rng);
    return f;
}

// Naive per-pixel double loop; the independent oracle for the spatial
// variance.
Image variance_oracle(const SonarFrame& frame, int window) {
    const int rows = frame.intensities.rows();
    const int cols = frame.intensities.cols();
    const int half = window / 2;
    Image out(rows, cols, 0.0);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            if (!frame.is_valid_at(r, c))
                continue;
            double sum = 0.0;
            int n = 0;
            for (int rr = r - half; rr <= r + half; ++rr)
                for (int cc = c - half; cc <= c + half; ++cc) {
                    if (rr < 0 || rr >= rows || cc < 0 || cc >= cols)
                        continue;
                    if (!frame.is_valid_at(rr, cc))
                        continue;
                    sum += frame.intensities(rr, cc);
                    ++n;
                }
            if (n == 0)
                continue;
            const double mean = sum / n;
            double dev = 0.0;
            for (int rr = r - half; rr <= r + half; ++rr)
                for (int cc = c - half; cc <= c + half; ++cc) {
                    if (rr < 0 || rr >= rows || cc < 0 || cc >= cols)
                        continue;
                    if (!frame.is_valid_at(rr, cc))
                        continue;
                    const double d = frame.intensities(rr, cc) - mean;
                    dev += d * d;
                }
            out(r, c) = dev / n;
        }
    }
    return out;
}

// Scalar triple-loop oracle for the temporal rectification.
double score_oracle(const std::vector<Image>& variances, int r, int c, int t, int ls, int ll,
                    double beta) {
    const int n = static_cast<int>(variances.size());
    auto window_mean = [&](int len) {
        const int half = len / 2;
        const int lo = std::max(1, t - half);
        const int hi = std::min(n, t + half);
        double sum = 0.0;
        for (int tau = lo; tau <= hi; ++tau)
            sum += variances[tau - 1](r, c);
        return sum / (hi - lo + 1);
    };
    return window_mean(ls) * std::exp(-beta * window_mean(ll));
}

std::vector<VarianceFrame> constant_variances(int n, int rows, int cols, double value) {
    std::vector<VarianceFrame> out;
    for (int t = 1; t <= n; ++t) {
        VarianceFrame v;
        v.timestamp_index = t;
        v.values = Image(rows, cols, value);
        out.push_back(std::move(v));
    }
    return out;
}

} // namespace

TEST_CASE("constant frame has zero variance everywhere") {
    StatConfig cfg;
    const VarianceFrame v = local_variance(make_frame(12, 10, 1, 0.7), cfg);
    for (double x : v.values)
        CHECK(x == 0.0);
}

TEST_CASE("checkerboard interior variance is the Bernoulli value 0.2496") {
    StatConfig cfg; // 5x5 window
    SonarFrame f = make_frame(11, 11, 1);
    for (int r = 0; r < 11; ++r)
        for (int c = 0; c < 11; ++c)
            f.intensities(r, c) = (r + c) % 2 == 0 ? 1.0 : 0.0;
    const VarianceFrame v = local_variance(f, cfg);
    // Interior 5x5 window holds 13 pixels matching the center's parity and
    // 12 of the other color: mean 13/25, variance (13/25)(12/25).
    CHECK(v.values(5, 5) == doctest::Approx(0.2496).epsilon(1e-12));
    CHECK(v.values(4, 5) == doctest::Approx(0.2496).epsilon(1e-12));
}

TEST_CASE("local variance matches the double-loop oracle within 1e-12") {
    StatConfig cfg;
    for (uint64_t seed : {1ull, 2ull, 3ull}) {
        const SonarFrame f = random_frame(9, 9, 1, seed);
        const VarianceFrame mine = local_variance(f, cfg);
        const Image ref = variance_oracle(f, cfg.spatial_window);
        for (size_t i = 0; i < ref.size(); ++i)
            CHECK(std::abs(mine.values.data()[i] - ref.data()[i]) < 1e-12);
    }
}

TEST_CASE("local variance respects the validity mask") {
    StatConfig cfg;
    SonarFrame f = random_frame(9, 9, 1, 4);
    auto mask = std::make_shared<Mask>(9, 9, uint8_t{1});
    for (int c = 0; c < 9; ++c)
        (*mask)(0, c) = 0;
    (*mask)(4, 4) = 0;
    f.valid = mask;

    const VarianceFrame mine = local_variance(f, cfg);
    const Image ref = variance_oracle(f, cfg.spatial_window);
    CHECK(mine.values(4, 4) == 0.0); // invalid center carries no value
    for (size_t i = 0; i < ref.size(); ++i)
        CHECK(std::abs(mine.values.data()[i] - ref.data()[i]) < 1e-12);
}

TEST_CASE("variance is invariant to a constant intensity shift") {
    StatConfig cfg;
    SonarFrame a = random_frame(9, 9, 1, 5);
    for (double& v : a.intensities)
        v *= 0.5; // keep room for the shift
    SonarFrame b = a;
    for (double& v : b.intensities)
        v += 0.25;
    const VarianceFrame va = local_variance(a, cfg);
    const VarianceFrame vb = local_variance(b, cfg);
    for (size_t i = 0; i < va.values.size(); ++i)
        CHECK(std::abs(va.values.data()[i] - vb.values.data()[i]) < 1e-12);
}

TEST_CASE("config validation") {
    StatConfig cfg;
    cfg.spatial_window = 4;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.short_window = 101;
    cfg.long_window = 5;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = {};
    CHECK_NOTHROW(cfg.validate());
    CHECK_THROWS_AS(lstsw_scores({}, cfg), std::invalid_argument);
}

TEST_CASE("constant variance gives s = c * exp(-c) at every pixel and time") {
    StatConfig cfg; // beta = 1
    const double c = 0.07;
    const auto scores = lstsw_scores(constant_variances(120, 4, 3, c), cfg);
    const double expected = c * std::exp(-c);
    for (const ScoreFrame& s : scores)
        for (double v : s.values)
            CHECK(v == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("all-zero variance gives zero scores") {
    StatConfig cfg;
    const auto scores = lstsw_scores(constant_variances(10, 3, 3, 0.0), cfg);
    for (const ScoreFrame& s : scores)
        for (double v : s.values)
            CHECK(v == 0.0);
}

TEST_CASE("interior impulse scores (1/5) * exp(-1/101)") {
    StatConfig cfg; // L_s=5, L_l=101
    auto vars = constant_variances(101, 2, 2, 0.0);
    const int t0 = 51;
    vars[t0 - 1].values.fill(1.0);
    const auto scores = lstsw_scores(vars, cfg);

    const double expected = (1.0 / 5.0) * std::exp(-1.0 / 101.0);
    CHECK(expected == doctest::Approx(0.19803).epsilon(1e-4)); // frozen magnitude
    CHECK(scores[t0 - 1].values(0, 0) == doctest::Approx(expected).epsilon(1e-12));

    // Cross-check against the scalar oracle at several times.
    std::vector<Image> plain;
    for (const auto& v : vars)
        plain.push_back(v.values);
    for (int t : {1, 40, 49, 51, 53, 101})
        CHECK(scores[t - 1].values(1, 1) ==
              doctest::Approx(score_oracle(plain, 1, 1, t, 5, 101, 1.0)).epsilon(1e-12));
}

TEST_CASE("transient outscores persistent at equal instantaneous variance") {
    StatConfig cfg;
    const int n = 101;
    for (double c : {0.01, 0.05, 0.1, 0.25}) {
        auto persistent = constant_variances(n, 1, 1, c);
        auto transient = constant_variances(n, 1, 1, 0.0);
        for (int t = 49; t <= 53; ++t) // centered 5-frame burst
            transient[t - 1].values.fill(c);

        const auto sp = lstsw_scores(persistent, cfg);
        const auto st = lstsw_scores(transient, cfg);

        const double s_persistent = sp[50].values(0, 0);
        const double s_transient = st[50].values(0, 0);
        CHECK(s_persistent == doctest::Approx(c * std::exp(-c)).epsilon(1e-12));
        CHECK(s_transient ==
              doctest::Approx(c * std::exp(-5.0 * c / 101.0)).epsilon(1e-12));
        CHECK(s_transient > s_persistent);
    }
}

TEST_CASE("background subtraction is strictly decreasing in v_b") {
    StatConfig cfg;
    // Same short-window burst, different long-window history.
    auto low_bg = constant_variances(101, 1, 1, 0.0);
    auto high_bg = constant_variances(101, 1, 1, 0.2);
    for (int t = 49; t <= 53; ++t) {
        low_bg[t - 1].values.fill(0.3);
        high_bg[t - 1].values.fill(0.3);
    }
    const double s_low = lstsw_scores(low_bg, cfg)[50].values(0, 0);
    const double s_high = lstsw_scores(high_bg, cfg)[50].values(0, 0);
    CHECK(s_low > s_high);
}

TEST_CASE("lstsw matches the triple-loop oracle on random stacks") {
    StatConfig cfg;
    cfg.short_window = 3;
    cfg.long_window = 11;
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> uni(0.0, 0.3);

    const int n = 32, rows = 16, cols = 16;
    std::vector<VarianceFrame> vars;
    std::vector<Image> plain;
    for (int t = 1; t <= n; ++t) {
        VarianceFrame v;
        v.timestamp_index = t;
        v.values = Image(rows, cols);
        for (double& x : v.values)
            x = uni(rng);
        plain.push_back(v.values);
        vars.push_back(std::move(v));
    }
    const auto scores = lstsw_scores(vars, cfg);
    for (int t = 1; t <= n; ++t)
        for (int r = 0; r < rows; r += 3)
            for (int c = 0; c < cols; c += 5)
                CHECK(std::abs(scores[t - 1].values(r, c) -
                               score_oracle(plain, r, c, t, 3, 11, 1.0)) < 1e-12);
}

TEST_CASE("streaming emission schedule and bit-exact equivalence") {
    StatConfig cfg; // L_s=5, L_l=101
    const int rows = 6, cols = 5;

    std::vector<SonarFrame> frames;
    for (int t = 1; t <= 101; ++t)
        frames.push_back(random_frame(rows, cols, t, 1000 + t));

    StreamingScoreBuffer buffer(cfg);
    std::vector<ScoreFrame> streamed;
    for (const SonarFrame& f : frames) {
        buffer.push(f);
        while (buffer.has_ready())
            streamed.push_back(buffer.pop());
    }
    // t + L_l/2 <= 101 -> everything through t = 51 is already settled.
    REQUIRE(streamed.size() == 51);
    CHECK(streamed.front().timestamp_index == 1);
    CHECK(streamed.back().timestamp_index == 51);
    CHECK(buffer.resident_variance_frames() <= 101);

    buffer.flush();
    while (buffer.has_ready())
        streamed.push_back(buffer.pop());
    REQUIRE(streamed.size() == 101);

    std::vector<VarianceFrame> vars;
    for (const SonarFrame& f : frames)
        vars.push_back(local_variance(f, cfg));
    const auto batch = lstsw_scores(vars, cfg);
    for (int t = 0; t < 101; ++t) {
        CHECK(streamed[t].timestamp_index == t + 1);
        CHECK(streamed[t].values == batch[t].values); // bit-identical
    }
}

TEST_CASE("streaming equals batch on a 200-frame run, bit-exact") {
    StatConfig cfg;
    cfg.short_window = 5;
    cfg.long_window = 31;
    const int rows = 8, cols = 8;

    StreamingScoreBuffer buffer(cfg);
    std::vector<ScoreFrame> streamed;
    std::vector<VarianceFrame> vars;
    for (int t = 1; t <= 200; ++t) {
        const SonarFrame f = random_frame(rows, cols, t, 500 + t);
        vars.push_back(local_variance(f, cfg));
        buffer.push(f);
        while (buffer.has_ready())
            streamed.push_back(buffer.pop());
        CHECK(buffer.resident_variance_frames() <= 31);
    }
    buffer.flush();
    while (buffer.has_ready())
        streamed.push_back(buffer.pop());

    const auto batch = lstsw_scores(vars, cfg);
    REQUIRE(streamed.size() == batch.size());
    for (size_t i = 0; i < batch.size(); ++i)
        CHECK(streamed[i].values == batch[i].values);
    CHECK(buffer.peak_resident_variance_frames() == 31);
}

TEST_CASE("streaming rejects out-of-order pushes") {
    StatConfig cfg;
    StreamingScoreBuffer buffer(cfg);
    buffer.push(random_frame(6, 6, 1, 1));
    CHECK_THROWS_AS(buffer.push(random_frame(6, 6, 3, 2)), std::invalid_argument);
    CHECK_THROWS_AS(buffer.push(random_frame(6, 6, 1, 3)), std::invalid_argument);
}
