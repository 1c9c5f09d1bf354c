#include "flsmosaic/statistics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace flsm {

void StatConfig::validate() const {
    if (spatial_window < 3 || spatial_window % 2 == 0)
        throw std::invalid_argument("StatConfig: spatial_window must be odd and >= 3");
    if (short_window < 1 || short_window % 2 == 0)
        throw std::invalid_argument("StatConfig: short_window must be odd and >= 1");
    if (long_window % 2 == 0)
        throw std::invalid_argument("StatConfig: long_window must be odd");
    if (!(short_window < long_window))
        throw std::invalid_argument("StatConfig: need short_window < long_window");
}

VarianceFrame local_variance(const SonarFrame& frame, const StatConfig& cfg) {
    cfg.validate();
    const Image& img = frame.intensities;
    const int rows = img.rows();
    const int cols = img.cols();
    const int half = cfg.spatial_window / 2;
    if (cfg.spatial_window > rows || cfg.spatial_window > cols)
        throw std::invalid_argument("local_variance: window larger than image");

    VarianceFrame out;
    out.timestamp_index = frame.timestamp_index;
    out.valid = frame.valid;
    out.values = Image(rows, cols, 0.0);

    // Two separable passes of fresh direct sums; no running-sum drift, so
    // the result matches a naive per-pixel loop to ~machine precision.
    std::vector<double> col_sum(cols), col_sq(cols);
    std::vector<int> col_cnt(cols);
    for (int r = 0; r < rows; ++r) {
        const int r0 = std::max(0, r - half);
        const int r1 = std::min(rows - 1, r + half);
        for (int c = 0; c < cols; ++c) {
            double s = 0.0, q = 0.0;
            int n = 0;
            for (int rr = r0; rr <= r1; ++rr) {
                if (!frame.is_valid_at(rr, c))
                    continue;
                const double v = img(rr, c);
                s += v;
                q += v * v;
                ++n;
            }
            col_sum[c] = s;
            col_sq[c] = q;
            col_cnt[c] = n;
        }
        for (int c = 0; c < cols; ++c) {
            if (!frame.is_valid_at(r, c))
                continue;
            const int c0 = std::max(0, c - half);
            const int c1 = std::min(cols - 1, c + half);
            double s = 0.0, q = 0.0;
            int n = 0;
            for (int cc = c0; cc <= c1; ++cc) {
                s += col_sum[cc];
                q += col_sq[cc];
                n += col_cnt[cc];
            }
            if (n == 0)
                continue;
            const double mean = s / n;
            const double msq = q / n;
            double var = msq - mean * mean;
            // The subtraction cancels to ~eps * E[p^2] on (near-)constant
            // windows; snap those to an exact zero. The threshold sits
            // orders of magnitude below any true variance of quantized
            // sonar intensities.
            if (var < 32.0 * std::numeric_limits<double>::epsilon() * msq)
                var = 0.0;
            out.values(r, c) = var;
        }
    }
    return out;
}

namespace {

// Mean of the variance stack over the centered windows around t, both
// truncated to [1, n_total], then the exponential background weighting.
// `window` holds [lo_l..hi_l] ascending; summation is ascending in tau so
// the batch and streaming paths produce bit-identical values.
ScoreFrame score_from_window(const std::vector<const VarianceFrame*>& window, int lo_l, int t,
                             int n_total, const StatConfig& cfg) {
    const int hs = cfg.short_window / 2;
    const int lo_s = std::max(1, t - hs), hi_s = std::min(n_total, t + hs);
    const int hi_l = lo_l + static_cast<int>(window.size()) - 1;

    const VarianceFrame& center = *window[t - lo_l];
    const int rows = center.values.rows();
    const int cols = center.values.cols();
    const size_t npx = center.values.size();

    Image sum_s(rows, cols, 0.0);
    Image sum_l(rows, cols, 0.0);
    for (int tau = lo_l; tau <= hi_l; ++tau) {
        const double* sv = window[tau - lo_l]->values.data();
        double* dl = sum_l.data();
        for (size_t i = 0; i < npx; ++i)
            dl[i] += sv[i];
        if (tau >= lo_s && tau <= hi_s) {
            double* ds = sum_s.data();
            for (size_t i = 0; i < npx; ++i)
                ds[i] += sv[i];
        }
    }

    ScoreFrame out;
    out.timestamp_index = t;
    out.valid = center.valid;
    out.values = Image(rows, cols, 0.0);
    const double inv_s = 1.0 / (hi_s - lo_s + 1);
    const double inv_l = 1.0 / (hi_l - lo_l + 1);
    const double beta = cfg.background_gain;
    const uint8_t* mask = center.valid ? center.valid->data() : nullptr;
    for (size_t i = 0; i < npx; ++i) {
        if (mask && !mask[i])
            continue;
        const double vo = sum_s.data()[i] * inv_s;
        const double vb = sum_l.data()[i] * inv_l;
        out.values.data()[i] = vo * std::exp(-beta * vb);
    }
    return out;
}

} // namespace

std::vector<ScoreFrame> lstsw_scores(const std::vector<VarianceFrame>& variances,
                                     const StatConfig& cfg) {
    cfg.validate();
    if (variances.empty())
        throw std::invalid_argument("lstsw_scores: empty sequence");
    const int n = static_cast<int>(variances.size());
    for (int i = 0; i < n; ++i) {
        if (variances[i].timestamp_index != i + 1)
            throw std::invalid_argument("lstsw_scores: frames must be ordered t = 1..N");
        if (!variances[i].values.same_shape(variances[0].values))
            throw std::invalid_argument("lstsw_scores: frames must share shape");
    }

    const int hl = cfg.long_window / 2;
    std::vector<ScoreFrame> out;
    out.reserve(variances.size());
    std::vector<const VarianceFrame*> window;
    for (int t = 1; t <= n; ++t) {
        const int lo_l = std::max(1, t - hl);
        const int hi_l = std::min(n, t + hl);
        window.clear();
        for (int tau = lo_l; tau <= hi_l; ++tau)
            window.push_back(&variances[tau - 1]);
        out.push_back(score_from_window(window, lo_l, t, n, cfg));
    }
    return out;
}

StreamingScoreBuffer::StreamingScoreBuffer(const StatConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
}

void StreamingScoreBuffer::push(const SonarFrame& frame) {
    if (flushed_)
        throw std::logic_error("StreamingScoreBuffer: push after flush");
    if (frame.timestamp_index != last_pushed_ + 1)
        throw std::invalid_argument("StreamingScoreBuffer: out-of-order push (expected t=" +
                                    std::to_string(last_pushed_ + 1) + ", got " +
                                    std::to_string(frame.timestamp_index) + ")");
    if (!ring_.empty() && !frame.intensities.same_shape(ring_.front().values))
        throw std::invalid_argument("StreamingScoreBuffer: frame shape changed mid-stream");

    ring_.push_back(local_variance(frame, cfg_));
    last_pushed_ = frame.timestamp_index;
    peak_ring_ = std::max(peak_ring_, ring_.size());

    // A window for t is settled once t + L_l/2 has arrived; the final
    // sequence length cannot matter to it anymore.
    const int hl = cfg_.long_window / 2;
    emit_through(last_pushed_ - hl, last_pushed_);
}

void StreamingScoreBuffer::flush() {
    if (flushed_)
        return;
    flushed_ = true;
    emit_through(last_pushed_, last_pushed_);
}

void StreamingScoreBuffer::emit_through(int limit_t, int final_t) {
    const int hl = cfg_.long_window / 2;
    while (next_emit_ <= limit_t) {
        ready_.push_back(make_score(next_emit_, final_t));
        ++next_emit_;
        // Drop variances no future emission can reach.
        while (ring_first_ < next_emit_ - hl) {
            ring_.pop_front();
            ++ring_first_;
        }
    }
}

ScoreFrame StreamingScoreBuffer::make_score(int t, int final_t) const {
    const int hl = cfg_.long_window / 2;
    const int lo_l = std::max(1, t - hl);
    const int hi_l = std::min(final_t, t + hl);
    std::vector<const VarianceFrame*> window;
    window.reserve(hi_l - lo_l + 1);
    for (int tau = lo_l; tau <= hi_l; ++tau)
        window.push_back(&ring_[tau - ring_first_]);
    return score_from_window(window, lo_l, t, final_t, cfg_);
}

ScoreFrame StreamingScoreBuffer::pop() {
    if (ready_.empty())
        throw std::logic_error("StreamingScoreBuffer: pop with nothing ready");
    ScoreFrame out = std::move(ready_.front());
    ready_.pop_front();
    return out;
}

} // namespace flsm
