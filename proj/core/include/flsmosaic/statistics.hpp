#pragma once

#include "flsmosaic/frame.hpp"
#include "flsmosaic/grid.hpp"

#include <deque>
#include <vector>

namespace flsm {

/// Per-pixel local variance of one frame (intensity^2 units).
struct VarianceFrame {
    Image values;
    int timestamp_index = 0;
    std::shared_ptr<const Mask> valid;
};

/// Rectified per-pixel score s = v_short * exp(-beta * v_long).
struct ScoreFrame {
    Image values;
    int timestamp_index = 0;
    std::shared_ptr<const Mask> valid;
};

struct StatConfig {
    int spatial_window = 5; // odd side length of the variance window
    int short_window = 5;   // L_s, frames
    int long_window = 101;  // L_l, frames
    double background_gain = 1.0; // beta in the exponential weighting

    void validate() const;
};

/// Windowed mean-of-squared-deviation at every valid pixel; the window is
/// truncated at image borders and masked-out pixels are excluded from both
/// mean and variance (pixels with no valid support, or invalid themselves,
/// get 0).
VarianceFrame local_variance(const SonarFrame& frame, const StatConfig& cfg);

/// Batch temporal rectification: per pixel, v_o is the mean variance over
/// the centered short_window, v_b over the centered long_window (both
/// truncated at the sequence ends), and the score is
/// v_o * exp(-background_gain * v_b).
std::vector<ScoreFrame> lstsw_scores(const std::vector<VarianceFrame>& variances,
                                     const StatConfig& cfg);

/// Bounded-memory equivalent of local_variance + lstsw_scores: frames are
/// pushed in temporal order (timestamps must advance by exactly 1); a
/// ScoreFrame for time t becomes ready once frame t + long_window/2 has
/// been pushed, and the remainder is emitted by flush(). The output is
/// bit-identical to the batch path. At most long_window variance frames
/// are resident.
class StreamingScoreBuffer {
public:
    explicit StreamingScoreBuffer(const StatConfig& cfg);

    void push(const SonarFrame& frame);
    void flush();

    bool has_ready() const { return !ready_.empty(); }
    ScoreFrame pop();

    int pushed_count() const { return last_pushed_; }
    size_t resident_variance_frames() const { return ring_.size(); }
    size_t peak_resident_variance_frames() const { return peak_ring_; }

private:
    void emit_through(int limit_t, int final_t);
    ScoreFrame make_score(int t, int final_t) const;

    StatConfig cfg_;
    std::deque<VarianceFrame> ring_; // variances for t in [ring_first_, ring_first_+size)
    int ring_first_ = 1;
    int last_pushed_ = 0;
    int next_emit_ = 1;
    bool flushed_ = false;
    size_t peak_ring_ = 0;
    std::deque<ScoreFrame> ready_;
};

} // namespace flsm
