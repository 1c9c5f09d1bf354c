#pragma once

#include "flsmosaic/frame.hpp"

#include <filesystem>
#include <vector>

namespace flsm {

/// Loads every .pgm/.png in `dir` in lexicographic (= temporal) order and
/// normalizes to [0,1] by the source bit-depth maximum. Rows are range
/// samples (row 0 nearest), columns are beams; dimensions must match `g`.
/// Contiguous range bands that are raw-zero in >= 99% of their pixels
/// across the whole sequence (the echo-free blind region) are masked
/// invalid; the mask is shared by all returned frames.
std::vector<SonarFrame> load_sequence(const std::filesystem::path& dir, const BeamGeometry& g);

/// Lists the frame files load_sequence would read, already sorted.
std::vector<std::filesystem::path> list_frame_files(const std::filesystem::path& dir);

SonarFrame load_frame(const std::filesystem::path& path, const BeamGeometry& g,
                      int timestamp_index);

/// Shared blind-band mask over already-normalized frames (exact zeros are
/// the no-echo pixels). Bands are trimmed only from the near and far ends.
std::shared_ptr<const Mask> compute_blind_mask(const std::vector<SonarFrame>& frames,
                                               double zero_fraction = 0.99);

void save_frame_pgm(const std::filesystem::path& path, const SonarFrame& frame);

/// Key-value sidecar: num_beams, samples_per_beam, max_range_m, min_range_m,
/// fov_deg. Missing keys keep their defaults.
BeamGeometry read_geometry_sidecar(const std::filesystem::path& path);
void write_geometry_sidecar(const std::filesystem::path& path, const BeamGeometry& g);

/// CSV with header `t,x,y,theta` (SI units, radians), t strictly increasing.
std::vector<PoseRecord> read_pose_csv(const std::filesystem::path& path, PoseSource source);
void write_pose_csv(const std::filesystem::path& path, const std::vector<PoseRecord>& poses);

} // namespace flsm
