#include "flsmosaic/frameio.hpp"

#include "flsmosaic/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace flsm {

namespace fs = std::filesystem;

std::vector<fs::path> list_frame_files(const fs::path& dir) {
    if (!fs::is_directory(dir))
        throw std::runtime_error(dir.string() + ": not a directory");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file())
            continue;
        auto ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        if (ext == ".pgm" || ext == ".png")
            files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
    return files;
}

SonarFrame load_frame(const fs::path& path, const BeamGeometry& g, int timestamp_index) {
    const RawImage raw = read_image(path);
    if (raw.pixels.rows() != g.samples_per_beam || raw.pixels.cols() != g.num_beams)
        throw std::runtime_error(path.string() + ": inconsistent geometry (" +
                                 std::to_string(raw.pixels.rows()) + "x" +
                                 std::to_string(raw.pixels.cols()) + ", expected " +
                                 std::to_string(g.samples_per_beam) + "x" +
                                 std::to_string(g.num_beams) + ")");
    const double scale = raw.bit_depth == 16 ? 65535.0 : 255.0;
    SonarFrame frame;
    frame.geometry = g;
    frame.timestamp_index = timestamp_index;
    frame.intensities = Image(raw.pixels.rows(), raw.pixels.cols());
    for (size_t i = 0; i < raw.pixels.size(); ++i)
        frame.intensities.data()[i] = raw.pixels.data()[i] / scale;
    return frame;
}

std::shared_ptr<const Mask> compute_blind_mask(const std::vector<SonarFrame>& frames,
                                               double zero_fraction) {
    if (frames.empty())
        return nullptr;
    const int rows = frames.front().intensities.rows();
    const int cols = frames.front().intensities.cols();

    std::vector<double> zero_frac(rows, 0.0);
    for (int r = 0; r < rows; ++r) {
        size_t zeros = 0;
        for (const SonarFrame& f : frames)
            for (int c = 0; c < cols; ++c)
                if (f.intensities(r, c) == 0.0)
                    ++zeros;
        zero_frac[r] = static_cast<double>(zeros) / (static_cast<double>(cols) * frames.size());
    }

    int lo = 0;
    while (lo < rows && zero_frac[lo] >= zero_fraction)
        ++lo;
    int hi = rows - 1;
    while (hi >= lo && zero_frac[hi] >= zero_fraction)
        --hi;
    if (lo == 0 && hi == rows - 1)
        return nullptr; // nothing blind

    auto mask = std::make_shared<Mask>(rows, cols, uint8_t{0});
    for (int r = lo; r <= hi; ++r)
        for (int c = 0; c < cols; ++c)
            (*mask)(r, c) = 1;
    return mask;
}

std::vector<SonarFrame> load_sequence(const fs::path& dir, const BeamGeometry& g) {
    g.validate();
    const auto files = list_frame_files(dir);
    if (files.empty())
        throw std::runtime_error(dir.string() + ": no frame files (.pgm/.png) found");

    std::vector<SonarFrame> frames;
    frames.reserve(files.size());
    int t = 1;
    for (const auto& path : files)
        frames.push_back(load_frame(path, g, t++));

    auto mask = compute_blind_mask(frames);
    if (mask)
        for (SonarFrame& f : frames)
            f.valid = mask;
    return frames;
}

void save_frame_pgm(const fs::path& path, const SonarFrame& frame) {
    write_pgm(path, to_u8(frame.intensities));
}

BeamGeometry read_geometry_sidecar(const fs::path& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error(path.string() + ": cannot open geometry sidecar");
    BeamGeometry g;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.resize(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            continue;
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        auto trim = [](std::string& s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            s = a == std::string::npos ? "" : s.substr(a, b - a + 1);
        };
        trim(key);
        trim(value);
        if (key.empty() || value.empty())
            continue;
        if (key == "num_beams")
            g.num_beams = std::stoi(value);
        else if (key == "samples_per_beam")
            g.samples_per_beam = std::stoi(value);
        else if (key == "max_range_m")
            g.max_range = std::stod(value);
        else if (key == "min_range_m")
            g.min_range = std::stod(value);
        else if (key == "fov_deg")
            g.horizontal_fov = std::stod(value) * 3.14159265358979323846 / 180.0;
        else
            throw std::runtime_error(path.string() + ": unknown geometry key '" + key + "'");
    }
    g.validate();
    return g;
}

void write_geometry_sidecar(const fs::path& path, const BeamGeometry& g) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error(path.string() + ": cannot write geometry sidecar");
    out << "num_beams = " << g.num_beams << "\n";
    out << "samples_per_beam = " << g.samples_per_beam << "\n";
    out.precision(17);
    out << "max_range_m = " << g.max_range << "\n";
    out << "min_range_m = " << g.min_range << "\n";
    out << "fov_deg = " << g.horizontal_fov * 180.0 / 3.14159265358979323846 << "\n";
}

std::vector<PoseRecord> read_pose_csv(const fs::path& path, PoseSource source) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error(path.string() + ": cannot open pose file");
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error(path.string() + ": empty pose file");
    // Header must be t,x,y,theta.
    {
        std::string header = line;
        header.erase(std::remove_if(header.begin(), header.end(),
                                    [](unsigned char c) { return std::isspace(c); }),
                     header.end());
        if (header != "t,x,y,theta")
            throw std::runtime_error(path.string() + ": expected header 't,x,y,theta'");
    }
    std::vector<PoseRecord> poses;
    int prev_t = 0;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        std::istringstream ss(line);
        std::string field;
        double vals[4];
        for (int i = 0; i < 4; ++i) {
            if (!std::getline(ss, field, i < 3 ? ',' : '\n'))
                throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                         ": malformed pose row");
            vals[i] = std::stod(field);
        }
        PoseRecord rec;
        rec.timestamp_index = static_cast<int>(std::lround(vals[0]));
        rec.pose = Pose2D(vals[1], vals[2], vals[3]);
        rec.source = source;
        if (!poses.empty() && rec.timestamp_index <= prev_t)
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                     ": timestamps must be strictly increasing");
        prev_t = rec.timestamp_index;
        poses.push_back(rec);
    }
    return poses;
}

void write_pose_csv(const fs::path& path, const std::vector<PoseRecord>& poses) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error(path.string() + ": cannot write pose file");
    out << "t,x,y,theta\n";
    out.precision(17);
    for (const PoseRecord& rec : poses)
        out << rec.timestamp_index << "," << rec.pose.x << "," << rec.pose.y << ","
            << rec.pose.theta << "\n";
}

} // namespace flsm
