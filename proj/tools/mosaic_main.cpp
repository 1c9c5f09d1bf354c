#include "flsmosaic/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>

int main(int argc, char** argv) {
    CLI::App app{"Forward-looking sonar mosaicing with variance-scored blending"};
    app.set_config("--config", "", "Key-value config file; command-line flags override it");

    flsm::RunConfig cfg;
    std::string pose_arg = "odometry";
    std::string mode_arg = "both";
    bool no_clahe = false;
    double mpp = 0.0;

    app.add_option("--input", cfg.input_dir, "Directory of PGM/PNG polar frames")
        ->required();
    app.add_option("--geometry", cfg.geometry_file,
                   "Geometry sidecar (defaults: 256 beams, 373 samples, 15 m, 130 deg)");
    app.add_option("--poses", pose_arg,
                   "Pose source: odometry | registration | file[=path]");
    app.add_option("--mode", mode_arg, "Blend output: plain | gvm | both")
        ->check(CLI::IsMember({"plain", "gvm", "both"}));
    app.add_option("--ls", cfg.stats.short_window, "Short temporal window L_s (odd)");
    app.add_option("--ll", cfg.stats.long_window, "Long temporal window L_l (odd)");
    app.add_option("--lthres", cfg.l_thres, "Top-score contributions blended per cell");
    app.add_option("--beta", cfg.stats.background_gain, "Background suppression gain");
    app.add_option("--spatial-window", cfg.stats.spatial_window,
                   "Local variance window side (odd)");
    app.add_option("--mpp", mpp, "Mosaic meters per pixel (default: range resolution)");
    app.add_option("--out", cfg.output_dir, "Output directory")->required();
    app.add_flag("--no-clahe", no_clahe, "Skip CLAHE enhancement");
    app.add_option("--clahe-clip", cfg.clahe_clip, "CLAHE clip limit (>= 1)");
    app.add_option("--dump-scores", cfg.dump_scores_dir,
                   "Write per-frame score maps (16-bit PNG) into this directory");
    app.add_option("--threads", cfg.threads, "Worker threads for frame preparation");
    app.add_option("--stride", cfg.stride, "Use every K-th frame");
    app.add_option("--min-confidence", cfg.registration.min_confidence,
                   "Registration confidence threshold");

    CLI11_PARSE(app, argc, argv);

    cfg.clahe_enabled = !no_clahe;
    cfg.meters_per_pixel = mpp;

    if (pose_arg == "odometry") {
        cfg.pose_source = flsm::PoseSource::odometry;
    } else if (pose_arg == "registration") {
        cfg.pose_source = flsm::PoseSource::registration;
    } else if (pose_arg.rfind("file", 0) == 0) {
        cfg.pose_source = flsm::PoseSource::file;
        const auto eq = pose_arg.find('=');
        if (eq != std::string::npos)
            cfg.pose_file = pose_arg.substr(eq + 1);
        if (cfg.pose_file.empty()) {
            std::cerr << "error: --poses file requires file=<path>\n";
            return 1;
        }
    } else {
        std::cerr << "error: unknown pose source '" << pose_arg << "'\n";
        return 1;
    }

    if (mode_arg == "plain")
        cfg.mode = flsm::RunMode::plain;
    else if (mode_arg == "gvm")
        cfg.mode = flsm::RunMode::gvm;
    else
        cfg.mode = flsm::RunMode::both;

    try {
        const flsm::RunReport report = flsm::run(cfg);
        std::cout << "frames: " << report.frame_count << "\n";
        std::cout << "pose source: " << pose_arg << "\n";
        if (report.low_confidence_pairs > 0)
            std::cout << "warning: " << report.low_confidence_pairs
                      << " low-confidence registration pair(s) used fallback poses\n";
        std::cout << "grid: " << report.grid_rows << " x " << report.grid_cols << " cells at "
                  << report.meters_per_pixel << " m/px\n";
        std::cout << "contributions: " << report.total_contributions
                  << " (max kept per cell: " << report.max_retained_per_cell << ")\n";
        for (const auto& st : report.timings)
            std::cout << "  " << st.name << ": " << st.seconds << " s\n";
        std::cout << "outputs written to " << cfg.output_dir.string() << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
