#include "flsmosaic/registration.hpp"

#include "flsmosaic/clahe.hpp"
#include "flsmosaic/fan.hpp"
#include "flsmosaic/simgen.hpp"

#include <benchmark/benchmark.h>

using namespace flsm;

namespace {

Image textured(int n, uint64_t seed) {
    Image img = smooth_noise(n, n, seed, 2);
    for (double& v : img)
        v = 0.5 + 0.4 * v;
    return img;
}

} // namespace

static void BM_PhaseCorrelate(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const Image a = textured(n, 1);
    const Image b = textured(n, 2);
    RegistrationConfig cfg;
    for (auto _ : state) {
        CorrelationResult r = phase_correlate(a, b, cfg);
        benchmark::DoNotOptimize(r.peak_value);
    }
}
BENCHMARK(BM_PhaseCorrelate)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

static void BM_RegisterImages512(benchmark::State& state) {
    const Image a = textured(512, 3);
    double mean = 0.0;
    for (double v : a)
        mean += v;
    mean /= static_cast<double>(a.size());
    const Image b = warp_rigid(a, 0.05, 4.0, -2.0, mean);
    RegistrationConfig cfg;
    for (auto _ : state) {
        ImageRegistration r = register_images(a, b, cfg);
        benchmark::DoNotOptimize(r.rotation);
    }
}
BENCHMARK(BM_RegisterImages512)->Unit(benchmark::kMillisecond);

static void BM_FanRasterize(benchmark::State& state) {
    BackgroundSpec bg;
    bg.mean = 0.4;
    bg.amplitude = 0.2;
    const SceneModel scene(40.0, 40.0, bg, {});
    ImagingSpec spec;
    spec.speckle = 0.2;
    const SonarFrame frame = render_frame(scene, Pose2D(10, 20, 0), spec, 1, 5).frame;
    for (auto _ : state) {
        FanImage fan = fan_rasterize(frame, frame.geometry.range_resolution());
        benchmark::DoNotOptimize(fan.image.data());
    }
}
BENCHMARK(BM_FanRasterize)->Unit(benchmark::kMillisecond);

static void BM_Clahe(benchmark::State& state) {
    BackgroundSpec bg;
    bg.mean = 0.4;
    bg.amplitude = 0.2;
    const SceneModel scene(40.0, 40.0, bg, {});
    ImagingSpec spec;
    spec.speckle = 0.3;
    const SonarFrame frame = render_frame(scene, Pose2D(10, 20, 0), spec, 1, 6).frame;
    for (auto _ : state) {
        SonarFrame out = clahe(frame, 2.0, {8, 8});
        benchmark::DoNotOptimize(out.intensities.data());
    }
}
BENCHMARK(BM_Clahe)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
