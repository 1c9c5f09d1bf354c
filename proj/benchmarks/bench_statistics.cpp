#include "flsmosaic/statistics.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace flsm;

namespace {

SonarFrame production_frame(uint64_t seed) {
    SonarFrame f;
    f.geometry = BeamGeometry{};
    f.timestamp_index = 1;
    f.intensities = Image(f.geometry.samples_per_beam, f.geometry.num_beams);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (double& v : f.intensities)
        v = uni(rng);
    return f;
}

} // namespace

static void BM_LocalVariance(benchmark::State& state) {
    StatConfig cfg;
    cfg.spatial_window = static_cast<int>(state.range(0));
    const SonarFrame frame = production_frame(1);
    for (auto _ : state) {
        VarianceFrame v = local_variance(frame, cfg);
        benchmark::DoNotOptimize(v.values.data());
    }
    state.SetItemsProcessed(state.iterations() *
                            static_cast<int64_t>(frame.intensities.size()));
}
BENCHMARK(BM_LocalVariance)->Arg(3)->Arg(5)->Arg(9);

static void BM_StreamingScorePush(benchmark::State& state) {
    StatConfig cfg; // L_s=5, L_l=101
    std::vector<SonarFrame> frames;
    for (int t = 1; t <= 130; ++t) {
        SonarFrame f = production_frame(t);
        f.timestamp_index = t;
        frames.push_back(std::move(f));
    }
    for (auto _ : state) {
        StreamingScoreBuffer buffer(cfg);
        size_t emitted = 0;
        for (const SonarFrame& f : frames) {
            buffer.push(f);
            while (buffer.has_ready()) {
                ScoreFrame s = buffer.pop();
                benchmark::DoNotOptimize(s.values.data());
                ++emitted;
            }
        }
        benchmark::DoNotOptimize(emitted);
    }
    state.SetItemsProcessed(state.iterations() * 130);
}
BENCHMARK(BM_StreamingScorePush)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
