#include "flsmosaic/mosaic.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace flsm;

static void BM_TopKOffer(benchmark::State& state) {
    const int k = static_cast<int>(state.range(0));
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::vector<Contribution> stream(100000);
    for (size_t i = 0; i < stream.size(); ++i) {
        stream[i].score = static_cast<float>(uni(rng));
        stream[i].timestamp = static_cast<uint32_t>(i / 1000 + 1);
        stream[i].pixel_index = static_cast<uint32_t>(i);
        stream[i].quant = static_cast<uint16_t>(rng() % 65536);
    }
    for (auto _ : state) {
        CellAccumulator cell;
        for (const Contribution& c : stream)
            cell.offer(c, k);
        benchmark::DoNotOptimize(cell.total_count());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(stream.size()));
}
BENCHMARK(BM_TopKOffer)->Arg(5)->Arg(15)->Arg(50);

static void BM_ScatterFrame(benchmark::State& state) {
    const BeamGeometry g;
    SonarFrame f;
    f.geometry = g;
    f.timestamp_index = 1;
    f.intensities = Image(g.samples_per_beam, g.num_beams, 0.5);
    ScoreFrame s;
    s.timestamp_index = 1;
    s.values = Image(g.samples_per_beam, g.num_beams, 0.1);
    const Pose2D pose(0.0, 0.0, 0.2);

    for (auto _ : state) {
        state.PauseTiming();
        MosaicGrid grid = MosaicGrid::fit(g, {pose}, g.range_resolution(), BlendConfig{}, 1);
        state.ResumeTiming();
        grid.scatter(f, &s, pose);
        benchmark::DoNotOptimize(grid.total_offered());
    }
    state.SetItemsProcessed(state.iterations() *
                            static_cast<int64_t>(f.intensities.size()));
}
BENCHMARK(BM_ScatterFrame)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
