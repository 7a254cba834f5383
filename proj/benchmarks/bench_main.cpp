// Microbenchmarks for the hot paths: trigger physicalization, detection,
// AP and the STRIP score.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "morphkit/metrics.hpp"
#include "morphkit/scene_poisoner.hpp"
#include "morphkit/strip.hpp"
#include "morphkit/toy_oracle.hpp"
#include "morphkit/trigger.hpp"

namespace {

using namespace morphkit;

const Dataset& corpus() {
    static const Dataset ds = [] {
        GridConfig g = GridConfig::with_classes(8, 3);
        g.per_cell_prob = 0.5;
        return gen_synthetic_dataset(SyntheticSceneSpec::default_spec(8), 60, g, 42, "bench");
    }();
    return ds;
}

const ToyDetector& detector() {
    static const ToyDetector det = train(corpus());
    return det;
}

void BM_PhysicalizeStamp(benchmark::State& state) {
    TriggerSpec spec;
    spec.patch = default_trigger_patch();
    spec.scale_s = static_cast<double>(state.range(0));
    const ImageBuffer obj = render_object(SyntheticSceneSpec::default_spec(8), 0, 7);
    const BBox anchor{14, 24, 34, 44};
    for (auto _ : state) benchmark::DoNotOptimize(physicalize_stamp(obj, spec, anchor));
}
BENCHMARK(BM_PhysicalizeStamp)->Arg(1)->Arg(4)->Arg(16)->Unit(benchmark::kMicrosecond);

void BM_Detect(benchmark::State& state) {
    const ToyDetector& det = detector();
    const ImageBuffer& img = corpus().scenes.front().image;
    for (auto _ : state) benchmark::DoNotOptimize(detect(det, img));
}
BENCHMARK(BM_Detect)->Unit(benchmark::kMillisecond);

void BM_AveragePrecision(benchmark::State& state) {
    std::mt19937_64 gen(1);
    std::vector<RankedHit> hits(static_cast<std::size_t>(state.range(0)));
    double c = 1.0;
    for (auto& h : hits) {
        c *= 0.999;
        h = {c, (gen() & 1u) != 0};
    }
    for (auto _ : state) benchmark::DoNotOptimize(average_precision(hits, hits.size() / 2 + 1));
}
BENCHMARK(BM_AveragePrecision)->Arg(100)->Arg(10000);

void BM_StripScore(benchmark::State& state) {
    const ToyDetector& det = detector();
    std::vector<ImageBuffer> pool;
    for (const auto& s : corpus().scenes) pool.push_back(s.image);
    StripConfig cfg;
    cfg.n_overlays = static_cast<int>(state.range(0));
    const Scene& scene = corpus().scenes.front();
    const BBox box = scene.annotations.empty() ? BBox{32, 32, 64, 64} : scene.annotations.front().box;
    for (auto _ : state) benchmark::DoNotOptimize(strip_score(det, scene.image, box, pool, cfg, 11));
}
BENCHMARK(BM_StripScore)->Arg(20)->Arg(50)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
