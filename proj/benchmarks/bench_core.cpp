#include <benchmark/benchmark.h>

#include <vector>

#include "deturb/deconv.hpp"
#include "deturb/flow.hpp"
#include "deturb/metrics.hpp"
#include "deturb/register.hpp"
#include "deturb/turbsim.hpp"

using namespace deturb;

static void BM_InvertFlow(benchmark::State& state)
{
    const int n = static_cast<int>(state.range(0));
    const FlowField w = random_smooth_flow(1, n, n, 2.0, 10.0);
    for (auto _ : state)
        benchmark::DoNotOptimize(invert_flow(w));
    state.SetItemsProcessed(state.iterations() * n * n);
}
BENCHMARK(BM_InvertFlow)->Arg(128)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

static void BM_ComposeFlow(benchmark::State& state)
{
    const FlowField a = random_smooth_flow(2, 256, 256, 2.0, 10.0);
    const FlowField b = random_smooth_flow(3, 256, 256, 2.0, 10.0);
    for (auto _ : state)
        benchmark::DoNotOptimize(compose_flow(a, b));
}
BENCHMARK(BM_ComposeFlow)->Unit(benchmark::kMillisecond);

static void BM_HornSchunck(benchmark::State& state)
{
    const int n = static_cast<int>(state.range(0));
    const Image tgt = convolve(make_test_scene(4, n, n), make_kernel(1.0));
    const Image ref = warp_image(tgt, random_smooth_flow(5, n, n, 2.0, 10.0));
    for (auto _ : state)
        benchmark::DoNotOptimize(horn_schunck(ref, tgt));
}
BENCHMARK(BM_HornSchunck)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

static void BM_BlindDeconv(benchmark::State& state)
{
    const Image blurred = convolve(make_test_scene(6, 256, 256), make_kernel(1.5));
    for (auto _ : state)
        benchmark::DoNotOptimize(blind_deconv(blurred));
}
BENCHMARK(BM_BlindDeconv)->Unit(benchmark::kMillisecond)->Iterations(3);

static void BM_BuildTemplate(benchmark::State& state)
{
    TurbulenceParams p;
    p.seed = 7;
    const auto frames = simulate_sequence(make_test_scene(7, 256, 256), 20, p).frames;
    PipelineConfig cfg;
    cfg.threads = static_cast<int>(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(build_template(frames, cfg));
}
BENCHMARK(BM_BuildTemplate)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond)->Iterations(2)->UseRealTime();

static void BM_Ssim(benchmark::State& state)
{
    const Image a = make_test_scene(8, 256, 256), b = make_test_scene(9, 256, 256);
    for (auto _ : state)
        benchmark::DoNotOptimize(ssim(a, b));
}
BENCHMARK(BM_Ssim)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
