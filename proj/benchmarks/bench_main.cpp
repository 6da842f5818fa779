#include <benchmark/benchmark.h>

#include <random>

#include "zlocus/covering.hpp"
#include "zlocus/flatness.hpp"
#include "zlocus/frequency.hpp"
#include "zlocus/qtuple.hpp"

using namespace zlocus;

namespace {

void BM_QTupleDist(benchmark::State& state) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1, 1);
    int q = static_cast<int>(state.range(0));
    QTuple a(q, 2), b(q, 2);
    for (int i = 0; i < q; ++i)
        for (int d = 0; d < 2; ++d) {
            a.point(i)[d] = u(rng);
            b.point(i)[d] = u(rng);
        }
    for (auto _ : state) benchmark::DoNotOptimize(dist(a, b));
}
BENCHMARK(BM_QTupleDist)->Arg(2)->Arg(4)->Arg(6);

void BM_SmoothedQuartetCentered(benchmark::State& state) {
    FieldModel m = FieldModel::homogeneous_planar(1);
    FrequencyOptions opts;
    opts.quad.scale = state.range(0) / 16.0;
    for (auto _ : state)
        benchmark::DoNotOptimize(smoothed_quartet(m, {0, 0, 0, 0}, 0.5, opts));
}
BENCHMARK(BM_SmoothedQuartetCentered)->Arg(8)->Arg(16)->Arg(32);

void BM_SmoothedQuartetOffCenter(benchmark::State& state) {
    FieldModel m = FieldModel::polynomial_branch({{0, 0}, {1, 0}});
    for (auto _ : state)
        benchmark::DoNotOptimize(smoothed_quartet(m, {0.2, 0.0, 0.3, 0.0}, 0.8));
}
BENCHMARK(BM_SmoothedQuartetOffCenter);

void BM_Beta2(benchmark::State& state) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1, 1);
    WeightedPointCloud cloud;
    for (int i = 0; i < state.range(0); ++i)
        cloud.atoms.push_back({{u(rng), u(rng), u(rng), u(rng)}, 1.0});
    for (auto _ : state) benchmark::DoNotOptimize(beta2(cloud, {0, 0, 0, 0}, 2.0));
}
BENCHMARK(BM_Beta2)->Arg(64)->Arg(1024)->Arg(16384);

void BM_GreedyNet(benchmark::State& state) {
    std::vector<Vec4> pts;
    int n = static_cast<int>(state.range(0));
    double step = 2.0 / n;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) pts.push_back({0, 0, -1.0 + i * step, -1.0 + j * step});
    std::vector<int> idx(pts.size());
    std::iota(idx.begin(), idx.end(), 0);
    for (auto _ : state) benchmark::DoNotOptimize(greedy_net(pts, idx, 8.0 * step));
}
BENCHMARK(BM_GreedyNet)->Arg(32)->Arg(128);

void BM_BetaSpan(benchmark::State& state) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<Vec4> pts;
    for (int i = 0; i < state.range(0); ++i) pts.push_back({u(rng), u(rng), u(rng), u(rng)});
    for (auto _ : state) benchmark::DoNotOptimize(beta_span(pts, 2, 0.1));
}
BENCHMARK(BM_BetaSpan)->Arg(10)->Arg(30)->Arg(200);

}  // namespace

BENCHMARK_MAIN();
