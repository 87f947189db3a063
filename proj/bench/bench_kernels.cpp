// Compares the OpenMP kernels against their serial reference twins:
// tuple census accumulation and the rate-estimate scan.

#include <benchmark/benchmark.h>

#include "stegmod/detectors.hpp"
#include "stegmod/synth.hpp"
#include "stegmod/trace_algebra.hpp"

namespace {

stegmod::PixelGrid make_cover(int side) {
  return stegmod::synth_natural_cover(side, side, 1, 42);
}

void census_parallel(benchmark::State& state) {
  const auto grid = make_cover(static_cast<int>(state.range(0)));
  const auto seq = stegmod::partition_tuples(grid, 0, 3);
  for (auto _ : state) {
    auto c = stegmod::census(seq);
    benchmark::DoNotOptimize(c.total);
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(seq.count));
}

void census_serial(benchmark::State& state) {
  const auto grid = make_cover(static_cast<int>(state.range(0)));
  const auto seq = stegmod::partition_tuples(grid, 0, 3);
  for (auto _ : state) {
    auto c = stegmod::reference::census(seq);
    benchmark::DoNotOptimize(c.total);
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(seq.count));
}

void spa_scan_parallel(benchmark::State& state) {
  const auto grid = make_cover(static_cast<int>(state.range(0)));
  const auto c = stegmod::census(stegmod::partition_tuples(grid, 0, 2));
  for (auto _ : state) {
    auto est = stegmod::spa_estimate(c);
    benchmark::DoNotOptimize(est.alpha);
  }
}

void spa_scan_serial(benchmark::State& state) {
  const auto grid = make_cover(static_cast<int>(state.range(0)));
  const auto c = stegmod::census(stegmod::partition_tuples(grid, 0, 2));
  for (auto _ : state) {
    auto est = stegmod::reference::spa_estimate(c);
    benchmark::DoNotOptimize(est.alpha);
  }
}

void triples_scan_parallel(benchmark::State& state) {
  const auto grid = make_cover(static_cast<int>(state.range(0)));
  const auto c = stegmod::census(stegmod::partition_tuples(grid, 0, 3));
  for (auto _ : state) {
    auto est = stegmod::triples_estimate(c);
    benchmark::DoNotOptimize(est.alpha);
  }
}

void triples_scan_serial(benchmark::State& state) {
  const auto grid = make_cover(static_cast<int>(state.range(0)));
  const auto c = stegmod::census(stegmod::partition_tuples(grid, 0, 3));
  for (auto _ : state) {
    auto est = stegmod::reference::triples_estimate(c);
    benchmark::DoNotOptimize(est.alpha);
  }
}

}  // namespace

BENCHMARK(census_serial)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(census_parallel)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(spa_scan_serial)->Arg(512)->Unit(benchmark::kMillisecond);
BENCHMARK(spa_scan_parallel)->Arg(512)->Unit(benchmark::kMillisecond);
BENCHMARK(triples_scan_serial)->Arg(512)->Unit(benchmark::kMillisecond);
BENCHMARK(triples_scan_parallel)->Arg(512)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
