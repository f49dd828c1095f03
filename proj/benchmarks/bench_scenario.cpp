#include <benchmark/benchmark.h>

#include <vector>

#include "rsopf/scenario.hpp"

namespace {

void BM_TreeGeneration(benchmark::State& state) {
    const rsopf::TimeGrid grid = rsopf::TimeGrid::daily_31h();
    std::vector<std::size_t> br(grid.horizon(), 1);
    br[2] = br[3] = br[4] = 2;
    rsopf::SdeParams p;
    p.n_paths = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(rsopf::build_scenario_tree(p, grid, br, 2024));
}
BENCHMARK(BM_TreeGeneration)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace
