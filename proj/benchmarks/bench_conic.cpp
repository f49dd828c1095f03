#include <benchmark/benchmark.h>

#include "common.hpp"
#include "rsopf/conic.hpp"

namespace {

void BM_BuildProgram(benchmark::State& state) {
    const rsopf::Instance inst = bench::feeder_instance(static_cast<std::size_t>(state.range(0)), true);
    for (auto _ : state) benchmark::DoNotOptimize(rsopf::build_program(inst));
}
BENCHMARK(BM_BuildProgram)->Arg(1)->Arg(4)->Arg(16);

void BM_SolveRelaxed(benchmark::State& state) {
    const rsopf::Instance inst = bench::feeder_instance(static_cast<std::size_t>(state.range(0)), false);
    const auto [prog, idx] = rsopf::build_program(inst);
    for (auto _ : state) benchmark::DoNotOptimize(rsopf::solve_conic(prog, 1e-8));
    state.counters["vars"] = static_cast<double>(prog.n_vars());
}
BENCHMARK(BM_SolveRelaxed)->Arg(1)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_SolveRestricted(benchmark::State& state) {
    const rsopf::Instance inst = bench::feeder_instance(static_cast<std::size_t>(state.range(0)), true);
    const auto [prog, idx] = rsopf::build_program(inst);
    for (auto _ : state) benchmark::DoNotOptimize(rsopf::solve_conic(prog, 1e-8));
    state.counters["vars"] = static_cast<double>(prog.n_vars());
}
BENCHMARK(BM_SolveRestricted)->Arg(1)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond);

}  // namespace
