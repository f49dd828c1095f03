#include <benchmark/benchmark.h>

#include "common.hpp"
#include "rsopf/conic.hpp"
#include "rsopf/oracle.hpp"
#include "rsopf/sweep.hpp"

namespace {

struct Prepared {
    rsopf::Instance inst;
    rsopf::OperatingPoint start;
};

Prepared prepare(std::size_t split) {
    rsopf::Instance inst = bench::feeder_instance(split, true);
    const auto [prog, idx] = rsopf::build_program(inst);
    const rsopf::ConicSolution sol = rsopf::solve_conic(prog, 1e-9);
    rsopf::OperatingPoint start = rsopf::extract_operating_point(inst, idx, sol.x);
    return {std::move(inst), std::move(start)};
}

void BM_Recover(benchmark::State& state) {
    const Prepared p = prepare(static_cast<std::size_t>(state.range(0)));
    std::size_t sweeps = 0;
    for (auto _ : state) {
        const rsopf::RecoveryResult r = rsopf::recover_feasible_point(p.inst, p.start);
        sweeps = r.iterations;
        benchmark::DoNotOptimize(r.point.objective);
    }
    state.counters["sweeps"] = static_cast<double>(sweeps);
}
BENCHMARK(BM_Recover)->Arg(1)->Arg(4)->Arg(16);

void BM_SinglePass(benchmark::State& state) {
    const Prepared p = prepare(static_cast<std::size_t>(state.range(0)));
    const rsopf::SweepState s = rsopf::SweepState::from_point(p.inst, p.start);
    for (auto _ : state) benchmark::DoNotOptimize(rsopf::forward_backward_pass(p.inst, s));
}
BENCHMARK(BM_SinglePass)->Arg(1)->Arg(16);

void BM_LoadFlowOracle(benchmark::State& state) {
    const Prepared p = prepare(static_cast<std::size_t>(state.range(0)));
    const rsopf::Lattice<rsopf::Complex> s = rsopf::injections(p.inst, p.start);
    for (auto _ : state) benchmark::DoNotOptimize(rsopf::radial_load_flow(p.inst.net, s));
}
BENCHMARK(BM_LoadFlowOracle)->Arg(1)->Arg(16);

}  // namespace
