#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include "rsopf/network.hpp"
#include "rsopf/program.hpp"
#include "rsopf/scenario.hpp"

namespace rsopf::testkit {

/// Bus k hangs below parents[k - 1]; all lines share impedance z unless
/// `impedances` is given. Bounds are loose unless overridden afterwards.
NetworkData tree_data(const std::vector<int>& parents, Complex z, double v_min = 0.5, double v_max = 1.21,
                      const std::vector<Complex>& impedances = {});
RadialNetwork chain(std::size_t buses, Complex z = {0.01, 0.01}, double v_min = 0.5, double v_max = 1.21);

/// Uniform tree; children of a node get equal probability, values in [0, 1].
ScenarioTree uniform_tree(const std::vector<std::size_t>& branching, std::uint64_t seed = 1);
/// Stages of equal length dt starting at 0.
TimeGrid uniform_grid(std::size_t stages, double dt = 1.0);

/// Instance whose residual demand is given directly (nodes x buses).
Instance instance_with_demand(RadialNetwork net, ScenarioTree tree, TimeGrid grid, Lattice<Complex> demand,
                              CostSpec cost = {}, ProgramOptions options = {});

/// Fills the flow part of `point` (S, I, v, s0, p0 split, and the linearised
/// block when the instance is restricted) for its current device decisions,
/// with I = (1 + inflate) |S|^2 / v at the fixed point of the inflated pass.
/// Equalities then hold to rounding and the cone holds with margin.
void fill_flows(const Instance& inst, OperatingPoint& point, double inflate);

struct RandomCase {
    Instance inst;
    OperatingPoint start;
    std::uint64_t seed = 0;
};

/// Restricted-feasible instance and start: 3-10 buses, 2-4 stages,
/// 1-4 scenarios, storage dispatch and occasional reverse injections.
RandomCase random_restricted_case(std::uint64_t seed);

}  // namespace rsopf::testkit
