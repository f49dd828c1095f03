#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "rsopf/error.hpp"
#include "rsopf/scenario.hpp"
#include "testkit.hpp"

using namespace rsopf;

TEST(Scenario, Envelope) {
    EXPECT_EQ(clear_sky_envelope(5.0), 0.0);
    EXPECT_NEAR(clear_sky_envelope(14.0), 1.0, 1e-15);
    EXPECT_NEAR(clear_sky_envelope(10.5), 0.5, 1e-15);
    EXPECT_NEAR(clear_sky_envelope(7.0), 0.0, 1e-15);
    EXPECT_NEAR(clear_sky_envelope(21.0), 0.0, 1e-15);
}

TEST(Scenario, DeterministicMeanReversion) {
    SdeParams p;
    p.sigma = 0.0;
    p.a = 1.0;
    p.i_ref = 1.0;
    p.euler_step = 1e-3;
    const auto v = simulate_clear_sky(p, 0.0, 0.0, 1.0, 5, 1);
    for (double x : v) EXPECT_NEAR(x, 1.0 - std::exp(-1.0), 1e-3);
}

TEST(Scenario, ConstantDynamics) {
    SdeParams p;
    p.sigma = 0.0;
    p.a = 0.0;
    for (double x : simulate_clear_sky(p, 0.3, 2.0, 5.0, 4, 9)) EXPECT_EQ(x, 0.3);
}

TEST(Scenario, InvalidWindow) {
    EXPECT_THROW(simulate_clear_sky(SdeParams{}, 0.5, 2.0, 2.0, 3, 1), InvalidWindow);
}

TEST(Scenario, SampleMeanTracksDrift) {
    SdeParams p;  // reference parameters
    const auto v = simulate_clear_sky(p, 0.5, 0.0, 3.0, 10000, 42);
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    const double se = std::sqrt(var / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
    SdeParams drift = p;
    drift.sigma = 0.0;
    const double ref = simulate_clear_sky(drift, 0.5, 0.0, 3.0, 1, 0)[0];
    // clamping and the diffusion's state dependence shift the mean slightly; allow a small model bias
    EXPECT_LT(std::abs(mean - ref), 3.0 * se + 0.02);
}

TEST(Scenario, QuantilePositions) {
    EXPECT_EQ(quantile_positions(2), (std::vector<double>{25.0, 75.0}));
    EXPECT_EQ(quantile_positions(4), (std::vector<double>{12.5, 37.5, 62.5, 87.5}));
    EXPECT_EQ(nearest_rank(50.0, 10), 5u);
    EXPECT_EQ(nearest_rank(25.0, 4), 1u);
    EXPECT_EQ(nearest_rank(100.0, 7), 7u);
}

TEST(Scenario, SingleScenarioTreeUsesMedians) {
    const TimeGrid grid = TimeGrid::daily_31h();
    SdeParams p;
    p.n_paths = 501;
    std::vector<std::size_t> br(grid.horizon(), 1);
    const ScenarioTree tree = build_scenario_tree(p, grid, br, 3);
    EXPECT_EQ(tree.leaf_count(), 1u);
    EXPECT_EQ(tree.node_count(), grid.stage_count());
    EXPECT_EQ(tree.node(0).value, p.i0);
}

TEST(Scenario, EightLeafTree) {
    const TimeGrid grid = TimeGrid::daily_31h();
    std::vector<std::size_t> br(grid.horizon(), 1);
    br[2] = br[3] = br[4] = 2;
    SdeParams p;
    p.n_paths = 2000;
    const ScenarioTree a = build_scenario_tree(p, grid, br, 7);
    const ScenarioTree b = build_scenario_tree(p, grid, br, 7);
    ASSERT_EQ(a.leaf_count(), 8u);
    for (std::size_t leaf : a.leaves()) EXPECT_DOUBLE_EQ(a.node(leaf).probability, 0.125);
    for (const TreeNode& n : a.nodes()) {
        EXPECT_GE(n.value, 0.0);
        EXPECT_LE(n.value, 1.0);
        for (std::size_t k = 1; k < n.children.size(); ++k)
            EXPECT_LE(a.node(n.children[k - 1]).value, a.node(n.children[k]).value);
    }
    ASSERT_EQ(a.node_count(), b.node_count());
    for (std::size_t k = 0; k < a.node_count(); ++k) EXPECT_EQ(a.node(k).value, b.node(k).value);
}

TEST(Scenario, SharedAncestorsShareValues) {
    const ScenarioTree tree = testkit::uniform_tree({2, 2, 1}, 4);
    for (std::size_t a : tree.leaves())
        for (std::size_t b : tree.leaves()) {
            const auto pa = tree.path(a), pb = tree.path(b);
            for (std::size_t t = 0; t < pa.size() && pa[t] == pb[t]; ++t)
                EXPECT_EQ(tree.node(pa[t]).value, tree.node(pb[t]).value);
        }
}

TEST(Scenario, TwelveScenarioBranchingIsConstructible) {
    const TimeGrid grid = TimeGrid::daily_31h();
    std::vector<std::size_t> br(grid.horizon(), 1);
    br[2] = 2;
    br[3] = 3;
    br[4] = 2;
    SdeParams p;
    p.n_paths = 300;
    EXPECT_EQ(build_scenario_tree(p, grid, br, 1).leaf_count(), 12u);
}

TEST(Scenario, ResidualDemandExample) {
    NetworkData d = testkit::tree_data({0}, {0.01, 0.01});
    d.buses[1].peak = 1.0;
    d.buses[1].solar_cap = 1.0;
    const RadialNetwork net(d);
    // single node at tau = 14 (envelope 1) with value 0.8
    const ScenarioTree tree({TreeNode{0, 0, std::nullopt, 0.8, 1.0, {}}});
    const TimeGrid grid({14.0, 15.0});
    const std::vector<double> profile{0.6};
    const DemandLattice dl = residual_demand(net, tree, grid, profile);
    EXPECT_NEAR(dl.demand(0, 1).real(), -0.211652, 1e-6);
    EXPECT_NEAR(dl.demand(0, 1).imag(), 0.117670, 1e-6);
    EXPECT_EQ(dl.demand(0, 0), Complex{});
}

TEST(Scenario, NightNodeHasNoSolar) {
    NetworkData d = testkit::tree_data({0}, {0.01, 0.01});
    d.buses[1].peak = 1.0;
    d.buses[1].solar_cap = 1.0;
    const RadialNetwork net(d);
    const ScenarioTree tree({TreeNode{0, 0, std::nullopt, 0.8, 1.0, {}}});
    const DemandLattice dl = residual_demand(net, tree, TimeGrid({2.0, 3.0}), std::vector<double>{0.6});
    EXPECT_EQ(dl.demand(0, 1), dl.consumption(0, 1));
    EXPECT_THROW(residual_demand(net, tree, TimeGrid({2.0, 3.0}), std::vector<double>{0.6, 0.7}),
                 ProfileLengthMismatch);
}

TEST(Scenario, TreeJsonRoundTrip) {
    const TimeGrid grid = testkit::uniform_grid(3);
    const ScenarioTree tree = testkit::uniform_tree({2, 3}, 8);
    std::stringstream ss;
    save_tree_json(ss, tree, grid);
    const auto [back, g] = load_tree_json(ss);
    EXPECT_EQ(g, grid);
    ASSERT_EQ(back.node_count(), tree.node_count());
    for (std::size_t k = 0; k < tree.node_count(); ++k) {
        EXPECT_EQ(back.node(k).value, tree.node(k).value);
        EXPECT_EQ(back.node(k).probability, tree.node(k).probability);
        EXPECT_EQ(back.node(k).parent, tree.node(k).parent);
    }
}

TEST(Scenario, TreeCsvRowsForChainTree) {
    const ScenarioTree tree = testkit::uniform_tree({1, 1, 1}, 2);
    std::ostringstream out;
    save_tree_csv(out, tree);
    const std::string s = out.str();
    EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 1 + 4);  // header + T+1 rows
}
