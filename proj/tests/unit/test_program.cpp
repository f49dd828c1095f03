#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <random>
#include <sstream>

#include "rsopf/conic.hpp"
#include "rsopf/error.hpp"
#include "rsopf/program.hpp"
#include "testkit.hpp"

using namespace rsopf;

namespace {

Instance two_bus(std::size_t stages, bool restricted, Complex demand = {1.0, 0.0}) {
    const RadialNetwork net = testkit::chain(2, {0.01, 0.01}, 0.81, 1.21);
    std::vector<std::size_t> br(stages - 1, 1);
    ScenarioTree tree = testkit::uniform_tree(br);
    Lattice<Complex> d(tree.node_count(), 2);
    for (std::size_t n = 0; n < tree.node_count(); ++n) d(n, 1) = demand;
    ProgramOptions opt;
    opt.restricted = restricted;
    return testkit::instance_with_demand(net, std::move(tree), testkit::uniform_grid(stages), d, CostSpec{}, opt);
}

std::size_t count_blocks_labelled(const ConicProgram& p, const std::string& prefix) {
    std::size_t rows = 0;
    for (const ConeBlock& b : p.blocks())
        if (b.label.rfind(prefix, 0) == 0) rows += b.dim;
    return rows;
}

/// Appends q to p with a column offset; returns the offset.
std::size_t append(ConicProgram& p, const ConicProgram& q) {
    const std::size_t off = p.add_variables(q.n_vars());
    for (std::size_t j = 0; j < q.n_vars(); ++j) p.add_objective(off + j, q.objective()[j]);
    std::vector<std::size_t> start;
    for (const ConeBlock& b : q.blocks()) start.push_back(p.add_block(b.kind, b.dim, b.label));
    for (const Triplet& t : q.coefficients()) {
        const std::size_t b = q.block_of_row(t.row);
        p.add_coefficient(start[b] + t.row - q.blocks()[b].start, off + t.col, t.value);
    }
    for (std::size_t r = 0; r < q.row_count(); ++r) {
        const std::size_t b = q.block_of_row(r);
        p.set_rhs(start[b] + r - q.blocks()[b].start, q.rhs()[r]);
    }
    return off;
}

}  // namespace

TEST(Program, TwoBusConeCount) {
    const auto [p, idx] = build_program(two_bus(2, false));
    EXPECT_EQ(p.count_blocks(ConeKind::rotated_second_order), 2u);
    EXPECT_FALSE(idx.restricted());
    EXPECT_FALSE(idx.column(Quantity::v_lin, 0, 1).has_value());
    EXPECT_FALSE(idx.column(Quantity::v, 0, 0).has_value());
}

TEST(Program, TwoBusRestrictedAddsLinearBlockButNoReverseFlowRows) {
    const auto [p, idx] = build_program(two_bus(2, true));
    EXPECT_EQ(count_blocks_labelled(p, "reverse_flow"), 0u);
    std::size_t lin_blocks = 0;
    for (const ConeBlock& b : p.blocks()) lin_blocks += b.label.rfind("linear_distflow", 0) == 0 && b.kind == ConeKind::zero;
    EXPECT_EQ(lin_blocks, 2u);
    EXPECT_TRUE(idx.column(Quantity::v_lin, 1, 1).has_value());
}

TEST(Program, ReverseFlowRowsPerSubtreeEdge) {
    Instance inst = two_bus(2, true);
    NetworkData d = testkit::tree_data({0, 1, 1}, {0.01, 0.02});
    inst = testkit::instance_with_demand(RadialNetwork(d), inst.tree, inst.grid,
                                         Lattice<Complex>(inst.tree.node_count(), 4), {}, inst.options);
    const auto [p, idx] = build_program(inst);
    // line 1->0 sees E_1 = {2->1, 3->1}; the others see nothing
    EXPECT_EQ(count_blocks_labelled(p, "reverse_flow"), 2u * 2u);
    inst.options.subtree = SubtreeMode::include_outgoing;
    const auto [q, idx2] = build_program(inst);
    EXPECT_EQ(count_blocks_labelled(q, "reverse_flow"), (3u + 1u + 1u) * 2u);
}

TEST(Program, UnitTapsMatchPlainVoltageDrop) {
    const Instance inst = two_bus(2, false);
    const auto [p, idx] = build_program(inst);
    const std::size_t v1 = idx.at(Quantity::v, 0, 1);
    bool seen = false;
    for (const ConeBlock& b : p.blocks()) {
        if (b.label != "voltage_drop node 0") continue;
        seen = true;
        EXPECT_EQ(p.rhs()[b.start], 1.0);
        for (const Triplet& t : p.coefficients())
            if (t.row == b.start && t.col == v1) EXPECT_EQ(t.value, 1.0);
    }
    EXPECT_TRUE(seen);
}

TEST(Program, PackExtractRoundTrip) {
    const auto c = testkit::random_restricted_case(21);
    const auto [p, idx] = build_program(c.inst);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<double> raw(idx.size());
    for (double& v : raw) v = u(rng);
    const OperatingPoint pt = extract_operating_point(c.inst, idx, raw);
    EXPECT_EQ(pack(c.inst, idx, pt), raw);
    for (std::size_t col = 0; col < idx.size(); ++col) {
        const auto& k = idx.key(col);
        EXPECT_EQ(idx.at(k.quantity, k.node, k.element), col);
    }
    EXPECT_THROW(extract_operating_point(c.inst, idx, std::vector<double>(3)), LengthMismatch);
}

TEST(Program, ZeroVectorGivesZeroObjective) {
    const Instance inst = two_bus(3, false);
    const auto [p, idx] = build_program(inst);
    const OperatingPoint pt = extract_operating_point(inst, idx, std::vector<double>(idx.size(), 0.0));
    EXPECT_EQ(pt.objective, 0.0);
}

TEST(Program, RandomStartIsFeasibleAndTelescopes) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto c = testkit::random_restricted_case(seed);
        const auto [p, idx] = build_program(c.inst);
        EXPECT_LE(check_residuals(p, pack(c.inst, idx, c.start)).max_violation(), 1e-12);
        const auto& tree = c.inst.tree;
        for (std::size_t lp = 0; lp < tree.leaf_count(); ++lp) {
            const auto path = tree.path(tree.leaves()[lp]);
            for (std::size_t b = 1; b < c.inst.net.bus_count(); ++b) {
                const Storage& st = c.inst.net.bus(b).storage;
                double sum = 0.0;
                for (std::size_t n : path)
                    sum += c.inst.grid.delta(tree.node(n).stage) *
                           (st.eff_abs * c.start.p_abs(n, b) - st.eff_inj * c.start.p_inj(n, b));
                EXPECT_NEAR(c.start.x_term(lp, b) - c.start.x(0, b), sum, 1e-12);
            }
        }
    }
}

TEST(Program, SolvedTwoBusObjectiveMatchesRecomputedCost) {
    Instance inst = two_bus(2, false);
    const auto [p, idx] = build_program(inst);
    const ConicSolution s = solve_conic(p, 1e-9);
    ASSERT_EQ(s.status, SolveStatus::optimal);
    const OperatingPoint pt = extract_operating_point(inst, idx, s.x);
    EXPECT_NEAR(pt.objective, s.objective, 1e-8 * std::abs(s.objective));
    for (std::size_t n = 0; n < inst.tree.node_count(); ++n) {
        // root of 0.0002 I^2 - 0.98 I + 1 = 0
        EXPECT_NEAR(pt.I(n, 0), 1.0206207, 1e-6);
        EXPECT_LE(pt.p0_plus(n, 0) * pt.p0_minus(n, 0), 1e-7);
    }
}

TEST(Program, ExportSplitIsComplementary) {
    Instance inst = two_bus(2, false, {-0.5, 0.0});  // surplus exported to the slack
    const auto [p, idx] = build_program(inst);
    const ConicSolution s = solve_conic(p, 1e-9);
    ASSERT_EQ(s.status, SolveStatus::optimal);
    const OperatingPoint pt = extract_operating_point(inst, idx, s.x);
    for (std::size_t n = 0; n < inst.tree.node_count(); ++n) {
        EXPECT_GT(pt.p0_minus(n, 0), 0.4);
        EXPECT_LE(pt.p0_plus(n, 0) * pt.p0_minus(n, 0), 1e-7);
    }
}

TEST(Program, RestrictionNeverLowersTheOptimum) {
    for (std::uint64_t seed = 30; seed < 36; ++seed) {
        auto c = testkit::random_restricted_case(seed);
        const auto [pr, ir] = build_program(c.inst);
        Instance relaxed = c.inst;
        relaxed.options.restricted = false;
        const auto [pu, iu] = build_program(relaxed);
        const ConicSolution sr = solve_conic(pr, 1e-8), su = solve_conic(pu, 1e-8);
        ASSERT_EQ(sr.status, SolveStatus::optimal) << seed;
        ASSERT_EQ(su.status, SolveStatus::optimal) << seed;
        EXPECT_GE(sr.objective, su.objective - 1e-7 * std::max(1.0, std::abs(su.objective))) << seed;
    }
}

TEST(Program, NodeIndexedEqualsScenarioPathForm) {
    for (std::uint64_t seed : {3u, 8u, 13u}) {
        const auto c = testkit::random_restricted_case(seed);
        Instance inst = c.inst;
        inst.options.restricted = false;
        const ScenarioTree& tree = inst.tree;
        const auto [pn, in] = build_program(inst);
        const ConicSolution sn = solve_conic(pn, 1e-9);
        ASSERT_EQ(sn.status, SolveStatus::optimal);

        // one chain per scenario, decisions tied by explicit equalities on shared ancestors
        ConicProgram big(0);
        std::vector<std::size_t> offsets;
        std::vector<std::pair<Instance, VariableIndex>> parts;
        for (std::size_t leaf : tree.leaves()) {
            const auto path = tree.path(leaf);
            std::vector<TreeNode> nodes;
            Lattice<Complex> dem(path.size(), inst.net.bus_count());
            for (std::size_t t = 0; t < path.size(); ++t) {
                nodes.push_back(TreeNode{t, t, t ? std::optional<std::size_t>(t - 1) : std::nullopt,
                                         tree.node(path[t]).value, 1.0, {}});
                for (std::size_t b = 0; b < inst.net.bus_count(); ++b) dem(t, b) = inst.demand.demand(path[t], b);
            }
            Instance chain = testkit::instance_with_demand(inst.net, ScenarioTree(nodes), inst.grid, dem, inst.cost,
                                                           inst.options);
            auto [q, qi] = build_program(chain);
            for (std::size_t j = 0; j < q.n_vars(); ++j) {
                const double w = tree.node(leaf).probability;
                const double cj = q.objective()[j];
                if (cj != 0.0) q.add_objective(j, cj * (w - 1.0));
            }
            offsets.push_back(append(big, q));
            parts.emplace_back(std::move(chain), std::move(qi));
        }
        std::vector<std::array<std::size_t, 2>> ties;
        for (std::size_t a = 0; a < tree.leaf_count(); ++a)
            for (std::size_t b = a + 1; b < tree.leaf_count(); ++b) {
                const auto pa = tree.path(tree.leaves()[a]), pb = tree.path(tree.leaves()[b]);
                for (std::size_t t = 0; t < pa.size() && pa[t] == pb[t]; ++t)
                    for (std::size_t col = 0; col < parts[a].second.size(); ++col) {
                        const auto& k = parts[a].second.key(col);
                        if (k.node != t || k.quantity == Quantity::x_term) continue;
                        ties.push_back({offsets[a] + col,
                                        offsets[b] + parts[b].second.at(k.quantity, k.node, k.element)});
                    }
            }
        const std::size_t r = ties.empty() ? 0 : big.add_block(ConeKind::zero, ties.size(), "nonanticipativity");
        for (std::size_t i = 0; i < ties.size(); ++i) {
            big.add_coefficient(r + i, ties[i][0], 1.0);
            big.add_coefficient(r + i, ties[i][1], -1.0);
        }
        const ConicSolution ss = solve_conic(big, 1e-9);
        ASSERT_EQ(ss.status, SolveStatus::optimal);
        EXPECT_NEAR(ss.objective, sn.objective, 1e-7 * std::max(1.0, std::abs(sn.objective))) << seed;
    }
}

TEST(Program, InconsistentDemandIsRejected) {
    Instance inst = two_bus(2, false);
    inst.demand.demand = Lattice<Complex>(1, 2);
    EXPECT_THROW(build_program(inst), InconsistentInstance);
}

TEST(Program, ProgramTextIsStable) {
    const auto [p, idx] = build_program(two_bus(2, true));
    std::ostringstream a, b;
    write_program_text(a, p);
    write_program_text(b, build_program(two_bus(2, true)).first);
    EXPECT_EQ(a.str(), b.str());
}
