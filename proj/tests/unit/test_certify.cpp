#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "rsopf/certify.hpp"
#include "rsopf/error.hpp"
#include "testkit.hpp"

using namespace rsopf;

namespace {

Lattice<Complex> single(const std::vector<Complex>& s) {
    Lattice<Complex> out(1, s.size());
    for (std::size_t b = 0; b < s.size(); ++b) out(0, b) = s[b];
    return out;
}

const double kToyThreshold = 0.55 * 1.2 / std::sqrt(1.04);

}  // namespace

TEST(Certify, WorstCaseFlowOnTwoBus) {
    const RadialNetwork net = testkit::chain(2);
    const LinearFlow f = worst_case_linear_flow(net, single({0.0, 0.5}));
    EXPECT_NEAR(f.v(0, 1), 1.01, 1e-15);
    EXPECT_NEAR(f.S(0, 0).real(), 0.5, 1e-15);
    EXPECT_NEAR(f.s0(0, 0).real(), -0.5, 1e-15);
}

TEST(Certify, WorstCaseFlowOnThreeBusChain) {
    const RadialNetwork net = testkit::chain(3);
    const LinearFlow f = worst_case_linear_flow(net, single({0.0, -0.5, -0.5}));
    EXPECT_NEAR(f.v(0, 0), 1.0, 1e-15);
    EXPECT_NEAR(f.v(0, 1), 0.98, 1e-15);
    EXPECT_NEAR(f.v(0, 2), 0.97, 1e-15);
}

TEST(Certify, APrioriPassAndFail) {
    const RadialNetwork net(testkit::tree_data({0}, {0.01, 0.01}, 0.5, 1.01));
    const Certificate ok = a_priori_certificate(net, single({0.0, 0.4}));
    EXPECT_EQ(ok.verdict, Verdict::pass);
    EXPECT_FALSE(ok.inputs_digest.empty());

    const Certificate bad = a_priori_certificate(net, single({0.0, 0.7}));
    ASSERT_EQ(bad.verdict, Verdict::fail);
    ASSERT_EQ(bad.violations.size(), 1u);
    EXPECT_EQ(bad.violations[0].condition, "voltage_bound");
    EXPECT_EQ(bad.violations[0].bus, std::optional<std::size_t>(1));
    EXPECT_NEAR(bad.violations[0].amount, 0.004, 1e-12);
}

TEST(Certify, ReverseFlowViolationNamesLineAndEdge) {
    // 0 - 1 - 2: injection at bus 2 pushes power up line 1->0, whose subtree holds 2->1
    const RadialNetwork net = testkit::chain(3, {0.01, 0.01}, 0.5, 2.0);
    const Certificate c = a_priori_certificate(net, single({0.0, -0.1, 0.3}));
    ASSERT_EQ(c.verdict, Verdict::fail);
    bool found = false;
    for (const Violation& v : c.violations) {
        if (v.condition != "reverse_flow") continue;
        found = true;
        EXPECT_EQ(v.line, net.line_of(1));
        EXPECT_EQ(v.subtree_edge, net.line_of(2));
        EXPECT_NEAR(v.amount, 0.01 * 0.2, 1e-15);
    }
    EXPECT_TRUE(found);
    EXPECT_FALSE(c.no_reverse_flow);
}

TEST(Certify, NonpositiveFlowsImplyPass) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + rng() % 12;
        std::vector<int> parents;
        std::vector<Complex> z;
        for (std::size_t k = 1; k < n; ++k) {
            parents.push_back(static_cast<int>(rng() % k));
            z.push_back({0.001 + 0.02 * u(rng), 0.001 + 0.02 * u(rng)});
        }
        const RadialNetwork net(testkit::tree_data(parents, {}, 0.5, 1.0 + 0.1 * u(rng), z));
        const std::size_t nodes = 1 + rng() % 3;
        Lattice<Complex> s(nodes, n);
        for (std::size_t k = 0; k < nodes; ++k)
            for (std::size_t b = 1; b < n; ++b) s(k, b) = {-u(rng), -u(rng)};
        const Certificate c = a_priori_certificate(net, s);
        EXPECT_TRUE(c.no_reverse_flow);
        EXPECT_EQ(c.verdict, Verdict::pass) << trial;
    }
}

TEST(Certify, WorstCaseFlowIsMonotoneInBounds) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 2 + rng() % 10;
        std::vector<int> parents;
        for (std::size_t k = 1; k < n; ++k) parents.push_back(static_cast<int>(rng() % k));
        const RadialNetwork net(testkit::tree_data(parents, {0.01, 0.02}));
        Lattice<Complex> lo(1, n), hi(1, n);
        for (std::size_t b = 1; b < n; ++b) {
            lo(0, b) = {u(rng), u(rng)};
            hi(0, b) = lo(0, b) + Complex(std::abs(u(rng)), std::abs(u(rng)));
        }
        const LinearFlow a = linear_distflow(net, lo), b = linear_distflow(net, hi);
        for (std::size_t k = 0; k < n; ++k) EXPECT_LE(a.v(0, k), b.v(0, k) + 1e-15);
        for (std::size_t l = 0; l < net.line_count(); ++l) {
            EXPECT_LE(a.S(0, l).real(), b.S(0, l).real() + 1e-15);
            EXPECT_LE(a.S(0, l).imag(), b.S(0, l).imag() + 1e-15);
        }
    }
}

TEST(Certify, ToyCapacityThreshold) {
    const RadialNetwork net(testkit::tree_data({0}, {0.01, 0.01}, 0.5, 1.0));
    const Certificate c = max_capacity_lp(net, bus_pattern(net, {1}));
    ASSERT_EQ(c.verdict, Verdict::threshold);
    ASSERT_TRUE(c.threshold.has_value());
    EXPECT_NEAR(*c.threshold, 0.647183, 1e-6);
    EXPECT_NEAR(*c.threshold, kToyThreshold, 1e-7);
    ASSERT_EQ(c.allocation.size(), 1u);
}

TEST(Certify, CapacityThresholdIsTight) {
    const RadialNetwork net(testkit::tree_data({0, 1, 1}, {0.01, 0.01}, 0.5, 1.05));
    const CapacityPattern pat = diffuse_pattern(net);
    const Certificate c = max_capacity_lp(net, pat, {}, SolverOptions{1e-10});
    ASSERT_EQ(c.verdict, Verdict::threshold);
    const double t = *c.threshold;
    EXPECT_EQ(a_priori_certificate(net, pattern_s_bar(net, pat, {0.999 * t})).verdict, Verdict::pass);
    EXPECT_EQ(a_priori_certificate(net, pattern_s_bar(net, pat, {1.001 * t})).verdict, Verdict::fail);
}

TEST(Certify, UnboundedWhenNothingBinds) {
    // zero impedance and no subtree edges: nothing limits theta
    const RadialNetwork net(testkit::tree_data({0}, {0.0, 0.0}, 0.5, 1.1));
    EXPECT_EQ(max_capacity_lp(net, bus_pattern(net, {1})).verdict, Verdict::unbounded);
}

TEST(Certify, InfeasibleCapacityLp) {
    // the fixed part alone already breaks v_max
    NetworkData d = testkit::tree_data({0}, {0.01, 0.01}, 0.5, 0.99);
    const RadialNetwork net(d);
    CapacityPattern p = bus_pattern(net, {1});
    p.fixed[1] = Complex(1.0, 0.0);
    EXPECT_THROW(max_capacity_lp(net, p), InfeasibleLP);
    p.directions[0][1] = Complex(-1.0, 0.0);
    EXPECT_THROW(max_capacity_lp(net, p), DomainError);
}

TEST(Certify, GapBoundCases) {
    EXPECT_NEAR(relative_gap_bound(101.0, 100.0).epsilon, 0.00995025, 1e-8);
    const GapBound inf = relative_gap_bound(std::nullopt, 1.0);
    EXPECT_TRUE(inf.restricted_infeasible);
    EXPECT_TRUE(std::isinf(inf.epsilon));
    const GapBound zero = relative_gap_bound(0.0, 0.0);
    EXPECT_TRUE(zero.both_zero);
    EXPECT_EQ(zero.epsilon, 0.0);
    EXPECT_EQ(relative_gap_bound(100.0 - 1e-9, 100.0).epsilon, 0.0);
    EXPECT_THROW(relative_gap_bound(90.0, 100.0), DomainError);
    EXPECT_EQ(gap_certificate(inf, std::nullopt, 1.0).verdict, Verdict::unbounded);
}

TEST(Certify, GapBoundScaleInvariance) {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(-100.0, 100.0), scale(0.01, 100.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const double a = u(rng), b = a + std::abs(u(rng));
        const double eps = relative_gap_bound(b, a).epsilon;
        EXPECT_NEAR(eps, 2.0 * (b - a) / (std::abs(a) + std::abs(b)), 1e-12);
        const double k = scale(rng);
        EXPECT_NEAR(relative_gap_bound(k * b, k * a).epsilon, eps, 1e-9 * std::max(1.0, eps));
    }
}

TEST(Certify, JsonReport) {
    const RadialNetwork net(testkit::tree_data({0}, {0.01, 0.01}, 0.5, 1.01));
    const Lattice<Complex> s = single({0.0, 0.7});
    const Certificate c = a_priori_certificate(net, s);
    const auto j = nlohmann::json::parse(certificate_json(c));
    EXPECT_EQ(j["kind"], "a_priori");
    EXPECT_EQ(j["verdict"], "fail");
    ASSERT_EQ(j["violations"].size(), 1u);
    EXPECT_EQ(j["violations"][0]["condition"], "voltage_bound");
    EXPECT_EQ(j["inputs_digest"], certificate_digest(net, s));
    EXPECT_EQ(j["inputs_digest"].get<std::string>().size(), 64u);
    // identical inputs, identical text
    EXPECT_EQ(certificate_json(c), certificate_json(a_priori_certificate(net, s)));
}
