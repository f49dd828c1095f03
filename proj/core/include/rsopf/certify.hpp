#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "rsopf/conic.hpp"
#include "rsopf/lattice.hpp"
#include "rsopf/network.hpp"
#include "rsopf/program.hpp"

namespace rsopf {

/// Lossless DistFlow solution: flows accumulated towards the slack, then
/// voltages propagated outwards from v_0 = 1 with fixed taps.
struct LinearFlow {
    Lattice<Complex> S;   ///< nodes x lines
    Lattice<double> v;    ///< nodes x buses
    Lattice<Complex> s0;  ///< nodes x 1, slack injection
};

/// Evaluates the lossless DistFlow equations for injections `s` (nodes x buses).
LinearFlow linear_distflow(const RadialNetwork& net, const Lattice<Complex>& s);

/// Same recursion applied to per-(node, bus) injection upper bounds.
inline LinearFlow worst_case_linear_flow(const RadialNetwork& net, const Lattice<Complex>& s_bar) {
    return linear_distflow(net, s_bar);
}

enum class CertificateKind { a_priori, no_reverse_flow, capacity_lp, a_posteriori };
enum class Verdict { pass, fail, threshold, unbounded };

const char* to_string(CertificateKind k);
const char* to_string(Verdict v);

struct Violation {
    std::string condition;  ///< "voltage_bound" or "reverse_flow"
    std::optional<std::size_t> line;
    std::optional<std::size_t> subtree_edge;
    std::optional<std::size_t> bus;
    std::size_t node = 0;
    double amount = 0.0;
};

struct Certificate {
    CertificateKind kind = CertificateKind::a_priori;
    Verdict verdict = Verdict::pass;
    std::optional<double> threshold;
    std::vector<Violation> violations;
    /// Whether S_lin <= 0 holds everywhere (sufficient for the flow conditions when v_max >= 1).
    bool no_reverse_flow = false;
    std::vector<double> allocation;   ///< capacity LP maximiser, one entry per group
    std::optional<LinearFlow> flow;   ///< worst-case flow used by the checks
    std::vector<std::pair<std::string, double>> inputs;  ///< scalar inputs echoed in reports
    std::string inputs_digest;
};

struct CertifyOptions {
    double slack = 1e-9;
    SubtreeMode subtree = SubtreeMode::interior;
};

/// Checks v_lin <= v_max at every bus and Re(z_e* S_lin_l) <= 0 for every
/// line l and every e in the subtree edge set of the sending bus of l.
Certificate a_priori_certificate(const RadialNetwork& net, const Lattice<Complex>& s_bar,
                                 const CertifyOptions& options = {});

/// s_bar = p_inj_max + j q_max - s^d on every tree node.
Lattice<Complex> default_s_bar(const Instance& inst);

/// Tree-independent bound: extra_i - floor (1 + j r) / sqrt(1 + r^2) peak_i
/// on a single node. `extra` has one entry per bus (slack entry ignored).
Lattice<Complex> floor_s_bar(const RadialNetwork& net, const std::vector<Complex>& extra, double floor = 0.55,
                             double reactive_ratio = 0.2);

/// Injection upper bounds affine in group capacities theta:
///   s_bar_i = fixed_i + sum_g theta_g direction[g]_i.
struct CapacityPattern {
    std::vector<std::vector<Complex>> directions;  ///< groups x buses
    std::vector<Complex> fixed;                    ///< per bus
    bool nonnegative = true;                       ///< theta_g >= 0
    std::vector<std::string> names;                ///< optional group labels
};

/// Diffuse allocation proportional to peak: one group, direction peak_i / sum peak,
/// fixed part storage_term * peak_i / sum peak minus the consumption floor.
CapacityPattern diffuse_pattern(const RadialNetwork& net, double storage_term = 0.0, double floor = 0.55,
                                double reactive_ratio = 0.2);
/// One group per listed bus position, unit active direction.
CapacityPattern bus_pattern(const RadialNetwork& net, const std::vector<std::size_t>& buses, double floor = 0.55,
                            double reactive_ratio = 0.2);

/// Maximises sum_g theta_g subject to the worst-case linear flow meeting the
/// a-priori conditions. Verdict threshold (with allocation) or unbounded.
/// Throws InfeasibleLP, DomainError (empty or negative pattern).
Certificate max_capacity_lp(const RadialNetwork& net, const CapacityPattern& pattern,
                            const CertifyOptions& options = {}, const SolverOptions& solver = {});

/// Evaluates the s_bar of a pattern at given capacities.
Lattice<Complex> pattern_s_bar(const RadialNetwork& net, const CapacityPattern& pattern,
                               const std::vector<double>& theta);

struct GapBound {
    double epsilon = 0.0;  ///< +inf when the restricted problem is infeasible
    bool restricted_infeasible = false;
    bool both_zero = false;
};

/// epsilon = 2 (val_r - val) / (|val| + |val_r|). Differences below zero within
/// `clamp_tol` (relative to max(1, |values|)) are clamped to 0; larger negative
/// differences throw DomainError. nullopt val_restricted means infeasible.
GapBound relative_gap_bound(std::optional<double> val_restricted, double val_relaxed, double clamp_tol = 1e-6);

Certificate gap_certificate(const GapBound& gap, std::optional<double> val_restricted, double val_relaxed);

/// {kind, verdict, threshold?, violations:[...], inputs_digest}
std::string certificate_json(const Certificate& cert);

/// SHA-256 over the network description and the bound lattice.
std::string certificate_digest(const RadialNetwork& net, const Lattice<Complex>& s_bar);

}  // namespace rsopf
