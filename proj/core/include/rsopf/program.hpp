#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rsopf/conic.hpp"
#include "rsopf/lattice.hpp"
#include "rsopf/network.hpp"
#include "rsopf/scenario.hpp"

namespace rsopf {

/// Expected cost
///   sum_n prob(n) Delta_t(n) [ c0_plus p0+ - c0_minus p0- + c_loss sum_l r_l I_l
///                              + c_bat sum_i (p_inj + p_abs) + linear terms ].
/// Optional per-bus coefficient vectors are empty or have one entry per bus.
struct CostSpec {
    double c0_plus = 1.0;
    double c0_minus = 0.5;
    double c_loss = 2.0;
    double c_bat = 0.0;
    std::vector<double> lin_p_inj, lin_p_abs, lin_q, lin_x;

    /// Throws DomainError unless c0_plus >= c0_minus >= 0, c_loss >= 0, c_bat >= 0.
    void validate(std::size_t bus_count) const;
};

/// State of charge anchor of the terminal storage state when periodicity is on.
enum class PeriodicAnchor {
    stage_one,  ///< X[T+1] equals X at the stage-1 ancestor of the leaf
    root,       ///< X[T+1] equals X at the root
};

struct ProgramOptions {
    bool restricted = false;
    bool periodic_storage = false;
    PeriodicAnchor anchor = PeriodicAnchor::stage_one;
    SubtreeMode subtree = SubtreeMode::interior;
};

struct Instance {
    RadialNetwork net;
    ScenarioTree tree;
    TimeGrid grid;
    DemandLattice demand;
    CostSpec cost;
    ProgramOptions options;

    /// Throws InconsistentInstance when shapes disagree.
    void validate() const;
};

/// Builds an instance from a consumption profile (one value per stage).
Instance make_instance(RadialNetwork net, ScenarioTree tree, TimeGrid grid, std::span<const double> profile,
                       CostSpec cost = {}, ProgramOptions options = {});

enum class Quantity {
    re_s0,
    im_s0,
    p0_plus,
    p0_minus,
    p_inj,
    p_abs,
    q,
    x,       ///< state of charge at the node's stage, per bus
    x_term,  ///< stage T+1 state of charge, per (leaf, bus)
    re_S,
    im_S,
    I,
    v,
    re_S_lin,
    im_S_lin,
    v_lin,
    re_s0_lin,
    im_s0_lin,
};
inline constexpr std::size_t kQuantityCount = 18;

const char* to_string(Quantity q);

/// Bijection between (quantity, node, element) and program columns. The
/// element is a bus for bus quantities, a line for line quantities and 0
/// for slack quantities. Slack-bus voltages and devices have no column.
/// x_term uses leaf positions (index into tree.leaves()) as its node.
class VariableIndex {
public:
    struct Key {
        Quantity quantity;
        std::size_t node;
        std::size_t element;
    };

    VariableIndex() = default;
    VariableIndex(const Instance& inst);

    std::size_t size() const noexcept { return keys_.size(); }
    bool restricted() const noexcept { return restricted_; }
    std::optional<std::size_t> column(Quantity q, std::size_t node, std::size_t element = 0) const;
    /// Like column() but throws DimensionError when absent.
    std::size_t at(Quantity q, std::size_t node, std::size_t element = 0) const;
    const Key& key(std::size_t col) const { return keys_.at(col); }

private:
    struct Block {
        std::size_t offset = 0;
        std::size_t nodes = 0;
        std::size_t width = 0;
        std::vector<std::size_t> slot;  // element -> position within width, npos if absent
    };
    std::array<Block, kQuantityCount> blocks_{};
    std::vector<Key> keys_;
    bool restricted_ = false;
};

/// Every physical quantity on every tree node. Bus lattices include the
/// slack column (v = 1 there, devices zero).
struct OperatingPoint {
    Lattice<Complex> s0;        ///< nodes x 1
    Lattice<double> p0_plus;    ///< nodes x 1
    Lattice<double> p0_minus;   ///< nodes x 1
    Lattice<double> p_inj, p_abs, q, x;  ///< nodes x buses
    Lattice<double> x_term;     ///< leaves x buses
    Lattice<Complex> S;         ///< nodes x lines
    Lattice<double> I;          ///< nodes x lines
    Lattice<double> v;          ///< nodes x buses
    bool has_lin = false;
    Lattice<Complex> S_lin;
    Lattice<double> v_lin;
    Lattice<Complex> s0_lin;
    double objective = 0.0;

    /// Zero-initialised point shaped for the instance (v = 1, v_lin = 1).
    static OperatingPoint zeros(const Instance& inst, bool with_lin);
};

/// Net injections s = p_inj - p_abs + j q - s^d per (node, bus).
Lattice<Complex> injections(const Instance& inst, const OperatingPoint& point);

/// Conic form of the relaxed (or restricted) multistage problem.
std::pair<ConicProgram, VariableIndex> build_program(const Instance& inst);

/// Throws LengthMismatch when raw.size() != idx.size().
OperatingPoint extract_operating_point(const Instance& inst, const VariableIndex& idx, std::span<const double> raw);

/// Inverse of extract_operating_point.
std::vector<double> pack(const Instance& inst, const VariableIndex& idx, const OperatingPoint& point);

/// Expected cost of a point, using the canonical split p0+ = max(Re s0, 0),
/// p0- = max(-Re s0, 0).
double evaluate_cost(const Instance& inst, const OperatingPoint& point);

}  // namespace rsopf
