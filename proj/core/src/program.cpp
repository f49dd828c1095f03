#include "rsopf/program.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rsopf/error.hpp"

namespace rsopf {

namespace {

constexpr std::size_t npos = static_cast<std::size_t>(-1);

bool is_bus_quantity(Quantity q) {
    switch (q) {
        case Quantity::p_inj:
        case Quantity::p_abs:
        case Quantity::q:
        case Quantity::x:
        case Quantity::x_term:
        case Quantity::v:
        case Quantity::v_lin: return true;
        default: return false;
    }
}

bool is_line_quantity(Quantity q) {
    return q == Quantity::re_S || q == Quantity::im_S || q == Quantity::I || q == Quantity::re_S_lin ||
           q == Quantity::im_S_lin;
}

bool is_lin_quantity(Quantity q) {
    return q == Quantity::re_S_lin || q == Quantity::im_S_lin || q == Quantity::v_lin ||
           q == Quantity::re_s0_lin || q == Quantity::im_s0_lin;
}

}  // namespace

const char* to_string(Quantity q) {
    static constexpr const char* names[kQuantityCount] = {
        "re_s0", "im_s0", "p0_plus", "p0_minus", "p_inj", "p_abs", "q", "X", "X_term",
        "re_S", "im_S", "I", "v", "re_S_lin", "im_S_lin", "v_lin", "re_s0_lin", "im_s0_lin"};
    return names[static_cast<std::size_t>(q)];
}

void CostSpec::validate(std::size_t bus_count) const {
    if (!(c0_minus >= 0.0) || !(c0_plus >= c0_minus))
        throw DomainError("cost: require c0_plus >= c0_minus >= 0");
    if (!(c_loss >= 0.0)) throw DomainError("cost: c_loss must be >= 0");
    if (!(c_bat >= 0.0)) throw DomainError("cost: c_bat must be >= 0");
    for (const auto* v : {&lin_p_inj, &lin_p_abs, &lin_q, &lin_x})
        if (!v->empty() && v->size() != bus_count)
            throw DomainError("cost: per-bus coefficient vectors need one entry per bus");
}

void Instance::validate() const {
    const std::size_t nodes = tree.node_count();
    const std::size_t buses = net.bus_count();
    if (tree.stage_count() != grid.stage_count())
        throw InconsistentInstance("scenario tree has " + std::to_string(tree.stage_count()) +
                                   " stages, time grid has " + std::to_string(grid.stage_count()));
    for (const auto* lat : {&demand.demand, &demand.consumption})
        if (lat->nodes() != nodes || lat->elements() != buses)
            throw InconsistentInstance("demand lattice is not shaped nodes x buses");
    try {
        cost.validate(buses);
    } catch (const DomainError& e) {
        throw InconsistentInstance(e.what());
    }
}

Instance make_instance(RadialNetwork net, ScenarioTree tree, TimeGrid grid, std::span<const double> profile,
                       CostSpec cost, ProgramOptions options) {
    DemandLattice demand = residual_demand(net, tree, grid, profile);
    Instance inst{std::move(net), std::move(tree), std::move(grid), std::move(demand), std::move(cost), options};
    inst.validate();
    return inst;
}

VariableIndex::VariableIndex(const Instance& inst) : restricted_(inst.options.restricted) {
    const std::size_t nodes = inst.tree.node_count();
    const std::size_t buses = inst.net.bus_count();
    const std::size_t lines = inst.net.line_count();
    const std::size_t slack = inst.net.slack_index();

    std::vector<std::size_t> bus_slot(buses, npos);
    for (std::size_t b = 0, k = 0; b < buses; ++b)
        if (b != slack) bus_slot[b] = k++;
    std::vector<std::size_t> line_slot(lines);
    for (std::size_t l = 0; l < lines; ++l) line_slot[l] = l;

    std::size_t offset = 0;
    for (std::size_t qi = 0; qi < kQuantityCount; ++qi) {
        const auto q = static_cast<Quantity>(qi);
        Block& blk = blocks_[qi];
        blk.offset = offset;
        if (is_lin_quantity(q) && !restricted_) continue;
        blk.nodes = (q == Quantity::x_term) ? inst.tree.leaf_count() : nodes;
        if (is_bus_quantity(q)) {
            blk.slot = bus_slot;
            blk.width = buses - 1;
        } else if (is_line_quantity(q)) {
            blk.slot = line_slot;
            blk.width = lines;
        } else {
            blk.slot = {0};
            blk.width = 1;
        }
        for (std::size_t n = 0; n < blk.nodes; ++n)
            for (std::size_t e = 0; e < blk.slot.size(); ++e)
                if (blk.slot[e] != npos) keys_.push_back(Key{q, n, e});
        offset += blk.nodes * blk.width;
    }
}

std::optional<std::size_t> VariableIndex::column(Quantity q, std::size_t node, std::size_t element) const {
    const Block& blk = blocks_[static_cast<std::size_t>(q)];
    if (node >= blk.nodes || element >= blk.slot.size() || blk.slot[element] == npos) return std::nullopt;
    return blk.offset + node * blk.width + blk.slot[element];
}

std::size_t VariableIndex::at(Quantity q, std::size_t node, std::size_t element) const {
    auto c = column(q, node, element);
    if (!c)
        throw DimensionError(std::string("no column for ") + to_string(q) + " at node " + std::to_string(node) +
                             ", element " + std::to_string(element));
    return *c;
}

namespace {

struct Row {
    std::vector<std::pair<std::size_t, double>> terms;
    double rhs = 0.0;
};

/// Collects rows per (constraint kind, node) and emits them as one block.
class Assembler {
public:
    Assembler(ConicProgram& p) : p_(p) {}

    /// sum a_k x_k == rhs
    void equal(Row r) { eq_.push_back(std::move(r)); }
    /// sum a_k x_k <= rhs
    void at_most(Row r) { le_.push_back(std::move(r)); }
    /// lb <= x <= ub; equal bounds become an equality, infinite ones are dropped.
    void bound(std::size_t col, double lb, double ub) {
        if (lb == ub) {
            fixed_.push_back(Row{{{col, 1.0}}, lb});
            return;
        }
        if (std::isfinite(ub)) le_.push_back(Row{{{col, 1.0}}, ub});
        if (std::isfinite(lb)) le_.push_back(Row{{{col, -1.0}}, -lb});
    }

    void flush(const std::string& label) {
        emit(ConeKind::zero, label, eq_);
        emit(ConeKind::zero, label + " fixed", fixed_);
        emit(ConeKind::nonnegative, label, le_);
    }

    /// Emits a cone block whose slack rows are given row by row (slack = rhs - a x).
    void cone(ConeKind kind, const std::string& label, const std::vector<Row>& rows) { emit(kind, label, rows); }

private:
    void emit(ConeKind kind, const std::string& label, std::vector<Row>& rows) {
        emit(kind, label, static_cast<const std::vector<Row>&>(rows));
        rows.clear();
    }
    void emit(ConeKind kind, const std::string& label, const std::vector<Row>& rows) {
        if (rows.empty()) return;
        const std::size_t start = p_.add_block(kind, rows.size(), label);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            for (const auto& [col, a] : rows[i].terms) p_.add_coefficient(start + i, col, a);
            p_.set_rhs(start + i, rows[i].rhs);
        }
    }

    ConicProgram& p_;
    std::vector<Row> eq_, fixed_, le_;
};

}  // namespace

std::pair<ConicProgram, VariableIndex> build_program(const Instance& inst) {
    inst.validate();
    const RadialNetwork& net = inst.net;
    const ScenarioTree& tree = inst.tree;
    const std::size_t buses = net.bus_count();
    const std::size_t lines = net.line_count();
    const std::size_t slack = net.slack_index();
    const bool lin = inst.options.restricted;

    VariableIndex idx(inst);
    ConicProgram prog(idx.size());
    Assembler as(prog);
    using Q = Quantity;
    auto col = [&](Q q, std::size_t node, std::size_t e = 0) { return idx.at(q, node, e); };

    // Objective.
    const CostSpec& c = inst.cost;
    auto lin_coef = [](const std::vector<double>& v, std::size_t b) { return v.empty() ? 0.0 : v[b]; };
    for (const TreeNode& nd : tree.nodes()) {
        const double w = nd.probability * inst.grid.delta(nd.stage);
        prog.add_objective(col(Q::p0_plus, nd.id), w * c.c0_plus);
        prog.add_objective(col(Q::p0_minus, nd.id), -w * c.c0_minus);
        for (std::size_t l = 0; l < lines; ++l)
            if (c.c_loss * net.line(l).r != 0.0) prog.add_objective(col(Q::I, nd.id, l), w * c.c_loss * net.line(l).r);
        for (std::size_t b = 0; b < buses; ++b) {
            if (b == slack) continue;
            const double pi = c.c_bat + lin_coef(c.lin_p_inj, b);
            const double pa = c.c_bat + lin_coef(c.lin_p_abs, b);
            if (pi != 0.0) prog.add_objective(col(Q::p_inj, nd.id, b), w * pi);
            if (pa != 0.0) prog.add_objective(col(Q::p_abs, nd.id, b), w * pa);
            if (lin_coef(c.lin_q, b) != 0.0) prog.add_objective(col(Q::q, nd.id, b), w * lin_coef(c.lin_q, b));
            if (lin_coef(c.lin_x, b) != 0.0) prog.add_objective(col(Q::x, nd.id, b), w * lin_coef(c.lin_x, b));
        }
    }

    auto parent_tap2 = [&](std::size_t b) {
        const double t = net.bus(*net.parent(b)).tap;
        return t * t;
    };
    const auto subtree = lin ? all_subtree_edges(net, inst.options.subtree) : std::vector<std::vector<std::size_t>>{};
    const std::string tag = " node ";

    for (const TreeNode& nd : tree.nodes()) {
        const std::size_t n = nd.id;
        const std::string where = tag + std::to_string(n);

        // Power balance at non-slack buses.
        for (std::size_t b = 0; b < buses; ++b) {
            if (b == slack) continue;
            const std::size_t l = *net.line_of(b);
            const Complex sd = inst.demand.demand(n, b);
            Row re{{{col(Q::re_S, n, l), 1.0}, {col(Q::p_inj, n, b), -1.0}, {col(Q::p_abs, n, b), 1.0}}, -sd.real()};
            Row im{{{col(Q::im_S, n, l), 1.0}, {col(Q::q, n, b), -1.0}}, -sd.imag()};
            for (std::size_t k : net.children(b)) {
                const std::size_t lk = *net.line_of(k);
                re.terms.push_back({col(Q::re_S, n, lk), -1.0});
                re.terms.push_back({col(Q::I, n, lk), net.line(lk).r});
                im.terms.push_back({col(Q::im_S, n, lk), -1.0});
                im.terms.push_back({col(Q::I, n, lk), net.line(lk).x});
            }
            as.equal(std::move(re));
            as.equal(std::move(im));
        }
        as.flush("balance" + where);

        // Slack balance and import/export split.
        {
            Row re{{{col(Q::re_s0, n), 1.0}}, 0.0};
            Row im{{{col(Q::im_s0, n), 1.0}}, 0.0};
            for (std::size_t k : net.children(slack)) {
                const std::size_t lk = *net.line_of(k);
                re.terms.push_back({col(Q::re_S, n, lk), 1.0});
                re.terms.push_back({col(Q::I, n, lk), -net.line(lk).r});
                im.terms.push_back({col(Q::im_S, n, lk), 1.0});
                im.terms.push_back({col(Q::I, n, lk), -net.line(lk).x});
            }
            as.equal(std::move(re));
            as.equal(std::move(im));
            as.equal(Row{{{col(Q::re_s0, n), 1.0}, {col(Q::p0_plus, n), -1.0}, {col(Q::p0_minus, n), 1.0}}, 0.0});
            as.flush("slack_balance" + where);
        }

        // Voltage propagation with fixed taps: v_i - t_j^2 v_j = 2 Re(z* S) - |z|^2 I.
        for (std::size_t l = 0; l < lines; ++l) {
            const std::size_t i = net.from_index(l);
            const std::size_t j = net.to_index(l);
            const Line& ln = net.line(l);
            const double t2 = parent_tap2(i);
            Row r{{{col(Q::v, n, i), 1.0},
                   {col(Q::re_S, n, l), -2.0 * ln.r},
                   {col(Q::im_S, n, l), -2.0 * ln.x},
                   {col(Q::I, n, l), ln.r * ln.r + ln.x * ln.x}},
                  0.0};
            if (j == slack) r.rhs = t2;
            else r.terms.push_back({col(Q::v, n, j), -t2});
            as.equal(std::move(r));
        }
        as.flush("voltage_drop" + where);

        // Storage dynamics towards the children (or the terminal state at leaves).
        const double dt = inst.grid.delta(nd.stage);
        for (std::size_t b = 0; b < buses; ++b) {
            if (b == slack) continue;
            const Storage& st = net.bus(b).storage;
            auto dyn = [&](std::size_t next_col) {
                as.equal(Row{{{next_col, 1.0},
                              {col(Q::x, n, b), -1.0},
                              {col(Q::p_abs, n, b), -dt * st.eff_abs},
                              {col(Q::p_inj, n, b), dt * st.eff_inj}},
                             0.0});
            };
            if (nd.children.empty()) {
                const auto leaf_pos = static_cast<std::size_t>(
                    std::find(tree.leaves().begin(), tree.leaves().end(), n) - tree.leaves().begin());
                dyn(col(Q::x_term, leaf_pos, b));
            } else {
                for (std::size_t ch : nd.children) dyn(col(Q::x, ch, b));
            }
        }
        as.flush("storage_dynamics" + where);

        if (lin) {
            for (std::size_t b = 0; b < buses; ++b) {
                if (b == slack) continue;
                const std::size_t l = *net.line_of(b);
                const Complex sd = inst.demand.demand(n, b);
                Row re{{{col(Q::re_S_lin, n, l), 1.0}, {col(Q::p_inj, n, b), -1.0}, {col(Q::p_abs, n, b), 1.0}},
                       -sd.real()};
                Row im{{{col(Q::im_S_lin, n, l), 1.0}, {col(Q::q, n, b), -1.0}}, -sd.imag()};
                for (std::size_t k : net.children(b)) {
                    const std::size_t lk = *net.line_of(k);
                    re.terms.push_back({col(Q::re_S_lin, n, lk), -1.0});
                    im.terms.push_back({col(Q::im_S_lin, n, lk), -1.0});
                }
                as.equal(std::move(re));
                as.equal(std::move(im));
            }
            Row re0{{{col(Q::re_s0_lin, n), 1.0}}, 0.0};
            Row im0{{{col(Q::im_s0_lin, n), 1.0}}, 0.0};
            for (std::size_t k : net.children(slack)) {
                re0.terms.push_back({col(Q::re_S_lin, n, *net.line_of(k)), 1.0});
                im0.terms.push_back({col(Q::im_S_lin, n, *net.line_of(k)), 1.0});
            }
            as.equal(std::move(re0));
            as.equal(std::move(im0));
            for (std::size_t l = 0; l < lines; ++l) {
                const std::size_t i = net.from_index(l);
                const std::size_t j = net.to_index(l);
                const Line& ln = net.line(l);
                const double t2 = parent_tap2(i);
                Row r{{{col(Q::v_lin, n, i), 1.0}, {col(Q::re_S_lin, n, l), -2.0 * ln.r},
                       {col(Q::im_S_lin, n, l), -2.0 * ln.x}},
                      0.0};
                if (j == slack) r.rhs = t2;
                else r.terms.push_back({col(Q::v_lin, n, j), -t2});
                as.equal(std::move(r));
            }
            for (std::size_t b = 0; b < buses; ++b)
                if (b != slack && std::isfinite(net.bus(b).v_max))
                    as.at_most(Row{{{col(Q::v_lin, n, b), 1.0}}, net.bus(b).v_max});
            as.flush("linear_distflow" + where);

            // Reverse-flow compensation: Re(z_e* S_lin_l) <= 0 for e in E_from(l).
            for (std::size_t l = 0; l < lines; ++l) {
                for (std::size_t e : subtree[net.from_index(l)]) {
                    const Line& le = net.line(e);
                    Row r{{}, 0.0};
                    if (le.r != 0.0) r.terms.push_back({col(Q::re_S_lin, n, l), le.r});
                    if (le.x != 0.0) r.terms.push_back({col(Q::im_S_lin, n, l), le.x});
                    if (!r.terms.empty()) as.at_most(std::move(r));
                }
            }
            as.flush("reverse_flow" + where);
        }
    }

    // Initial state of charge.
    for (std::size_t b = 0; b < buses; ++b)
        if (b != slack) as.equal(Row{{{col(Q::x, 0, b), 1.0}}, net.bus(b).storage.x_init});
    as.flush("storage_init");

    if (inst.options.periodic_storage) {
        const bool root_anchor = inst.options.anchor == PeriodicAnchor::root || tree.stage_count() < 2;
        for (std::size_t lp = 0; lp < tree.leaf_count(); ++lp) {
            const std::size_t leaf = tree.leaves()[lp];
            const std::size_t anchor = root_anchor ? 0 : tree.ancestor(leaf, 1);
            for (std::size_t b = 0; b < buses; ++b)
                if (b != slack)
                    as.equal(Row{{{col(Q::x_term, lp, b), 1.0}, {col(Q::x, anchor, b), -1.0}}, 0.0});
            as.flush("periodicity leaf " + std::to_string(lp));
        }
    }

    // Box constraints.
    constexpr double inf = std::numeric_limits<double>::infinity();
    for (const TreeNode& nd : tree.nodes()) {
        const std::size_t n = nd.id;
        as.bound(col(Q::p0_plus, n), 0.0, inf);
        as.bound(col(Q::p0_minus, n), 0.0, inf);
        for (std::size_t b = 0; b < buses; ++b) {
            if (b == slack) continue;
            const Bus& bus = net.bus(b);
            as.bound(col(Q::v, n, b), bus.v_min, bus.v_max);
            as.bound(col(Q::p_inj, n, b), 0.0, bus.storage.p_inj_max);
            as.bound(col(Q::p_abs, n, b), 0.0, bus.storage.p_abs_max);
            as.bound(col(Q::q, n, b), bus.reactive.q_min, bus.reactive.q_max);
            as.bound(col(Q::x, n, b), bus.storage.cap_min, bus.storage.cap_max);
        }
        for (std::size_t l = 0; l < lines; ++l) as.bound(col(Q::I, n, l), 0.0, net.line(l).i_max);
        as.flush("bounds" + tag + std::to_string(n));
    }
    for (std::size_t lp = 0; lp < tree.leaf_count(); ++lp) {
        for (std::size_t b = 0; b < buses; ++b) {
            if (b == slack) continue;
            const Storage& st = net.bus(b).storage;
            as.bound(col(Q::x_term, lp, b), st.cap_min, st.cap_max);
        }
        as.flush("bounds leaf " + std::to_string(lp));
    }

    // |S| <= S_max.
    for (const TreeNode& nd : tree.nodes()) {
        for (std::size_t l = 0; l < lines; ++l) {
            const double smax = net.line(l).s_max;
            if (!std::isfinite(smax)) continue;
            as.cone(ConeKind::second_order, "apparent_power" + tag + std::to_string(nd.id) + " line " + std::to_string(l),
                    {Row{{}, smax}, Row{{{col(Q::re_S, nd.id, l), -1.0}}, 0.0},
                     Row{{{col(Q::im_S, nd.id, l), -1.0}}, 0.0}});
        }
    }

    // v I >= P^2 + Q^2 as 2 u1 u2 >= |w|^2 with u1 = v, u2 = I / 2, w = (P, Q).
    for (const TreeNode& nd : tree.nodes()) {
        for (std::size_t l = 0; l < lines; ++l) {
            const std::size_t i = net.from_index(l);
            Row u1{{}, 0.0};
            if (i == slack) u1.rhs = 1.0;
            else u1.terms.push_back({col(Q::v, nd.id, i), -1.0});
            as.cone(ConeKind::rotated_second_order, "current" + tag + std::to_string(nd.id) + " line " + std::to_string(l),
                    {u1, Row{{{col(Q::I, nd.id, l), -0.5}}, 0.0}, Row{{{col(Q::re_S, nd.id, l), -1.0}}, 0.0},
                     Row{{{col(Q::im_S, nd.id, l), -1.0}}, 0.0}});
        }
    }

    return {std::move(prog), std::move(idx)};
}

}  // namespace rsopf
