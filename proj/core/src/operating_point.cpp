#include <algorithm>
#include <string>

#include "rsopf/error.hpp"
#include "rsopf/program.hpp"

namespace rsopf {

OperatingPoint OperatingPoint::zeros(const Instance& inst, bool with_lin) {
    const std::size_t nodes = inst.tree.node_count();
    const std::size_t buses = inst.net.bus_count();
    const std::size_t lines = inst.net.line_count();
    OperatingPoint p;
    p.s0 = Lattice<Complex>(nodes, 1);
    p.p0_plus = Lattice<double>(nodes, 1);
    p.p0_minus = Lattice<double>(nodes, 1);
    p.p_inj = Lattice<double>(nodes, buses);
    p.p_abs = Lattice<double>(nodes, buses);
    p.q = Lattice<double>(nodes, buses);
    p.x = Lattice<double>(nodes, buses);
    p.x_term = Lattice<double>(inst.tree.leaf_count(), buses);
    p.S = Lattice<Complex>(nodes, lines);
    p.I = Lattice<double>(nodes, lines);
    p.v = Lattice<double>(nodes, buses, 1.0);
    p.has_lin = with_lin;
    if (with_lin) {
        p.S_lin = Lattice<Complex>(nodes, lines);
        p.v_lin = Lattice<double>(nodes, buses, 1.0);
        p.s0_lin = Lattice<Complex>(nodes, 1);
    }
    return p;
}

Lattice<Complex> injections(const Instance& inst, const OperatingPoint& point) {
    const std::size_t nodes = inst.tree.node_count();
    const std::size_t buses = inst.net.bus_count();
    Lattice<Complex> s(nodes, buses);
    for (std::size_t n = 0; n < nodes; ++n)
        for (std::size_t b = 0; b < buses; ++b) {
            if (b == inst.net.slack_index()) continue;
            s(n, b) = Complex(point.p_inj(n, b) - point.p_abs(n, b), point.q(n, b)) - inst.demand.demand(n, b);
        }
    return s;
}

namespace {

/// Visits every (quantity, node, element) slot of a point as a double lvalue.
template <class P, class F>
void for_each_slot(P& point, const VariableIndex& idx, F&& f) {
    using Q = Quantity;
    for (std::size_t c = 0; c < idx.size(); ++c) {
        const auto& k = idx.key(c);
        const std::size_t n = k.node, e = k.element;
        auto re = [](auto& z) -> auto& { return reinterpret_cast<double(&)[2]>(z)[0]; };
        auto im = [](auto& z) -> auto& { return reinterpret_cast<double(&)[2]>(z)[1]; };
        switch (k.quantity) {
            case Q::re_s0: f(c, re(point.s0(n, 0))); break;
            case Q::im_s0: f(c, im(point.s0(n, 0))); break;
            case Q::p0_plus: f(c, point.p0_plus(n, 0)); break;
            case Q::p0_minus: f(c, point.p0_minus(n, 0)); break;
            case Q::p_inj: f(c, point.p_inj(n, e)); break;
            case Q::p_abs: f(c, point.p_abs(n, e)); break;
            case Q::q: f(c, point.q(n, e)); break;
            case Q::x: f(c, point.x(n, e)); break;
            case Q::x_term: f(c, point.x_term(n, e)); break;
            case Q::re_S: f(c, re(point.S(n, e))); break;
            case Q::im_S: f(c, im(point.S(n, e))); break;
            case Q::I: f(c, point.I(n, e)); break;
            case Q::v: f(c, point.v(n, e)); break;
            case Q::re_S_lin: f(c, re(point.S_lin(n, e))); break;
            case Q::im_S_lin: f(c, im(point.S_lin(n, e))); break;
            case Q::v_lin: f(c, point.v_lin(n, e)); break;
            case Q::re_s0_lin: f(c, re(point.s0_lin(n, 0))); break;
            case Q::im_s0_lin: f(c, im(point.s0_lin(n, 0))); break;
        }
    }
}

void check_shape(const Instance& inst, const OperatingPoint& p, bool lin) {
    const std::size_t nodes = inst.tree.node_count();
    const std::size_t buses = inst.net.bus_count();
    const std::size_t lines = inst.net.line_count();
    auto ok = [](const auto& lat, std::size_t r, std::size_t c) { return lat.nodes() == r && lat.elements() == c; };
    bool good = ok(p.s0, nodes, 1) && ok(p.p0_plus, nodes, 1) && ok(p.p0_minus, nodes, 1) &&
                ok(p.p_inj, nodes, buses) && ok(p.p_abs, nodes, buses) && ok(p.q, nodes, buses) &&
                ok(p.x, nodes, buses) && ok(p.x_term, inst.tree.leaf_count(), buses) && ok(p.S, nodes, lines) &&
                ok(p.I, nodes, lines) && ok(p.v, nodes, buses);
    if (lin)
        good = good && p.has_lin && ok(p.S_lin, nodes, lines) && ok(p.v_lin, nodes, buses) && ok(p.s0_lin, nodes, 1);
    if (!good) throw LengthMismatch("operating point is not shaped for the instance");
}

}  // namespace

OperatingPoint extract_operating_point(const Instance& inst, const VariableIndex& idx, std::span<const double> raw) {
    if (raw.size() != idx.size())
        throw LengthMismatch("solution vector has " + std::to_string(raw.size()) + " entries, program has " +
                             std::to_string(idx.size()));
    OperatingPoint p = OperatingPoint::zeros(inst, idx.restricted());
    for_each_slot(p, idx, [&](std::size_t c, double& slot) { slot = raw[c]; });
    p.objective = evaluate_cost(inst, p);
    return p;
}

std::vector<double> pack(const Instance& inst, const VariableIndex& idx, const OperatingPoint& point) {
    check_shape(inst, point, idx.restricted());
    std::vector<double> raw(idx.size());
    OperatingPoint copy = point;
    for_each_slot(copy, idx, [&](std::size_t c, double& slot) { raw[c] = slot; });
    return raw;
}

double evaluate_cost(const Instance& inst, const OperatingPoint& point) {
    check_shape(inst, point, false);
    const RadialNetwork& net = inst.net;
    const CostSpec& c = inst.cost;
    auto coef = [](const std::vector<double>& v, std::size_t b) { return v.empty() ? 0.0 : v[b]; };
    double total = 0.0;
    for (const TreeNode& nd : inst.tree.nodes()) {
        const std::size_t n = nd.id;
        const double p0 = point.s0(n, 0).real();
        double stage = c.c0_plus * std::max(p0, 0.0) - c.c0_minus * std::max(-p0, 0.0);
        for (std::size_t l = 0; l < net.line_count(); ++l) stage += c.c_loss * net.line(l).r * point.I(n, l);
        for (std::size_t b = 0; b < net.bus_count(); ++b) {
            if (b == net.slack_index()) continue;
            stage += (c.c_bat + coef(c.lin_p_inj, b)) * point.p_inj(n, b) +
                     (c.c_bat + coef(c.lin_p_abs, b)) * point.p_abs(n, b) + coef(c.lin_q, b) * point.q(n, b) +
                     coef(c.lin_x, b) * point.x(n, b);
        }
        total += nd.probability * inst.grid.delta(nd.stage) * stage;
    }
    return total;
}

}  // namespace rsopf
