#include "rsopf/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>

#include <nlohmann/json.hpp>

#include "rsopf/error.hpp"
#include "rsopf/parallel.hpp"

namespace rsopf {

namespace {

/// Preorder of the feeder from the slack (parents before children).
std::vector<std::size_t> preorder(const RadialNetwork& net) {
    std::vector<std::size_t> order, stack{net.slack_index()};
    while (!stack.empty()) {
        const std::size_t b = stack.back();
        stack.pop_back();
        order.push_back(b);
        const auto& ch = net.children(b);
        stack.insert(stack.end(), ch.rbegin(), ch.rend());
    }
    return order;
}

}  // namespace

double load_flow_residual(const RadialNetwork& net, const Lattice<Complex>& s, const Lattice<Complex>& S,
                          const Lattice<double>& I, const Lattice<double>& v, const Lattice<Complex>& s0) {
    const std::size_t slack = net.slack_index();
    double r = 0.0;
    for (std::size_t n = 0; n < S.nodes(); ++n) {
        for (std::size_t b = 0; b < net.bus_count(); ++b) {
            Complex net_out = b == slack ? s0(n, 0) : s(n, b) - S(n, *net.line_of(b));
            for (std::size_t k : net.children(b)) {
                const std::size_t l = *net.line_of(k);
                net_out += S(n, l) - net.line(l).impedance() * I(n, l);
            }
            r = std::max(r, std::abs(net_out));
        }
        for (std::size_t l = 0; l < net.line_count(); ++l) {
            const std::size_t i = net.from_index(l), j = net.to_index(l);
            const Line& ln = net.line(l);
            const double t = net.bus(j).tap;
            const double drop = v(n, i) - t * t * v(n, j) - 2.0 * (ln.r * S(n, l).real() + ln.x * S(n, l).imag()) +
                                std::norm(ln.impedance()) * I(n, l);
            r = std::max({r, std::abs(drop), std::abs(v(n, i) * I(n, l) - std::norm(S(n, l)))});
        }
        r = std::max(r, std::abs(v(n, slack) - 1.0));
    }
    return r;
}

LoadFlowResult radial_load_flow(const RadialNetwork& net, const Lattice<Complex>& s, const LoadFlowOptions& opt) {
    if (s.elements() != net.bus_count()) throw DimensionError("injection lattice must have one column per bus");
    const std::size_t nodes = s.nodes();
    const std::size_t lines = net.line_count();
    const std::size_t slack = net.slack_index();
    const std::vector<std::size_t> down = preorder(net);

    LoadFlowResult res;
    res.S = Lattice<Complex>(nodes, lines);
    res.I = Lattice<double>(nodes, lines);
    res.v = Lattice<double>(nodes, net.bus_count(), 1.0);
    res.s0 = Lattice<Complex>(nodes, 1);
    std::vector<double> change(nodes), resid(nodes);
    std::vector<std::size_t> iters(nodes, 0), growth(nodes, 0);
    std::vector<std::string> why(nodes);

    parallel_for(nodes, [&](std::size_t begin, std::size_t end) {
        std::vector<Complex> up(net.bus_count());  // power leaving each bus towards its parent
        for (std::size_t n = begin; n < end; ++n) {
            double last_res = std::numeric_limits<double>::infinity();
            for (std::size_t it = 1; it <= opt.max_iter; ++it) {
                iters[n] = it;
                double delta = 0.0;
                for (auto b = down.rbegin(); b != down.rend(); ++b) {
                    Complex acc = *b == slack ? Complex{} : s(n, *b);
                    for (std::size_t k : net.children(*b)) acc += up[k];
                    if (*b == slack) {
                        delta = std::max(delta, std::abs(-acc - res.s0(n, 0)));
                        res.s0(n, 0) = -acc;
                        continue;
                    }
                    const std::size_t l = *net.line_of(*b);
                    const double I = std::norm(acc) / res.v(n, *b);
                    delta = std::max({delta, std::abs(acc - res.S(n, l)), std::abs(I - res.I(n, l))});
                    res.S(n, l) = acc;
                    res.I(n, l) = I;
                    up[*b] = acc - net.line(l).impedance() * I;
                }
                bool collapsed = false;
                for (std::size_t b : down) {
                    if (b == slack) continue;
                    const std::size_t l = *net.line_of(b);
                    const std::size_t j = *net.parent(b);
                    const Line& ln = net.line(l);
                    const double t = net.bus(j).tap;
                    const double v = t * t * res.v(n, j) + 2.0 * (std::conj(ln.impedance()) * res.S(n, l)).real() -
                                     std::norm(ln.impedance()) * res.I(n, l);
                    delta = std::max(delta, std::abs(v - res.v(n, b)));
                    res.v(n, b) = v;
                    collapsed = collapsed || !(v > 0.0);
                }
                if (collapsed || !std::isfinite(delta)) {
                    why[n] = "voltage collapse at iteration " + std::to_string(it);
                    break;
                }
                change[n] = delta;
                if (delta < opt.tol) break;
                growth[n] = delta > last_res ? growth[n] + 1 : 0;
                last_res = delta;
                if (growth[n] >= opt.growth_window) {
                    why[n] = "update growth over " + std::to_string(opt.growth_window) + " iterations";
                    break;
                }
            }
            if (why[n].empty() && change[n] >= opt.tol) why[n] = "iteration limit reached";
        }
    });

    res.converged = true;
    for (std::size_t n = 0; n < nodes; ++n) {
        res.iterations = std::max(res.iterations, iters[n]);
        if (!why[n].empty() && res.converged) {
            res.converged = false;
            res.failure = "tree node " + std::to_string(n) + ": " + why[n];
        }
    }
    res.residual = load_flow_residual(net, s, res.S, res.I, res.v, res.s0);
    return res;
}

const char* to_string(Classification c) {
    switch (c) {
        case Classification::feasible: return "feasible";
        case Classification::relaxation_only: return "relaxation_only";
        case Classification::infeasible: return "infeasible";
    }
    return "?";
}

const FamilyViolation& Audit::family(const std::string& name) const {
    for (const auto& f : families)
        if (f.family == name) return f;
    throw DomainError("no constraint family named '" + name + "'");
}

namespace {

class Tally {
public:
    void declare(const std::string& family, bool lin = false) {
        if (!index_.contains(family)) {
            index_[family] = families_.size();
            families_.push_back(FamilyViolation{family, 0.0, "", 0, lin});
        }
    }
    void add(const std::string& family, double amount, const std::string& element, std::size_t node) {
        declare(family);
        FamilyViolation& f = families_[index_.at(family)];
        if (amount > f.amount || (std::isnan(amount) && !std::isnan(f.amount))) {
            f.amount = amount;
            f.element = element;
            f.node = node;
        }
    }
    void add_lin(const std::string& family, double amount, const std::string& element, std::size_t node) {
        declare(family, true);
        add(family, amount, element, node);
    }
    std::vector<FamilyViolation> take() { return std::move(families_); }

private:
    std::map<std::string, std::size_t> index_;
    std::vector<FamilyViolation> families_;
};

double below(double x, double lb) { return std::max(0.0, lb - x); }
double above(double x, double ub) { return std::max(0.0, x - ub); }
double outside(double x, double lb, double ub) { return std::max(below(x, lb), above(x, ub)); }

}  // namespace

Audit constraint_violation_report(const Instance& inst, const OperatingPoint& p, double tol) {
    const RadialNetwork& net = inst.net;
    const ScenarioTree& tree = inst.tree;
    const std::size_t nodes = tree.node_count();
    const std::size_t buses = net.bus_count();
    const std::size_t lines = net.line_count();
    const std::size_t slack = net.slack_index();
    auto shaped = [](const auto& lat, std::size_t r, std::size_t c) { return lat.nodes() == r && lat.elements() == c; };
    if (!(shaped(p.s0, nodes, 1) && shaped(p.p_inj, nodes, buses) && shaped(p.p_abs, nodes, buses) &&
          shaped(p.q, nodes, buses) && shaped(p.x, nodes, buses) && shaped(p.x_term, tree.leaf_count(), buses) &&
          shaped(p.S, nodes, lines) && shaped(p.I, nodes, lines) && shaped(p.v, nodes, buses)))
        throw ShapeMismatch("operating point is not shaped for the instance");
    if (p.has_lin && !(shaped(p.S_lin, nodes, lines) && shaped(p.v_lin, nodes, buses) && shaped(p.s0_lin, nodes, 1)))
        throw ShapeMismatch("linearised block is not shaped for the instance");

    const Lattice<Complex> s = injections(inst, p);
    auto bus_name = [&](std::size_t b) { return "bus " + std::to_string(net.bus(b).id); };
    auto line_name = [&](std::size_t l) {
        return "line " + std::to_string(net.line(l).from) + "->" + std::to_string(net.line(l).to);
    };

    Tally t;
    for (const char* f : {"power_balance", "slack_balance", "voltage_drop", "current_definition", "current_cone",
                          "voltage_bounds", "current_bounds", "apparent_power", "device_bounds", "storage_bounds",
                          "storage_dynamics", "storage_init"})
        t.declare(f);
    if (inst.options.periodic_storage) t.declare("periodicity");

    for (const TreeNode& nd : tree.nodes()) {
        const std::size_t n = nd.id;
        for (std::size_t b = 0; b < buses; ++b) {
            Complex out = b == slack ? p.s0(n, 0) : s(n, b) - p.S(n, *net.line_of(b));
            for (std::size_t k : net.children(b)) {
                const std::size_t l = *net.line_of(k);
                out += p.S(n, l) - net.line(l).impedance() * p.I(n, l);
            }
            t.add(b == slack ? "slack_balance" : "power_balance", std::max(std::abs(out.real()), std::abs(out.imag())),
                  bus_name(b), n);
            if (b == slack) {
                t.add("voltage_bounds", std::abs(p.v(n, b) - 1.0), bus_name(b), n);
                continue;
            }
            const Bus& bus = net.bus(b);
            t.add("voltage_bounds", outside(p.v(n, b), bus.v_min, bus.v_max), bus_name(b), n);
            t.add("device_bounds",
                  std::max({outside(p.p_inj(n, b), 0.0, bus.storage.p_inj_max),
                            outside(p.p_abs(n, b), 0.0, bus.storage.p_abs_max),
                            outside(p.q(n, b), bus.reactive.q_min, bus.reactive.q_max)}),
                  bus_name(b), n);
            t.add("storage_bounds", outside(p.x(n, b), bus.storage.cap_min, bus.storage.cap_max), bus_name(b), n);

            const double dt = inst.grid.delta(nd.stage);
            const double next_base =
                p.x(n, b) + dt * (bus.storage.eff_abs * p.p_abs(n, b) - bus.storage.eff_inj * p.p_inj(n, b));
            if (nd.children.empty()) {
                const auto lp = static_cast<std::size_t>(
                    std::find(tree.leaves().begin(), tree.leaves().end(), n) - tree.leaves().begin());
                t.add("storage_dynamics", std::abs(p.x_term(lp, b) - next_base), bus_name(b), n);
            } else {
                for (std::size_t ch : nd.children)
                    t.add("storage_dynamics", std::abs(p.x(ch, b) - next_base), bus_name(b), ch);
            }
        }
        for (std::size_t l = 0; l < lines; ++l) {
            const std::size_t i = net.from_index(l), j = net.to_index(l);
            const Line& ln = net.line(l);
            const double tap = net.bus(j).tap;
            const double drop = p.v(n, i) - tap * tap * p.v(n, j) -
                                2.0 * (ln.r * p.S(n, l).real() + ln.x * p.S(n, l).imag()) +
                                std::norm(ln.impedance()) * p.I(n, l);
            t.add("voltage_drop", std::abs(drop), line_name(l), n);
            const double gap = p.v(n, i) * p.I(n, l) - std::norm(p.S(n, l));
            t.add("current_definition", std::abs(gap), line_name(l), n);
            t.add("current_cone", std::max(0.0, -gap), line_name(l), n);
            t.add("current_bounds", outside(p.I(n, l), 0.0, ln.i_max), line_name(l), n);
            t.add("apparent_power", above(std::abs(p.S(n, l)), ln.s_max), line_name(l), n);
        }

        if (p.has_lin) {
            const auto subtree = all_subtree_edges(net, inst.options.subtree);
            Complex out0 = p.s0_lin(n, 0);
            for (std::size_t k : net.children(slack)) out0 += p.S_lin(n, *net.line_of(k));
            t.add_lin("linear_balance", std::abs(out0), bus_name(slack), n);
            for (std::size_t b = 0; b < buses; ++b) {
                if (b == slack) continue;
                Complex out = s(n, b) - p.S_lin(n, *net.line_of(b));
                for (std::size_t k : net.children(b)) out += p.S_lin(n, *net.line_of(k));
                t.add_lin("linear_balance", std::abs(out), bus_name(b), n);
                t.add_lin("linear_voltage_bound", above(p.v_lin(n, b), net.bus(b).v_max), bus_name(b), n);
            }
            for (std::size_t l = 0; l < lines; ++l) {
                const std::size_t i = net.from_index(l), j = net.to_index(l);
                const Line& ln = net.line(l);
                const double tap = net.bus(j).tap;
                const double vj = j == slack ? 1.0 : p.v_lin(n, j);
                t.add_lin("linear_voltage",
                          std::abs(p.v_lin(n, i) - tap * tap * vj -
                                   2.0 * (ln.r * p.S_lin(n, l).real() + ln.x * p.S_lin(n, l).imag())),
                          line_name(l), n);
                for (std::size_t e : subtree[i])
                    t.add_lin("reverse_flow",
                              std::max(0.0, net.line(e).r * p.S_lin(n, l).real() + net.line(e).x * p.S_lin(n, l).imag()),
                              line_name(l) + " / " + line_name(e), n);
            }
        }
    }
    for (std::size_t b = 0; b < buses; ++b) {
        if (b == slack) continue;
        const Storage& st = net.bus(b).storage;
        t.add("storage_init", std::abs(p.x(0, b) - st.x_init), bus_name(b), 0);
        for (std::size_t lp = 0; lp < tree.leaf_count(); ++lp) {
            t.add("storage_bounds", outside(p.x_term(lp, b), st.cap_min, st.cap_max), bus_name(b) + " terminal", lp);
            if (inst.options.periodic_storage) {
                const bool root = inst.options.anchor == PeriodicAnchor::root || tree.stage_count() < 2;
                const std::size_t anchor = root ? 0 : tree.ancestor(tree.leaves()[lp], 1);
                t.add("periodicity", std::abs(p.x_term(lp, b) - p.x(anchor, b)), bus_name(b), lp);
            }
        }
    }

    Audit a;
    a.tolerance = tol;
    a.families = t.take();
    bool base_ok = true;
    for (const auto& f : a.families)
        if (!f.linearised && f.family != "current_definition" && !(f.amount <= tol)) base_ok = false;
    if (!base_ok) a.classification = Classification::infeasible;
    else if (a.family("current_definition").amount <= tol) a.classification = Classification::feasible;
    else a.classification = Classification::relaxation_only;
    return a;
}

std::string audit_json(const Audit& a) {
    nlohmann::ordered_json j;
    j["kind"] = "audit";
    j["verdict"] = to_string(a.classification);
    j["tolerance"] = a.tolerance;
    auto& vs = j["violations"] = nlohmann::ordered_json::array();
    for (const auto& f : a.families) {
        nlohmann::ordered_json e;
        e["condition"] = f.family;
        e["element"] = f.element;
        e["node"] = f.node;
        e["amount"] = f.amount;
        if (f.linearised) e["linearised"] = true;
        vs.push_back(std::move(e));
    }
    return j.dump(2);
}

}  // namespace rsopf
