#include "rsopf/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>

#include "csv_util.hpp"
#include "rsopf/error.hpp"
#include "rsopf/parallel.hpp"

namespace rsopf {

double SweepLogEntry::max_change() const { return std::max({max_dI, max_dv, max_dS, max_ds0}); }

double SweepLogEntry::worst_monotonicity() const {
    return std::max({max_I_increase, max_v_decrease, max_S_decrease, max_s0_increase});
}

SweepState SweepState::from_point(const Instance& inst, const OperatingPoint& point) {
    SweepState st;
    st.s = injections(inst, point);
    st.s0 = point.s0;
    st.S = point.S;
    st.I = point.I;
    st.v = point.v;
    for (std::size_t n = 0; n < st.v.nodes(); ++n) st.v(n, inst.net.slack_index()) = 1.0;
    return st;
}

namespace {

/// Buses sorted by decreasing depth (children before parents).
std::vector<std::size_t> leaves_first(const RadialNetwork& net) {
    std::vector<std::size_t> order(net.bus_count());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return net.depth(a) > net.depth(b); });
    return order;
}

double residual_of(const RadialNetwork& net, const SweepState& st) {
    double r = 0.0;
    for (std::size_t n = 0; n < st.S.nodes(); ++n)
        for (std::size_t l = 0; l < net.line_count(); ++l)
            r = std::max(r, std::abs(st.v(n, net.from_index(l)) * st.I(n, l) - std::norm(st.S(n, l))));
    return r;
}

}  // namespace

SweepState forward_backward_pass(const Instance& inst, const SweepState& in) {
    const RadialNetwork& net = inst.net;
    const std::size_t nodes = in.S.nodes();
    const std::size_t slack = net.slack_index();
    if (in.v.nodes() != nodes || in.v.elements() != net.bus_count() || in.S.elements() != net.line_count() ||
        in.s.nodes() != nodes)
        throw LengthMismatch("sweep state is not shaped for the network");
    const std::vector<std::size_t> up = leaves_first(net);

    SweepState out = in;
    out.iteration = in.iteration + 1;
    std::vector<int> bad(nodes, 0);
    parallel_for(nodes, [&](std::size_t begin, std::size_t end) {
        for (std::size_t n = begin; n < end; ++n) {
            for (std::size_t b : up) {
                if (b == slack) continue;
                const std::size_t l = *net.line_of(b);
                Complex S = in.s(n, b);
                for (std::size_t k : net.children(b)) {
                    const std::size_t lk = *net.line_of(k);
                    S += out.S(n, lk) - net.line(lk).impedance() * out.I(n, lk);
                }
                const double vb = in.v(n, b);
                if (!(vb > 0.0)) {
                    bad[n] = 1;
                    return;
                }
                out.S(n, l) = S;
                out.I(n, l) = std::norm(S) / vb;
            }
            Complex s0{0.0, 0.0};
            for (std::size_t k : net.children(slack)) {
                const std::size_t lk = *net.line_of(k);
                s0 -= out.S(n, lk) - net.line(lk).impedance() * out.I(n, lk);
            }
            out.s0(n, 0) = s0;
            out.v(n, slack) = 1.0;
            for (auto it = up.rbegin(); it != up.rend(); ++it) {
                const std::size_t b = *it;
                if (b == slack) continue;
                const std::size_t l = *net.line_of(b);
                const std::size_t j = *net.parent(b);
                const Line& ln = net.line(l);
                const double t = net.bus(j).tap;
                out.v(n, b) = t * t * out.v(n, j) + 2.0 * (ln.r * out.S(n, l).real() + ln.x * out.S(n, l).imag()) -
                              (ln.r * ln.r + ln.x * ln.x) * out.I(n, l);
            }
        }
    });
    for (std::size_t n = 0; n < nodes; ++n)
        if (bad[n]) throw NonpositiveVoltage("nonpositive voltage at tree node " + std::to_string(n));

    SweepLogEntry e;
    e.iteration = out.iteration;
    for (std::size_t n = 0; n < nodes; ++n) {
        for (std::size_t l = 0; l < net.line_count(); ++l) {
            const Complex dS = out.S(n, l) - in.S(n, l);
            const double dI = out.I(n, l) - in.I(n, l);
            e.max_I_increase = std::max(e.max_I_increase, dI);
            e.max_S_decrease = std::max({e.max_S_decrease, -dS.real(), -dS.imag()});
            e.max_dI = std::max(e.max_dI, std::abs(dI));
            e.max_dS = std::max({e.max_dS, std::abs(dS.real()), std::abs(dS.imag())});
        }
        for (std::size_t b = 0; b < net.bus_count(); ++b) {
            const double dv = out.v(n, b) - in.v(n, b);
            e.max_v_decrease = std::max(e.max_v_decrease, -dv);
            e.max_dv = std::max(e.max_dv, std::abs(dv));
        }
        const Complex ds0 = out.s0(n, 0) - in.s0(n, 0);
        e.max_s0_increase = std::max({e.max_s0_increase, ds0.real(), ds0.imag()});
        e.max_ds0 = std::max({e.max_ds0, std::abs(ds0.real()), std::abs(ds0.imag())});
    }
    e.residual = residual_of(net, out);
    out.log.push_back(e);
    return out;
}

namespace {

double sandwich_violation(const Instance& inst, const SweepState& st, const OperatingPoint& start) {
    double w = 0.0;
    for (std::size_t n = 0; n < st.S.nodes(); ++n) {
        for (std::size_t l = 0; l < inst.net.line_count(); ++l) {
            const Complex d = st.S(n, l) - start.S_lin(n, l);
            w = std::max({w, d.real(), d.imag()});
        }
        const Complex d0 = start.s0_lin(n, 0) - st.s0(n, 0);
        w = std::max({w, d0.real(), d0.imag()});
        for (std::size_t b = 0; b < inst.net.bus_count(); ++b) w = std::max(w, st.v(n, b) - start.v_lin(n, b));
    }
    return w;
}

OperatingPoint apply_state(const OperatingPoint& start, const SweepState& st) {
    OperatingPoint p = start;
    p.S = st.S;
    p.I = st.I;
    p.v = st.v;
    p.s0 = st.s0;
    for (std::size_t n = 0; n < p.s0.nodes(); ++n) {
        const double re = p.s0(n, 0).real();
        p.p0_plus(n, 0) = std::max(re, 0.0);
        p.p0_minus(n, 0) = std::max(-re, 0.0);
    }
    return p;
}

std::string describe(const SweepLogEntry& e) {
    std::ostringstream os;
    os << "iteration " << e.iteration << ": I increase " << e.max_I_increase << ", v decrease " << e.max_v_decrease
       << ", S decrease " << e.max_S_decrease << ", s0 increase " << e.max_s0_increase << ", sandwich " << e.sandwich;
    return os.str();
}

}  // namespace

RecoveryResult recover_feasible_point(const Instance& inst, const OperatingPoint& start, const RecoveryOptions& opt) {
    if (!(opt.tol > 0.0) || opt.tol > 1e-4) throw DomainError("recovery tolerance must lie in (0, 1e-4]");
    const bool heuristic = !(inst.options.restricted && start.has_lin);

    Instance check_inst = inst;
    check_inst.options.restricted = !heuristic;
    const auto [prog, idx] = build_program(check_inst);
    const double scale = std::max(1.0, std::ranges::max(prog.rhs(), {}, [](double v) { return std::abs(v); }));
    auto feasibility = [&](const OperatingPoint& p) { return check_residuals(prog, pack(check_inst, idx, p)); };
    {
        const ResidualReport rep = feasibility(start);
        if (rep.max_violation() > opt.feasibility_tol * scale)
            throw NotFeasibleInput("start point violates block '" + prog.blocks()[rep.worst_block].label + "' by " +
                                   std::to_string(rep.max_violation()));
    }

    SweepState st = SweepState::from_point(inst, start);
    RecoveryResult res;
    res.heuristic = heuristic;
    for (std::size_t k = 0; k < opt.max_iter; ++k) {
        st = forward_backward_pass(inst, st);
        SweepLogEntry& e = st.log.back();
        if (!heuristic) {
            e.sandwich = sandwich_violation(inst, st, start);
            if (e.worst_monotonicity() > opt.monotonicity_abort)
                throw MonotonicityViolation("monotone iteration broken at " + describe(e));
            if (e.sandwich > opt.sandwich_slack)
                throw MonotonicityViolation("linearised bounds broken at " + describe(e));
        }
        if (opt.check_every_iterate) {
            const ResidualReport rep = feasibility(apply_state(start, st));
            // the nonconvex equality is only reached in the limit; cones must hold throughout
            if (!heuristic && rep.max_violation() > opt.feasibility_tol * scale)
                throw MonotonicityViolation("iterate " + std::to_string(e.iteration) + " leaves block '" +
                                            prog.blocks()[rep.worst_block].label + "'");
        }
        if (e.max_change() < opt.tol) {
            res.point = apply_state(start, st);
            res.point.objective = evaluate_cost(inst, res.point);
            res.iterations = st.iteration;
            res.log = std::move(st.log);
            return res;
        }
    }
    throw NoConvergence("sweep did not converge within " + std::to_string(opt.max_iter) + " iterations; last " +
                        describe(st.log.back()) + ", change " + std::to_string(st.log.back().max_change()));
}

void write_iteration_log(std::ostream& out, const std::vector<SweepLogEntry>& log) {
    using detail::format_double;
    out << "iter,max_dI,max_dv,max_dS,residual\n";
    for (const SweepLogEntry& e : log)
        out << e.iteration << ',' << format_double(e.max_dI) << ',' << format_double(e.max_dv) << ','
            << format_double(std::max(e.max_dS, e.max_ds0)) << ',' << format_double(e.residual) << '\n';
}

}  // namespace rsopf
