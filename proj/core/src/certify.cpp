#include "rsopf/certify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "csv_util.hpp"
#include "rsopf/digest.hpp"
#include "rsopf/error.hpp"

namespace rsopf {

namespace {

std::vector<std::size_t> leaves_first(const RadialNetwork& net) {
    std::vector<std::size_t> order(net.bus_count());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return net.depth(a) > net.depth(b); });
    return order;
}

Complex consumption_floor(const Bus& b, double floor, double ratio) {
    return floor * Complex(1.0, ratio) / std::sqrt(1.0 + ratio * ratio) * b.peak;
}

}  // namespace

LinearFlow linear_distflow(const RadialNetwork& net, const Lattice<Complex>& s) {
    if (s.elements() != net.bus_count()) throw DimensionError("injection lattice must have one column per bus");
    const std::size_t nodes = s.nodes();
    const std::size_t slack = net.slack_index();
    const auto up = leaves_first(net);
    LinearFlow f{Lattice<Complex>(nodes, net.line_count()), Lattice<double>(nodes, net.bus_count(), 1.0),
                 Lattice<Complex>(nodes, 1)};
    for (std::size_t n = 0; n < nodes; ++n) {
        for (std::size_t b : up) {
            if (b == slack) continue;
            Complex S = s(n, b);
            for (std::size_t k : net.children(b)) S += f.S(n, *net.line_of(k));
            f.S(n, *net.line_of(b)) = S;
        }
        Complex s0{0.0, 0.0};
        for (std::size_t k : net.children(slack)) s0 -= f.S(n, *net.line_of(k));
        f.s0(n, 0) = s0;
        for (auto it = up.rbegin(); it != up.rend(); ++it) {
            const std::size_t b = *it;
            if (b == slack) continue;
            const std::size_t j = *net.parent(b);
            const Line& ln = net.line(*net.line_of(b));
            const Complex S = f.S(n, *net.line_of(b));
            const double t = net.bus(j).tap;
            f.v(n, b) = t * t * f.v(n, j) + 2.0 * (ln.r * S.real() + ln.x * S.imag());
        }
    }
    return f;
}

const char* to_string(CertificateKind k) {
    switch (k) {
        case CertificateKind::a_priori: return "a_priori";
        case CertificateKind::no_reverse_flow: return "no_reverse_flow";
        case CertificateKind::capacity_lp: return "capacity_lp";
        case CertificateKind::a_posteriori: return "a_posteriori";
    }
    return "?";
}

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::pass: return "pass";
        case Verdict::fail: return "fail";
        case Verdict::threshold: return "threshold";
        case Verdict::unbounded: return "unbounded";
    }
    return "?";
}

std::string certificate_digest(const RadialNetwork& net, const Lattice<Complex>& s_bar) {
    std::ostringstream os;
    save_network(os, net, NetworkFormat::json);
    os << '\n' << s_bar.nodes() << ' ' << s_bar.elements() << '\n';
    for (const Complex& z : s_bar.data())
        os << detail::format_double(z.real()) << ' ' << detail::format_double(z.imag()) << '\n';
    return sha256_hex(os.str());
}

Certificate a_priori_certificate(const RadialNetwork& net, const Lattice<Complex>& s_bar,
                                 const CertifyOptions& opt) {
    Certificate cert;
    cert.kind = CertificateKind::a_priori;
    LinearFlow f = linear_distflow(net, s_bar);
    const auto subtree = all_subtree_edges(net, opt.subtree);
    cert.no_reverse_flow = true;
    for (std::size_t n = 0; n < s_bar.nodes(); ++n) {
        for (std::size_t b = 0; b < net.bus_count(); ++b) {
            if (b == net.slack_index()) continue;
            const double excess = f.v(n, b) - net.bus(b).v_max;
            if (excess > opt.slack) cert.violations.push_back({"voltage_bound", std::nullopt, std::nullopt, b, n, excess});
        }
        for (std::size_t l = 0; l < net.line_count(); ++l) {
            const Complex S = f.S(n, l);
            if (S.real() > opt.slack || S.imag() > opt.slack) cert.no_reverse_flow = false;
            for (std::size_t e : subtree[net.from_index(l)]) {
                const double val = net.line(e).r * S.real() + net.line(e).x * S.imag();
                if (val > opt.slack) cert.violations.push_back({"reverse_flow", l, e, std::nullopt, n, val});
            }
        }
    }
    cert.verdict = cert.violations.empty() ? Verdict::pass : Verdict::fail;
    cert.inputs_digest = certificate_digest(net, s_bar);
    cert.flow = std::move(f);
    return cert;
}

Lattice<Complex> default_s_bar(const Instance& inst) {
    const RadialNetwork& net = inst.net;
    Lattice<Complex> s(inst.tree.node_count(), net.bus_count());
    for (std::size_t n = 0; n < s.nodes(); ++n)
        for (std::size_t b = 0; b < net.bus_count(); ++b) {
            if (b == net.slack_index()) continue;
            const Bus& bus = net.bus(b);
            s(n, b) = Complex(bus.storage.p_inj_max, bus.reactive.q_max) - inst.demand.demand(n, b);
        }
    return s;
}

Lattice<Complex> floor_s_bar(const RadialNetwork& net, const std::vector<Complex>& extra, double floor,
                             double ratio) {
    if (extra.size() != net.bus_count()) throw DimensionError("one extra injection per bus expected");
    Lattice<Complex> s(1, net.bus_count());
    for (std::size_t b = 0; b < net.bus_count(); ++b)
        if (b != net.slack_index()) s(0, b) = extra[b] - consumption_floor(net.bus(b), floor, ratio);
    return s;
}

CapacityPattern diffuse_pattern(const RadialNetwork& net, double storage_term, double floor, double ratio) {
    const double total = net.total_peak();
    if (!(total > 0.0)) throw DomainError("diffuse pattern needs a positive total peak");
    CapacityPattern p;
    p.directions.assign(1, std::vector<Complex>(net.bus_count()));
    p.fixed.assign(net.bus_count(), Complex{});
    p.names = {"total"};
    for (std::size_t b = 0; b < net.bus_count(); ++b) {
        if (b == net.slack_index()) continue;
        const double share = net.bus(b).peak / total;
        p.directions[0][b] = share;
        p.fixed[b] = share * storage_term - consumption_floor(net.bus(b), floor, ratio);
    }
    return p;
}

CapacityPattern bus_pattern(const RadialNetwork& net, const std::vector<std::size_t>& buses, double floor,
                            double ratio) {
    CapacityPattern p;
    p.fixed.assign(net.bus_count(), Complex{});
    for (std::size_t b = 0; b < net.bus_count(); ++b)
        if (b != net.slack_index()) p.fixed[b] = -consumption_floor(net.bus(b), floor, ratio);
    for (std::size_t b : buses) {
        if (b >= net.bus_count() || b == net.slack_index()) throw DomainError("pattern bus out of range");
        std::vector<Complex> d(net.bus_count());
        d[b] = 1.0;
        p.directions.push_back(std::move(d));
        p.names.push_back("bus " + std::to_string(net.bus(b).id));
    }
    return p;
}

Lattice<Complex> pattern_s_bar(const RadialNetwork& net, const CapacityPattern& pattern,
                               const std::vector<double>& theta) {
    if (theta.size() != pattern.directions.size()) throw DimensionError("one capacity per pattern group expected");
    Lattice<Complex> s(1, net.bus_count());
    for (std::size_t b = 0; b < net.bus_count(); ++b) {
        if (b == net.slack_index()) continue;
        Complex v = pattern.fixed.at(b);
        for (std::size_t g = 0; g < theta.size(); ++g) v += theta[g] * pattern.directions[g].at(b);
        s(0, b) = v;
    }
    return s;
}

Certificate max_capacity_lp(const RadialNetwork& net, const CapacityPattern& pat, const CertifyOptions& opt,
                            const SolverOptions& solver) {
    const std::size_t groups = pat.directions.size();
    const std::size_t buses = net.bus_count();
    const std::size_t lines = net.line_count();
    const std::size_t slack = net.slack_index();
    if (groups == 0) throw DomainError("capacity pattern has no groups");
    if (lines == 0) throw DomainError("capacity LP needs at least one line");
    if (pat.fixed.size() != buses) throw DimensionError("pattern fixed part needs one entry per bus");
    for (const auto& d : pat.directions) {
        if (d.size() != buses) throw DimensionError("pattern direction needs one entry per bus");
        bool any = false;
        for (const Complex& z : d) {
            if (z.real() < 0.0 || z.imag() < 0.0) throw DomainError("pattern directions must be nonnegative");
            any = any || z != Complex{};
        }
        if (!any) throw DomainError("pattern direction is identically zero");
    }

    // columns: theta | P per line | Q per line | v per bus
    const std::size_t cP = groups, cQ = groups + lines, cv = groups + 2 * lines;
    ConicProgram prog(cv + buses);
    for (std::size_t g = 0; g < groups; ++g) prog.add_objective(g, -1.0);

    std::size_t r = prog.add_block(ConeKind::zero, 2 * lines + lines, "linear_flow");
    for (std::size_t b = 0; b < buses; ++b) {
        if (b == slack) continue;
        const std::size_t l = *net.line_of(b);
        prog.add_coefficient(r, cP + l, 1.0);
        prog.add_coefficient(r + 1, cQ + l, 1.0);
        for (std::size_t k : net.children(b)) {
            prog.add_coefficient(r, cP + *net.line_of(k), -1.0);
            prog.add_coefficient(r + 1, cQ + *net.line_of(k), -1.0);
        }
        for (std::size_t g = 0; g < groups; ++g) {
            prog.add_coefficient(r, g, -pat.directions[g][b].real());
            prog.add_coefficient(r + 1, g, -pat.directions[g][b].imag());
        }
        prog.set_rhs(r, pat.fixed[b].real());
        prog.set_rhs(r + 1, pat.fixed[b].imag());

        const std::size_t j = *net.parent(b);
        const double t2 = net.bus(j).tap * net.bus(j).tap;
        const Line& ln = net.line(l);
        prog.add_coefficient(r + 2, cv + b, 1.0);
        prog.add_coefficient(r + 2, cP + l, -2.0 * ln.r);
        prog.add_coefficient(r + 2, cQ + l, -2.0 * ln.x);
        if (j == slack) prog.set_rhs(r + 2, t2);
        else prog.add_coefficient(r + 2, cv + j, -t2);
        r += 3;
    }

    std::vector<std::pair<std::vector<std::pair<std::size_t, double>>, double>> le;
    for (std::size_t b = 0; b < buses; ++b)
        if (b != slack && std::isfinite(net.bus(b).v_max)) le.push_back({{{cv + b, 1.0}}, net.bus(b).v_max});
    const auto subtree = all_subtree_edges(net, opt.subtree);
    for (std::size_t l = 0; l < lines; ++l)
        for (std::size_t e : subtree[net.from_index(l)])
            le.push_back({{{cP + l, net.line(e).r}, {cQ + l, net.line(e).x}}, 0.0});
    if (pat.nonnegative)
        for (std::size_t g = 0; g < groups; ++g) le.push_back({{{g, -1.0}}, 0.0});
    // the slack bus voltage column is pinned
    le.push_back({{{cv + slack, 1.0}}, 1.0});
    le.push_back({{{cv + slack, -1.0}}, -1.0});
    r = prog.add_block(ConeKind::nonnegative, le.size(), "conditions");
    for (std::size_t i = 0; i < le.size(); ++i) {
        for (const auto& [c, a] : le[i].first) prog.add_coefficient(r + i, c, a);
        prog.set_rhs(r + i, le[i].second);
    }

    const ConicSolution sol = solve_conic(prog, solver);
    Certificate cert;
    cert.kind = CertificateKind::capacity_lp;
    switch (sol.status) {
        case SolveStatus::infeasible:
            throw InfeasibleLP("capacity conditions cannot hold for any admissible capacity");
        case SolveStatus::unbounded:
            cert.verdict = Verdict::unbounded;
            break;
        case SolveStatus::numerical_limit:
            throw Error("SolverFailure", "capacity LP stopped at the numerical limit after " +
                                             std::to_string(sol.iterations) + " iterations");
        case SolveStatus::optimal: {
            cert.verdict = Verdict::threshold;
            cert.allocation.assign(sol.x.begin(), sol.x.begin() + static_cast<std::ptrdiff_t>(groups));
            cert.threshold = std::accumulate(cert.allocation.begin(), cert.allocation.end(), 0.0);
            const Lattice<Complex> s_bar = pattern_s_bar(net, pat, cert.allocation);
            cert.flow = linear_distflow(net, s_bar);
            cert.inputs_digest = certificate_digest(net, s_bar);
            break;
        }
    }
    if (cert.inputs_digest.empty())
        cert.inputs_digest = certificate_digest(net, pattern_s_bar(net, pat, std::vector<double>(groups, 0.0)));
    cert.inputs.push_back({"groups", static_cast<double>(groups)});
    return cert;
}

GapBound relative_gap_bound(std::optional<double> val_r, double val, double clamp_tol) {
    GapBound g;
    if (!val_r) {
        g.restricted_infeasible = true;
        g.epsilon = std::numeric_limits<double>::infinity();
        return g;
    }
    if (!std::isfinite(*val_r) || !std::isfinite(val)) throw DomainError("optimal values must be finite");
    const double diff = *val_r - val;
    const double denom = std::abs(val) + std::abs(*val_r);
    if (denom == 0.0) {
        g.both_zero = true;
        return g;
    }
    if (diff < 0.0) {
        if (-diff > clamp_tol * std::max({1.0, std::abs(val), std::abs(*val_r)}))
            throw DomainError("restricted optimum lies below the relaxed optimum by " + std::to_string(-diff));
        return g;
    }
    g.epsilon = 2.0 * diff / denom;
    return g;
}

Certificate gap_certificate(const GapBound& gap, std::optional<double> val_r, double val) {
    Certificate c;
    c.kind = CertificateKind::a_posteriori;
    if (gap.restricted_infeasible) {
        c.verdict = Verdict::unbounded;
    } else {
        c.verdict = Verdict::threshold;
        c.threshold = gap.epsilon;
    }
    if (val_r) c.inputs.push_back({"val_restricted", *val_r});
    c.inputs.push_back({"val_relaxed", val});
    std::ostringstream os;
    os << (val_r ? detail::format_double(*val_r) : std::string("infeasible")) << ' ' << detail::format_double(val);
    c.inputs_digest = sha256_hex(os.str());
    return c;
}

std::string certificate_json(const Certificate& c) {
    nlohmann::ordered_json j;
    j["kind"] = to_string(c.kind);
    j["verdict"] = to_string(c.verdict);
    if (c.threshold) j["threshold"] = *c.threshold;
    if (c.kind == CertificateKind::a_priori) j["no_reverse_flow"] = c.no_reverse_flow;
    if (!c.allocation.empty()) j["allocation"] = c.allocation;
    auto& inputs = j["inputs"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : c.inputs) inputs[k] = v;
    auto& vs = j["violations"] = nlohmann::ordered_json::array();
    for (const Violation& v : c.violations) {
        nlohmann::ordered_json e;
        e["condition"] = v.condition;
        if (v.line) e["line"] = *v.line;
        if (v.subtree_edge) e["subtree_edge"] = *v.subtree_edge;
        if (v.bus) e["bus"] = *v.bus;
        e["node"] = v.node;
        e["amount"] = v.amount;
        vs.push_back(std::move(e));
    }
    j["inputs_digest"] = c.inputs_digest;
    return j.dump(2);
}

}  // namespace rsopf
