#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rsopf/certify.hpp"
#include "rsopf/conic.hpp"
#include "rsopf/digest.hpp"
#include "rsopf/error.hpp"
#include "rsopf/network.hpp"
#include "rsopf/oracle.hpp"
#include "rsopf/program.hpp"
#include "rsopf/scenario.hpp"
#include "rsopf/sweep.hpp"

namespace rsopf::cli {

namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

/// Infeasible model; maps to exit code 2.
struct Infeasible {
    std::string message;
};

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

struct Options {
    std::string network, tree, sde_params, profile, solution, pattern = "diffuse", branching;
    std::string out = ".";
    bool restricted = false;
    double tol = 1e-8;
    std::uint64_t seed = 1;
    std::optional<double> solar_total;
    CostSpec cost;
};

class Run {
public:
    Run(std::string command, const Options& o, std::ostream& out) : cmd_(std::move(command)), o_(o), out_(out) {}

    // --- inputs -------------------------------------------------------------

    RadialNetwork network() {
        if (o_.network.empty()) throw IoError("--network is required");
        note_input("network", o_.network);
        RadialNetwork net = load_network_file(o_.network);
        if (o_.solar_total) net = with_solar_total(net, *o_.solar_total);
        return net;
    }

    bool has_scenarios() const { return !o_.tree.empty() || !o_.sde_params.empty(); }

    std::pair<ScenarioTree, TimeGrid> scenarios() {
        if (!o_.tree.empty()) {
            note_input("tree", o_.tree);
            std::ifstream in(o_.tree);
            if (!in) throw IoError("cannot open tree file " + o_.tree);
            return load_tree_json(in);
        }
        SdeParams p;
        std::vector<std::size_t> branching;
        const TimeGrid grid = TimeGrid::daily_31h();
        if (!o_.sde_params.empty()) {
            note_input("sde_params", o_.sde_params);
            std::ifstream in(o_.sde_params);
            if (!in) throw IoError("cannot open SDE parameter file " + o_.sde_params);
            ojson j;
            try {
                j = ojson::parse(in);
            } catch (const std::exception& e) {
                throw ParseError(o_.sde_params + ": " + e.what());
            }
            p.i_ref = j.value("i_ref", p.i_ref);
            p.a = j.value("a", p.a);
            p.sigma = j.value("sigma", p.sigma);
            p.alpha = j.value("alpha", p.alpha);
            p.beta = j.value("beta", p.beta);
            p.i0 = j.value("i0", p.i0);
            p.euler_step = j.value("euler_step", p.euler_step);
            p.n_paths = j.value("n_paths", p.n_paths);
            if (j.contains("branching")) branching = j["branching"].get<std::vector<std::size_t>>();
        }
        if (!o_.branching.empty()) branching = parse_branching(o_.branching);
        if (branching.empty()) branching.assign(grid.horizon(), 1);
        params_ = p;
        return {build_scenario_tree(p, grid, branching, o_.seed), grid};
    }

    std::vector<double> profile(std::size_t stages) {
        if (o_.profile.empty()) return std::vector<double>(stages, 1.0);
        note_input("profile", o_.profile);
        std::ifstream in(o_.profile);
        if (!in) throw IoError("cannot open profile file " + o_.profile);
        return load_profile_csv(in);
    }

    Instance instance(bool restricted) {
        RadialNetwork net = network();
        auto [tree, grid] = scenarios();
        const auto prof = profile(tree.stage_count());
        ProgramOptions po;
        po.restricted = restricted;
        return make_instance(std::move(net), std::move(tree), std::move(grid), prof, o_.cost, po);
    }

    // --- outputs ------------------------------------------------------------

    void write(const std::string& name, const std::string& content) {
        fs::create_directories(o_.out);
        const fs::path path = fs::path(o_.out) / name;
        std::ofstream f(path, std::ios::binary);
        if (!f) throw IoError("cannot write " + path.string());
        f << content;
        if (!f) throw IoError("write failed for " + path.string());
        outputs_[name] = sha256_hex(content);
    }

    void manifest(const ojson& results) {
        ojson m;
        m["command"] = cmd_;
        m["seed"] = o_.seed;
        m["tol"] = o_.tol;
        if (cmd_ == "solve") m["restricted"] = o_.restricted;
        ojson cost;
        cost["c0_plus"] = o_.cost.c0_plus;
        cost["c0_minus"] = o_.cost.c0_minus;
        cost["c_loss"] = o_.cost.c_loss;
        cost["c_bat"] = o_.cost.c_bat;
        m["cost"] = cost;
        if (o_.solar_total) m["solar_total"] = *o_.solar_total;
        if (params_) {
            ojson p;
            p["i_ref"] = params_->i_ref;
            p["a"] = params_->a;
            p["sigma"] = params_->sigma;
            p["alpha"] = params_->alpha;
            p["beta"] = params_->beta;
            p["i0"] = params_->i0;
            p["euler_step"] = params_->euler_step;
            p["n_paths"] = params_->n_paths;
            m["sde_params"] = p;
        }
        m["inputs"] = ojson::object();
        for (const auto& [k, v] : inputs_) m["inputs"][k] = v;
        m["outputs"] = ojson::object();
        for (const auto& [k, v] : outputs_) m["outputs"][k] = v;
        m["results"] = results;
        write("manifest.json", m.dump(2) + "\n");
    }

    std::ostream& out() { return out_; }
    const Options& opt() const { return o_; }

private:
    static std::vector<std::size_t> parse_branching(const std::string& s) {
        std::vector<std::size_t> out;
        std::stringstream ss(s);
        std::string item;
        while (std::getline(ss, item, ',')) {
            std::size_t v = 0;
            const auto r = std::from_chars(item.data(), item.data() + item.size(), v);
            if (r.ec != std::errc() || r.ptr != item.data() + item.size() || v == 0)
                throw ParseError("--branching: '" + item + "' is not a positive integer");
            out.push_back(v);
        }
        return out;
    }

    /// Spreads `mw` of solar capacity over the buses, proportional to the
    /// existing solar capacities or, when all are zero, to peak consumption.
    static RadialNetwork with_solar_total(const RadialNetwork& net, double mw) {
        if (!(mw >= 0.0) || !std::isfinite(mw)) throw DomainError("--solar-total must be a finite value >= 0");
        NetworkData d = net.data();
        const double total_pu = mw / d.base.s_base_mva;
        double solar = 0.0, peak = 0.0;
        for (const Bus& b : d.buses) {
            solar += b.solar_cap;
            peak += b.peak;
        }
        for (Bus& b : d.buses) {
            if (!b.parent) continue;
            const double share = solar > 0.0 ? b.solar_cap / solar : (peak > 0.0 ? b.peak / peak : 0.0);
            b.solar_cap = share * total_pu;
        }
        return RadialNetwork(std::move(d));
    }

    void note_input(const std::string& key, const std::string& path) { inputs_[key] = sha256_file(path); }

    std::string cmd_;
    const Options& o_;
    std::ostream& out_;
    std::map<std::string, std::string> inputs_, outputs_;
    std::optional<SdeParams> params_;
};

// --- artifacts ----------------------------------------------------------------

std::string bus_label(const RadialNetwork& net, std::size_t b) { return std::to_string(net.bus(b).id); }
std::string line_label(const RadialNetwork& net, std::size_t l) {
    return std::to_string(net.line(l).from) + "-" + std::to_string(net.line(l).to);
}

std::string solution_csv(const Instance& inst, const OperatingPoint& p) {
    const RadialNetwork& net = inst.net;
    const ScenarioTree& tree = inst.tree;
    std::ostringstream os;
    os << "node,quantity,element,value\n";
    auto row = [&](std::size_t node, const char* q, const std::string& el, double v) {
        os << node << ',' << q << ',' << el << ',' << num(v) << '\n';
    };
    for (std::size_t n = 0; n < tree.node_count(); ++n) {
        row(n, "re_s0", "0", p.s0(n, 0).real());
        row(n, "im_s0", "0", p.s0(n, 0).imag());
        row(n, "p0_plus", "0", p.p0_plus(n, 0));
        row(n, "p0_minus", "0", p.p0_minus(n, 0));
        for (std::size_t b = 0; b < net.bus_count(); ++b) {
            if (b == net.slack_index()) continue;
            const std::string el = bus_label(net, b);
            row(n, "p_inj", el, p.p_inj(n, b));
            row(n, "p_abs", el, p.p_abs(n, b));
            row(n, "q", el, p.q(n, b));
            row(n, "x", el, p.x(n, b));
            row(n, "v", el, p.v(n, b));
            if (p.has_lin) row(n, "v_lin", el, p.v_lin(n, b));
        }
        for (std::size_t l = 0; l < net.line_count(); ++l) {
            const std::string el = line_label(net, l);
            row(n, "re_S", el, p.S(n, l).real());
            row(n, "im_S", el, p.S(n, l).imag());
            row(n, "I", el, p.I(n, l));
            if (p.has_lin) {
                row(n, "re_S_lin", el, p.S_lin(n, l).real());
                row(n, "im_S_lin", el, p.S_lin(n, l).imag());
            }
        }
        if (p.has_lin) {
            row(n, "re_s0_lin", "0", p.s0_lin(n, 0).real());
            row(n, "im_s0_lin", "0", p.s0_lin(n, 0).imag());
        }
    }
    // terminal state of charge: node column holds the leaf's tree node
    for (std::size_t lp = 0; lp < tree.leaf_count(); ++lp)
        for (std::size_t b = 0; b < net.bus_count(); ++b)
            if (b != net.slack_index()) row(tree.leaves()[lp], "x_term", bus_label(net, b), p.x_term(lp, b));
    return os.str();
}

OperatingPoint read_solution_csv(const Instance& inst, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open solution file " + path);
    const RadialNetwork& net = inst.net;
    const ScenarioTree& tree = inst.tree;
    std::map<std::string, std::size_t> buses, lines, leaves;
    for (std::size_t b = 0; b < net.bus_count(); ++b) buses[bus_label(net, b)] = b;
    for (std::size_t l = 0; l < net.line_count(); ++l) lines[line_label(net, l)] = l;
    for (std::size_t lp = 0; lp < tree.leaf_count(); ++lp) leaves[std::to_string(tree.leaves()[lp])] = lp;

    OperatingPoint p = OperatingPoint::zeros(inst, false);
    std::string line;
    std::size_t row = 0;
    auto fail = [&](const std::string& why) {
        throw ParseError(path + " row " + std::to_string(row) + ": " + why);
    };
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || (row == 1 && line.rfind("node,", 0) == 0)) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != 4) fail("expected node,quantity,element,value");
        std::size_t node = 0;
        double value = 0.0;
        if (std::from_chars(f[0].data(), f[0].data() + f[0].size(), node).ec != std::errc() ||
            node >= tree.node_count())
            fail("bad node '" + f[0] + "'");
        if (f[3] == "inf" || f[3] == "-inf" || f[3] == "nan") fail("non-finite value");
        if (std::from_chars(f[3].data(), f[3].data() + f[3].size(), value).ec != std::errc()) fail("bad value");
        const std::string& q = f[1];
        auto bus = [&] {
            auto it = buses.find(f[2]);
            if (it == buses.end()) fail("unknown bus '" + f[2] + "'");
            return it->second;
        };
        auto ln = [&] {
            auto it = lines.find(f[2]);
            if (it == lines.end()) fail("unknown line '" + f[2] + "'");
            return it->second;
        };
        auto lin = [&] {
            if (!p.has_lin) {
                p.has_lin = true;
                p.S_lin = Lattice<Complex>(tree.node_count(), net.line_count());
                p.v_lin = Lattice<double>(tree.node_count(), net.bus_count(), 1.0);
                p.s0_lin = Lattice<Complex>(tree.node_count(), 1);
            }
        };
        auto set_re = [](Complex& z, double v) { z.real(v); };
        auto set_im = [](Complex& z, double v) { z.imag(v); };
        if (q == "re_s0") set_re(p.s0(node, 0), value);
        else if (q == "im_s0") set_im(p.s0(node, 0), value);
        else if (q == "p0_plus") p.p0_plus(node, 0) = value;
        else if (q == "p0_minus") p.p0_minus(node, 0) = value;
        else if (q == "p_inj") p.p_inj(node, bus()) = value;
        else if (q == "p_abs") p.p_abs(node, bus()) = value;
        else if (q == "q") p.q(node, bus()) = value;
        else if (q == "x") p.x(node, bus()) = value;
        else if (q == "v") p.v(node, bus()) = value;
        else if (q == "re_S") set_re(p.S(node, ln()), value);
        else if (q == "im_S") set_im(p.S(node, ln()), value);
        else if (q == "I") p.I(node, ln()) = value;
        else if (q == "v_lin") lin(), p.v_lin(node, bus()) = value;
        else if (q == "re_S_lin") lin(), set_re(p.S_lin(node, ln()), value);
        else if (q == "im_S_lin") lin(), set_im(p.S_lin(node, ln()), value);
        else if (q == "re_s0_lin") lin(), set_re(p.s0_lin(node, 0), value);
        else if (q == "im_s0_lin") lin(), set_im(p.s0_lin(node, 0), value);
        else if (q == "x_term") {
            auto it = leaves.find(f[0]);
            if (it == leaves.end()) fail("x_term on non-leaf node " + f[0]);
            p.x_term(it->second, bus()) = value;
        } else {
            fail("unknown quantity '" + q + "'");
        }
    }
    p.objective = evaluate_cost(inst, p);
    return p;
}

/// Per-stage distribution over scenarios: one value per leaf, weighted by its probability.
std::string series_csv(const Instance& inst, const std::function<double(std::size_t)>& value) {
    const ScenarioTree& tree = inst.tree;
    static const std::vector<std::pair<const char*, double>> bands{
        {"min", 0.0}, {"p10", 0.10}, {"p25", 0.25}, {"p50", 0.50}, {"p75", 0.75}, {"p90", 0.90}, {"max", 1.0}};
    std::ostringstream os;
    os << "stage,tau";
    for (const auto& [name, q] : bands) os << ',' << name;
    os << ",mean\n";
    for (std::size_t t = 0; t < tree.stage_count(); ++t) {
        std::vector<std::pair<double, double>> vw;
        for (std::size_t leaf : tree.leaves())
            vw.emplace_back(value(tree.ancestor(leaf, t)), tree.node(leaf).probability);
        std::sort(vw.begin(), vw.end());
        double total = 0.0, mean = 0.0;
        for (const auto& [v, w] : vw) total += w, mean += v * w;
        os << t << ',' << num(inst.grid.tau(t));
        for (const auto& [name, q] : bands) {
            double cum = 0.0, pick = vw.back().first;
            if (q <= 0.0) pick = vw.front().first;
            else
                for (const auto& [v, w] : vw) {
                    cum += w;
                    if (cum >= q * total * (1.0 - 1e-12)) {
                        pick = v;
                        break;
                    }
                }
            os << ',' << num(pick);
        }
        os << ',' << num(mean / total) << '\n';
    }
    return os.str();
}

void write_series(Run& run, const Instance& inst, const OperatingPoint& p) {
    const RadialNetwork& net = inst.net;
    run.write("series_losses.csv", series_csv(inst, [&](std::size_t n) {
                  double s = 0.0;
                  for (std::size_t l = 0; l < net.line_count(); ++l) s += net.line(l).r * p.I(n, l);
                  return s;
              }));
    run.write("series_p0.csv", series_csv(inst, [&](std::size_t n) { return p.s0(n, 0).real(); }));
    run.write("series_battery.csv", series_csv(inst, [&](std::size_t n) {
                  double s = 0.0;
                  for (std::size_t b = 0; b < net.bus_count(); ++b) s += p.p_inj(n, b) - p.p_abs(n, b);
                  return s;
              }));
}

std::string tree_csv(const ScenarioTree& tree) {
    std::ostringstream os;
    save_tree_csv(os, tree);
    return os.str();
}

SolverOptions solver(const Options& o) {
    SolverOptions s;
    s.tol = o.tol;
    return s;
}

/// Solves the instance; throws Infeasible on an infeasible model.
std::pair<ConicSolution, OperatingPoint> solve(const Instance& inst, const Options& o, const char* what) {
    const auto [prog, idx] = build_program(inst);
    ConicSolution sol = solve_conic(prog, solver(o));
    switch (sol.status) {
        case SolveStatus::optimal: break;
        case SolveStatus::infeasible: throw Infeasible{std::string(what) + " problem is infeasible"};
        case SolveStatus::unbounded: throw DomainError(std::string(what) + " problem is unbounded");
        case SolveStatus::numerical_limit:
            throw Error("SolverFailure", std::string(what) + " solve stopped at the numerical limit after " +
                                             std::to_string(sol.iterations) + " iterations");
    }
    OperatingPoint p = extract_operating_point(inst, idx, sol.x);
    return {std::move(sol), std::move(p)};
}

// --- commands -----------------------------------------------------------------

int cmd_tree_gen(Run& run) {
    auto [tree, grid] = run.scenarios();
    std::ostringstream js;
    save_tree_json(js, tree, grid);
    run.write("tree.json", js.str());
    run.write("tree.csv", tree_csv(tree));
    ojson r;
    r["nodes"] = tree.node_count();
    r["leaves"] = tree.leaf_count();
    run.manifest(r);
    run.out() << "tree: " << tree.node_count() << " nodes, " << tree.leaf_count() << " scenarios\n";
    return kExitOk;
}

int cmd_solve(Run& run) {
    const Instance inst = run.instance(run.opt().restricted);
    const auto [sol, p] = solve(inst, run.opt(), run.opt().restricted ? "restricted" : "relaxed");
    run.write("solution.csv", solution_csv(inst, p));
    run.write("tree.csv", tree_csv(inst.tree));
    write_series(run, inst, p);
    const Audit a = constraint_violation_report(inst, p, 1e-6);
    ojson r;
    r["objective"] = sol.objective;
    r["iterations"] = sol.iterations;
    r["classification"] = to_string(a.classification);
    run.manifest(r);
    run.out() << "objective " << num(sol.objective) << "\n"
              << "classification " << to_string(a.classification) << "\n";
    return kExitOk;
}

int cmd_recover(Run& run) {
    const Instance inst = run.instance(true);
    const auto [sol, start] = solve(inst, run.opt(), "restricted");
    RecoveryOptions ro;
    const RecoveryResult rec = recover_feasible_point(inst, start, ro);
    const Audit a = constraint_violation_report(inst, rec.point, std::max(1e-7, run.opt().tol));
    run.write("solution.csv", solution_csv(inst, rec.point));
    run.write("tree.csv", tree_csv(inst.tree));
    write_series(run, inst, rec.point);
    std::ostringstream log;
    write_iteration_log(log, rec.log);
    run.write("iterations.csv", log.str());
    run.write("audit.json", audit_json(a) + "\n");
    ojson r;
    r["restricted_objective"] = sol.objective;
    r["recovered_cost"] = rec.point.objective;
    r["sweeps"] = rec.iterations;
    r["heuristic"] = rec.heuristic;
    r["classification"] = to_string(a.classification);
    run.manifest(r);
    run.out() << "restricted objective " << num(sol.objective) << "\n"
              << "recovered cost " << num(rec.point.objective) << " after " << rec.iterations << " sweeps\n"
              << "classification " << to_string(a.classification) << "\n";
    return kExitOk;
}

int cmd_certify(Run& run) {
    Certificate cert;
    if (run.has_scenarios()) {
        const Instance inst = run.instance(false);
        cert = a_priori_certificate(inst.net, default_s_bar(inst), CertifyOptions{});
    } else {
        const RadialNetwork net = run.network();
        std::vector<Complex> extra(net.bus_count());
        for (std::size_t b = 0; b < net.bus_count(); ++b) {
            const Bus& bus = net.bus(b);
            extra[b] = Complex(bus.solar_cap + bus.storage.p_inj_max, bus.reactive.q_max);
        }
        cert = a_priori_certificate(net, floor_s_bar(net, extra));
    }
    const std::string j = certificate_json(cert);
    run.write("certificate.json", j + "\n");
    ojson r;
    r["verdict"] = to_string(cert.verdict);
    r["violations"] = cert.violations.size();
    run.manifest(r);
    run.out() << "verdict " << to_string(cert.verdict) << "\n" << j << "\n";
    return kExitOk;
}

int cmd_gap(Run& run) {
    Instance inst = run.instance(false);
    const auto [relaxed, pr] = solve(inst, run.opt(), "relaxed");
    inst.options.restricted = true;
    std::optional<double> val_r;
    try {
        val_r = solve(inst, run.opt(), "restricted").first.objective;
    } catch (const Infeasible&) {
    }
    const GapBound g = relative_gap_bound(val_r, relaxed.objective, std::max(1e-6, 10.0 * run.opt().tol));
    const Certificate c = gap_certificate(g, val_r, relaxed.objective);
    run.write("gap.json", certificate_json(c) + "\n");
    ojson r;
    r["val_relaxed"] = relaxed.objective;
    if (val_r) r["val_restricted"] = *val_r;
    else r["val_restricted"] = nullptr;
    r["epsilon"] = num(g.epsilon);
    run.manifest(r);
    run.out() << "val relaxed " << num(relaxed.objective) << "\n"
              << "val restricted " << (val_r ? num(*val_r) : std::string("infeasible")) << "\n"
              << "epsilon = " << num(g.epsilon) << "\n";
    return kExitOk;
}

int cmd_capacity(Run& run) {
    const RadialNetwork net = run.network();
    const std::string& pat = run.opt().pattern;
    CapacityPattern pattern;
    if (pat == "diffuse") {
        double storage = 0.0;
        for (const Bus& b : net.buses()) storage += b.storage.p_inj_max;
        pattern = diffuse_pattern(net, storage);
    } else if (pat.rfind("bus:", 0) == 0) {
        std::vector<std::size_t> pos;
        std::stringstream ss(pat.substr(4));
        std::string item;
        while (std::getline(ss, item, ',')) {
            int id = 0;
            if (std::from_chars(item.data(), item.data() + item.size(), id).ec != std::errc())
                throw ParseError("--pattern: bad bus id '" + item + "'");
            pos.push_back(net.index_of(id));
        }
        pattern = bus_pattern(net, pos);
    } else {
        throw ParseError("--pattern must be 'diffuse' or 'bus:<id>[,<id>...]'");
    }
    Certificate c;
    try {
        c = max_capacity_lp(net, pattern, CertifyOptions{}, solver(run.opt()));
    } catch (const InfeasibleLP& e) {
        throw Infeasible{e.what()};
    }
    run.write("capacity.json", certificate_json(c) + "\n");
    ojson r;
    r["verdict"] = to_string(c.verdict);
    const double base = net.base().s_base_mva;
    if (c.threshold) {
        r["threshold_pu"] = *c.threshold;
        r["threshold_mw"] = *c.threshold * base;
    }
    run.manifest(r);
    if (c.threshold) {
        run.out() << "threshold " << num(*c.threshold * base) << " MW\n";
        for (std::size_t g = 0; g < c.allocation.size(); ++g)
            run.out() << "  " << (g < pattern.names.size() ? pattern.names[g] : std::to_string(g)) << ' '
                      << num(c.allocation[g] * base) << " MW\n";
    } else {
        run.out() << "verdict " << to_string(c.verdict) << "\n";
    }
    return kExitOk;
}

int cmd_audit(Run& run) {
    if (run.opt().solution.empty()) throw IoError("--solution is required");
    const Instance inst = run.instance(false);
    const OperatingPoint p = read_solution_csv(inst, run.opt().solution);
    const Audit a = constraint_violation_report(inst, p, std::max(1e-9, run.opt().tol));
    run.write("audit.json", audit_json(a) + "\n");
    ojson r;
    r["classification"] = to_string(a.classification);
    r["cost"] = p.objective;
    run.manifest(r);
    run.out() << "classification " << to_string(a.classification) << "\n";
    for (const FamilyViolation& f : a.families)
        if (f.amount > a.tolerance)
            run.out() << "  " << f.family << ' ' << num(f.amount) << " at " << f.element << ", node " << f.node
                      << "\n";
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multistage stochastic optimal power flow on radial feeders"};
    app.name("rsopf");
    app.require_subcommand(1, 1);
    Options o;

    auto common = [&](CLI::App* sub, bool scenarios) {
        sub->add_option("--network", o.network, "Feeder description (JSON or CSV)");
        if (scenarios) {
            auto* t = sub->add_option("--tree", o.tree, "Scenario tree JSON");
            auto* s = sub->add_option("--sde-params", o.sde_params, "SDE parameter JSON for tree generation");
            t->excludes(s);
            sub->add_option("--branching", o.branching, "Comma separated branching per stage transition");
            sub->add_option("--profile", o.profile, "Consumption profile CSV (stage,value)");
        }
        sub->add_option("--seed", o.seed, "Random seed")->capture_default_str();
        sub->add_option("--tol", o.tol, "Solver tolerance")->capture_default_str()->check(CLI::Range(1e-12, 1e-2));
        sub->add_option("--out", o.out, "Output directory")->capture_default_str();
        sub->add_option("--solar-total", o.solar_total, "Total solar capacity in MW");
        sub->add_option("--cbat", o.cost.c_bat, "Battery throughput cost")->capture_default_str();
        sub->add_option("--c0-plus", o.cost.c0_plus, "Import price at the substation")->capture_default_str();
        sub->add_option("--c0-minus", o.cost.c0_minus, "Export price at the substation")->capture_default_str();
        sub->add_option("--closs", o.cost.c_loss, "Loss cost")->capture_default_str();
    };

    auto* tree_gen = app.add_subcommand("tree-gen", "Generate a scenario tree");
    tree_gen->add_option("--sde-params", o.sde_params, "SDE parameter JSON");
    tree_gen->add_option("--branching", o.branching, "Comma separated branching per stage transition");
    tree_gen->add_option("--seed", o.seed, "Random seed")->capture_default_str();
    tree_gen->add_option("--out", o.out, "Output directory")->capture_default_str();

    auto* solve_cmd = app.add_subcommand("solve", "Solve the relaxed or restricted problem");
    common(solve_cmd, true);
    solve_cmd->add_flag("--restricted", o.restricted, "Solve the restricted problem");
    auto* recover = app.add_subcommand("recover", "Solve the restricted problem and recover a feasible point");
    common(recover, true);
    auto* certify = app.add_subcommand("certify", "A-priori exactness certificate");
    common(certify, true);
    auto* gap = app.add_subcommand("gap", "Relative gap bound from both solves");
    common(gap, true);
    auto* capacity = app.add_subcommand("capacity", "Largest certified generation capacity");
    common(capacity, false);
    capacity->add_option("--pattern", o.pattern, "diffuse or bus:<id>[,<id>...]")->capture_default_str();
    auto* audit = app.add_subcommand("audit", "Constraint violation report for a solution CSV");
    common(audit, true);
    audit->add_option("--solution", o.solution, "solution.csv to audit");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n" << app.help();
        return kExitUsage;
    }

    CLI::App* sub = app.get_subcommands().front();
    Run run(sub->get_name(), o, out);
    try {
        const std::string& name = sub->get_name();
        if (name == "tree-gen") return cmd_tree_gen(run);
        if (name == "solve") return cmd_solve(run);
        if (name == "recover") return cmd_recover(run);
        if (name == "certify") return cmd_certify(run);
        if (name == "gap") return cmd_gap(run);
        if (name == "capacity") return cmd_capacity(run);
        if (name == "audit") return cmd_audit(run);
    } catch (const Infeasible& e) {
        err << "infeasible: " << e.message << "\n";
        return kExitInfeasible;
    } catch (const Error& e) {
        err << e.code() << ": " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}

}  // namespace rsopf::cli
