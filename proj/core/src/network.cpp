#include "rsopf/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <sstream>
#include <unordered_map>

#include "rsopf/error.hpp"

namespace rsopf {

namespace {

constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

std::string bus_name(int id) { return "bus " + std::to_string(id); }

std::string line_name(const Line& l) {
    return "line " + std::to_string(l.from) + "->" + std::to_string(l.to);
}

void check_bus_domain(const Bus& b, bool slack, std::vector<NetworkIssue>& out) {
    auto add = [&](std::string kind, std::string msg) {
        out.push_back({std::move(kind), bus_name(b.id), std::move(msg), false});
    };
    if (!std::isfinite(b.v_min) || !std::isfinite(b.v_max) || b.v_min > b.v_max)
        add("voltage_bounds", "v_min must not exceed v_max");
    if (!(b.tap > 0.0) || !std::isfinite(b.tap)) add("tap", "tap ratio must be positive");
    if (b.peak < 0.0) add("peak", "size parameter must be nonnegative");
    if (slack) {
        const Storage none{};
        if (!(b.storage == none) || b.solar_cap != 0.0 || !(b.reactive == ReactiveRange{}))
            add("slack_devices", "slack bus carries no storage, solar or reactive device");
        return;
    }
    const Storage& s = b.storage;
    if (s.cap_min > s.x_init || s.x_init > s.cap_max)
        add("storage", "storage requires cap_min <= x_init <= cap_max");
    if (s.p_inj_max < 0.0 || s.p_abs_max < 0.0)
        add("storage", "storage power bounds must be nonnegative");
    if (!(s.eff_abs > 0.0 && s.eff_abs <= 1.0))
        add("storage", "charging efficiency must lie in (0, 1]");
    if (!(s.eff_inj >= 1.0)) add("storage", "discharge factor must be at least 1");
    if (b.reactive.q_min > b.reactive.q_max) add("reactive", "q_min must not exceed q_max");
    if (b.solar_cap < 0.0) add("solar", "solar capacity must be nonnegative");
}

}  // namespace

double BaseUnits::current_base_amps() const {
    return s_base_mva * 1e6 / (std::sqrt(3.0) * v_base_kv * 1e3);
}

ValidationReport validate_network(const NetworkData& data) {
    ValidationReport report;
    auto& issues = report.issues;
    auto structural = [&](std::string kind, std::string element, std::string msg) {
        issues.push_back({std::move(kind), std::move(element), std::move(msg), true});
    };

    if (!(data.base.s_base_mva > 0.0) || !(data.base.v_base_kv > 0.0))
        issues.push_back({"base", "network", "base units must be positive", false});

    std::unordered_map<int, std::size_t> pos;
    for (std::size_t k = 0; k < data.buses.size(); ++k) {
        if (!pos.emplace(data.buses[k].id, k).second)
            structural("duplicate_id", bus_name(data.buses[k].id), "bus id appears twice");
    }
    if (data.buses.empty()) {
        structural("connectivity", "network", "network has no buses");
        return report;
    }

    std::vector<int> roots;
    for (const Bus& b : data.buses)
        if (!b.parent) roots.push_back(b.id);
    if (roots.empty()) structural("connectivity", "network", "no slack bus (bus without parent)");
    if (roots.size() > 1) {
        std::ostringstream msg;
        msg << "network has " << roots.size() << " components (roots:";
        for (int r : roots) msg << ' ' << r;
        msg << ')';
        structural("connectivity", bus_name(roots[1]), msg.str());
    }
    if (roots.size() == 1 && roots.front() != 0)
        structural("slack_id", bus_name(roots.front()), "slack bus must have id 0");

    for (const Bus& b : data.buses) {
        if (b.parent && !pos.count(*b.parent))
            structural("connectivity", bus_name(b.id),
                       "parent " + std::to_string(*b.parent) + " does not exist");
    }

    // Cycle detection on the parent relation (colouring walk).
    if (!issues.empty() && std::any_of(issues.begin(), issues.end(),
                                       [](const NetworkIssue& i) { return i.kind == "duplicate_id"; })) {
        // ids are ambiguous; further structural checks are meaningless
    } else {
        std::vector<int> state(data.buses.size(), 0);  // 0 new, 1 on stack, 2 done
        for (std::size_t start = 0; start < data.buses.size(); ++start) {
            std::vector<std::size_t> path;
            std::size_t cur = start;
            while (true) {
                if (state[cur] == 2) break;
                if (state[cur] == 1) {
                    structural("cycle", bus_name(data.buses[cur].id),
                               "parent relation contains a cycle through this bus");
                    break;
                }
                state[cur] = 1;
                path.push_back(cur);
                const auto& p = data.buses[cur].parent;
                if (!p) break;
                auto it = pos.find(*p);
                if (it == pos.end()) break;
                cur = it->second;
            }
            for (std::size_t k : path) state[k] = 2;
        }
    }

    // Lines: one outgoing line per non-slack bus, matching the parent.
    std::unordered_map<int, std::size_t> outgoing;
    for (const Line& l : data.lines) {
        auto from = pos.find(l.from);
        if (from == pos.end()) {
            structural("line_endpoint", line_name(l), "unknown from-bus");
            continue;
        }
        const Bus& b = data.buses[from->second];
        if (!b.parent || *b.parent != l.to)
            structural("line_direction", line_name(l), "line must point from a bus to its parent");
        if (!outgoing.emplace(l.from, 1).second)
            structural("line_multiplicity", line_name(l), "bus has more than one outgoing line");
        if (l.r < 0.0 || l.x < 0.0 || !std::isfinite(l.r) || !std::isfinite(l.x))
            issues.push_back({"passivity", line_name(l), "resistance and reactance must be >= 0", false});
        if (l.i_max < 0.0 || l.s_max < 0.0)
            issues.push_back({"line_bounds", line_name(l), "current and power bounds must be >= 0", false});
    }
    for (const Bus& b : data.buses) {
        if (b.parent && !outgoing.count(b.id))
            structural("line_multiplicity", bus_name(b.id), "non-slack bus has no outgoing line");
    }

    for (const Bus& b : data.buses) check_bus_domain(b, !b.parent, issues);
    return report;
}

RadialNetwork::RadialNetwork(NetworkData data) : base_(data.base) {
    ValidationReport report = validate_network(data);
    for (const NetworkIssue& issue : report.issues) {
        if (issue.structural) throw StructureError(issue.element + ": " + issue.message);
    }
    if (!report.ok()) {
        const NetworkIssue& issue = report.issues.front();
        throw DomainError(issue.element + ": " + issue.message);
    }

    buses_ = std::move(data.buses);
    lines_ = std::move(data.lines);
    const std::size_t n = buses_.size();

    std::unordered_map<int, std::size_t> pos;
    for (std::size_t k = 0; k < n; ++k) pos.emplace(buses_[k].id, k);

    parent_.assign(n, npos);
    line_of_.assign(n, npos);
    children_.assign(n, {});
    for (std::size_t k = 0; k < n; ++k) {
        if (buses_[k].parent) {
            parent_[k] = pos.at(*buses_[k].parent);
            children_[parent_[k]].push_back(k);
        } else {
            slack_ = k;
        }
    }
    line_from_.resize(lines_.size());
    line_to_.resize(lines_.size());
    for (std::size_t l = 0; l < lines_.size(); ++l) {
        line_from_[l] = pos.at(lines_[l].from);
        line_to_[l] = pos.at(lines_[l].to);
        line_of_[line_from_[l]] = l;
    }

    depth_.assign(n, 0);
    std::queue<std::size_t> q;
    q.push(slack_);
    while (!q.empty()) {
        std::size_t b = q.front();
        q.pop();
        for (std::size_t c : children_[b]) {
            depth_[c] = depth_[b] + 1;
            q.push(c);
        }
    }

    original_ids_.resize(n);
    for (std::size_t k = 0; k < n; ++k) original_ids_[k] = buses_[k].id;

    depth_ordered_ = true;
    for (std::size_t k = 0; k < n && depth_ordered_; ++k) {
        if (buses_[k].id != static_cast<int>(k)) depth_ordered_ = false;
        if (k > 0 && depth_[k] < depth_[k - 1]) depth_ordered_ = false;
        if (k > 0 && line_of_[k] != k - 1) depth_ordered_ = false;
    }
}

std::size_t RadialNetwork::index_of(int id) const {
    for (std::size_t k = 0; k < buses_.size(); ++k)
        if (buses_[k].id == id) return k;
    throw UnknownBus("bus " + std::to_string(id) + " is not part of the network");
}

std::optional<std::size_t> RadialNetwork::parent(std::size_t bus_index) const {
    std::size_t p = parent_.at(bus_index);
    if (p == npos) return std::nullopt;
    return p;
}

std::optional<std::size_t> RadialNetwork::line_of(std::size_t bus_index) const {
    std::size_t l = line_of_.at(bus_index);
    if (l == npos) return std::nullopt;
    return l;
}

double RadialNetwork::total_peak() const {
    double total = 0.0;
    for (const Bus& b : buses_) total += b.peak;
    return total;
}

NetworkData RadialNetwork::data() const { return NetworkData{base_, buses_, lines_}; }

RadialNetwork relabel_by_depth(const RadialNetwork& net) {
    const std::size_t n = net.bus_count();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (net.depth(a) != net.depth(b)) return net.depth(a) < net.depth(b);
        return net.bus(a).id < net.bus(b).id;
    });
    std::vector<int> new_label(n);
    for (std::size_t k = 0; k < n; ++k) new_label[order[k]] = static_cast<int>(k);

    NetworkData out;
    out.base = net.base();
    out.buses.reserve(n);
    out.lines.reserve(net.line_count());
    for (std::size_t k = 0; k < n; ++k) {
        Bus b = net.bus(order[k]);
        b.id = static_cast<int>(k);
        if (auto p = net.parent(order[k])) b.parent = new_label[*p];
        out.buses.push_back(b);
    }
    for (std::size_t k = 1; k < n; ++k) {
        Line l = net.line(*net.line_of(order[k]));
        l.from = static_cast<int>(k);
        l.to = new_label[*net.parent(order[k])];
        out.lines.push_back(l);
    }

    RadialNetwork relabeled(std::move(out));
    for (std::size_t k = 0; k < n; ++k) relabeled.original_ids_[k] = net.original_ids()[order[k]];
    return relabeled;
}

std::vector<std::vector<std::size_t>> all_subtree_edges(const RadialNetwork& net, SubtreeMode mode) {
    const std::size_t n = net.bus_count();
    std::vector<std::vector<std::size_t>> edges(n);
    // A line (k, l) lies inside the subtree of every ancestor-or-self of l.
    for (std::size_t line = 0; line < net.line_count(); ++line) {
        std::optional<std::size_t> cur = net.to_index(line);
        while (cur) {
            edges[*cur].push_back(line);
            cur = net.parent(*cur);
        }
    }
    if (mode == SubtreeMode::include_outgoing) {
        for (std::size_t b = 0; b < n; ++b)
            if (auto l = net.line_of(b)) edges[b].push_back(*l);
    }
    for (auto& e : edges) std::sort(e.begin(), e.end());
    return edges;
}

std::vector<std::size_t> subtree_edges(const RadialNetwork& net, int bus_id, SubtreeMode mode) {
    const std::size_t target = net.index_of(bus_id);
    std::vector<std::size_t> out;
    std::vector<std::size_t> stack{target};
    while (!stack.empty()) {
        std::size_t b = stack.back();
        stack.pop_back();
        for (std::size_t c : net.children(b)) {
            out.push_back(*net.line_of(c));
            stack.push_back(c);
        }
    }
    if (mode == SubtreeMode::include_outgoing) {
        if (auto l = net.line_of(target)) out.push_back(*l);
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace rsopf
