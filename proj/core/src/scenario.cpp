#include "rsopf/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "rsopf/error.hpp"
#include "rsopf/parallel.hpp"

namespace rsopf {

namespace {

std::uint64_t splitmix_step(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// SplitMix64 stream; one instance per simulated path.
class PathEngine {
public:
    using result_type = std::uint64_t;

    PathEngine(std::uint64_t seed, std::uint64_t stream, std::uint64_t path) {
        std::uint64_t s = seed;
        std::uint64_t a = splitmix_step(s);
        s = a ^ (stream * 0xD1B54A32D192ED03ULL);
        std::uint64_t b = splitmix_step(s);
        s = b ^ (path * 0x8CB92BA72F3D8DD7ULL);
        state_ = splitmix_step(s);
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }
    result_type operator()() { return splitmix_step(state_); }

private:
    std::uint64_t state_;
};

}  // namespace

TimeGrid::TimeGrid(std::vector<double> taus) : taus_(std::move(taus)) {
    if (taus_.size() < 2) throw DomainError("time grid needs at least two boundaries");
    for (std::size_t k = 0; k + 1 < taus_.size(); ++k) {
        if (!(taus_[k + 1] > taus_[k]) || !std::isfinite(taus_[k]) || !std::isfinite(taus_[k + 1]))
            throw DomainError("time grid must be strictly increasing");
    }
}

TimeGrid TimeGrid::daily_31h() { return TimeGrid({0, 7, 10, 12, 14, 16, 18, 21, 24, 31}); }

void SdeParams::validate() const {
    if (!(a >= 0.0)) throw DomainError("SDE: mean reversion speed must be >= 0");
    if (!(alpha >= 0.5) || !(beta >= 0.5)) throw DomainError("SDE: exponents must be >= 0.5");
    if (!(i_ref >= 0.0 && i_ref <= 1.0)) throw DomainError("SDE: i_ref must lie in [0, 1]");
    if (!(i0 >= 0.0 && i0 <= 1.0)) throw DomainError("SDE: i0 must lie in [0, 1]");
    if (!(sigma >= 0.0)) throw DomainError("SDE: sigma must be >= 0");
    if (!(euler_step > 0.0)) throw DomainError("SDE: Euler step must be positive");
    if (n_paths < 1) throw DomainError("SDE: at least one path is required");
}

double clear_sky_envelope(double tau, double day_start, double night_start) {
    if (tau < day_start || tau > night_start) return 0.0;
    return 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * (tau - night_start) / (night_start - day_start));
}

std::vector<double> simulate_clear_sky(const SdeParams& p, double start_value, double t0, double t1,
                                       std::size_t n, std::uint64_t seed, std::uint64_t stream) {
    if (!(t1 > t0)) throw InvalidWindow("simulation window must satisfy t1 > t0");
    if (!(start_value >= 0.0 && start_value <= 1.0))
        throw DomainError("start value must lie in [0, 1]");
    p.validate();

    const double horizon = t1 - t0;
    const auto full_steps = static_cast<std::size_t>(std::floor(horizon / p.euler_step));
    const double tail = horizon - static_cast<double>(full_steps) * p.euler_step;
    const bool has_tail = tail > 1e-12 * std::max(1.0, horizon);

    std::vector<double> out(n);
    parallel_for(n, [&](std::size_t begin, std::size_t end) {
        for (std::size_t k = begin; k < end; ++k) {
            PathEngine engine(seed, stream, k);
            std::normal_distribution<double> gauss(0.0, 1.0);
            double x = start_value;
            auto advance = [&](double h) {
                double diffusion = p.sigma * std::pow(x, p.alpha) * std::pow(1.0 - x, p.beta);
                double dw = std::sqrt(h) * gauss(engine);
                x += -p.a * (x - p.i_ref) * h + diffusion * dw;
                x = std::clamp(x, 0.0, 1.0);
            };
            for (std::size_t s = 0; s < full_steps; ++s) advance(p.euler_step);
            if (has_tail) advance(tail);
            out[k] = x;
        }
    });
    return out;
}

std::size_t nearest_rank(double percent, std::size_t m) {
    auto rank = static_cast<std::size_t>(std::ceil(percent / 100.0 * static_cast<double>(m) - 1e-9));
    return std::clamp<std::size_t>(rank, 1, m);
}

std::vector<double> quantile_positions(std::size_t children) {
    std::vector<double> out(children);
    for (std::size_t i = 1; i <= children; ++i)
        out[i - 1] = 100.0 * static_cast<double>(2 * i - 1) / static_cast<double>(2 * children);
    return out;
}

ScenarioTree::ScenarioTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {
    if (nodes_.empty()) throw DomainError("scenario tree has no nodes");
    for (auto& n : nodes_) n.children.clear();
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
        TreeNode& n = nodes_[k];
        if (n.id != k) throw DomainError("scenario tree node ids must equal their positions");
        if (!(n.value >= 0.0 && n.value <= 1.0))
            throw DomainError("scenario tree node " + std::to_string(k) + " has a value outside [0, 1]");
        if (!(n.probability > 0.0)) throw DomainError("scenario tree probabilities must be positive");
        if (k == 0) {
            if (n.parent || n.stage != 0) throw DomainError("node 0 must be the stage-0 root");
            continue;
        }
        if (!n.parent || *n.parent >= k)
            throw DomainError("scenario tree node " + std::to_string(k) + " must follow its parent");
        const TreeNode& parent = nodes_[*n.parent];
        if (n.stage != parent.stage + 1) throw DomainError("child stage must be parent stage + 1");
        if (k > 0 && n.stage < nodes_[k - 1].stage) throw DomainError("nodes must be sorted by stage");
        nodes_[*n.parent].children.push_back(k);
    }

    const std::size_t last_stage = nodes_.back().stage;
    branching_.assign(last_stage, 0);
    for (const TreeNode& n : nodes_) {
        if (n.children.empty()) {
            if (n.stage != last_stage) throw DomainError("all leaves must sit on the last stage");
            leaves_.push_back(n.id);
            continue;
        }
        std::size_t& c = branching_[n.stage];
        if (c == 0) c = n.children.size();
        if (c != n.children.size())
            throw DomainError("every node of a stage must have the same number of children");
        for (std::size_t child : n.children) {
            const double expected = n.probability / static_cast<double>(c);
            if (std::abs(nodes_[child].probability - expected) > 1e-12)
                throw DomainError("children must have equal conditional probability");
        }
    }
    double total = 0.0;
    for (std::size_t leaf : leaves_) total += nodes_[leaf].probability;
    if (std::abs(total - 1.0) > 1e-12) throw DomainError("leaf probabilities must sum to one");
}

std::size_t ScenarioTree::ancestor(std::size_t id, std::size_t stage) const {
    std::size_t cur = id;
    if (nodes_.at(cur).stage < stage) throw DomainError("ancestor stage beyond node stage");
    while (nodes_[cur].stage > stage) cur = *nodes_[cur].parent;
    return cur;
}

std::vector<std::size_t> ScenarioTree::path(std::size_t leaf) const {
    std::vector<std::size_t> out(nodes_.at(leaf).stage + 1);
    std::size_t cur = leaf;
    while (true) {
        out[nodes_[cur].stage] = cur;
        if (!nodes_[cur].parent) break;
        cur = *nodes_[cur].parent;
    }
    return out;
}

std::vector<std::size_t> ScenarioTree::nodes_at_stage(std::size_t stage) const {
    std::vector<std::size_t> out;
    for (const TreeNode& n : nodes_)
        if (n.stage == stage) out.push_back(n.id);
    return out;
}

ScenarioTree build_scenario_tree(const SdeParams& p, const TimeGrid& grid,
                                 std::span<const std::size_t> branching, std::uint64_t seed) {
    p.validate();
    if (branching.size() != grid.horizon())
        throw DomainError("branching vector must have one entry per stage transition (" +
                          std::to_string(grid.horizon()) + ")");
    for (std::size_t c : branching)
        if (c < 1) throw DomainError("branching factors must be >= 1");

    std::vector<TreeNode> nodes;
    nodes.push_back(TreeNode{0, 0, std::nullopt, p.i0, 1.0, {}});
    std::size_t stage_begin = 0;
    for (std::size_t t = 0; t < branching.size(); ++t) {
        const std::size_t stage_end = nodes.size();
        const std::size_t c = branching[t];
        for (std::size_t id = stage_begin; id < stage_end; ++id) {
            std::vector<double> sample =
                simulate_clear_sky(p, nodes[id].value, grid.tau(t), grid.tau(t + 1), p.n_paths, seed, id);
            std::sort(sample.begin(), sample.end());
            for (std::size_t i = 1; i <= c; ++i) {
                const double percent = 100.0 * static_cast<double>(2 * i - 1) / static_cast<double>(2 * c);
                const double value = sample[nearest_rank(percent, sample.size()) - 1];
                const double prob = nodes[id].probability / static_cast<double>(c);
                nodes.push_back(TreeNode{nodes.size(), t + 1, id, value, prob, {}});
            }
        }
        stage_begin = stage_end;
    }
    return ScenarioTree(std::move(nodes));
}

DemandLattice residual_demand(const RadialNetwork& net, const ScenarioTree& tree, const TimeGrid& grid,
                              std::span<const double> profile, double reactive_ratio) {
    if (profile.size() != grid.stage_count())
        throw ProfileLengthMismatch("consumption profile has " + std::to_string(profile.size()) +
                                    " entries, expected " + std::to_string(grid.stage_count()));
    if (tree.stage_count() != grid.stage_count())
        throw ProfileLengthMismatch("scenario tree and time grid disagree on the number of stages");
    for (double v : profile)
        if (!(v >= 0.0)) throw DomainError("consumption profile entries must be >= 0");

    const Complex direction = Complex(1.0, reactive_ratio) / std::sqrt(1.0 + reactive_ratio * reactive_ratio);
    DemandLattice out{Lattice<Complex>(tree.node_count(), net.bus_count()),
                      Lattice<double>(tree.node_count(), net.bus_count()),
                      Lattice<Complex>(tree.node_count(), net.bus_count())};
    for (const TreeNode& node : tree.nodes()) {
        const double envelope = clear_sky_envelope(grid.tau(node.stage));
        for (std::size_t b = 0; b < net.bus_count(); ++b) {
            if (b == net.slack_index()) continue;
            const Bus& bus = net.bus(b);
            const Complex cons = profile[node.stage] * direction * bus.peak;
            const double sol = bus.solar_cap * node.value * envelope;
            out.consumption(node.id, b) = cons;
            out.solar(node.id, b) = sol;
            out.demand(node.id, b) = cons - sol;
        }
    }
    return out;
}

}  // namespace rsopf
