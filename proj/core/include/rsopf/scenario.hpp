#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rsopf/lattice.hpp"
#include "rsopf/network.hpp"

namespace rsopf {

/// Stage boundaries tau_0 < ... < tau_{T+1} in hours; stage t covers
/// [tau_t, tau_{t+1}].
class TimeGrid {
public:
    explicit TimeGrid(std::vector<double> taus);

    /// 0, 7, 10, 12, 14, 16, 18, 21, 24, 31 h: nine stages over a 31 h window.
    static TimeGrid daily_31h();

    std::size_t stage_count() const noexcept { return taus_.size() - 1; }
    /// Index T of the last stage.
    std::size_t horizon() const noexcept { return taus_.size() - 2; }
    double tau(std::size_t stage) const { return taus_.at(stage); }
    double delta(std::size_t stage) const { return taus_.at(stage + 1) - taus_.at(stage); }
    const std::vector<double>& taus() const noexcept { return taus_; }

    bool operator==(const TimeGrid&) const = default;

private:
    std::vector<double> taus_;
};

/// Parameters of the Fisher-Wright type clear-sky index diffusion
///   dI = -a (I - i_ref) dt + sigma I^alpha (1 - I)^beta dB
/// and of its Euler-Maruyama discretisation. Defaults are the reference
/// daily solar study values.
struct SdeParams {
    double i_ref = 0.75;
    double a = 0.75;  ///< 1/h
    double sigma = 0.7;
    double alpha = 0.8;
    double beta = 0.7;
    double i0 = 0.5;
    double euler_step = 0.1;  ///< h
    std::size_t n_paths = 10000;

    /// Throws DomainError when an invariant is violated.
    void validate() const;
};

/// Normalised clear-sky solar envelope: zero outside [day_start, night_start],
/// raised cosine inside, peaking at mid-day.
double clear_sky_envelope(double tau, double day_start = 7.0, double night_start = 21.0);

/// Terminal values at t1 of n Euler paths started at `start_value` at t0.
/// Path k draws from its own stream keyed by (seed, stream, k), so results
/// do not depend on the number of worker threads.
std::vector<double> simulate_clear_sky(const SdeParams& p, double start_value, double t0, double t1,
                                       std::size_t n, std::uint64_t seed, std::uint64_t stream = 0);

/// 1-based nearest rank of the `percent` quantile among m sorted samples.
std::size_t nearest_rank(double percent, std::size_t m);

/// Quantile positions 100 (2i - 1) / (2 C) percent, i = 1..C.
std::vector<double> quantile_positions(std::size_t children);

struct TreeNode {
    std::size_t id = 0;
    std::size_t stage = 0;
    std::optional<std::size_t> parent;
    double value = 0.0;        ///< clear-sky index at tau_stage
    double probability = 1.0;  ///< probability of reaching the node
    std::vector<std::size_t> children;
};

/// Scenario tree indexed by node; node ids are positions, sorted by stage.
class ScenarioTree {
public:
    /// Validates the node table: ids equal positions, stages consistent with
    /// parents, uniform branching per stage, children with equal conditional
    /// probability, values in [0, 1]. Throws DomainError.
    explicit ScenarioTree(std::vector<TreeNode> nodes);

    std::size_t node_count() const noexcept { return nodes_.size(); }
    std::size_t stage_count() const noexcept { return branching_.size() + 1; }
    std::size_t leaf_count() const noexcept { return leaves_.size(); }
    const TreeNode& node(std::size_t id) const { return nodes_.at(id); }
    const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
    const std::vector<std::size_t>& leaves() const noexcept { return leaves_; }
    const std::vector<std::size_t>& branching() const noexcept { return branching_; }
    bool is_leaf(std::size_t id) const { return nodes_.at(id).children.empty(); }

    /// Ancestor of `id` at `stage` (stage <= stage of id).
    std::size_t ancestor(std::size_t id, std::size_t stage) const;
    /// Node ids along the path from the root to `leaf`, one per stage.
    std::vector<std::size_t> path(std::size_t leaf) const;
    std::vector<std::size_t> nodes_at_stage(std::size_t stage) const;

private:
    std::vector<TreeNode> nodes_;
    std::vector<std::size_t> leaves_;
    std::vector<std::size_t> branching_;
};

/// Quantile-based tree generation. The root holds p.i0; the C_t children of
/// a stage-t node take the empirical quantiles 100 (2i - 1) / (2 C_t) % of
/// p.n_paths simulated values over [tau_t, tau_{t+1}]. `branching` has one
/// entry per stage transition (length T).
ScenarioTree build_scenario_tree(const SdeParams& p, const TimeGrid& grid,
                                 std::span<const std::size_t> branching, std::uint64_t seed);

/// Residual demand s^d = s^cons - p^sol on every (node, bus).
struct DemandLattice {
    Lattice<Complex> consumption;
    Lattice<double> solar;
    Lattice<Complex> demand;
};

/// consumption[i, n] = profile[t] (1 + j r) / sqrt(1 + r^2) * peak_i with
/// r = reactive_ratio, solar[i, n] = solar_cap_i * value(n) * envelope(tau_t).
/// The slack bus carries no demand. Throws ProfileLengthMismatch.
DemandLattice residual_demand(const RadialNetwork& net, const ScenarioTree& tree, const TimeGrid& grid,
                              std::span<const double> profile, double reactive_ratio = 0.2);

// File formats ---------------------------------------------------------------

/// {grid:{taus}, nodes:[{id, stage, parent?, value, prob}]}
void save_tree_json(std::ostream& out, const ScenarioTree& tree, const TimeGrid& grid);
std::pair<ScenarioTree, TimeGrid> load_tree_json(std::istream& in);
/// stage,node,value,prob rows.
void save_tree_csv(std::ostream& out, const ScenarioTree& tree);
/// stage,value rows.
std::vector<double> load_profile_csv(std::istream& in);

}  // namespace rsopf
