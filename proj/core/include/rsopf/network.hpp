#pragma once

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rsopf {

/// Per-unit system of the feeder. Powers are divided by `s_base_mva`,
/// energies by `s_base_mva * 1 h`.
struct BaseUnits {
    double s_base_mva = 1.0;
    double v_base_kv = 1.0;

    /// Current base in amperes for a balanced three-phase system.
    double current_base_amps() const;

    bool operator==(const BaseUnits&) const = default;
};

struct Storage {
    double cap_max = 0.0;    ///< upper state-of-charge bound
    double cap_min = 0.0;    ///< lower state-of-charge bound
    double x_init = 0.0;     ///< state of charge at stage 0
    double p_inj_max = 0.0;  ///< discharge power bound
    double p_abs_max = 0.0;  ///< charge power bound
    double eff_abs = 1.0;    ///< charging efficiency, in (0, 1]
    double eff_inj = 1.0;    ///< discharge factor, >= 1

    bool operator==(const Storage&) const = default;
};

struct ReactiveRange {
    double q_min = 0.0;
    double q_max = 0.0;

    bool operator==(const ReactiveRange&) const = default;
};

/// Bus record. Every electrical quantity is per-unit once inside a
/// RadialNetwork; the slack bus (id 0) has no parent and unit voltage.
struct Bus {
    int id = 0;
    std::optional<int> parent;
    double v_min = 0.0;  ///< squared voltage bounds
    double v_max = 0.0;
    double tap = 1.0;    ///< fixed transformer ratio applied on the downstream side
    double peak = 0.0;   ///< size parameter used to scale consumption
    Storage storage;
    ReactiveRange reactive;
    double solar_cap = 0.0;

    bool operator==(const Bus&) const = default;
};

/// Edge directed from a bus towards its parent.
struct Line {
    int from = 0;
    int to = 0;
    double r = 0.0;
    double x = 0.0;
    double i_max = 0.0;  ///< squared current bound
    double s_max = 0.0;  ///< apparent power bound

    std::complex<double> impedance() const { return {r, x}; }
    bool operator==(const Line&) const = default;
};

/// Raw, unvalidated feeder description as read from disk.
struct NetworkData {
    BaseUnits base;
    std::vector<Bus> buses;
    std::vector<Line> lines;
};

struct NetworkIssue {
    std::string kind;     ///< "duplicate_id", "connectivity", "cycle", "passivity", ...
    std::string element;  ///< offending bus or line, e.g. "bus 3" or "line 4->2"
    std::string message;
    bool structural = false;
};

struct ValidationReport {
    std::vector<NetworkIssue> issues;
    bool ok() const { return issues.empty(); }
};

/// Lists every violated modelling assumption. Empty report means the
/// feeder is a radial, connected, passive tree with consistent data.
ValidationReport validate_network(const NetworkData& data);

/// Immutable validated radial feeder. Buses are stored by position; the
/// line leaving bus `b` is `line_of(b)`.
class RadialNetwork {
public:
    /// Throws StructureError or DomainError on the first violation found by
    /// validate_network.
    explicit RadialNetwork(NetworkData data);

    std::size_t bus_count() const noexcept { return buses_.size(); }
    std::size_t line_count() const noexcept { return lines_.size(); }
    const BaseUnits& base() const noexcept { return base_; }

    const Bus& bus(std::size_t index) const { return buses_.at(index); }
    const Line& line(std::size_t index) const { return lines_.at(index); }
    std::span<const Bus> buses() const noexcept { return buses_; }
    std::span<const Line> lines() const noexcept { return lines_; }

    /// Position of the bus with the given label; throws UnknownBus.
    std::size_t index_of(int id) const;
    std::optional<std::size_t> parent(std::size_t bus_index) const;
    /// Index of the line leaving `bus_index` towards the root.
    std::optional<std::size_t> line_of(std::size_t bus_index) const;
    std::size_t from_index(std::size_t line_index) const { return line_from_.at(line_index); }
    std::size_t to_index(std::size_t line_index) const { return line_to_.at(line_index); }
    const std::vector<std::size_t>& children(std::size_t bus_index) const {
        return children_.at(bus_index);
    }
    std::size_t depth(std::size_t bus_index) const { return depth_.at(bus_index); }
    std::size_t slack_index() const noexcept { return slack_; }

    /// True when bus ids equal positions, depths are non-decreasing in the
    /// label and line k leaves bus k+1.
    bool depth_ordered() const noexcept { return depth_ordered_; }

    /// Label of each bus before the last relabeling (identity if never relabeled).
    const std::vector<int>& original_ids() const noexcept { return original_ids_; }

    double total_peak() const;

    NetworkData data() const;

private:
    friend RadialNetwork relabel_by_depth(const RadialNetwork& net);

    BaseUnits base_;
    std::vector<Bus> buses_;
    std::vector<Line> lines_;
    std::vector<int> original_ids_;

    std::vector<std::size_t> parent_;  // npos for the slack
    std::vector<std::size_t> line_of_;
    std::vector<std::size_t> line_from_;
    std::vector<std::size_t> line_to_;
    std::vector<std::vector<std::size_t>> children_;
    std::vector<std::size_t> depth_;
    std::size_t slack_ = 0;
    bool depth_ordered_ = false;
};

/// Relabels buses 0..n by non-decreasing depth (ties by original label) and
/// reorders lines so that line k leaves bus k+1. Original labels are kept
/// in original_ids().
RadialNetwork relabel_by_depth(const RadialNetwork& net);

enum class SubtreeMode {
    interior,          ///< lines with both endpoints in the subtree of the bus
    include_outgoing,  ///< additionally the line leaving the bus itself
};

/// Line indices of the subtree edge set of bus `bus_id`; throws UnknownBus.
std::vector<std::size_t> subtree_edges(const RadialNetwork& net, int bus_id,
                                       SubtreeMode mode = SubtreeMode::interior);

/// Subtree edge sets of every bus, indexed by bus position.
std::vector<std::vector<std::size_t>> all_subtree_edges(const RadialNetwork& net,
                                                        SubtreeMode mode = SubtreeMode::interior);

enum class NetworkFormat { json, csv };

/// Parses a feeder file. JSON files declare their base; CSV rows are read
/// in per-unit on `csv_base`. Throws ParseError, StructureError, DomainError.
RadialNetwork load_network(std::istream& in, NetworkFormat format, BaseUnits csv_base = {});
RadialNetwork load_network_file(const std::string& path);

/// Writes per-unit JSON with 17 significant digits; load_network reads it
/// back bit-exactly.
void save_network(std::ostream& out, const RadialNetwork& net, NetworkFormat format);

}  // namespace rsopf
