#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "rsopf/lattice.hpp"
#include "rsopf/program.hpp"

namespace rsopf {

/// Per-iteration monotonicity record. Increases/decreases are measured
/// against the previous iterate and are expected to be <= 0 up to slack.
struct SweepLogEntry {
    std::size_t iteration = 0;
    double max_I_increase = 0.0;
    double max_v_decrease = 0.0;
    double max_S_decrease = 0.0;   ///< over Re S and Im S
    double max_s0_increase = 0.0;  ///< over Re s0 and Im s0
    double max_dI = 0.0;           ///< absolute changes
    double max_dv = 0.0;
    double max_dS = 0.0;
    double max_ds0 = 0.0;
    double residual = 0.0;         ///< max |v_from I - |S|^2|
    double sandwich = 0.0;         ///< worst violation of S <= S_lin, s0 >= s0_lin, v <= v_lin

    double max_change() const;
    double worst_monotonicity() const;
};

/// Flow quantities transformed by the sweep. `s` holds the net injections
/// and is never modified.
struct SweepState {
    Lattice<Complex> s;   ///< nodes x buses
    Lattice<Complex> s0;  ///< nodes x 1
    Lattice<Complex> S;   ///< nodes x lines
    Lattice<double> I;    ///< nodes x lines
    Lattice<double> v;    ///< nodes x buses
    std::size_t iteration = 0;
    std::vector<SweepLogEntry> log;

    static SweepState from_point(const Instance& inst, const OperatingPoint& point);
};

/// One backward/forward pass on every tree node: flows and currents from
/// the input voltages, then voltages from the slack outwards. Appends a log
/// entry. Throws NonpositiveVoltage.
SweepState forward_backward_pass(const Instance& inst, const SweepState& state);

struct RecoveryOptions {
    double tol = 1e-10;
    std::size_t max_iter = 500;
    double feasibility_tol = 1e-7;   ///< admission check on the start point
    double monotonicity_abort = 1e-8;
    double sandwich_slack = 1e-8;
    bool check_every_iterate = false;  ///< full residual check of each iterate
};

struct RecoveryResult {
    OperatingPoint point;
    std::size_t iterations = 0;
    bool heuristic = false;  ///< start had no linearised block
    std::vector<SweepLogEntry> log;
};

/// Iterates the pass to a fixed point. The start must be feasible for the
/// instance's conic program; without a linearised block the result is
/// flagged heuristic and monotonicity is not enforced.
/// Throws NotFeasibleInput, MonotonicityViolation, NoConvergence, NonpositiveVoltage.
RecoveryResult recover_feasible_point(const Instance& inst, const OperatingPoint& start,
                                      const RecoveryOptions& options = {});

/// iter,max_dI,max_dv,max_dS,residual
void write_iteration_log(std::ostream& out, const std::vector<SweepLogEntry>& log);

}  // namespace rsopf
