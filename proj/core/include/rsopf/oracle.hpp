#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "rsopf/lattice.hpp"
#include "rsopf/network.hpp"
#include "rsopf/program.hpp"

namespace rsopf {

struct LoadFlowOptions {
    double tol = 1e-12;
    std::size_t max_iter = 2000;
    std::size_t growth_window = 10;  ///< consecutive residual increases that count as divergence
};

struct LoadFlowResult {
    Lattice<Complex> S;   ///< nodes x lines
    Lattice<double> I;    ///< nodes x lines
    Lattice<double> v;    ///< nodes x buses
    Lattice<Complex> s0;  ///< nodes x 1
    bool converged = false;
    std::size_t iterations = 0;
    double residual = 0.0;  ///< max residual of balance, drop and current equations
    std::string failure;    ///< empty when converged
};

/// Exact branch-flow load flow for fixed injections (nodes x buses), started
/// from v = 1, I = 0. Divergence is reported in the result, never thrown.
LoadFlowResult radial_load_flow(const RadialNetwork& net, const Lattice<Complex>& s,
                                const LoadFlowOptions& options = {});

/// Max residual of the branch-flow equations at (S, I, v, s0) for injections s.
double load_flow_residual(const RadialNetwork& net, const Lattice<Complex>& s, const Lattice<Complex>& S,
                          const Lattice<double>& I, const Lattice<double>& v, const Lattice<Complex>& s0);

enum class Classification { feasible, relaxation_only, infeasible };
const char* to_string(Classification c);

struct FamilyViolation {
    std::string family;
    double amount = 0.0;    ///< max violation, 0 when satisfied
    std::string element;    ///< arg-max element, e.g. "line 3" or "bus 2"
    std::size_t node = 0;   ///< arg-max tree node (leaf position for terminal storage)
    bool linearised = false;  ///< belongs to the linearised block
};

struct Audit {
    std::vector<FamilyViolation> families;
    Classification classification = Classification::infeasible;
    double tolerance = 0.0;

    const FamilyViolation& family(const std::string& name) const;
};

/// Evaluates every constraint family of the multistage problem on `point`.
/// Classification ignores the linearised block. Throws ShapeMismatch.
Audit constraint_violation_report(const Instance& inst, const OperatingPoint& point, double tol = 1e-9);

/// {kind, verdict, tolerance, violations:[{condition, element, node, amount}]}
std::string audit_json(const Audit& audit);

}  // namespace rsopf
