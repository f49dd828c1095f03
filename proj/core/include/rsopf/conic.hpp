#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace rsopf {

/// Cone attached to a block of rows. A block with rows r and program matrix
/// A requires rhs[r] - A[r, :] x to lie in the cone.
///   zero                  equality rows
///   nonnegative           componentwise >= 0
///   second_order          (t, y): t >= |y|
///   rotated_second_order  (u1, u2, w): 2 u1 u2 >= |w|^2, u1, u2 >= 0
enum class ConeKind { zero, nonnegative, second_order, rotated_second_order };

const char* to_string(ConeKind kind);

struct ConeBlock {
    ConeKind kind = ConeKind::zero;
    std::size_t start = 0;  ///< first row
    std::size_t dim = 0;
    std::string label;
};

struct Triplet {
    std::size_t row = 0;
    std::size_t col = 0;
    double value = 0.0;
};

/// Solver independent conic program: minimise c'x + c0 subject to every
/// block's cone membership.
class ConicProgram {
public:
    explicit ConicProgram(std::size_t n_vars = 0);

    std::size_t n_vars() const noexcept { return objective_.size(); }
    std::size_t row_count() const noexcept { return rhs_.size(); }

    /// Appends `count` columns, returns the first new index.
    std::size_t add_variables(std::size_t count);

    void add_objective(std::size_t col, double coeff);
    void set_objective_constant(double value) { objective_constant_ = value; }
    const std::vector<double>& objective() const noexcept { return objective_; }
    double objective_constant() const noexcept { return objective_constant_; }

    /// Appends a block of `dim` rows with zero right-hand side; returns its
    /// first row.
    std::size_t add_block(ConeKind kind, std::size_t dim, std::string label = {});
    /// Coefficients are accumulated; duplicates are summed.
    void add_coefficient(std::size_t row, std::size_t col, double value);
    void set_rhs(std::size_t row, double value);

    const std::vector<Triplet>& coefficients() const noexcept { return entries_; }
    const std::vector<double>& rhs() const noexcept { return rhs_; }
    const std::vector<ConeBlock>& blocks() const noexcept { return blocks_; }
    std::size_t block_of_row(std::size_t row) const;

    std::size_t count_blocks(ConeKind kind) const;

    /// Throws DimensionError when an index is out of range or a cone block
    /// has an invalid size.
    void validate() const;

    double objective_value(std::span<const double> x) const;
    /// rhs - A x.
    std::vector<double> slack(std::span<const double> x) const;

private:
    std::vector<double> objective_;
    double objective_constant_ = 0.0;
    std::vector<Triplet> entries_;
    std::vector<double> rhs_;
    std::vector<ConeBlock> blocks_;
    std::vector<std::size_t> row_block_;
};

struct BlockResidual {
    std::size_t block = 0;
    ConeKind kind = ConeKind::zero;
    double violation = 0.0;
};

/// Pure arithmetic feasibility check of a point. Violations: |slack| for
/// equalities, max(0, -slack) for nonnegative rows, distance-type measure
/// max(0, |y| - t) for second-order cones (rotated cones are mapped to
/// second-order form by an orthogonal change of variables).
struct ResidualReport {
    std::vector<BlockResidual> blocks;
    double max_equality = 0.0;
    double max_nonnegative = 0.0;
    double max_cone = 0.0;
    std::size_t worst_block = 0;

    double max_violation() const;
};

ResidualReport check_residuals(const ConicProgram& p, std::span<const double> x);

enum class SolveStatus { optimal, infeasible, unbounded, numerical_limit };

const char* to_string(SolveStatus status);

struct SolverOptions {
    double tol = 1e-8;
    int max_iter = 200;
    bool equilibrate = true;
    bool verbose = false;
    std::string backend = "hsde";
};

struct ConicSolution {
    SolveStatus status = SolveStatus::numerical_limit;
    std::vector<double> x;
    /// Multiplier of each program row (zero rows: free; cone rows: dual cone).
    std::vector<double> dual;
    double objective = 0.0;
    double dual_objective = 0.0;
    struct {
        double primal = 0.0;  ///< equality and linear inequality violation, relative
        double cone = 0.0;    ///< second-order cone violation, relative
        double dual = 0.0;    ///< stationarity residual, relative
        double gap = 0.0;     ///< relative duality gap
    } residuals;
    int iterations = 0;
    double solve_seconds = 0.0;
};

/// Names of the compiled-in backends.
std::vector<std::string> available_backends();

/// Solves with the requested backend. tol must lie in (0, 1e-2]. Throws
/// DimensionError for malformed programs and BackendUnavailable for an
/// unknown backend name.
ConicSolution solve_conic(const ConicProgram& p, const SolverOptions& options);
ConicSolution solve_conic(const ConicProgram& p, double tol = 1e-8);

/// Sparse text exchange format:
///   conic-program 1
///   vars <n>
///   objective_constant <c0>
///   cones <k>            followed by k lines "<kind> <dim>"
///   objective <nnz>      followed by "<col> <coeff>"
///   entries <nnz>        followed by "<row> <col> <coeff>"
///   rhs <nnz>            followed by "<row> <value>"
/// kind is one of zero, nonneg, soc, rsoc. Numbers use 17 significant digits.
void write_program_text(std::ostream& out, const ConicProgram& p);
ConicProgram read_program_text(std::istream& in);

}  // namespace rsopf
