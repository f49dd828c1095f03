#include <algorithm>
#include <cmath>
#include <numbers>

#include "rsopf/conic.hpp"
#include "rsopf/error.hpp"

namespace rsopf {

const char* to_string(ConeKind kind) {
    switch (kind) {
        case ConeKind::zero: return "zero";
        case ConeKind::nonnegative: return "nonneg";
        case ConeKind::second_order: return "soc";
        case ConeKind::rotated_second_order: return "rsoc";
    }
    return "?";
}

const char* to_string(SolveStatus status) {
    switch (status) {
        case SolveStatus::optimal: return "optimal";
        case SolveStatus::infeasible: return "infeasible";
        case SolveStatus::unbounded: return "unbounded";
        case SolveStatus::numerical_limit: return "numerical_limit";
    }
    return "?";
}

ConicProgram::ConicProgram(std::size_t n_vars) : objective_(n_vars, 0.0) {}

std::size_t ConicProgram::add_variables(std::size_t count) {
    const std::size_t first = objective_.size();
    objective_.resize(first + count, 0.0);
    return first;
}

void ConicProgram::add_objective(std::size_t col, double coeff) {
    if (col >= objective_.size()) throw DimensionError("objective column out of range");
    objective_[col] += coeff;
}

std::size_t ConicProgram::add_block(ConeKind kind, std::size_t dim, std::string label) {
    if (dim == 0) throw DimensionError("cone blocks must have at least one row");
    if (kind == ConeKind::second_order && dim < 2) throw DimensionError("second-order blocks need dim >= 2");
    if (kind == ConeKind::rotated_second_order && dim < 3)
        throw DimensionError("rotated second-order blocks need dim >= 3");
    const std::size_t start = rhs_.size();
    blocks_.push_back(ConeBlock{kind, start, dim, std::move(label)});
    rhs_.resize(start + dim, 0.0);
    row_block_.resize(start + dim, blocks_.size() - 1);
    return start;
}

void ConicProgram::add_coefficient(std::size_t row, std::size_t col, double value) {
    if (row >= rhs_.size() || col >= objective_.size()) throw DimensionError("coefficient index out of range");
    if (value != 0.0) entries_.push_back(Triplet{row, col, value});
}

void ConicProgram::set_rhs(std::size_t row, double value) {
    if (row >= rhs_.size()) throw DimensionError("rhs row out of range");
    rhs_[row] = value;
}

std::size_t ConicProgram::block_of_row(std::size_t row) const { return row_block_.at(row); }

std::size_t ConicProgram::count_blocks(ConeKind kind) const {
    return static_cast<std::size_t>(
        std::count_if(blocks_.begin(), blocks_.end(), [&](const ConeBlock& b) { return b.kind == kind; }));
}

void ConicProgram::validate() const {
    std::size_t next = 0;
    for (const ConeBlock& b : blocks_) {
        if (b.start != next || b.dim == 0) throw DimensionError("cone blocks must tile the rows");
        next += b.dim;
    }
    if (next != rhs_.size()) throw DimensionError("cone blocks must cover every row");
    for (const Triplet& t : entries_) {
        if (t.row >= rhs_.size() || t.col >= objective_.size())
            throw DimensionError("coefficient index out of range");
        if (!std::isfinite(t.value)) throw DimensionError("non-finite coefficient");
    }
    for (double v : rhs_)
        if (!std::isfinite(v)) throw DimensionError("non-finite right-hand side");
    for (double v : objective_)
        if (!std::isfinite(v)) throw DimensionError("non-finite objective coefficient");
}

double ConicProgram::objective_value(std::span<const double> x) const {
    if (x.size() != objective_.size()) throw DimensionError("point length does not match program");
    double v = objective_constant_;
    for (std::size_t i = 0; i < x.size(); ++i) v += objective_[i] * x[i];
    return v;
}

std::vector<double> ConicProgram::slack(std::span<const double> x) const {
    if (x.size() != objective_.size()) throw DimensionError("point length does not match program");
    std::vector<double> s = rhs_;
    for (const Triplet& t : entries_) s[t.row] -= t.value * x[t.col];
    return s;
}

double ResidualReport::max_violation() const { return std::max({max_equality, max_nonnegative, max_cone}); }

ResidualReport check_residuals(const ConicProgram& p, std::span<const double> x) {
    const std::vector<double> s = p.slack(x);
    ResidualReport rep;
    double worst = -1.0;
    for (std::size_t bi = 0; bi < p.blocks().size(); ++bi) {
        const ConeBlock& b = p.blocks()[bi];
        const double* v = s.data() + b.start;
        double viol = 0.0;
        switch (b.kind) {
            case ConeKind::zero:
                for (std::size_t i = 0; i < b.dim; ++i) viol = std::max(viol, std::abs(v[i]));
                rep.max_equality = std::max(rep.max_equality, viol);
                break;
            case ConeKind::nonnegative:
                for (std::size_t i = 0; i < b.dim; ++i) viol = std::max(viol, -v[i]);
                rep.max_nonnegative = std::max(rep.max_nonnegative, viol);
                break;
            case ConeKind::second_order: {
                double n = 0.0;
                for (std::size_t i = 1; i < b.dim; ++i) n += v[i] * v[i];
                viol = std::max(0.0, std::sqrt(n) - v[0]);
                rep.max_cone = std::max(rep.max_cone, viol);
                break;
            }
            case ConeKind::rotated_second_order: {
                const double t = (v[0] + v[1]) / std::numbers::sqrt2;
                double n = std::pow((v[0] - v[1]) / std::numbers::sqrt2, 2);
                for (std::size_t i = 2; i < b.dim; ++i) n += v[i] * v[i];
                viol = std::max(0.0, std::sqrt(n) - t);
                rep.max_cone = std::max(rep.max_cone, viol);
                break;
            }
        }
        rep.blocks.push_back(BlockResidual{bi, b.kind, viol});
        if (viol > worst) {
            worst = viol;
            rep.worst_block = bi;
        }
    }
    return rep;
}

}  // namespace rsopf
