#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace solpol::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Triplet {
    std::size_t row = 0;
    std::size_t col = 0;
    double value = 0.0;
};

/// maximize c.x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  l <= x <= u.
struct LinearProgram {
    std::vector<double> objective;
    std::vector<Triplet> ineq;
    std::vector<double> ineq_rhs;
    std::vector<Triplet> eq;
    std::vector<double> eq_rhs;
    std::vector<double> lower;
    std::vector<double> upper;

    std::size_t num_vars() const { return objective.size(); }
    std::size_t num_ineq() const { return ineq_rhs.size(); }
    std::size_t num_eq() const { return eq_rhs.size(); }

    /// Appends a variable and returns its index.
    std::size_t add_var(double lo, double hi, double cost = 0.0);
    /// Appends sum(coef * x) <= rhs; returns the row index.
    std::size_t add_le(const std::vector<std::pair<std::size_t, double>>& terms, double rhs);
    /// Appends sum(coef * x) == rhs; returns the row index.
    std::size_t add_eq(const std::vector<std::pair<std::size_t, double>>& terms, double rhs);

    /// Throws std::invalid_argument on out-of-range indices, duplicate triplets, l > u or NaN data.
    void validate() const;
};

enum class Status { Optimal, Infeasible, Unbounded };

std::string to_string(Status s);

struct LpSolution {
    Status status = Status::Infeasible;
    std::vector<double> x;
    double objective_value = 0.0;
    std::size_t iterations = 0;
    /// Some non-fixed nonbasic variable has a near-zero reduced cost at the optimum,
    /// so alternative optima may exist.
    bool dual_degenerate = false;
    /// Smallest |reduced cost| over non-fixed nonbasic variables at the optimum.
    double min_reduced_cost = kInf;
};

struct SolveOptions {
    double tol = 1e-7;           // primal feasibility
    double optimality_tol = 1e-7;
    double degenerate_tol = 1e-9;
    std::size_t max_iterations = 0;  // 0 means automatic
};

/// Bounded-variable primal simplex on a dense tableau. Dantzig pricing with lowest-index
/// tie-breaking; falls back to Bland's rule after a run of degenerate pivots. Same input
/// always gives the same x.
LpSolution solve(const LinearProgram& lp, const SolveOptions& options = {});
LpSolution solve(const LinearProgram& lp, double tol);

enum class ConstraintKind { Inequality, Equality, LowerBound, UpperBound };

struct Violation {
    ConstraintKind kind;
    std::size_t index;  // row for constraints, variable for bounds
    double magnitude;
};

/// Lists every constraint or bound violated by more than tol.
std::vector<Violation> check_feasibility(const LinearProgram& lp, const std::vector<double>& x, double tol = 1e-7);

/// Fixed-layout text dump for diffing.
void write_text(const LinearProgram& lp, std::ostream& os);

}  // namespace solpol::lp
