#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace nfl {

enum class Sense { Minimize, Maximize };
enum class Relation { LessEq, Equal };

struct LinearConstraint {
    Eigen::VectorXd row;
    Relation rel = Relation::LessEq;
    double rhs = 0.0;
};

struct LinearProgram {
    Eigen::VectorXd objective;
    Sense sense = Sense::Minimize;
    std::vector<LinearConstraint> constraints;
    // Optional box on the decision variables; entries may be +-infinity.
    std::optional<std::pair<Eigen::VectorXd, Eigen::VectorXd>> var_bounds;
};

enum class LpStatus { Optimal, Infeasible, Unbounded, SolverFailure };

struct LpSolution {
    LpStatus status = LpStatus::SolverFailure;
    double value = 0.0;        // defined iff Optimal
    Eigen::VectorXd point;     // defined iff Optimal
    Eigen::VectorXd duals;     // one multiplier per constraint, iff Optimal
};

// Feasibility tolerance honoured by the solver and promised to callers:
// an Optimal point satisfies every constraint to within this slack.
inline constexpr double kLpFeasTol = 1e-7;

// Dense two-phase primal simplex. Deterministic: identical programs yield
// identical solutions. Degenerate programs fall back to Bland's rule; if the
// pivot budget is exhausted the status is SolverFailure, never a wrong bound.
LpSolution solve(const LinearProgram& p);

// Debug dump in LP text format for cross-checking with external solvers.
std::string to_lp_text(const LinearProgram& p);

}  // namespace nfl
