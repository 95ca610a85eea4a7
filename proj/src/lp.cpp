#include "nfl/lp.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace nfl {

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kReducedCostTol = 1e-9;

// Standard form min c.z s.t. Az = b, z >= 0, b >= 0. Free decision variables
// are split into positive/negative parts; box bounds become extra rows.
struct StandardForm {
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    Eigen::VectorXd c;
    int n_vars = 0;          // original decision variables
    int n_rows = 0;
    // row i of the standard form maps to original constraint row_origin[i]
    // (-1 for bound rows) with sign row_sign[i].
    std::vector<int> row_origin;
    std::vector<double> row_sign;
};

StandardForm build_standard_form(const LinearProgram& p) {
    const int n = static_cast<int>(p.objective.size());
    for (const auto& con : p.constraints) {
        if (con.row.size() != n)
            throw std::invalid_argument("LinearProgram: constraint row length mismatch");
    }

    std::vector<LinearConstraint> rows = p.constraints;
    std::vector<int> origin(rows.size());
    for (size_t i = 0; i < rows.size(); ++i) origin[static_cast<size_t>(i)] = static_cast<int>(i);
    if (p.var_bounds) {
        const auto& [lo, hi] = *p.var_bounds;
        if (lo.size() != n || hi.size() != n)
            throw std::invalid_argument("LinearProgram: variable bound length mismatch");
        for (int k = 0; k < n; ++k) {
            if (std::isfinite(hi[k])) {
                Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
                row[k] = 1.0;
                rows.push_back({row, Relation::LessEq, hi[k]});
                origin.push_back(-1);
            }
            if (std::isfinite(lo[k])) {
                Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
                row[k] = -1.0;
                rows.push_back({row, Relation::LessEq, -lo[k]});
                origin.push_back(-1);
            }
        }
    }

    const int m = static_cast<int>(rows.size());
    int n_slack = 0;
    for (const auto& con : rows)
        if (con.rel == Relation::LessEq) ++n_slack;

    StandardForm sf;
    sf.n_vars = n;
    sf.n_rows = m;
    sf.row_origin = origin;
    sf.row_sign.assign(static_cast<size_t>(m), 1.0);
    const int cols = 2 * n + n_slack;
    sf.A = Eigen::MatrixXd::Zero(m, cols);
    sf.b = Eigen::VectorXd::Zero(m);
    sf.c = Eigen::VectorXd::Zero(cols);

    Eigen::VectorXd obj = p.objective;
    if (p.sense == Sense::Maximize) obj = -obj;
    for (int k = 0; k < n; ++k) {
        sf.c[2 * k] = obj[k];
        sf.c[2 * k + 1] = -obj[k];
    }

    int slack = 2 * n;
    for (int i = 0; i < m; ++i) {
        double sign = 1.0;
        if (rows[static_cast<size_t>(i)].rhs < 0.0) sign = -1.0;
        sf.row_sign[static_cast<size_t>(i)] = sign;
        for (int k = 0; k < n; ++k) {
            const double a = sign * rows[static_cast<size_t>(i)].row[k];
            sf.A(i, 2 * k) = a;
            sf.A(i, 2 * k + 1) = -a;
        }
        sf.b[i] = sign * rows[static_cast<size_t>(i)].rhs;
        if (rows[static_cast<size_t>(i)].rel == Relation::LessEq) {
            sf.A(i, slack++) = sign;  // surplus when the row was negated
        }
    }
    return sf;
}

struct Tableau {
    Eigen::MatrixXd T;       // m x (cols + 1), last column is b
    std::vector<int> basis;  // basic column per row
    int cols = 0;

    void pivot(int row, int col) {
        T.row(row) /= T(row, col);
        for (int i = 0; i < T.rows(); ++i) {
            if (i == row) continue;
            const double f = T(i, col);
            if (f != 0.0) T.row(i) -= f * T.row(row);
        }
        basis[static_cast<size_t>(row)] = col;
    }
};

enum class SimplexOutcome { Optimal, Unbounded, IterationLimit };

// Minimizes cost over the tableau. `allowed` masks columns that may enter.
SimplexOutcome run_simplex(Tableau& tab, const Eigen::VectorXd& cost, const std::vector<bool>& allowed) {
    const int m = static_cast<int>(tab.T.rows());
    const int cols = tab.cols;

    Eigen::VectorXd reduced(cols);
    const long max_iters = 2000 + 200L * (m + cols);
    const long bland_after = max_iters / 2;

    for (long iter = 0; iter < max_iters; ++iter) {
        // Reduced costs: c_j - c_B . B^-1 A_j, reading B^-1 A_j off the tableau.
        for (int j = 0; j < cols; ++j) reduced[j] = allowed[static_cast<size_t>(j)] ? cost[j] : 0.0;
        for (int i = 0; i < m; ++i) {
            const double cb = cost[tab.basis[static_cast<size_t>(i)]];
            if (cb != 0.0) {
                for (int j = 0; j < cols; ++j) {
                    if (allowed[static_cast<size_t>(j)]) reduced[j] -= cb * tab.T(i, j);
                }
            }
        }

        int entering = -1;
        if (iter < bland_after) {
            double best = -kReducedCostTol;
            for (int j = 0; j < cols; ++j) {
                if (allowed[static_cast<size_t>(j)] && reduced[j] < best) {
                    best = reduced[j];
                    entering = j;
                }
            }
        } else {
            for (int j = 0; j < cols; ++j) {
                if (allowed[static_cast<size_t>(j)] && reduced[j] < -kReducedCostTol) {
                    entering = j;
                    break;
                }
            }
        }
        if (entering < 0) return SimplexOutcome::Optimal;

        int leaving = -1;
        double best_ratio = std::numeric_limits<double>::infinity();
        for (int i = 0; i < m; ++i) {
            const double a = tab.T(i, entering);
            if (a > kPivotTol) {
                const double ratio = tab.T(i, cols) / a;
                if (ratio < best_ratio - 1e-12 ||
                    (ratio < best_ratio + 1e-12 && leaving >= 0 &&
                     tab.basis[static_cast<size_t>(i)] < tab.basis[static_cast<size_t>(leaving)])) {
                    best_ratio = ratio;
                    leaving = i;
                }
            }
        }
        if (leaving < 0) return SimplexOutcome::Unbounded;
        tab.pivot(leaving, entering);
    }
    return SimplexOutcome::IterationLimit;
}

}  // namespace

LpSolution solve(const LinearProgram& p) {
    if (p.objective.size() == 0) throw std::invalid_argument("LinearProgram: empty objective");
    StandardForm sf = build_standard_form(p);
    const int m = sf.n_rows;
    const int n_cols = static_cast<int>(sf.A.cols());

    LpSolution sol;
    if (m == 0) {
        // No constraints: optimum is 0 only when the objective is zero.
        bool zero = p.objective.isZero(0.0);
        if (!zero) {
            sol.status = LpStatus::Unbounded;
            return sol;
        }
        sol.status = LpStatus::Optimal;
        sol.value = 0.0;
        sol.point = Eigen::VectorXd::Zero(sf.n_vars);
        sol.duals = Eigen::VectorXd();
        return sol;
    }

    // Phase 1 tableau with one artificial per row.
    Tableau tab;
    tab.cols = n_cols + m;
    tab.T = Eigen::MatrixXd::Zero(m, tab.cols + 1);
    tab.T.block(0, 0, m, n_cols) = sf.A;
    tab.T.block(0, n_cols, m, m) = Eigen::MatrixXd::Identity(m, m);
    tab.T.col(tab.cols) = sf.b;
    tab.basis.resize(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i) tab.basis[static_cast<size_t>(i)] = n_cols + i;

    Eigen::VectorXd phase1_cost = Eigen::VectorXd::Zero(tab.cols);
    phase1_cost.tail(m).setOnes();
    std::vector<bool> allowed(static_cast<size_t>(tab.cols), true);

    SimplexOutcome outcome = run_simplex(tab, phase1_cost, allowed);
    if (outcome == SimplexOutcome::IterationLimit) {
        sol.status = LpStatus::SolverFailure;
        return sol;
    }
    double infeas = 0.0;
    for (int i = 0; i < m; ++i) {
        if (tab.basis[static_cast<size_t>(i)] >= n_cols) infeas += tab.T(i, tab.cols);
    }
    const double feas_scale = 1.0 + sf.b.cwiseAbs().maxCoeff();
    if (infeas > kLpFeasTol * feas_scale) {
        sol.status = LpStatus::Infeasible;
        return sol;
    }

    // Drive leftover artificials out of the basis; drop rows that turn out to
    // be redundant.
    std::vector<int> keep_rows;
    for (int i = 0; i < m; ++i) {
        if (tab.basis[static_cast<size_t>(i)] < n_cols) {
            keep_rows.push_back(i);
            continue;
        }
        int pivot_col = -1;
        for (int j = 0; j < n_cols; ++j) {
            if (std::abs(tab.T(i, j)) > 1e-7) {
                pivot_col = j;
                break;
            }
        }
        if (pivot_col >= 0) {
            tab.pivot(i, pivot_col);
            keep_rows.push_back(i);
        }
        // else: redundant row, dropped below
    }
    if (static_cast<int>(keep_rows.size()) < m) {
        Eigen::MatrixXd T2(static_cast<long>(keep_rows.size()), tab.T.cols());
        std::vector<int> basis2;
        for (size_t i = 0; i < keep_rows.size(); ++i) {
            T2.row(static_cast<long>(i)) = tab.T.row(keep_rows[i]);
            basis2.push_back(tab.basis[static_cast<size_t>(keep_rows[i])]);
        }
        tab.T = std::move(T2);
        tab.basis = std::move(basis2);
    }

    // Phase 2: original costs, artificial columns locked out.
    Eigen::VectorXd phase2_cost = Eigen::VectorXd::Zero(tab.cols);
    phase2_cost.head(n_cols) = sf.c;
    for (int j = n_cols; j < tab.cols; ++j) allowed[static_cast<size_t>(j)] = false;

    outcome = run_simplex(tab, phase2_cost, allowed);
    if (outcome == SimplexOutcome::IterationLimit) {
        sol.status = LpStatus::SolverFailure;
        return sol;
    }
    if (outcome == SimplexOutcome::Unbounded) {
        sol.status = LpStatus::Unbounded;
        return sol;
    }

    // Recompute the basic solution from the original standard-form data for
    // accuracy, instead of trusting the accumulated tableau.
    const int rows_left = static_cast<int>(tab.T.rows());
    Eigen::MatrixXd B(rows_left, rows_left);
    Eigen::VectorXd cB(rows_left);
    Eigen::VectorXd b_kept(rows_left);
    std::vector<int> kept_origin(static_cast<size_t>(rows_left));
    {
        int idx = 0;
        // Map tableau rows back to standard-form rows: rows were only ever
        // dropped, never reordered, so track which originals remain.
        std::vector<int> remaining;
        if (rows_left == m) {
            remaining.resize(static_cast<size_t>(m));
            for (int i = 0; i < m; ++i) remaining[static_cast<size_t>(i)] = i;
        } else {
            remaining = keep_rows;
        }
        for (int i : remaining) {
            b_kept[idx] = sf.b[i];
            kept_origin[static_cast<size_t>(idx)] = i;
            ++idx;
        }
    }
    for (int i = 0; i < rows_left; ++i) {
        const int col = tab.basis[static_cast<size_t>(i)];
        for (int r = 0; r < rows_left; ++r) B(r, i) = sf.A(kept_origin[static_cast<size_t>(r)], col);
        cB[i] = sf.c[col];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(B);
    if (!qr.isInvertible()) {
        // Fall back on the tableau values.
        Eigen::VectorXd z = Eigen::VectorXd::Zero(n_cols);
        for (int i = 0; i < rows_left; ++i) z[tab.basis[static_cast<size_t>(i)]] = tab.T(i, tab.cols);
        sol.point = Eigen::VectorXd(sf.n_vars);
        for (int k = 0; k < sf.n_vars; ++k) sol.point[k] = z[2 * k] - z[2 * k + 1];
        sol.duals = Eigen::VectorXd::Zero(static_cast<long>(p.constraints.size()));
    } else {
        Eigen::VectorXd xB = qr.solve(b_kept);
        Eigen::VectorXd z = Eigen::VectorXd::Zero(n_cols);
        for (int i = 0; i < rows_left; ++i) z[tab.basis[static_cast<size_t>(i)]] = xB[i];
        sol.point = Eigen::VectorXd(sf.n_vars);
        for (int k = 0; k < sf.n_vars; ++k) sol.point[k] = z[2 * k] - z[2 * k + 1];

        // Duals of the original constraints: y solves B^T y = c_B; undo the
        // row negation and the max->min objective flip.
        Eigen::VectorXd y = qr.transpose().solve(cB);
        sol.duals = Eigen::VectorXd::Zero(static_cast<long>(p.constraints.size()));
        for (int i = 0; i < rows_left; ++i) {
            const int orig_row = kept_origin[static_cast<size_t>(i)];
            const int con = sf.row_origin[static_cast<size_t>(orig_row)];
            if (con >= 0) {
                double d = y[i] * sf.row_sign[static_cast<size_t>(orig_row)];
                if (p.sense == Sense::Maximize) d = -d;
                sol.duals[con] = d;
            }
        }
    }

    double value = p.objective.dot(sol.point);
    sol.value = value;

    // Verify the returned point against the original program; report failure
    // rather than an out-of-tolerance "optimum".
    const double tol = kLpFeasTol * feas_scale;
    for (const auto& con : p.constraints) {
        const double lhs = con.row.dot(sol.point);
        if (con.rel == Relation::LessEq ? lhs > con.rhs + tol : std::abs(lhs - con.rhs) > tol) {
            sol.status = LpStatus::SolverFailure;
            return sol;
        }
    }
    if (p.var_bounds) {
        const auto& [lo, hi] = *p.var_bounds;
        for (int k = 0; k < sf.n_vars; ++k) {
            if (sol.point[k] < lo[k] - tol || sol.point[k] > hi[k] + tol) {
                sol.status = LpStatus::SolverFailure;
                return sol;
            }
        }
    }

    sol.status = LpStatus::Optimal;
    return sol;
}

std::string to_lp_text(const LinearProgram& p) {
    std::ostringstream os;
    os.precision(17);
    os << (p.sense == Sense::Maximize ? "Maximize" : "Minimize") << "\n obj:";
    for (int k = 0; k < p.objective.size(); ++k) {
        const double v = p.objective[k];
        os << (v < 0 ? " - " : " + ") << std::abs(v) << " x" << k;
    }
    os << "\nSubject To\n";
    for (size_t i = 0; i < p.constraints.size(); ++i) {
        const auto& con = p.constraints[i];
        os << " c" << i << ":";
        for (int k = 0; k < con.row.size(); ++k) {
            const double v = con.row[k];
            if (v == 0.0) continue;
            os << (v < 0 ? " - " : " + ") << std::abs(v) << " x" << k;
        }
        os << (con.rel == Relation::LessEq ? " <= " : " = ") << con.rhs << "\n";
    }
    os << "Bounds\n";
    for (int k = 0; k < p.objective.size(); ++k) {
        if (p.var_bounds) {
            os << " " << p.var_bounds->first[k] << " <= x" << k << " <= " << p.var_bounds->second[k] << "\n";
        } else {
            os << " x" << k << " free\n";
        }
    }
    os << "End\n";
    return os.str();
}

}  // namespace nfl
