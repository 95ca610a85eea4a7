#include "nfl/backreach.hpp"

#include <cmath>
#include <string>

#include "nfl/parallel.hpp"

namespace nfl {

namespace {

// LP optima are widened outward by the solver feasibility tolerance before
// forming rectangles, so solver round-off cannot shave states off a set.
constexpr double kWidenTol = kLpFeasTol;

// Appends rows encoding  box.lo <= coeff * w + offset <= box.hi.
void add_two_sided_rows(std::vector<LinearConstraint>& rows, const Eigen::MatrixXd& coeff,
                        const Eigen::VectorXd& offset, const HyperRectangle& box) {
    for (long i = 0; i < coeff.rows(); ++i) {
        rows.push_back({coeff.row(i), Relation::LessEq, box.hi[i] - offset[i]});
        rows.push_back({-coeff.row(i), Relation::LessEq, offset[i] - box.lo[i]});
    }
}

// Appends rows encoding  Phi x + beta <= u <= Psi x + alpha  where the state
// is the affine expression x = Xexpr * w + xoff and u is the variable block
// starting at u_offset.
void add_control_relax_rows(std::vector<LinearConstraint>& rows, const AffineBounds& ab,
                            const Eigen::MatrixXd& Xexpr, const Eigen::VectorXd& xoff,
                            int u_offset, int n_vars) {
    const long nu = ab.alpha.size();
    const Eigen::MatrixXd PsiX = ab.Psi * Xexpr;
    const Eigen::MatrixXd PhiX = ab.Phi * Xexpr;
    const Eigen::VectorXd psi_off = ab.Psi * xoff;
    const Eigen::VectorXd phi_off = ab.Phi * xoff;
    for (long j = 0; j < nu; ++j) {
        // u_j - Psi_j x <= alpha_j
        Eigen::VectorXd up = -PsiX.row(j).transpose();
        up[u_offset + j] += 1.0;
        rows.push_back({up, Relation::LessEq, ab.alpha[j] + psi_off[j]});
        // Phi_j x - u_j <= -beta_j
        Eigen::VectorXd lo = PhiX.row(j).transpose();
        lo[u_offset + j] -= 1.0;
        rows.push_back({lo, Relation::LessEq, -ab.beta[j] - phi_off[j]});
    }
    (void)n_vars;
}

// Box rows on a plain variable block.
void add_variable_box_rows(std::vector<LinearConstraint>& rows, int offset, int n_vars,
                           const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
    for (long k = 0; k < lo.size(); ++k) {
        Eigen::VectorXd row = Eigen::VectorXd::Zero(n_vars);
        row[offset + k] = 1.0;
        rows.push_back({row, Relation::LessEq, hi[k]});
        rows.push_back({-row, Relation::LessEq, -lo[k]});
    }
}

struct CellFaces {
    bool empty = false;
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;
};

// Solves min/max of each coordinate of the x-block over the given rows.
// Infeasible solves still count (the complexity identities assume every LP is
// attempted); a cell whose LPs are all infeasible contributes nothing.
CellFaces solve_cell_faces(const std::vector<LinearConstraint>& rows, int n_vars, int x_offset,
                           int nx, const HyperRectangle& clamp_box, long& solves,
                           const std::string& what, int cell_index) {
    CellFaces faces;
    faces.lo.resize(nx);
    faces.hi.resize(nx);
    std::vector<bool> lo_ok(static_cast<size_t>(nx), false), hi_ok(static_cast<size_t>(nx), false);
    int feasible = 0;

    LinearProgram lp;
    lp.constraints = rows;
    lp.objective = Eigen::VectorXd::Zero(n_vars);
    for (int k = 0; k < nx; ++k) {
        lp.objective.setZero();
        lp.objective[x_offset + k] = 1.0;
        for (Sense sense : {Sense::Minimize, Sense::Maximize}) {
            lp.sense = sense;
            LpSolution sol = solve(lp);
            ++solves;
            switch (sol.status) {
                case LpStatus::Optimal:
                    ++feasible;
                    if (sense == Sense::Minimize) {
                        faces.lo[k] = sol.value;
                        lo_ok[static_cast<size_t>(k)] = true;
                    } else {
                        faces.hi[k] = sol.value;
                        hi_ok[static_cast<size_t>(k)] = true;
                    }
                    break;
                case LpStatus::Infeasible:
                    break;
                case LpStatus::Unbounded:
                case LpStatus::SolverFailure:
                    throw AnalysisError(what + ": LP " + (sense == Sense::Maximize ? "max" : "min") +
                                        " over state index " + std::to_string(k) +
                                        " failed at cell " + std::to_string(cell_index));
            }
        }
    }

    if (feasible == 0) {
        faces.empty = true;
        return faces;
    }
    // Near-degenerate cells can resolve some directions as infeasible; fall
    // back to the cell face there (conservative within the cell).
    for (int k = 0; k < nx; ++k) {
        if (!lo_ok[static_cast<size_t>(k)]) faces.lo[k] = clamp_box.lo[k];
        if (!hi_ok[static_cast<size_t>(k)]) faces.hi[k] = clamp_box.hi[k];
    }
    // Widen against solver round-off, then clamp to the cell: the LP already
    // constrains the state to the cell, so clamping keeps soundness and the
    // union inside the partitioned hull.
    for (int k = 0; k < nx; ++k) {
        faces.lo[k] = std::max(faces.lo[k] - kWidenTol, clamp_box.lo[k]);
        faces.hi[k] = std::min(faces.hi[k] + kWidenTol, clamp_box.hi[k]);
        if (faces.lo[k] > faces.hi[k])
            throw AnalysisError(what + ": inverted face after clamping at cell " + std::to_string(cell_index));
    }
    return faces;
}

}  // namespace

std::optional<HyperRectangle> backreach_rect(const LinearSystem& sys, const HyperRectangle& target,
                                             long* lp_count) {
    validate_system(sys);
    if (target.dim() != sys.nx()) throw std::invalid_argument("backreach_rect: target dimension mismatch");
    const int nx = sys.nx();
    const int nu = sys.nu();
    const int n_vars = nx + nu;

    std::vector<LinearConstraint> rows;
    Eigen::MatrixXd dyn(nx, n_vars);
    dyn << sys.A, sys.B;
    add_two_sided_rows(rows, dyn, sys.c, target);
    add_variable_box_rows(rows, nx, n_vars, sys.control_lo, sys.control_hi);

    LinearProgram lp;
    lp.constraints = std::move(rows);
    lp.objective = Eigen::VectorXd::Zero(n_vars);

    Eigen::VectorXd lo(nx), hi(nx);
    for (int k = 0; k < nx; ++k) {
        lp.objective.setZero();
        lp.objective[k] = 1.0;
        for (Sense sense : {Sense::Minimize, Sense::Maximize}) {
            lp.sense = sense;
            LpSolution sol = solve(lp);
            if (lp_count) ++*lp_count;
            if (sol.status == LpStatus::Infeasible) return std::nullopt;
            if (sol.status == LpStatus::Unbounded)
                throw AnalysisError("backreach_rect: unbounded backreachable set (singular dynamics?)");
            if (sol.status == LpStatus::SolverFailure)
                throw AnalysisError("backreach_rect: LP solver failure");
            (sense == Sense::Minimize ? lo[k] : hi[k]) = sol.value;
        }
    }
    return widened(HyperRectangle(std::move(lo), std::move(hi)), kWidenTol);
}

OneStepResult one_step_backproj(const LinearSystem& sys, const NeuralNetwork& nn,
                                const HyperRectangle& target, const BackreachOptions& opts) {
    validate_system(sys);
    validate_network(nn);
    if (nn.input_dim() != sys.nx() || nn.output_dim() != sys.nu())
        throw std::invalid_argument("one_step_backproj: policy dimensions do not match the system");
    if (opts.r.size() != sys.nx()) throw std::invalid_argument("one_step_backproj: partition parameter dimension mismatch");

    OneStepResult result;
    result.backreach = backreach_rect(sys, target, &result.backreach_lp_solves);
    if (!result.backreach) return result;

    const int nx = sys.nx();
    const int nu = sys.nu();
    const int n_vars = nx + nu;
    Eigen::MatrixXd dyn(nx, n_vars);
    dyn << sys.A, sys.B;

    const std::vector<HyperRectangle> cells = partition(*result.backreach, opts.r);
    const int n_cells = static_cast<int>(cells.size());
    std::vector<std::optional<HyperRectangle>> cell_rects(static_cast<size_t>(n_cells));
    std::vector<long> cell_solves(static_cast<size_t>(n_cells), 0);

    parallel_for(n_cells, resolve_thread_count(opts.threads), [&](int ci) {
        const HyperRectangle& cell = cells[static_cast<size_t>(ci)];
        const AffineBounds bounds = relax(nn, cell, opts.slope_policy);

        std::vector<LinearConstraint> rows;
        add_two_sided_rows(rows, dyn, sys.c, target);
        add_control_relax_rows(rows, bounds, Eigen::MatrixXd::Identity(nx, n_vars),
                               Eigen::VectorXd::Zero(nx), nx, n_vars);
        add_variable_box_rows(rows, 0, n_vars, cell.lo, cell.hi);
        if (opts.clip_control_bounds)
            add_variable_box_rows(rows, nx, n_vars, sys.control_lo, sys.control_hi);

        CellFaces faces = solve_cell_faces(rows, n_vars, 0, nx, cell,
                                           cell_solves[static_cast<size_t>(ci)],
                                           "one_step_backproj", ci);
        if (!faces.empty)
            cell_rects[static_cast<size_t>(ci)] = HyperRectangle(std::move(faces.lo), std::move(faces.hi));
    });

    for (int ci = 0; ci < n_cells; ++ci) {
        result.lp_solves += cell_solves[static_cast<size_t>(ci)];
        if (cell_rects[static_cast<size_t>(ci)])
            result.bp.members.push_back(*cell_rects[static_cast<size_t>(ci)]);
    }
    return result;
}

BackreachResult breach_lp(const LinearSystem& sys, const NeuralNetwork& nn,
                          const HyperRectangle& target, int tau, const BackreachOptions& opts) {
    if (tau < 1) throw std::invalid_argument("breach_lp: tau must be >= 1");

    BackreachResult res;
    res.bp_sets.push_back(RectUnion({target}));
    res.hulls.emplace_back(target);
    res.backreach_rects.emplace_back(std::nullopt);

    for (int t = 1; t <= tau; ++t) {
        if (!res.hulls[static_cast<size_t>(t - 1)]) {
            // BP estimate went empty: the recursion terminates and every
            // earlier-in-time set stays empty.
            res.bp_sets.emplace_back();
            res.hulls.emplace_back(std::nullopt);
            res.backreach_rects.emplace_back(std::nullopt);
            res.omega.emplace_back(std::nullopt);
            continue;
        }
        OneStepResult step = one_step_backproj(sys, nn, *res.hulls[static_cast<size_t>(t - 1)], opts);
        res.lp_solves += step.lp_solves;
        res.backreach_lp_solves += step.backreach_lp_solves;
        res.backreach_rects.push_back(step.backreach);
        res.bp_sets.push_back(std::move(step.bp));
        auto hull = bound_with_rectangle(res.bp_sets.back());
        res.hulls.push_back(hull);
        res.omega.push_back(hull ? std::optional<AffineBounds>(relax(nn, *hull, opts.slope_policy))
                                 : std::nullopt);
    }
    return res;
}

namespace {

// Affine expressions of the suffix states in terms of the chain decision
// variables w = (x_t, u_t, u_{t-1}, ..., u_{j_end+1}); index j counts steps
// remaining until the target.
struct ChainExpr {
    std::vector<Eigen::MatrixXd> X;  // X[j] * w + x0ff[j] = state j steps before target
    std::vector<Eigen::VectorXd> xoff;
    std::vector<int> u_offset;       // variable offset of u_j (valid for j_end < j <= t)
    int n_vars = 0;
};

ChainExpr build_chain(const LinearSystem& sys, int t, int j_end) {
    const int nx = sys.nx();
    const int nu = sys.nu();
    const int n_controls = t - j_end;
    ChainExpr ch;
    ch.n_vars = nx + n_controls * nu;
    ch.X.assign(static_cast<size_t>(t) + 1, Eigen::MatrixXd());
    ch.xoff.assign(static_cast<size_t>(t) + 1, Eigen::VectorXd());
    ch.u_offset.assign(static_cast<size_t>(t) + 1, -1);

    ch.X[static_cast<size_t>(t)] = Eigen::MatrixXd::Zero(nx, ch.n_vars);
    ch.X[static_cast<size_t>(t)].leftCols(nx) = Eigen::MatrixXd::Identity(nx, nx);
    ch.xoff[static_cast<size_t>(t)] = Eigen::VectorXd::Zero(nx);

    int offset = nx;
    for (int j = t; j > j_end; --j) {
        ch.u_offset[static_cast<size_t>(j)] = offset;
        Eigen::MatrixXd Bsel = Eigen::MatrixXd::Zero(nx, ch.n_vars);
        Bsel.middleCols(offset, nu) = sys.B;
        ch.X[static_cast<size_t>(j - 1)] = sys.A * ch.X[static_cast<size_t>(j)] + Bsel;
        ch.xoff[static_cast<size_t>(j - 1)] = sys.A * ch.xoff[static_cast<size_t>(j)] + sys.c;
        offset += nu;
    }
    return ch;
}

}  // namespace

BackreachResult rebreach_lp(const LinearSystem& sys, const NeuralNetwork& nn,
                            const HyperRectangle& target, int tau, const BackreachOptions& opts) {
    BackreachResult base = breach_lp(sys, nn, target, tau, opts);
    BackreachResult res = base;  // refined estimates overwrite steps 2..tau

    const int nx = sys.nx();

    for (int t = 2; t <= tau; ++t) {
        if (!base.hulls[static_cast<size_t>(t)]) continue;

        // Chain back to the target unless the one-step ablation is requested.
        const int j_end = opts.single_step_refinement ? t - 1 : 0;
        const ChainExpr ch = build_chain(sys, t, j_end);
        const HyperRectangle& terminal =
            (j_end == 0) ? target : *base.hulls[static_cast<size_t>(j_end)];

        const std::vector<HyperRectangle> cells = partition(*base.hulls[static_cast<size_t>(t)], opts.r);
        const int n_cells = static_cast<int>(cells.size());
        std::vector<std::optional<HyperRectangle>> cell_rects(static_cast<size_t>(n_cells));
        std::vector<long> cell_solves(static_cast<size_t>(n_cells), 0);

        parallel_for(n_cells, resolve_thread_count(opts.threads), [&](int ci) {
            const HyperRectangle& cell = cells[static_cast<size_t>(ci)];
            const AffineBounds cell_bounds = relax(nn, cell, opts.slope_policy);

            std::vector<LinearConstraint> rows;
            // Terminal state reaches the target (or the next hull in the
            // one-step ablation).
            add_two_sided_rows(rows, ch.X[static_cast<size_t>(j_end)], ch.xoff[static_cast<size_t>(j_end)],
                               terminal);
            // Intermediate states progress through the archived BP hulls
            // under the archived affine control bounds.
            for (int j = j_end + 1; j < t; ++j) {
                add_two_sided_rows(rows, ch.X[static_cast<size_t>(j)], ch.xoff[static_cast<size_t>(j)],
                                   *base.hulls[static_cast<size_t>(j)]);
                add_control_relax_rows(rows, *base.omega[static_cast<size_t>(j - 1)],
                                       ch.X[static_cast<size_t>(j)], ch.xoff[static_cast<size_t>(j)],
                                       ch.u_offset[static_cast<size_t>(j)], ch.n_vars);
            }
            // Cell-level relaxation bounds the first control; the first state
            // stays inside the cell.
            add_control_relax_rows(rows, cell_bounds, ch.X[static_cast<size_t>(t)],
                                   ch.xoff[static_cast<size_t>(t)], ch.u_offset[static_cast<size_t>(t)],
                                   ch.n_vars);
            add_variable_box_rows(rows, 0, ch.n_vars, cell.lo, cell.hi);
            if (opts.clip_control_bounds) {
                for (int j = j_end + 1; j <= t; ++j)
                    add_variable_box_rows(rows, ch.u_offset[static_cast<size_t>(j)], ch.n_vars,
                                          sys.control_lo, sys.control_hi);
            }

            CellFaces faces = solve_cell_faces(rows, ch.n_vars, 0, nx, cell,
                                               cell_solves[static_cast<size_t>(ci)],
                                               "rebreach_lp step " + std::to_string(t), ci);
            if (!faces.empty)
                cell_rects[static_cast<size_t>(ci)] = HyperRectangle(std::move(faces.lo), std::move(faces.hi));
        });

        RectUnion refined;
        for (int ci = 0; ci < n_cells; ++ci) {
            res.lp_solves += cell_solves[static_cast<size_t>(ci)];
            if (cell_rects[static_cast<size_t>(ci)]) refined.members.push_back(*cell_rects[static_cast<size_t>(ci)]);
        }
        res.bp_sets[static_cast<size_t>(t)] = std::move(refined);
        res.hulls[static_cast<size_t>(t)] = bound_with_rectangle(res.bp_sets[static_cast<size_t>(t)]);
    }
    return res;
}

ForwardReachResult reach_forward(const LinearSystem& sys, const NeuralNetwork& nn,
                                 const HyperRectangle& init, int tau, const BackreachOptions& opts) {
    validate_system(sys);
    validate_network(nn);
    if (tau < 1) throw std::invalid_argument("reach_forward: tau must be >= 1");
    if (init.dim() != sys.nx()) throw std::invalid_argument("reach_forward: init dimension mismatch");

    const int nx = sys.nx();
    const int nu = sys.nu();
    const int n_vars = nx + nu;
    Eigen::MatrixXd dyn(nx, n_vars);
    dyn << sys.A, sys.B;

    ForwardReachResult res;
    res.sets.push_back(RectUnion({init}));

    for (int t = 1; t <= tau; ++t) {
        auto hull = bound_with_rectangle(res.sets.back());
        if (!hull) {
            res.sets.emplace_back();
            continue;
        }
        const std::vector<HyperRectangle> cells = partition(*hull, opts.r);
        const int n_cells = static_cast<int>(cells.size());
        std::vector<std::optional<HyperRectangle>> images(static_cast<size_t>(n_cells));
        std::vector<long> cell_solves(static_cast<size_t>(n_cells), 0);

        parallel_for(n_cells, resolve_thread_count(opts.threads), [&](int ci) {
            const HyperRectangle& cell = cells[static_cast<size_t>(ci)];
            const AffineBounds bounds = relax(nn, cell, opts.slope_policy);

            std::vector<LinearConstraint> rows;
            add_variable_box_rows(rows, 0, n_vars, cell.lo, cell.hi);
            add_control_relax_rows(rows, bounds, Eigen::MatrixXd::Identity(nx, n_vars),
                                   Eigen::VectorXd::Zero(nx), nx, n_vars);
            if (opts.clip_control_bounds)
                add_variable_box_rows(rows, nx, n_vars, sys.control_lo, sys.control_hi);

            LinearProgram lp;
            lp.constraints = std::move(rows);
            lp.objective = Eigen::VectorXd::Zero(n_vars);
            Eigen::VectorXd lo(nx), hi(nx);
            bool empty = false;
            for (int k = 0; k < nx && !empty; ++k) {
                lp.objective = dyn.row(k).transpose();
                for (Sense sense : {Sense::Minimize, Sense::Maximize}) {
                    lp.sense = sense;
                    LpSolution sol = solve(lp);
                    ++cell_solves[static_cast<size_t>(ci)];
                    if (sol.status == LpStatus::Infeasible) {
                        // Possible only with clipped control bounds.
                        empty = true;
                        break;
                    }
                    if (sol.status != LpStatus::Optimal)
                        throw AnalysisError("reach_forward: LP failure at step " + std::to_string(t) +
                                            " cell " + std::to_string(ci));
                    const double v = sol.value + sys.c[k];
                    (sense == Sense::Minimize ? lo[k] : hi[k]) = v;
                }
            }
            if (!empty)
                images[static_cast<size_t>(ci)] =
                    widened(HyperRectangle(std::move(lo), std::move(hi)), kWidenTol);
        });

        RectUnion next;
        for (int ci = 0; ci < n_cells; ++ci) {
            res.lp_solves += cell_solves[static_cast<size_t>(ci)];
            if (images[static_cast<size_t>(ci)]) next.members.push_back(*images[static_cast<size_t>(ci)]);
        }
        res.sets.push_back(std::move(next));
    }
    return res;
}

SafetyVerdict certify_safety(const BackreachResult& result, const HyperRectangle& x0) {
    SafetyVerdict verdict;
    for (size_t t = 1; t < result.bp_sets.size(); ++t) {
        for (const auto& member : result.bp_sets[t].members) {
            if (intersects(member, x0)) {
                verdict.certified = false;
                verdict.first_unsafe_step = static_cast<int>(t);
                verdict.witness = member;
                return verdict;
            }
        }
    }
    return verdict;
}

SafetyVerdict certify_safety_forward(const ForwardReachResult& result, const HyperRectangle& target) {
    SafetyVerdict verdict;
    for (size_t t = 1; t < result.sets.size(); ++t) {
        for (const auto& member : result.sets[t].members) {
            if (intersects(member, target)) {
                verdict.certified = false;
                verdict.first_unsafe_step = static_cast<int>(t);
                verdict.witness = member;
                return verdict;
            }
        }
    }
    return verdict;
}

}  // namespace nfl
