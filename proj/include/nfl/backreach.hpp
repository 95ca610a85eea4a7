#pragma once

#include <Eigen/Core>
#include <optional>
#include <stdexcept>
#include <vector>

#include "nfl/dynamics.hpp"
#include "nfl/geometry.hpp"
#include "nfl/lp.hpp"
#include "nfl/network.hpp"
#include "nfl/relaxation.hpp"

namespace nfl {

// A set-computation LP failed in a way that cannot be absorbed soundly
// (unbounded or solver breakdown). Analyses abort rather than return a
// silently smaller set.
struct AnalysisError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BackreachOptions {
    Eigen::VectorXi r;                  // per-dimension partition counts
    bool clip_control_bounds = false;   // intersect relaxed control bounds with the control box
    bool single_step_refinement = false;  // refinement chains only one step (ablation)
    LowerSlopePolicy slope_policy = LowerSlopePolicy::Adaptive;
    int threads = 0;                    // 0 = NFL_BACKREACH_THREADS or hardware
};

struct BackreachResult {
    // bp_sets[0] is exactly the target set; bp_sets[t] estimates the states
    // that reach the target in t steps.
    std::vector<RectUnion> bp_sets;
    std::vector<std::optional<HyperRectangle>> hulls;  // rectangle bound per union
    // omega[t-1]: affine control bounds relaxed over hulls[t], archived for
    // the refinement pass.
    std::vector<std::optional<AffineBounds>> omega;
    std::vector<std::optional<HyperRectangle>> backreach_rects;  // [t] for t >= 1
    long lp_solves = 0;            // backprojection LPs
    long backreach_lp_solves = 0;  // tallied separately
};

struct SafetyVerdict {
    bool certified = true;
    std::optional<int> first_unsafe_step;
    std::optional<HyperRectangle> witness;  // the member intersecting the initial set
};

// Hyperrectangular bound on the states that can reach `target` in one step
// under some admissible control: two LPs per state dimension over
// {(x, u) : A x + B u + c in target, u in U}. nullopt when the target is
// unreachable under any admissible control.
std::optional<HyperRectangle> backreach_rect(const LinearSystem& sys, const HyperRectangle& target,
                                             long* lp_count = nullptr);

struct OneStepResult {
    RectUnion bp;
    std::optional<HyperRectangle> backreach;
    long lp_solves = 0;
    long backreach_lp_solves = 0;
};

// One-step backprojection over-approximation: partition the backreachable
// rectangle, relax the policy per cell, and bound per cell the states that
// can reach the target for some control between the relaxed bounds.
OneStepResult one_step_backproj(const LinearSystem& sys, const NeuralNetwork& nn,
                                const HyperRectangle& target, const BackreachOptions& opts);

// Iterates one_step_backproj over the horizon, recursing on the rectangle
// bound of each union and archiving the hull-level control relaxation per
// step. An empty estimate terminates the recursion; later sets stay empty.
BackreachResult breach_lp(const LinearSystem& sys, const NeuralNetwork& nn,
                          const HyperRectangle& target, int tau, const BackreachOptions& opts);

// Refines the breach_lp estimates: per step and cell, solves LPs whose
// decision variables trace the whole suffix trajectory through the archived
// hulls and control bounds down to the target set. The refined sets satisfy
// true BP set <= refined <= breach estimate.
BackreachResult rebreach_lp(const LinearSystem& sys, const NeuralNetwork& nn,
                            const HyperRectangle& target, int tau, const BackreachOptions& opts);

struct ForwardReachResult {
    std::vector<RectUnion> sets;  // sets[0] = {init}
    long lp_solves = 0;
};

// Forward reachable set over-approximation used as the comparison baseline:
// per step, partition the current hull, relax per cell, and bound the image
// of each cell under controls between the relaxed bounds.
ForwardReachResult reach_forward(const LinearSystem& sys, const NeuralNetwork& nn,
                                 const HyperRectangle& init, int tau, const BackreachOptions& opts);

// Certified iff no backprojection member at any step t >= 1 touches the
// initial state set (closed-set intersection).
SafetyVerdict certify_safety(const BackreachResult& result, const HyperRectangle& x0);

// Not certified iff some forward set at t >= 1 touches the target set.
SafetyVerdict certify_safety_forward(const ForwardReachResult& result, const HyperRectangle& target);

}  // namespace nfl
