#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <vector>

#include "nfl/backreach.hpp"
#include "nfl/dynamics.hpp"
#include "nfl/geometry.hpp"
#include "nfl/network.hpp"

namespace nfl {

// Sampled ground truth: per step t, the tightest rectangle around the states
// whose closed-loop rollout first enters the target at exactly step t.
struct TrueBpEstimate {
    std::vector<std::optional<HyperRectangle>> step_rects;  // index 0..tau; [0] = already inside
    std::vector<long> hits;
    long n_samples = 0;
    uint64_t seed = 0;
    HyperRectangle sample_region;
};

// The widest relevant sampling region: the horizon-tau iterate of the
// policy-free backreachable rectangle. Falls back to the last nonempty
// iterate (or the target itself) when the recursion goes infeasible.
HyperRectangle default_sample_region(const LinearSystem& sys, const HyperRectangle& target, int tau);

TrueBpEstimate mc_true_bp(const LinearSystem& sys, const NeuralNetwork& nn,
                          const HyperRectangle& target, int tau, const HyperRectangle& sample_region,
                          long n_samples, uint64_t seed);

// Conservativeness of a set-estimate hull area against the sampled truth:
// (a_bpe - a_true) / a_true, positive when the estimate is larger. Throws
// std::invalid_argument when a_true is not positive (error undefined).
double approx_error(double a_true, double a_bpe);

struct Violation {
    int step = 0;
    Eigen::VectorXd state;
};

struct AuditReport {
    long n_samples = 0;
    long checked = 0;     // samples whose rollout reaches the target within tau
    long violations = 0;
    std::vector<Violation> examples;  // capped
    uint64_t seed = 0;
    HyperRectangle sample_region;
};

// Re-runs the rollout membership oracle against a computed result: every
// sampled state that first reaches the target at step t must lie in
// bp_sets[t] (membership tolerance 1e-9). A sound result reports zero
// violations.
AuditReport soundness_audit(const BackreachResult& result, const LinearSystem& sys,
                            const NeuralNetwork& nn, const HyperRectangle& target, long n_samples,
                            uint64_t seed,
                            const std::optional<HyperRectangle>& sample_region = std::nullopt);

}  // namespace nfl
