#pragma once

#include <Eigen/Core>
#include <vector>

#include <json.hpp>

#include "nfl/geometry.hpp"
#include "nfl/network.hpp"

namespace nfl {

// Affine envelope of a network over a box domain:
//   Phi x + beta <= pi(x) <= Psi x + alpha  for all x in domain.
struct AffineBounds {
    Eigen::MatrixXd Psi;
    Eigen::VectorXd alpha;
    Eigen::MatrixXd Phi;
    Eigen::VectorXd beta;
    HyperRectangle domain;

    Eigen::VectorXd upper(const Eigen::VectorXd& x) const { return Psi * x + alpha; }
    Eigen::VectorXd lower(const Eigen::VectorXd& x) const { return Phi * x + beta; }
};

// Sound per-neuron pre-activation intervals, one pair of vectors per layer.
struct LayerBounds {
    std::vector<Eigen::VectorXd> lower;
    std::vector<Eigen::VectorXd> upper;
};

// Lower-line slope choice for an unstable ReLU neuron. Adaptive picks the
// area-minimizing slope (1 when u >= |l|, else 0); Zero and One pin it.
enum class LowerSlopePolicy { Adaptive, Zero, One };

// Pre-activation intervals computed with a full backward pass per layer
// (each truncated sub-network is bounded over the domain), not interval
// arithmetic. The bounds are valid for every x in the domain.
LayerBounds preactivation_bounds(const NeuralNetwork& nn, const HyperRectangle& domain,
                                 LowerSlopePolicy policy = LowerSlopePolicy::Adaptive);

// Backward propagation of affine coefficients through the network. Unstable
// ReLU neurons get the chord upper line (slope u/(u-l), intercept -lu/(u-l))
// and a through-origin lower line; stable neurons pass through exactly, so
// the envelope is exact on purely affine networks.
AffineBounds relax(const NeuralNetwork& nn, const HyperRectangle& domain,
                   LowerSlopePolicy policy = LowerSlopePolicy::Adaptive);

void to_json(nlohmann::json& j, const AffineBounds& b);
void from_json(const nlohmann::json& j, AffineBounds& b);

}  // namespace nfl
