// Independent reference implementations used as test oracles. These are kept
// deliberately separate from the library code paths they check: plain loops,
// no shared helpers.
#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "nfl/geometry.hpp"
#include "nfl/lp.hpp"
#include "nfl/network.hpp"

namespace oracles {

// Straight-line forward pass over plain vectors.
inline std::vector<double> straight_line_forward(const nfl::NeuralNetwork& nn,
                                                 const std::vector<double>& x) {
    std::vector<double> a = x;
    for (const nfl::Layer& layer : nn.layers) {
        std::vector<double> z(static_cast<size_t>(layer.W.rows()), 0.0);
        for (long i = 0; i < layer.W.rows(); ++i) {
            double acc = layer.b[i];
            for (long k = 0; k < layer.W.cols(); ++k) acc += layer.W(i, k) * a[static_cast<size_t>(k)];
            z[static_cast<size_t>(i)] = acc;
        }
        if (layer.act == nfl::Activation::Relu) {
            for (double& v : z) v = v > 0.0 ? v : 0.0;
        }
        a = std::move(z);
    }
    return a;
}

// Velocity field written out verbatim from its printed form (plain exp; the
// library evaluates the bump through cosh instead).
inline std::vector<double> reference_vector_field(double px, double py) {
    auto clamp = [](double v) { return std::max(std::min(v, 1.0), -1.0); };
    auto sgn = [](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); };
    const double r2 = px * px + py * py;
    const double ex = std::exp(-px / 2.0 + 2.0);
    return {clamp(1.0 + 2.0 * px / r2),
            clamp(py / r2 + 2.0 * sgn(py) * ex / ((1.0 + ex) * (1.0 + ex)))};
}

// Random ReLU network with seeded weights; hidden layers use ReLU, the final
// layer is linear.
inline nfl::NeuralNetwork random_network(const std::vector<int>& widths, uint64_t seed,
                                         double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-scale, scale);
    nfl::NeuralNetwork nn;
    for (size_t l = 0; l + 1 < widths.size(); ++l) {
        nfl::Layer layer;
        layer.W.resize(widths[l + 1], widths[l]);
        layer.b.resize(widths[l + 1]);
        for (long i = 0; i < layer.W.rows(); ++i) {
            for (long k = 0; k < layer.W.cols(); ++k) layer.W(i, k) = dist(rng);
            layer.b[i] = dist(rng);
        }
        layer.act = (l + 2 < widths.size()) ? nfl::Activation::Relu : nfl::Activation::Identity;
        nn.layers.push_back(std::move(layer));
    }
    return nn;
}

// Brute-force maximizer of obj over the feasible grid points of `feasible`
// inside `box`, with one nested refinement pass around the coarse argmax.
// Roughly `points_per_dim^dim` evaluations per pass.
inline double grid_max(const nfl::HyperRectangle& box, int points_per_dim,
                       const std::function<bool(const Eigen::VectorXd&)>& feasible,
                       const std::function<double(const Eigen::VectorXd&)>& obj) {
    const int dim = box.dim();
    double best = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_x;

    auto sweep = [&](const nfl::HyperRectangle& b) {
        long total = 1;
        for (int k = 0; k < dim; ++k) total *= points_per_dim;
        Eigen::VectorXi idx = Eigen::VectorXi::Zero(dim);
        Eigen::VectorXd x(dim);
        for (long c = 0; c < total; ++c) {
            for (int k = 0; k < dim; ++k) {
                x[k] = b.lo[k] + (b.hi[k] - b.lo[k]) * idx[k] / (points_per_dim - 1);
            }
            if (feasible(x)) {
                const double v = obj(x);
                if (v > best) {
                    best = v;
                    best_x = x;
                }
            }
            for (int k = dim - 1; k >= 0; --k) {
                if (++idx[k] < points_per_dim) break;
                idx[k] = 0;
            }
        }
    };

    sweep(box);
    if (best_x.size() == dim) {
        Eigen::VectorXd step = box.widths() / (points_per_dim - 1);
        nfl::HyperRectangle fine(best_x.cwiseMax(box.lo - Eigen::VectorXd::Zero(dim)),
                                 best_x.cwiseMin(box.hi));
        fine = nfl::HyperRectangle((best_x - 2.0 * step).cwiseMax(box.lo),
                                   (best_x + 2.0 * step).cwiseMin(box.hi));
        sweep(fine);
    }
    return best;
}

// Central finite differences of a scalar function of network parameters.
inline double central_diff(const std::function<double(double)>& f, double x0, double h) {
    return (f(x0 + h) - f(x0 - h)) / (2.0 * h);
}

}  // namespace oracles
