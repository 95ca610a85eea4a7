#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "nfl/dynamics.hpp"

namespace nfl {

enum class Activation { Relu, Identity };

struct Layer {
    Eigen::MatrixXd W;  // (n_out x n_in)
    Eigen::VectorXd b;  // (n_out)
    Activation act = Activation::Identity;
};

// Feedforward network; the final layer activation must be identity.
struct NeuralNetwork {
    std::vector<Layer> layers;

    int input_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.front().W.cols()); }
    int output_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.back().W.rows()); }
};

// Throws std::invalid_argument naming the offending layer when the dimension
// chain is broken, a bias length mismatches, or the layer list is empty.
void validate_network(const NeuralNetwork& nn);

Eigen::VectorXd forward(const NeuralNetwork& nn, const Eigen::VectorXd& x);
// Columns are samples.
Eigen::MatrixXd forward_batch(const NeuralNetwork& nn, const Eigen::MatrixXd& X);

Policy make_policy(const NeuralNetwork& nn);
Trajectory simulate_closed_loop(const LinearSystem& sys, const NeuralNetwork& nn,
                                const Eigen::VectorXd& x0, int horizon);

// Columns are samples; inputs and labels are index-aligned.
struct Dataset {
    Eigen::MatrixXd inputs;
    Eigen::MatrixXd labels;

    long size() const { return inputs.cols(); }
};

struct TrainConfig {
    std::vector<int> hidden;
    int epochs = 20;
    int batch = 32;
    uint64_t seed = 0;
    double learning_rate = 1e-2;
};

// Mini-batch SGD on mean squared error. Deterministic for a fixed seed:
// weight init and batch shuffling both derive from cfg.seed.
NeuralNetwork train_regression(const Dataset& data, const TrainConfig& cfg);

// Mean over samples of (f_j(x) - y_j)^2, one entry per output component.
Eigen::VectorXd mse_per_component(const NeuralNetwork& nn, const Dataset& data);

// Loss and analytic gradient of 1/(2N) sum ||f(x_i) - y_i||^2, exposed for
// finite-difference checks.
struct Gradients {
    std::vector<Eigen::MatrixXd> dW;
    std::vector<Eigen::VectorXd> db;
    double loss = 0.0;
};
Gradients loss_gradients(const NeuralNetwork& nn, const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y);

// Appends ReLU layers computing min(max(u, lo), hi) per component, so the
// returned network's output lies in [lo, hi] for every input. Keeps the
// activation set to {relu, identity}.
NeuralNetwork append_output_clamp(NeuralNetwork nn, const Eigen::VectorXd& lo,
                                  const Eigen::VectorXd& hi);

void to_json(nlohmann::json& j, const NeuralNetwork& nn);
void from_json(const nlohmann::json& j, NeuralNetwork& nn);
NeuralNetwork load_network(const std::string& path);
void save_network(const NeuralNetwork& nn, const std::string& path);

// CSV, one row per sample: inputs then labels.
void save_dataset_csv(const Dataset& data, const std::string& path);
Dataset load_dataset_csv(const std::string& path, int n_inputs, int n_labels);

}  // namespace nfl
