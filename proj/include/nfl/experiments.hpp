#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include <json.hpp>

#include "nfl/dynamics.hpp"
#include "nfl/geometry.hpp"
#include "nfl/network.hpp"

namespace nfl {

// Double integrator: A = [[1,1],[0,1]], B = [[0.5],[1]], c = 0, unit sampling
// time, control limited to [-1, 1].
LinearSystem double_integrator_system();

// Ground robot (feedback-linearized unicycle): A = B = I2, c = 0, per-axis
// velocity limits [-1, 1].
LinearSystem ground_robot_system();

// Obstacle-avoidance velocity field for the ground robot; both components are
// clamped to [-1, 1]. The value at the exact origin is fixed to [1, 0]
// (continuity of intent; the raw expression is singular there).
Eigen::VectorXd vector_field(const Eigen::VectorXd& x);

// Same field, except states within distance 0.5 of the line y = -x are
// steered toward the origin at unit speed, emulating a trained-in bug.
Eigen::VectorXd faulty_vector_field(const Eigen::VectorXd& x);

// Saturated LQR feedback clamp(-K x, -1, 1) for the double integrator with
// unit state and control cost; the stand-in expert for its policy dataset.
Eigen::VectorXd double_integrator_expert(const Eigen::VectorXd& x);

enum class PolicyKind { GroundRobot, GroundRobotFaulty, DoubleIntegratorLqr };

// Documented training recipe per benchmark policy (architecture, dataset
// region/size, SGD hyperparameters, held-out MSE gate).
struct PolicyRecipe {
    PolicyKind kind;
    std::vector<int> hidden;
    HyperRectangle data_region;
    long n_samples = 100000;
    int epochs = 20;
    int batch = 32;
    uint64_t seed = 7;
    double learning_rate = 1e-2;
    double holdout_fraction = 0.1;
    double mse_gate = 0.05;  // per output component, held out
};

PolicyRecipe policy_recipe(PolicyKind kind);

Dataset make_policy_dataset(PolicyKind kind, long n_samples, uint64_t seed,
                            const HyperRectangle& region);

struct TrainedPolicy {
    NeuralNetwork network;       // includes the exact output clamp to the control box
    Eigen::VectorXd holdout_mse; // per output component, measured before clamping
    bool gate_passed = false;
};

// Trains per the recipe, then appends the exact ReLU output clamp to the
// system's control box so the policy output always satisfies the control
// limits the analysis assumes.
TrainedPolicy train_policy(PolicyKind kind, const PolicyRecipe& recipe);

// Loads the policy at `path`, training and saving it first when missing.
TrainedPolicy ensure_policy(PolicyKind kind, const std::string& path);

struct Scenario {
    std::string name;
    LinearSystem system;
    PolicyKind policy_kind;
    std::string policy_path;
    HyperRectangle target;
    HyperRectangle init;
    int tau = 1;
    Eigen::VectorXi r;
};

// Benchmark registry: DI-5, GR-above, GR-boundary, GR-faulty. Policy files
// live under `policies_dir` and are referenced by path.
std::vector<Scenario> build_scenarios(const std::string& policies_dir);
Scenario find_scenario(const std::string& name, const std::string& policies_dir);

void to_json(nlohmann::json& j, const Scenario& s);

}  // namespace nfl
