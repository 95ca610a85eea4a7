#pragma once

#include <Eigen/Core>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace nfl {

// Discrete-time linear system x_{t+1} = A x + B u + c with box control limits.
// The output map is the identity (state feedback), so no output matrix is
// stored.
struct LinearSystem {
    Eigen::MatrixXd A;
    Eigen::MatrixXd B;
    Eigen::VectorXd c;
    Eigen::VectorXd control_lo;
    Eigen::VectorXd control_hi;

    int nx() const { return static_cast<int>(A.rows()); }
    int nu() const { return static_cast<int>(B.cols()); }
};

// Throws std::invalid_argument when dimensions are inconsistent or the
// control box is inverted.
void validate_system(const LinearSystem& sys);

struct Trajectory {
    std::vector<Eigen::VectorXd> states;    // length horizon + 1
    std::vector<Eigen::VectorXd> controls;  // length horizon
};

Eigen::VectorXd step(const LinearSystem& sys, const Eigen::VectorXd& x, const Eigen::VectorXd& u);

// Rolls the closed loop forward, applying the policy output verbatim (no
// clipping; benchmark policies keep their outputs inside the control box by
// construction).
using Policy = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
Trajectory simulate_closed_loop(const LinearSystem& sys, const Policy& policy,
                                const Eigen::VectorXd& x0, int horizon);

void to_json(nlohmann::json& j, const LinearSystem& sys);
void from_json(const nlohmann::json& j, LinearSystem& sys);
LinearSystem load_system(const std::string& path);
void save_system(const LinearSystem& sys, const std::string& path);

}  // namespace nfl
