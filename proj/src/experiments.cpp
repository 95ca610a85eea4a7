#include "nfl/experiments.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <stdexcept>

#include "nfl/rng.hpp"

namespace nfl {

namespace {

double clamp_unit(double v) { return std::max(std::min(v, 1.0), -1.0); }

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// LQR gain for x' = Ax + Bu with unit cost weights, via Riccati iteration.
Eigen::MatrixXd lqr_gain(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
    const long nx = A.rows();
    const long nu = B.cols();
    const Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(nx, nx);
    const Eigen::MatrixXd R = Eigen::MatrixXd::Identity(nu, nu);
    Eigen::MatrixXd P = Q;
    for (int iter = 0; iter < 1000; ++iter) {
        const Eigen::MatrixXd K = (R + B.transpose() * P * B).ldlt().solve(B.transpose() * P * A);
        const Eigen::MatrixXd P_next =
            Q + A.transpose() * P * (A - B * K);
        if ((P_next - P).cwiseAbs().maxCoeff() < 1e-12) {
            P = P_next;
            break;
        }
        P = P_next;
    }
    return (R + B.transpose() * P * B).ldlt().solve(B.transpose() * P * A);
}

const Eigen::MatrixXd& di_gain() {
    static const Eigen::MatrixXd K = [] {
        const LinearSystem sys = double_integrator_system();
        return lqr_gain(sys.A, sys.B);
    }();
    return K;
}

Eigen::VectorXd expert_label(PolicyKind kind, const Eigen::VectorXd& x) {
    switch (kind) {
        case PolicyKind::GroundRobot: return vector_field(x);
        case PolicyKind::GroundRobotFaulty: return faulty_vector_field(x);
        case PolicyKind::DoubleIntegratorLqr: return double_integrator_expert(x);
    }
    throw std::logic_error("unknown policy kind");
}

std::string default_policy_file(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::GroundRobot: return "gr_eq19_10x10.json";
        case PolicyKind::GroundRobotFaulty: return "gr_faulty_10x10.json";
        case PolicyKind::DoubleIntegratorLqr: return "di_lqr_5x5.json";
    }
    throw std::logic_error("unknown policy kind");
}

LinearSystem system_for(PolicyKind kind) {
    return kind == PolicyKind::DoubleIntegratorLqr ? double_integrator_system()
                                                   : ground_robot_system();
}

}  // namespace

LinearSystem double_integrator_system() {
    LinearSystem sys;
    sys.A.resize(2, 2);
    sys.A << 1, 1, 0, 1;
    sys.B.resize(2, 1);
    sys.B << 0.5, 1;
    sys.c = Eigen::VectorXd::Zero(2);
    sys.control_lo = Eigen::VectorXd::Constant(1, -1.0);
    sys.control_hi = Eigen::VectorXd::Constant(1, 1.0);
    return sys;
}

LinearSystem ground_robot_system() {
    LinearSystem sys;
    sys.A = Eigen::MatrixXd::Identity(2, 2);
    sys.B = Eigen::MatrixXd::Identity(2, 2);
    sys.c = Eigen::VectorXd::Zero(2);
    sys.control_lo = Eigen::VectorXd::Constant(2, -1.0);
    sys.control_hi = Eigen::VectorXd::Constant(2, 1.0);
    return sys;
}

Eigen::VectorXd vector_field(const Eigen::VectorXd& x) {
    if (x.size() != 2) throw std::invalid_argument("vector_field: expects a 2-d state");
    const double px = x[0];
    const double py = x[1];
    const double r2 = px * px + py * py;
    Eigen::VectorXd u(2);
    if (r2 == 0.0) {
        u << 1.0, 0.0;
        return u;
    }
    u[0] = clamp_unit(1.0 + 2.0 * px / r2);
    // The logistic-derivative bump, evaluated as 1/(2 + 2 cosh(a)) so large
    // |a| cannot overflow.
    const double a = -0.5 * px + 2.0;
    const double bump = 1.0 / (2.0 + 2.0 * std::cosh(a));
    u[1] = clamp_unit(py / r2 + 2.0 * sign(py) * bump);
    return u;
}

Eigen::VectorXd faulty_vector_field(const Eigen::VectorXd& x) {
    if (x.size() != 2) throw std::invalid_argument("faulty_vector_field: expects a 2-d state");
    // Distance from the line y = -x is |px + py| / sqrt(2).
    const double dist = std::abs(x[0] + x[1]) / std::sqrt(2.0);
    if (dist > 0.5) return vector_field(x);
    const double norm = x.norm();
    Eigen::VectorXd u(2);
    if (norm == 0.0) {
        u << 1.0, 0.0;
        return u;
    }
    u = -x / norm;
    u[0] = clamp_unit(u[0]);
    u[1] = clamp_unit(u[1]);
    return u;
}

Eigen::VectorXd double_integrator_expert(const Eigen::VectorXd& x) {
    Eigen::VectorXd u = -(di_gain() * x);
    for (long k = 0; k < u.size(); ++k) u[k] = clamp_unit(u[k]);
    return u;
}

PolicyRecipe policy_recipe(PolicyKind kind) {
    PolicyRecipe r;
    r.kind = kind;
    switch (kind) {
        case PolicyKind::GroundRobot:
        case PolicyKind::GroundRobotFaulty:
            r.hidden = {10, 10};
            r.data_region = HyperRectangle(Eigen::Vector2d(-10, -10), Eigen::Vector2d(10, 10));
            break;
        case PolicyKind::DoubleIntegratorLqr:
            r.hidden = {5, 5};
            // Covers the horizon-5 backreachable hull of the benchmark target.
            r.data_region = HyperRectangle(Eigen::Vector2d(-15, -7), Eigen::Vector2d(25, 7));
            break;
    }
    r.learning_rate = 0.02;
    return r;
}

Dataset make_policy_dataset(PolicyKind kind, long n_samples, uint64_t seed,
                            const HyperRectangle& region) {
    Dataset data;
    const int n_in = region.dim();
    const Eigen::VectorXd probe = expert_label(kind, region.center());
    data.inputs.resize(n_in, n_samples);
    data.labels.resize(probe.size(), n_samples);
    for (long i = 0; i < n_samples; ++i) {
        SplitMix64 rng = sample_stream(seed, static_cast<uint64_t>(i));
        Eigen::VectorXd x(n_in);
        for (int k = 0; k < n_in; ++k)
            x[k] = region.lo[k] + (region.hi[k] - region.lo[k]) * rng.uniform01();
        data.inputs.col(i) = x;
        data.labels.col(i) = expert_label(kind, x);
    }
    return data;
}

TrainedPolicy train_policy(PolicyKind kind, const PolicyRecipe& recipe) {
    Dataset full = make_policy_dataset(kind, recipe.n_samples, recipe.seed, recipe.data_region);
    const long holdout = std::max<long>(1, static_cast<long>(recipe.holdout_fraction *
                                                             static_cast<double>(full.size())));
    const long train_n = full.size() - holdout;

    Dataset train{full.inputs.leftCols(train_n), full.labels.leftCols(train_n)};
    Dataset held{full.inputs.rightCols(holdout), full.labels.rightCols(holdout)};

    TrainConfig cfg;
    cfg.hidden = recipe.hidden;
    cfg.epochs = recipe.epochs;
    cfg.batch = recipe.batch;
    cfg.seed = recipe.seed;
    cfg.learning_rate = recipe.learning_rate;

    TrainedPolicy out;
    NeuralNetwork raw = train_regression(train, cfg);
    out.holdout_mse = mse_per_component(raw, held);
    out.gate_passed = (out.holdout_mse.maxCoeff() < recipe.mse_gate);

    const LinearSystem sys = system_for(kind);
    out.network = append_output_clamp(std::move(raw), sys.control_lo, sys.control_hi);
    return out;
}

TrainedPolicy ensure_policy(PolicyKind kind, const std::string& path) {
    const PolicyRecipe recipe = policy_recipe(kind);
    if (std::filesystem::exists(path)) {
        TrainedPolicy out;
        out.network = load_network(path);
        // Re-measure the held-out fit of the stored network (clamp included;
        // labels already lie inside the control box, so clamping never makes
        // the fit worse).
        Dataset full = make_policy_dataset(kind, recipe.n_samples, recipe.seed, recipe.data_region);
        const long holdout = std::max<long>(1, static_cast<long>(recipe.holdout_fraction *
                                                                 static_cast<double>(full.size())));
        Dataset held{full.inputs.rightCols(holdout), full.labels.rightCols(holdout)};
        out.holdout_mse = mse_per_component(out.network, held);
        out.gate_passed = (out.holdout_mse.maxCoeff() < recipe.mse_gate);
        return out;
    }
    TrainedPolicy out = train_policy(kind, recipe);
    std::filesystem::create_directories(std::filesystem::path(path).parent_path());
    save_network(out.network, path);
    return out;
}

std::vector<Scenario> build_scenarios(const std::string& policies_dir) {
    const auto dir = std::filesystem::path(policies_dir);
    auto path_for = [&](PolicyKind kind) { return (dir / default_policy_file(kind)).string(); };

    const HyperRectangle gr_target =
        HyperRectangle::from_center_radius(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1));
    const HyperRectangle gr_init_above =
        HyperRectangle::from_center_radius(Eigen::Vector2d(-5, 1), Eigen::Vector2d(0.5, 0.5));
    const HyperRectangle gr_init_boundary =
        HyperRectangle::from_center_radius(Eigen::Vector2d(-5, 0), Eigen::Vector2d(0.5, 0.5));
    const Eigen::VectorXi r44 = Eigen::Vector2i(4, 4);

    std::vector<Scenario> scenarios;
    scenarios.push_back({"DI-5",
                         double_integrator_system(),
                         PolicyKind::DoubleIntegratorLqr,
                         path_for(PolicyKind::DoubleIntegratorLqr),
                         HyperRectangle(Eigen::Vector2d(4.5, -0.25), Eigen::Vector2d(5.0, 0.25)),
                         HyperRectangle::from_center_radius(Eigen::Vector2d(-5, 0), Eigen::Vector2d(0.5, 0.5)),
                         5,
                         r44});
    scenarios.push_back({"GR-above", ground_robot_system(), PolicyKind::GroundRobot,
                         path_for(PolicyKind::GroundRobot), gr_target, gr_init_above, 9, r44});
    scenarios.push_back({"GR-boundary", ground_robot_system(), PolicyKind::GroundRobot,
                         path_for(PolicyKind::GroundRobot), gr_target, gr_init_boundary, 9, r44});
    scenarios.push_back({"GR-faulty", ground_robot_system(), PolicyKind::GroundRobotFaulty,
                         path_for(PolicyKind::GroundRobotFaulty), gr_target, gr_init_above, 9, r44});

    for (const Scenario& s : scenarios) {
        validate_system(s.system);
        if (s.target.dim() != s.system.nx() || s.init.dim() != s.system.nx() ||
            s.r.size() != s.system.nx())
            throw std::logic_error("scenario " + s.name + ": inconsistent dimensions");
    }
    return scenarios;
}

Scenario find_scenario(const std::string& name, const std::string& policies_dir) {
    for (Scenario& s : build_scenarios(policies_dir)) {
        if (s.name == name) return s;
    }
    throw std::invalid_argument("unknown scenario: " + name);
}

void to_json(nlohmann::json& j, const Scenario& s) {
    j = nlohmann::json{{"name", s.name},
                       {"system", s.system},
                       {"policy", s.policy_path},
                       {"target", s.target},
                       {"init", s.init},
                       {"tau", s.tau},
                       {"r", std::vector<int>(s.r.begin(), s.r.end())}};
}

}  // namespace nfl
